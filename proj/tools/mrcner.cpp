// mrcner: convert BIO corpora to MRC triples, train, predict, evaluate and
// compare runs.

#include <cstdlib>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "mrcner/commands.hpp"
#include "mrcner/error.hpp"

namespace {

using namespace mrcner;
using nlohmann::json;

int fail(const std::string& command, const std::string& message, std::size_t line = 0) {
  json diag = {{"command", command}, {"error", message}};
  if (line) diag["line"] = line;
  std::cerr << diag.dump() << '\n';
  return 1;
}

void configure_logging() {
  const char* level = std::getenv("MRCNER_LOG_LEVEL");
  spdlog::set_level(level ? spdlog::level::from_str(level) : spdlog::level::info);
  spdlog::set_pattern("[%l] %v");
}

char parse_sep(const std::string& s) {
  if (s == "tab" || s == "\\t") return '\t';
  if (s == "space") return ' ';
  if (s.size() != 1) throw Error("column separator must be one character, 'tab' or 'space'");
  return s[0];
}

}  // namespace

int main(int argc, char** argv) {
  configure_logging();
  CLI::App app{"Named-entity recognition as machine reading comprehension"};
  app.require_subcommand(1);

  // convert
  commands::ConvertOptions conv;
  std::string strategy = "q3", mode = "mrc", sep = "tab";
  auto* convert = app.add_subcommand("convert", "BIO corpus -> (context, query, answers) triples");
  convert->add_option("input", conv.input, "CoNLL-style token<TAB>label file")->required();
  convert->add_option("-o,--out", conv.output, "triples JSON-lines output")->required();
  convert->add_option("--entity-type", conv.entity_type, "entity type to extract");
  convert->add_option("--query-strategy", strategy, "none, q0, q3, q5 or q10");
  convert->add_option("--query-seed", conv.query_seed, "seed for sampling query entities");
  convert->add_option("--mode", mode, "mrc or bio-baseline");
  convert->add_option("--inventory", conv.inventory_paths,
                      "corpora to sample query entities from (default: the input)");
  convert->add_option("--sep", sep, "column separator: tab, space or a character");
  convert->add_option("--seq-len", conv.seq_len, "sequence length for the truncation report");
  convert->add_flag("--per-sentence-queries", conv.per_sentence_queries,
                    "sample a fresh query for every sentence");

  // train
  commands::TrainOptions tr;
  std::string config_path;
  std::optional<std::size_t> epochs, batch_size, seq_len, layers, model_dim, heads, ffn_dim, warmup;
  std::optional<std::uint64_t> seed;
  std::optional<double> lr, dropout, stop_f1;
  std::optional<std::string> train_mode, variant;
  int threads = 0;
  bool eval_train = false;
  auto* train = app.add_subcommand("train", "train a model on triples");
  train->add_option("--train", tr.train_path, "training triples")->required();
  train->add_option("--dev", tr.dev_path, "development triples for checkpoint selection");
  train->add_option("-o,--out", tr.checkpoint_path, "checkpoint output")->required();
  train->add_option("--manifest", tr.manifest_path, "run manifest output");
  train->add_option("--config", config_path, "JSON training config; flags override it");
  train->add_option("--epochs", epochs);
  train->add_option("--batch-size", batch_size);
  train->add_option("--seq-len", seq_len);
  train->add_option("--lr", lr);
  train->add_option("--warmup-steps", warmup);
  train->add_option("--seed", seed);
  train->add_option("--mode", train_mode, "mrc or bio-baseline");
  train->add_option("--head-variant", variant, "conditioned or ablation");
  train->add_option("--layers", layers);
  train->add_option("--model-dim", model_dim);
  train->add_option("--heads", heads);
  train->add_option("--ffn-dim", ffn_dim);
  train->add_option("--dropout", dropout);
  train->add_option("--stop-at-train-f1", stop_f1, "stop once training F1 reaches this value");
  train->add_flag("--eval-train", eval_train, "score the training set every epoch");
  train->add_option("--threads", threads, "OpenMP threads (0 = default)");

  // predict
  std::string ckpt, triples_in, preds_out;
  auto* predict = app.add_subcommand("predict", "decode entities for triples");
  predict->add_option("--checkpoint", ckpt)->required();
  predict->add_option("--triples", triples_in)->required();
  predict->add_option("-o,--out", preds_out)->required();

  // evaluate
  std::string gold, metrics_out, stats_out;
  std::vector<std::string> pred_files;
  auto* evaluate = app.add_subcommand("evaluate", "entity-level P/R/F1 against gold triples");
  evaluate->add_option("--gold", gold, "gold triples")->required();
  evaluate->add_option("--pred", pred_files, "predictions file (repeat for several runs)")->required();
  evaluate->add_option("-o,--out", metrics_out, "metrics JSON output");
  evaluate->add_option("--stats-out", stats_out, "per-run F1 stats JSON output");

  // significance
  std::string stats_a, stats_b, sig_out;
  bool student = false;
  auto* signif = app.add_subcommand("significance", "two-sample t-test between two stats files");
  signif->add_option("stats_a", stats_a)->required();
  signif->add_option("stats_b", stats_b)->required();
  signif->add_option("-o,--out", sig_out, "significance JSON output");
  signif->add_flag("--student", student, "pooled-variance Student test instead of Welch");

  CLI11_PARSE(app, argc, argv);

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    if (*convert) {
      conv.strategy = QueryStrategy::parse(strategy);
      conv.mode = parse_mode(mode);
      conv.column_sep = parse_sep(sep);
      const auto report = commands::convert(conv);
      if (report.repair_count) spdlog::warn("repaired {} invalid I- labels", report.repair_count);
      if (report.truncation.truncated_examples)
        spdlog::warn("{} triples exceed seq_len {}; {} gold spans would be dropped",
                     report.truncation.truncated_examples, conv.seq_len,
                     report.truncation.dropped_spans);
      std::cout << report.to_json().dump(2) << '\n';
    } else if (*train) {
      json cfg = config_path.empty() ? json::object() : commands::read_json_file(config_path);
      auto set = [&](const char* key, const auto& opt) {
        if (opt) cfg[key] = *opt;
      };
      set("epochs", epochs);
      set("batch_size", batch_size);
      set("seq_len", seq_len);
      set("seed", seed);
      set("mode", train_mode);
      set("head_variant", variant);
      set("stop_at_train_f1", stop_f1);
      if (eval_train) cfg["eval_train"] = true;
      auto& enc = cfg["encoder"];
      if (enc.is_null()) enc = json::object();
      if (layers) enc["layers"] = *layers;
      if (model_dim) enc["model_dim"] = *model_dim;
      if (heads) enc["heads"] = *heads;
      if (ffn_dim) enc["ffn_dim"] = *ffn_dim;
      if (dropout) enc["dropout_rate"] = *dropout;
      auto& opt = cfg["optimizer"];
      if (opt.is_null()) opt = json::object();
      if (lr) opt["learning_rate"] = *lr;
      if (warmup) opt["warmup_steps"] = *warmup;
      tr.config = train_config_from_json(cfg);
      tr.config.threads = threads;
      const auto report = commands::train(tr, [](const EpochRecord& e) {
        std::string line = "epoch " + std::to_string(e.epoch) + " loss " + std::to_string(e.mean_loss);
        if (e.dev) line += " dev_f1 " + std::to_string(e.dev->f1);
        if (e.train) line += " train_f1 " + std::to_string(e.train->f1);
        spdlog::info(line);
      });
      spdlog::info("best epoch {}; checkpoint written to {}", report.result.best_epoch,
                   tr.checkpoint_path);
    } else if (*predict) {
      const auto n = commands::predict(ckpt, triples_in, preds_out);
      spdlog::info("wrote {} predictions to {}", n, preds_out);
    } else if (*evaluate) {
      const auto result = commands::evaluate(gold, pred_files, metrics_out, stats_out);
      std::cout << result.dump(2) << '\n';
    } else if (*signif) {
      const auto result = commands::significance(stats_a, stats_b, sig_out,
                                                 student ? TTestKind::Student : TTestKind::Welch);
      std::cout << result.dump(2) << '\n';
    }
  } catch (const ParseError& e) {
    return fail(command, e.what(), e.line());
  } catch (const std::exception& e) {
    return fail(command, e.what());
  }
  return 0;
}
