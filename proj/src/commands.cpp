#include "mrcner/commands.hpp"

#include <chrono>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include <openssl/evp.h>

#include "mrcner/error.hpp"
#include "mrcner/random.hpp"

namespace mrcner::commands {

using nlohmann::json;

namespace {

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "' for reading");
  return in;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  return out;
}

std::string hex(const unsigned char* data, unsigned len) {
  std::ostringstream ss;
  for (unsigned i = 0; i < len; ++i) ss << std::hex << std::setw(2) << std::setfill('0') << int(data[i]);
  return ss.str();
}

std::string sha256_bytes(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned len = 0;
  if (!EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr))
    throw Error("SHA-256 failed");
  return hex(md, len);
}

std::string slurp(const std::string& path) {
  auto in = open_in(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

std::string sha256_text(const std::string& text) { return sha256_bytes(text); }
std::string sha256_file(const std::string& path) { return sha256_bytes(slurp(path)); }

void write_json_file(const std::string& path, const json& j) {
  auto out = open_out(path);
  out << j.dump(2) << '\n';
  if (!out) throw Error("failed writing '" + path + "'");
}

json read_json_file(const std::string& path) {
  auto in = open_in(path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ParseError("'" + path + "': " + e.what(), 0);
  }
}

std::vector<Sentence> read_corpus(const std::string& path, const ConllOptions& opts,
                                  std::size_t* repairs) {
  auto in = open_in(path);
  try {
    auto parsed = parse_conll(in, opts);
    if (repairs) *repairs += parsed.repair_count;
    return std::move(parsed.sentences);
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what(), e.line());
  }
}

std::vector<Triple> read_triples_file(const std::string& path) {
  auto in = open_in(path);
  try {
    return read_triples(in);
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what(), e.line());
  }
}

json ConvertReport::to_json() const {
  json qs = json::array();
  for (const auto& q : queries)
    qs.push_back({{"entity_type", q.entity_type},
                  {"strategy", q.strategy.name()},
                  {"text", q.text},
                  {"sampled_entities", q.sampled_entities},
                  {"seed", q.seed}});
  return {{"sentences", sentences},
          {"triples", triples},
          {"repair_count", repair_count},
          {"truncated_examples", truncation.truncated_examples},
          {"dropped_spans", truncation.dropped_spans},
          {"queries", std::move(qs)}};
}

ConvertReport convert(const ConvertOptions& opts) {
  ConllOptions conll;
  conll.column_sep = opts.column_sep;
  if (!opts.entity_type.empty()) conll.default_type = opts.entity_type;
  conll.doc_id = opts.input;

  ConvertReport report;
  const auto sentences = read_corpus(opts.input, conll, &report.repair_count);
  report.sentences = sentences.size();

  std::vector<std::string> types;
  if (!opts.entity_type.empty())
    types.push_back(opts.entity_type);
  else
    types = entity_types(sentences);

  std::vector<Triple> triples;
  if (opts.mode == Mode::BioBaseline) {
    triples = make_labeling_triples(sentences, types);
  } else {
    EntityInventory inventory;
    if (opts.strategy.kind == QueryStrategy::Kind::K) {
      std::vector<Sentence> pool;
      if (opts.inventory_paths.empty()) {
        pool = sentences;
      } else {
        for (const auto& p : opts.inventory_paths) {
          auto more = read_corpus(p, conll);
          pool.insert(pool.end(), std::make_move_iterator(more.begin()),
                      std::make_move_iterator(more.end()));
        }
      }
      inventory = entity_inventory(pool);
    }
    std::map<std::string, QuerySpec> run_queries;
    for (const auto& type : types) {
      run_queries[type] = build_query(type, opts.strategy, inventory, opts.query_seed);
      report.queries.push_back(run_queries[type]);
    }
    for (std::size_t i = 0; i < sentences.size(); ++i) {
      for (const auto& type : types) {
        const QuerySpec q = opts.per_sentence_queries
                                ? build_query(type, opts.strategy, inventory, mix_seed(opts.query_seed, i))
                                : run_queries[type];
        auto t = make_triples(std::span(&sentences[i], 1), std::span(&q, 1));
        triples.insert(triples.end(), t.begin(), t.end());
      }
    }
  }
  report.triples = triples.size();

  // Truncation at the configured length, using a throwaway vocabulary.
  const Vocab vocab;
  const SeqConfig seq{opts.seq_len, InputOrder::ContextFirst};
  std::vector<MrcExample> examples;
  examples.reserve(triples.size());
  for (const auto& t : triples) examples.push_back(make_example(t, vocab, seq));
  report.truncation = truncation_report(examples);

  auto out = open_out(opts.output);
  write_triples(out, triples);
  if (!out) throw Error("failed writing '" + opts.output + "'");
  return report;
}

TrainReport train(const TrainOptions& opts, const std::function<void(const EpochRecord&)>& on_epoch) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto train_triples = read_triples_file(opts.train_path);
  std::vector<Triple> dev_triples;
  if (!opts.dev_path.empty()) dev_triples = read_triples_file(opts.dev_path);

  TrainReport report{mrcner::train(opts.config, train_triples, dev_triples, on_epoch), {}};
  const auto& r = report.result;

  std::ostringstream ckpt;
  save_checkpoint(ckpt, r.best);
  {
    auto out = open_out(opts.checkpoint_path);
    out << ckpt.str();
    if (!out) throw Error("failed writing '" + opts.checkpoint_path + "'");
  }

  const json config = to_json(opts.config);
  json datasets = {{"train", sha256_file(opts.train_path)}};
  datasets["dev"] = opts.dev_path.empty() ? json(nullptr) : json(sha256_file(opts.dev_path));
  json curve = json::array();
  for (const auto& e : r.history) curve.push_back(to_json(e));
  json final_metrics = json::object();
  for (const auto& e : r.history)
    if (e.epoch == r.best_epoch) {
      if (e.dev) final_metrics["dev"] = to_json(*e.dev);
      if (e.train) final_metrics["train"] = to_json(*e.train);
    }

  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  report.manifest = {
      {"config", config},
      {"datasets", datasets},
      {"input_hash", sha256_text(config.dump() + datasets.dump())},
      {"checkpoint_hash", sha256_text(ckpt.str())},
      {"parameters", r.best.params.parameter_count()},
      {"vocab_size", r.best.vocab.size()},
      {"truncation",
       {{"train_truncated", r.train_truncation.truncated_examples},
        {"train_dropped_spans", r.train_truncation.dropped_spans},
        {"dev_truncated", r.dev_truncation.truncated_examples},
        {"dev_dropped_spans", r.dev_truncation.dropped_spans}}},
      {"epochs", std::move(curve)},
      {"best_epoch", r.best_epoch},
      {"final_metrics", std::move(final_metrics)},
      {"wall_clock_seconds", seconds}};
  if (!opts.manifest_path.empty()) write_json_file(opts.manifest_path, report.manifest);
  return report;
}

void write_predictions(std::ostream& out, const std::vector<Prediction>& predictions) {
  for (const auto& p : predictions) {
    json spans = json::array();
    for (const auto& s : p.spans)
      spans.push_back({{"start", s.start}, {"end", s.end}, {"surface", s.surface}});
    json j = {{"origin", {{"doc_id", p.origin.doc_id}, {"sent_id", p.origin.sent_id}}},
              {"entity_type", p.origin.entity_type},
              {"spans", std::move(spans)}};
    out << j.dump() << '\n';
  }
}

std::vector<Prediction> read_predictions(std::istream& in) {
  std::vector<Prediction> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = json::parse(line);
      Prediction p;
      p.origin = {j.at("origin").at("doc_id").get<std::string>(),
                  j.at("origin").at("sent_id").get<std::size_t>(),
                  j.at("entity_type").get<std::string>()};
      for (const auto& s : j.at("spans"))
        p.spans.push_back({s.at("start").get<std::size_t>(), s.at("end").get<std::size_t>(),
                           p.origin.entity_type, s.value("surface", std::string())});
      out.push_back(std::move(p));
    } catch (const json::exception& e) {
      throw ParseError(std::string("malformed prediction: ") + e.what(), line_no);
    }
  }
  return out;
}

std::size_t predict(const std::string& checkpoint_path, const std::string& triples_path,
                    const std::string& output_path, bool parallel) {
  Model model = [&] {
    auto in = open_in(checkpoint_path);
    return load_checkpoint(in);
  }();
  const auto triples = read_triples_file(triples_path);
  std::vector<MrcExample> examples;
  examples.reserve(triples.size());
  for (const auto& t : triples) examples.push_back(example_for(model, t));
  const auto spans = predict_all(model, examples, parallel);
  std::vector<Prediction> preds;
  preds.reserve(examples.size());
  for (std::size_t i = 0; i < examples.size(); ++i) preds.push_back({examples[i].origin, spans[i]});
  auto out = open_out(output_path);
  write_predictions(out, preds);
  if (!out) throw Error("failed writing '" + output_path + "'");
  return preds.size();
}

json evaluate(const std::string& gold_path, const std::vector<std::string>& prediction_paths,
              const std::string& output_path, const std::string& stats_path) {
  if (prediction_paths.empty()) throw Error("no predictions to evaluate");
  const auto gold = gold_table(read_triples_file(gold_path));
  std::vector<json> runs;
  std::vector<double> f1s;
  for (const auto& path : prediction_paths) {
    auto in = open_in(path);
    SpanTable pred;
    try {
      for (auto& p : read_predictions(in)) {
        auto& dst = pred[p.origin];
        dst.insert(dst.end(), p.spans.begin(), p.spans.end());
      }
    } catch (const ParseError& e) {
      throw ParseError(path + ": " + e.what(), e.line());
    }
    const auto report = score(gold, pred);
    runs.push_back(to_json(report));
    f1s.push_back(report.f1);
  }
  json result;
  if (runs.size() == 1) {
    result = runs.front();
  } else {
    result = {{"runs", runs}, {"stats", to_json(aggregate(f1s))}};
  }
  if (!stats_path.empty()) write_json_file(stats_path, to_json(aggregate(f1s)));
  if (!output_path.empty()) write_json_file(output_path, result);
  return result;
}

json significance(const std::string& stats_a, const std::string& stats_b,
                  const std::string& output_path, TTestKind kind) {
  const auto a = run_stats_from_json(read_json_file(stats_a));
  const auto b = run_stats_from_json(read_json_file(stats_b));
  json result = to_json(t_test(a.values, b.values, kind));
  result["test"] = kind == TTestKind::Welch ? "welch" : "student";
  if (!output_path.empty()) write_json_file(output_path, result);
  return result;
}

}  // namespace mrcner::commands
