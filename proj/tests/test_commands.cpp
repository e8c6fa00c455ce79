#include <doctest.h>

#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "mrcner/commands.hpp"
#include "mrcner/synthetic.hpp"

using namespace mrcner;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() : path(fs::temp_directory_path() / ("mrcner_cli_" + std::to_string(::getpid()))) {
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
};

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run(const std::string& args, const std::string& stderr_path = "/dev/null") {
  const std::string cmd = std::string(MRCNER_CLI) + " " + args + " > /dev/null 2> " + stderr_path;
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void write_corpus(const std::string& path, std::size_t n, std::uint64_t seed) {
  SyntheticOptions o;
  o.sentences = n;
  const auto corpus = synthetic_corpus(o, seed);
  std::ofstream out(path);
  write_conll(out, corpus);
}

}  // namespace

TEST_CASE("convert writes triples and a report") {
  TempDir dir;
  write_corpus(dir / "train.bio", 8, 1);
  commands::ConvertOptions opts;
  opts.input = dir / "train.bio";
  opts.output = dir / "train.jsonl";
  const auto report = commands::convert(opts);
  CHECK(report.sentences == 8);
  CHECK(report.triples == 8);
  REQUIRE(report.queries.size() == 1);
  CHECK(report.queries[0].sampled_entities.size() == 3);
  const auto triples = commands::read_triples_file(opts.output);
  CHECK(triples.size() == 8);
  // one query per run by default
  for (const auto& t : triples) CHECK(t.query == report.queries[0].text);

  opts.per_sentence_queries = true;
  opts.output = dir / "varied.jsonl";
  commands::convert(opts);
  const auto varied = commands::read_triples_file(opts.output);
  std::set<std::string> texts;
  for (const auto& t : varied) texts.insert(*t.query);
  CHECK(texts.size() > 1);

  opts.mode = Mode::BioBaseline;
  opts.output = dir / "bio.jsonl";
  commands::convert(opts);
  for (const auto& t : commands::read_triples_file(opts.output)) CHECK_FALSE(t.query.has_value());
}

TEST_CASE("command-line pipeline") {
  TempDir dir;
  write_corpus(dir / "train.bio", 10, 2);
  write_corpus(dir / "dev.bio", 4, 3);
  REQUIRE(run("convert " + (dir / "train.bio") + " -o " + (dir / "train.jsonl")) == 0);
  REQUIRE(run("convert " + (dir / "dev.bio") + " -o " + (dir / "dev.jsonl") + " --inventory " +
              (dir / "train.bio")) == 0);
  const std::string small = " --epochs 1 --layers 1 --model-dim 8 --heads 2 --ffn-dim 16 --seq-len 40";
  REQUIRE(run("train --train " + (dir / "train.jsonl") + " --dev " + (dir / "dev.jsonl") + " -o " +
              (dir / "model.json") + " --manifest " + (dir / "manifest.json") + small) == 0);
  const auto manifest = commands::read_json_file(dir / "manifest.json");
  CHECK(manifest.at("datasets").at("train") == commands::sha256_file(dir / "train.jsonl"));
  CHECK(manifest.at("epochs").size() == 2);
  CHECK(manifest.contains("checkpoint_hash"));

  REQUIRE(run("predict --checkpoint " + (dir / "model.json") + " --triples " + (dir / "dev.jsonl") +
              " -o " + (dir / "pred.jsonl")) == 0);
  REQUIRE(run("evaluate --gold " + (dir / "dev.jsonl") + " --pred " + (dir / "pred.jsonl") + " -o " +
              (dir / "metrics.json")) == 0);
  const auto metrics = commands::read_json_file(dir / "metrics.json");
  CHECK(metrics.contains("f1"));
  CHECK(metrics.contains("percent"));

  // several runs give stats, and two stats files can be compared
  REQUIRE(run("evaluate --gold " + (dir / "dev.jsonl") + " --pred " + (dir / "pred.jsonl") + " --pred " +
              (dir / "pred.jsonl") + " --stats-out " + (dir / "stats_a.json")) == 0);
  nlohmann::json b = {{"runs", {0.1, 0.2, 0.15}}};
  commands::write_json_file(dir / "stats_b.json", b);
  REQUIRE(run("significance " + (dir / "stats_a.json") + " " + (dir / "stats_b.json") + " -o " +
              (dir / "sig.json")) == 0);
  const auto sig = commands::read_json_file(dir / "sig.json");
  CHECK(sig.at("test") == "welch");
  CHECK(sig.contains("stars"));

  // a checkpoint of the other mode is rejected
  REQUIRE(run("convert " + (dir / "dev.bio") + " -o " + (dir / "dev_bio.jsonl") + " --mode bio-baseline") == 0);
  CHECK(run("predict --checkpoint " + (dir / "model.json") + " --triples " + (dir / "dev_bio.jsonl") +
            " -o " + (dir / "x.jsonl"), dir / "err.txt") == 1);
  CHECK(slurp(dir / "err.txt").find("mode mismatch") != std::string::npos);
}

TEST_CASE("command-line errors are JSON diagnostics") {
  TempDir dir;
  {
    std::ofstream out(dir / "bad.bio");
    out << "a\tO\nb\tO\tX\n";
  }
  CHECK(run("convert " + (dir / "bad.bio") + " -o " + (dir / "t.jsonl"), dir / "err.txt") == 1);
  const auto diag = nlohmann::json::parse(slurp(dir / "err.txt"));
  CHECK(diag.at("command") == "convert");
  CHECK(diag.at("line") == 2);

  CHECK(run("convert " + (dir / "missing.bio") + " -o " + (dir / "t.jsonl"), dir / "err2.txt") == 1);
  CHECK(slurp(dir / "err2.txt").find("cannot open") != std::string::npos);

  // a stray I is repaired, not fatal
  {
    std::ofstream out(dir / "stray.bio");
    out << "a\tI-CHEM\nb\tO\n";
  }
  CHECK(run("convert " + (dir / "stray.bio") + " -o " + (dir / "t.jsonl")) == 0);
}

TEST_CASE("prediction files round trip") {
  std::vector<commands::Prediction> preds{{{"d", 3, "X"}, {{1, 2, "X", "a b"}}}, {{"d", 4, "X"}, {}}};
  std::stringstream ss;
  commands::write_predictions(ss, preds);
  const auto back = commands::read_predictions(ss);
  REQUIRE(back.size() == 2);
  CHECK(back[0].origin == preds[0].origin);
  CHECK(back[0].spans == preds[0].spans);
  CHECK(back[1].spans.empty());
  CHECK(commands::sha256_text("abc") ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}
