#pragma once

#include <cstddef>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mrcner/eval.hpp"
#include "mrcner/model.hpp"
#include "mrcner/query.hpp"
#include "mrcner/trainer.hpp"

// File-level pipeline steps behind the mrcner command-line tool.
namespace mrcner::commands {

struct ConvertOptions {
  std::string input;
  std::string output;
  // Restricts output to one type and names bare B/I labels. Empty: every
  // type found, bare labels typed "ENTITY".
  std::string entity_type;
  QueryStrategy strategy = QueryStrategy::top(3);
  std::uint64_t query_seed = 7;
  Mode mode = Mode::Mrc;
  // Corpora the query entities are sampled from; defaults to the input.
  std::vector<std::string> inventory_paths;
  char column_sep = '\t';
  std::size_t seq_len = 128;  // only used for the truncation report
  bool per_sentence_queries = false;
};

struct ConvertReport {
  std::size_t sentences = 0;
  std::size_t triples = 0;
  std::size_t repair_count = 0;
  TruncationReport truncation;
  std::vector<QuerySpec> queries;

  nlohmann::json to_json() const;
};

ConvertReport convert(const ConvertOptions& opts);

struct TrainOptions {
  TrainConfig config;
  std::string train_path;
  std::string dev_path;  // optional
  std::string checkpoint_path;
  std::string manifest_path;  // optional
};

struct TrainReport {
  TrainResult result;
  nlohmann::json manifest;
};

TrainReport train(const TrainOptions& opts,
                  const std::function<void(const EpochRecord&)>& on_epoch = {});

struct Prediction {
  Origin origin;
  std::vector<EntitySpan> spans;
};

void write_predictions(std::ostream& out, const std::vector<Prediction>& predictions);
std::vector<Prediction> read_predictions(std::istream& in);

// Returns the number of predictions written.
std::size_t predict(const std::string& checkpoint_path, const std::string& triples_path,
                    const std::string& output_path, bool parallel = true);

// One predictions file gives the metrics object; several give
// {"runs": [metrics...], "stats": {...}} and, when stats_path is set, the
// stats JSON is also written there.
nlohmann::json evaluate(const std::string& gold_path, const std::vector<std::string>& prediction_paths,
                        const std::string& output_path, const std::string& stats_path = {});

nlohmann::json significance(const std::string& stats_a, const std::string& stats_b,
                            const std::string& output_path, TTestKind kind = TTestKind::Welch);

// Lowercase hex SHA-256 of a file's bytes / of a string.
std::string sha256_file(const std::string& path);
std::string sha256_text(const std::string& text);

std::vector<Sentence> read_corpus(const std::string& path, const ConllOptions& opts,
                                  std::size_t* repairs = nullptr);
std::vector<Triple> read_triples_file(const std::string& path);
void write_json_file(const std::string& path, const nlohmann::json& j);
nlohmann::json read_json_file(const std::string& path);

}  // namespace mrcner::commands
