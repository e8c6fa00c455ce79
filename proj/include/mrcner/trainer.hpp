#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "mrcner/eval.hpp"
#include "mrcner/model.hpp"
#include "mrcner/query.hpp"

namespace mrcner {

// Adam with linear warmup to learning_rate, then constant.
struct OptimizerConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::size_t warmup_steps = 20;
  double clip_norm = 1.0;  // global gradient-norm clip; 0 disables
};

struct TrainConfig {
  ModelConfig model;
  std::size_t epochs = 30;
  std::size_t batch_size = 8;
  std::uint64_t seed = 13;
  std::size_t min_count = 1;
  OptimizerConfig optimizer;
  // Recorded for the manifest; queries are fixed when triples are built.
  QueryStrategy query_strategy = QueryStrategy::top(3);
  std::uint64_t query_seed = 7;
  // Score the training set after every epoch.
  bool eval_train = false;
  // Stop once training-set F1 reaches this value (implies eval_train).
  std::optional<double> stop_at_train_f1;
  // 0 leaves the OpenMP default.
  int threads = 0;
  bool parallel = true;

  void validate() const;
};

nlohmann::json to_json(const TrainConfig& c);
// Keys absent from j keep the values already in base.
TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig base = {});

class Adam {
 public:
  Adam(const ModelParams& shape, OptimizerConfig cfg);
  double rate_at(std::size_t step) const;  // step is 1-based
  void step(ModelParams& params, const ModelParams& grads);
  std::size_t steps() const { return steps_; }

 private:
  OptimizerConfig cfg_;
  ModelParams m_, v_;
  std::size_t steps_ = 0;
};

struct BatchGradient {
  ModelParams grad;  // mean over the batch
  double loss = 0.0;
};

// Per-example gradients land in private slots and are summed in batch
// order, so the result does not depend on the thread count. parallel=false
// runs the same reduction serially.
BatchGradient batch_gradient(const Model& model, std::span<const MrcExample* const> batch,
                             std::span<const std::uint64_t> dropout_seeds, bool parallel = true);

std::vector<std::vector<EntitySpan>> predict_all(const Model& model,
                                                 std::span<const MrcExample> examples,
                                                 bool parallel = true);

SpanTable gold_table(std::span<const Triple> triples);
SpanTable prediction_table(std::span<const MrcExample> examples,
                           const std::vector<std::vector<EntitySpan>>& predictions);

EvalReport evaluate_model(const Model& model, std::span<const Triple> triples,
                          std::span<const MrcExample> examples, bool parallel = true);

struct EpochRecord {
  std::size_t epoch = 0;  // 0 = before any update
  double mean_loss = 0.0;
  std::optional<EvalReport> dev;
  std::optional<EvalReport> train;
};

struct TrainResult {
  Model best;
  std::size_t best_epoch = 0;
  std::vector<EpochRecord> history;
  TruncationReport train_truncation;
  TruncationReport dev_truncation;
};

// Builds the vocabulary from the training triples, initializes from
// config.seed and runs mini-batch Adam. The checkpoint with the best dev F1
// is retained (the last one when dev is empty). Throws NumericError on a
// non-finite loss and Error on a triple/mode mismatch.
TrainResult train(const TrainConfig& config, std::span<const Triple> train_triples,
                  std::span<const Triple> dev_triples,
                  const std::function<void(const EpochRecord&)>& on_epoch = {});

nlohmann::json to_json(const EpochRecord& r);

}  // namespace mrcner
