#include "mrcner/trainer.hpp"

#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "mrcner/error.hpp"
#include "mrcner/random.hpp"

namespace mrcner {

using nlohmann::json;

void TrainConfig::validate() const {
  if (batch_size == 0) throw Error("batch_size must be positive");
  if (model.seq.seq_len < 4) throw Error("seq_len must be at least 4");
  if (!(optimizer.learning_rate > 0.0)) throw Error("learning_rate must be positive");
  if (min_count == 0) throw Error("min_count must be positive");
  if (stop_at_train_f1 && (*stop_at_train_f1 < 0.0 || *stop_at_train_f1 > 1.0))
    throw Error("stop_at_train_f1 must lie in [0,1]");
}

json to_json(const TrainConfig& c) {
  const auto& e = c.model.encoder;
  json j = {
      {"mode", mode_name(c.model.mode)},
      {"head_variant", variant_name(c.model.variant)},
      {"head_bias", c.model.head_bias},
      {"match_order", c.model.match_order == MatchOrder::EndDriven ? "end" : "start"},
      {"seq_len", c.model.seq.seq_len},
      {"input_order", c.model.seq.order == InputOrder::ContextFirst ? "context-first" : "query-first"},
      {"encoder",
       {{"layers", e.layers},
        {"model_dim", e.model_dim},
        {"heads", e.heads},
        {"ffn_dim", e.ffn_dim},
        {"dropout_rate", e.dropout_rate}}},
      {"epochs", c.epochs},
      {"batch_size", c.batch_size},
      {"seed", c.seed},
      {"min_count", c.min_count},
      {"optimizer",
       {{"learning_rate", c.optimizer.learning_rate},
        {"beta1", c.optimizer.beta1},
        {"beta2", c.optimizer.beta2},
        {"epsilon", c.optimizer.epsilon},
        {"warmup_steps", c.optimizer.warmup_steps},
        {"clip_norm", c.optimizer.clip_norm}}},
      {"query_strategy", c.query_strategy.name()},
      {"query_seed", c.query_seed},
      {"eval_train", c.eval_train},
  };
  j["stop_at_train_f1"] = c.stop_at_train_f1 ? json(*c.stop_at_train_f1) : json(nullptr);
  return j;
}

TrainConfig train_config_from_json(const json& j, TrainConfig c) {
  auto get = [&](const json& obj, const char* key, auto& field) {
    if (const auto it = obj.find(key); it != obj.end() && !it->is_null())
      field = it->get<std::decay_t<decltype(field)>>();
  };
  try {
    if (j.contains("mode")) c.model.mode = parse_mode(j.at("mode").get<std::string>());
    if (j.contains("head_variant"))
      c.model.variant = parse_variant(j.at("head_variant").get<std::string>());
    get(j, "head_bias", c.model.head_bias);
    if (j.contains("match_order"))
      c.model.match_order =
          j.at("match_order") == "start" ? MatchOrder::StartDriven : MatchOrder::EndDriven;
    get(j, "seq_len", c.model.seq.seq_len);
    if (j.contains("input_order"))
      c.model.seq.order = j.at("input_order") == "query-first" ? InputOrder::QueryFirst
                                                                : InputOrder::ContextFirst;
    if (const auto it = j.find("encoder"); it != j.end()) {
      auto& e = c.model.encoder;
      get(*it, "layers", e.layers);
      get(*it, "model_dim", e.model_dim);
      get(*it, "heads", e.heads);
      get(*it, "ffn_dim", e.ffn_dim);
      get(*it, "dropout_rate", e.dropout_rate);
    }
    get(j, "epochs", c.epochs);
    get(j, "batch_size", c.batch_size);
    get(j, "seed", c.seed);
    get(j, "min_count", c.min_count);
    if (const auto it = j.find("optimizer"); it != j.end()) {
      auto& o = c.optimizer;
      get(*it, "learning_rate", o.learning_rate);
      get(*it, "beta1", o.beta1);
      get(*it, "beta2", o.beta2);
      get(*it, "epsilon", o.epsilon);
      get(*it, "warmup_steps", o.warmup_steps);
      get(*it, "clip_norm", o.clip_norm);
    }
    if (j.contains("query_strategy"))
      c.query_strategy = QueryStrategy::parse(j.at("query_strategy").get<std::string>());
    get(j, "query_seed", c.query_seed);
    get(j, "eval_train", c.eval_train);
    if (const auto it = j.find("stop_at_train_f1"); it != j.end() && !it->is_null())
      c.stop_at_train_f1 = it->get<double>();
  } catch (const json::exception& ex) {
    throw Error(std::string("bad training config: ") + ex.what());
  }
  c.validate();
  return c;
}

Adam::Adam(const ModelParams& shape, OptimizerConfig cfg)
    : cfg_(cfg), m_(ModelParams::zeros_like(shape)), v_(ModelParams::zeros_like(shape)) {}

double Adam::rate_at(std::size_t step) const {
  if (cfg_.warmup_steps == 0 || step >= cfg_.warmup_steps) return cfg_.learning_rate;
  return cfg_.learning_rate * static_cast<double>(step) / static_cast<double>(cfg_.warmup_steps);
}

void Adam::step(ModelParams& params, const ModelParams& grads) {
  ++steps_;
  double scale = 1.0;
  if (cfg_.clip_norm > 0.0) {
    double sq = 0.0;
    grads.visit([&](const std::string&, const Matrix& g) {
      for (double v : g.values()) sq += v * v;
    });
    const double norm = std::sqrt(sq);
    if (norm > cfg_.clip_norm) scale = cfg_.clip_norm / norm;
  }
  const double lr = rate_at(steps_);
  const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(steps_));

  std::vector<Matrix*> p_list, m_list, v_list;
  std::vector<const Matrix*> g_list;
  params.visit([&](const std::string&, Matrix& m) { p_list.push_back(&m); });
  m_.visit([&](const std::string&, Matrix& m) { m_list.push_back(&m); });
  v_.visit([&](const std::string&, Matrix& m) { v_list.push_back(&m); });
  grads.visit([&](const std::string&, const Matrix& m) { g_list.push_back(&m); });

  for (std::size_t t = 0; t < p_list.size(); ++t) {
    auto& p = p_list[t]->values();
    auto& m = m_list[t]->values();
    auto& v = v_list[t]->values();
    const auto& g = g_list[t]->values();
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double gi = g[i] * scale;
      m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * gi;
      v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * gi * gi;
      p[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + cfg_.epsilon);
    }
  }
}

BatchGradient batch_gradient(const Model& model, std::span<const MrcExample* const> batch,
                             std::span<const std::uint64_t> dropout_seeds, bool parallel) {
  if (batch.empty()) throw Error("empty batch");
  if (dropout_seeds.size() != batch.size()) throw ShapeError("one dropout seed per example");
  const auto n = static_cast<std::ptrdiff_t>(batch.size());
  std::vector<ModelParams> slots(batch.size(), ModelParams::zeros_like(model.params));
  std::vector<double> losses(batch.size());
#pragma omp parallel for schedule(static) if (parallel && n > 1)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    losses[i] = example_loss(model, *batch[i], true, dropout_seeds[i], &slots[i]).loss;
  }

  BatchGradient out{std::move(slots[0]), losses[0]};
  std::vector<Matrix*> acc;
  out.grad.visit([&](const std::string&, Matrix& m) { acc.push_back(&m); });
  for (std::size_t i = 1; i < batch.size(); ++i) {
    std::size_t t = 0;
    slots[i].visit([&](const std::string&, const Matrix& m) {
      auto& dst = acc[t++]->values();
      const auto& src = m.values();
      for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += src[k];
    });
    out.loss += losses[i];
  }
  const double inv = 1.0 / static_cast<double>(batch.size());
  for (auto* m : acc)
    for (auto& v : m->values()) v *= inv;
  out.loss *= inv;
  return out;
}

std::vector<std::vector<EntitySpan>> predict_all(const Model& model,
                                                 std::span<const MrcExample> examples,
                                                 bool parallel) {
  std::vector<std::vector<EntitySpan>> out(examples.size());
  const auto n = static_cast<std::ptrdiff_t>(examples.size());
#pragma omp parallel for schedule(static) if (parallel && n > 1)
  for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = predict_example(model, examples[i]);
  return out;
}

SpanTable gold_table(std::span<const Triple> triples) {
  SpanTable t;
  for (const auto& tr : triples) {
    auto& dst = t[tr.origin()];
    for (auto s : tr.answers) {
      s.entity_type = tr.entity_type;
      dst.push_back(std::move(s));
    }
  }
  return t;
}

SpanTable prediction_table(std::span<const MrcExample> examples,
                           const std::vector<std::vector<EntitySpan>>& predictions) {
  SpanTable t;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    auto& dst = t[examples[i].origin];
    dst.insert(dst.end(), predictions[i].begin(), predictions[i].end());
  }
  return t;
}

EvalReport evaluate_model(const Model& model, std::span<const Triple> triples,
                          std::span<const MrcExample> examples, bool parallel) {
  return score(gold_table(triples), prediction_table(examples, predict_all(model, examples, parallel)));
}

json to_json(const EpochRecord& r) {
  json j = {{"epoch", r.epoch}, {"loss", r.mean_loss}};
  j["dev"] = r.dev ? to_json(*r.dev) : json(nullptr);
  j["train"] = r.train ? to_json(*r.train) : json(nullptr);
  return j;
}

TrainResult train(const TrainConfig& config, std::span<const Triple> train_triples,
                  std::span<const Triple> dev_triples,
                  const std::function<void(const EpochRecord&)>& on_epoch) {
  config.validate();
#ifdef _OPENMP
  if (config.threads > 0) omp_set_num_threads(config.threads);
#endif
  if (train_triples.empty()) throw Error("no training triples");

  std::vector<std::vector<std::string>> texts;
  for (const auto& t : train_triples) {
    texts.push_back(t.context);
    if (t.query) texts.push_back(split_whitespace(*t.query));
  }
  Model model = Model::initialize(config.model, build_vocab(texts, config.min_count), config.seed);

  std::vector<MrcExample> train_examples, dev_examples;
  for (const auto& t : train_triples) train_examples.push_back(example_for(model, t));
  for (const auto& t : dev_triples) dev_examples.push_back(example_for(model, t));

  TrainResult result{model, 0, {}, truncation_report(train_examples),
                     truncation_report(dev_examples)};
  const bool eval_train = config.eval_train || config.stop_at_train_f1.has_value();
  const bool has_dev = !dev_examples.empty();
  double best_dev = -1.0;

  auto finish_epoch = [&](EpochRecord rec) {
    if (has_dev) rec.dev = evaluate_model(model, dev_triples, dev_examples, config.parallel);
    if (eval_train) rec.train = evaluate_model(model, train_triples, train_examples, config.parallel);
    if (!has_dev || rec.dev->f1 > best_dev) {
      best_dev = has_dev ? rec.dev->f1 : best_dev;
      result.best = model;
      result.best_epoch = rec.epoch;
    }
    result.history.push_back(rec);
    if (on_epoch) on_epoch(rec);
    return rec.train && config.stop_at_train_f1 && rec.train->f1 >= *config.stop_at_train_f1;
  };

  if (finish_epoch({0, 0.0, {}, {}})) return result;

  Adam adam(model.params, config.optimizer);
  Rng shuffle_rng(mix_seed(config.seed, 3));
  const std::uint64_t dropout_base = mix_seed(config.seed, 4);
  std::vector<std::size_t> order(train_examples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[shuffle_rng.below(i)]);
    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t b = 0; b < order.size(); b += config.batch_size) {
      const std::size_t e = std::min(order.size(), b + config.batch_size);
      std::vector<const MrcExample*> batch;
      std::vector<std::uint64_t> seeds;
      for (std::size_t k = b; k < e; ++k) {
        batch.push_back(&train_examples[order[k]]);
        seeds.push_back(mix_seed(dropout_base + epoch, order[k]));
      }
      auto g = batch_gradient(model, batch, seeds, config.parallel);
      if (!std::isfinite(g.loss))
        throw NumericError("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                           std::to_string(batches) + " (first example " +
                           batch.front()->origin.doc_id + "/" +
                           std::to_string(batch.front()->origin.sent_id) + ")");
      adam.step(model.params, g.grad);
      loss_sum += g.loss;
      ++batches;
    }
    if (finish_epoch({epoch, loss_sum / static_cast<double>(batches), {}, {}})) break;
  }
  return result;
}

}  // namespace mrcner
