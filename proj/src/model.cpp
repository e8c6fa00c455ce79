#include "mrcner/model.hpp"

#include <map>

#include <nlohmann/json.hpp>

#include "mrcner/error.hpp"
#include "mrcner/random.hpp"

namespace mrcner {

using nlohmann::json;

namespace {

constexpr const char* kCheckpointFormat = "mrcner-checkpoint";
constexpr int kCheckpointVersion = 1;

EncoderInput prefix_input(const MrcExample& ex) {
  const std::size_t n = ex.active_length();
  return {std::span<const std::int32_t>(ex.input_ids).first(n),
          std::span<const std::int32_t>(ex.segment_ids).first(n),
          std::span<const std::int32_t>(ex.attention_mask).first(n)};
}

void check_mode(const Model& model, const MrcExample& ex) {
  if ((model.config.mode == Mode::Mrc) != ex.has_query)
    throw Error("mode mismatch: " + mode_name(model.config.mode) + " model given a " +
                (ex.has_query ? "query-bearing (mrc)" : "query-free (bio-baseline)") + " example");
}

json tensor_json(const Matrix& m) {
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", m.values()}};
}

void load_tensor(const json& j, const std::string& name, Matrix& m) {
  const auto it = j.find(name);
  if (it == j.end()) throw Error("checkpoint is missing tensor '" + name + "'");
  const auto rows = it->at("rows").get<std::size_t>();
  const auto cols = it->at("cols").get<std::size_t>();
  if (rows != m.rows() || cols != m.cols())
    throw Error("checkpoint tensor '" + name + "' has shape " + std::to_string(rows) + "x" +
                std::to_string(cols) + ", configuration expects " + std::to_string(m.rows()) + "x" +
                std::to_string(m.cols()));
  auto data = it->at("data").get<std::vector<double>>();
  if (data.size() != m.size()) throw Error("checkpoint tensor '" + name + "' has wrong length");
  m.values() = std::move(data);
}

}  // namespace

std::string mode_name(Mode m) { return m == Mode::Mrc ? "mrc" : "bio-baseline"; }

Mode parse_mode(const std::string& name) {
  if (name == "mrc") return Mode::Mrc;
  if (name == "bio-baseline" || name == "bio") return Mode::BioBaseline;
  throw Error("unknown mode '" + name + "' (expected mrc or bio-baseline)");
}

ModelParams ModelParams::zeros_like(const ModelParams& p) {
  ModelParams g = p;
  g.visit([](const std::string&, Matrix& m) { m.fill(0.0); });
  return g;
}

std::size_t ModelParams::parameter_count() const {
  std::size_t n = 0;
  visit([&](const std::string&, const Matrix& m) { n += m.size(); });
  return n;
}

Model Model::initialize(ModelConfig config, Vocab vocab, std::uint64_t seed) {
  config.encoder.vocab_size = vocab.size();
  config.encoder.max_positions = std::max(config.encoder.max_positions, config.seq.seq_len);
  config.encoder.validate();
  Model m{config, std::move(vocab), {}};
  m.params.mode = config.mode;
  m.params.encoder = EncoderParams::initialize(config.encoder, mix_seed(seed, 1));
  if (config.mode == Mode::Mrc)
    m.params.span = SpanHeadParams::initialize(config.encoder.model_dim, config.variant,
                                               mix_seed(seed, 2), config.head_bias);
  else
    m.params.bio = BioHeadParams::initialize(config.encoder.model_dim, mix_seed(seed, 2));
  return m;
}

ExampleResult example_loss(const Model& model, const MrcExample& example, bool train_mode,
                           std::uint64_t dropout_seed, ModelParams* grads) {
  check_mode(model, example);
  const auto& cfg = model.config;
  auto fwd = encoder_forward(model.params.encoder, cfg.encoder, prefix_input(example), train_mode,
                             dropout_seed);
  const auto [first, last] = example.context_range;
  const Matrix context = context_rows(fwd.hidden, first, last);

  ExampleResult result;
  Matrix d_context;
  if (cfg.mode == Mode::Mrc) {
    const SpanLogits logits = span_logits(context, model.params.span);
    auto loss = span_loss(logits.start, logits.end, example.y_start, example.y_end);
    result.loss = loss.report.loss;
    result.span_report = loss.report;
    if (grads)
      d_context = span_backward(context, model.params.span, logits, loss.grad_start, loss.grad_end,
                                grads->span);
  } else {
    const Matrix logits = bio_logits(context, model.params.bio);
    const auto targets = bio_targets(example.gold_spans, example.context_length());
    auto loss = bio_loss(logits, targets);
    result.loss = loss.loss;
    if (grads) d_context = bio_backward(context, model.params.bio, loss.grad, grads->bio);
  }

  if (grads) {
    Matrix d_hidden(fwd.hidden.rows(), fwd.hidden.cols());
    for (std::size_t r = first; r <= last; ++r)
      for (std::size_t c = 0; c < d_hidden.cols(); ++c) d_hidden(r, c) = d_context(r - first, c);
    encoder_backward(model.params.encoder, cfg.encoder, fwd.tape, d_hidden, grads->encoder);
  }
  return result;
}

ExampleOutput example_forward(const Model& model, const MrcExample& example) {
  check_mode(model, example);
  auto fwd = encoder_forward(model.params.encoder, model.config.encoder, prefix_input(example));
  ExampleOutput out;
  out.context = context_rows(fwd.hidden, example.context_range.first, example.context_range.second);
  if (model.config.mode == Mode::Mrc)
    out.span = span_logits(out.context, model.params.span);
  else
    out.bio = bio_logits(out.context, model.params.bio);
  return out;
}

std::vector<EntitySpan> predict_example(const Model& model, const MrcExample& example) {
  const auto out = example_forward(model, example);
  if (model.config.mode == Mode::Mrc)
    return decode_example(example, out.span, model.config.match_order);
  return bio_decode(out.bio, example.origin.entity_type, example.context).spans;
}

MrcExample example_for(const Model& model, const Triple& triple) {
  if ((model.config.mode == Mode::Mrc) != triple.query.has_value())
    throw Error("mode mismatch: " + mode_name(model.config.mode) + " model given " +
                (triple.query ? "mrc" : "bio-baseline") + " triples (" + triple.doc_id + "/" +
                std::to_string(triple.sent_id) + ")");
  return make_example(triple, model.vocab, model.config.seq);
}

void save_checkpoint(std::ostream& out, const Model& model) {
  const auto& c = model.config;
  const auto& e = c.encoder;
  json tensors = json::object();
  model.params.visit([&](const std::string& name, const Matrix& m) { tensors[name] = tensor_json(m); });
  json j = {
      {"format", kCheckpointFormat},
      {"version", kCheckpointVersion},
      {"mode", mode_name(c.mode)},
      {"encoder",
       {{"layers", e.layers},
        {"model_dim", e.model_dim},
        {"heads", e.heads},
        {"ffn_dim", e.ffn_dim},
        {"vocab_size", e.vocab_size},
        {"max_positions", e.max_positions},
        {"dropout_rate", e.dropout_rate},
        {"layer_norm_eps", e.layer_norm_eps}}},
      {"head",
       {{"variant", variant_name(c.variant)},
        {"bias", c.head_bias},
        {"match_order", c.match_order == MatchOrder::EndDriven ? "end" : "start"}}},
      {"seq",
       {{"seq_len", c.seq.seq_len},
        {"order", c.seq.order == InputOrder::ContextFirst ? "context-first" : "query-first"}}},
      {"vocab", model.vocab.tokens()},
      {"tensors", std::move(tensors)}};
  out << j.dump() << '\n';
}

Model load_checkpoint(std::istream& in) {
  json j;
  try {
    in >> j;
  } catch (const json::exception& ex) {
    throw ParseError(std::string("unreadable checkpoint: ") + ex.what(), 0);
  }
  try {
    if (j.at("format") != kCheckpointFormat) throw Error("not a checkpoint file");
    if (j.at("version").get<int>() != kCheckpointVersion)
      throw Error("unsupported checkpoint version " + j.at("version").dump());
    ModelConfig c;
    c.mode = parse_mode(j.at("mode").get<std::string>());
    const auto& e = j.at("encoder");
    c.encoder.layers = e.at("layers");
    c.encoder.model_dim = e.at("model_dim");
    c.encoder.heads = e.at("heads");
    c.encoder.ffn_dim = e.at("ffn_dim");
    c.encoder.vocab_size = e.at("vocab_size");
    c.encoder.max_positions = e.at("max_positions");
    c.encoder.dropout_rate = e.at("dropout_rate");
    c.encoder.layer_norm_eps = e.at("layer_norm_eps");
    const auto& h = j.at("head");
    c.variant = parse_variant(h.at("variant").get<std::string>());
    c.head_bias = h.at("bias").get<bool>();
    c.match_order = h.at("match_order") == "start" ? MatchOrder::StartDriven : MatchOrder::EndDriven;
    c.seq.seq_len = j.at("seq").at("seq_len");
    c.seq.order = j.at("seq").at("order") == "query-first" ? InputOrder::QueryFirst
                                                            : InputOrder::ContextFirst;
    Vocab vocab(j.at("vocab").get<std::vector<std::string>>());
    if (vocab.size() != c.encoder.vocab_size) throw Error("checkpoint vocab size mismatch");

    Model m{c, std::move(vocab), {}};
    m.params.mode = c.mode;
    m.params.encoder = EncoderParams::zeros(c.encoder);
    if (c.mode == Mode::Mrc)
      m.params.span = SpanHeadParams::zeros(c.encoder.model_dim, c.variant, c.head_bias);
    else
      m.params.bio = BioHeadParams::zeros(c.encoder.model_dim);
    const auto& tensors = j.at("tensors");
    m.params.visit([&](const std::string& name, Matrix& t) { load_tensor(tensors, name, t); });
    return m;
  } catch (const json::exception& ex) {
    throw ParseError(std::string("malformed checkpoint: ") + ex.what(), 0);
  }
}

}  // namespace mrcner
