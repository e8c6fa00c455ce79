#pragma once

#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "mrcner/baseline.hpp"
#include "mrcner/decode.hpp"
#include "mrcner/encoder.hpp"
#include "mrcner/heads.hpp"
#include "mrcner/mrc_data.hpp"

namespace mrcner {

enum class Mode { Mrc, BioBaseline };
std::string mode_name(Mode m);
Mode parse_mode(const std::string& name);

struct ModelConfig {
  Mode mode = Mode::Mrc;
  EncoderConfig encoder;
  EndHeadVariant variant = EndHeadVariant::Conditioned;
  bool head_bias = true;
  SeqConfig seq;
  MatchOrder match_order = MatchOrder::EndDriven;
};

// All trainable tensors. Only the head matching the mode is populated.
struct ModelParams {
  EncoderParams encoder;
  SpanHeadParams span;
  BioHeadParams bio;
  Mode mode = Mode::Mrc;

  static ModelParams zeros_like(const ModelParams& p);

  template <typename F>
  void visit(F&& f) {
    visit_impl(*this, f);
  }
  template <typename F>
  void visit(F&& f) const {
    visit_impl(*this, f);
  }

  std::size_t parameter_count() const;

 private:
  template <typename Self, typename F>
  static void visit_impl(Self& self, F& f) {
    self.encoder.visit([&](const std::string& n, auto& m) { f("encoder." + n, m); });
    if (self.mode == Mode::Mrc)
      self.span.visit([&](const std::string& n, auto& m) { f("span_head." + n, m); });
    else
      self.bio.visit([&](const std::string& n, auto& m) { f("bio_head." + n, m); });
  }
};

struct Model {
  ModelConfig config;
  Vocab vocab;
  ModelParams params;

  // Sets vocab_size and max_positions from vocab and seq config, then
  // initializes every tensor from seed.
  static Model initialize(ModelConfig config, Vocab vocab, std::uint64_t seed);
};

struct ExampleResult {
  double loss = 0.0;
  LossReport span_report;  // MRC mode only
};

// Forward on the unpadded prefix of the example. When grads is non-null the
// backward pass accumulates into it.
ExampleResult example_loss(const Model& model, const MrcExample& example, bool train_mode,
                           std::uint64_t dropout_seed, ModelParams* grads);

// Context representation and head outputs for inspection and decoding.
struct ExampleOutput {
  Matrix context;  // N x d
  SpanLogits span;  // MRC mode
  Matrix bio;       // baseline mode, N x 3
};
ExampleOutput example_forward(const Model& model, const MrcExample& example);

std::vector<EntitySpan> predict_example(const Model& model, const MrcExample& example);

// Builds the example for a triple, rejecting records of the other mode.
MrcExample example_for(const Model& model, const Triple& triple);

// JSON-of-arrays container: format tag, version, config, vocab and tensors.
void save_checkpoint(std::ostream& out, const Model& model);
Model load_checkpoint(std::istream& in);

}  // namespace mrcner
