#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mrcner/matrix.hpp"

namespace mrcner {

struct EncoderConfig {
  std::size_t layers = 2;
  std::size_t model_dim = 64;
  std::size_t heads = 4;
  std::size_t ffn_dim = 256;
  std::size_t vocab_size = 0;
  std::size_t max_positions = 128;
  double dropout_rate = 0.1;
  double layer_norm_eps = 1e-12;

  // Throws Error when a field is out of range.
  void validate() const;
  std::size_t head_dim() const { return model_dim / heads; }
  bool operator==(const EncoderConfig&) const = default;
};

struct LayerParams {
  Matrix ln1_gain, ln1_bias;
  Matrix wq, bq, wk, bk, wv, bv, wo, bo;
  Matrix ln2_gain, ln2_bias;
  Matrix w1, b1, w2, b2;

  template <typename Self, typename F>
  static void visit(Self& self, const std::string& prefix, F&& f) {
    f(prefix + "ln1_gain", self.ln1_gain);
    f(prefix + "ln1_bias", self.ln1_bias);
    f(prefix + "wq", self.wq);
    f(prefix + "bq", self.bq);
    f(prefix + "wk", self.wk);
    f(prefix + "bk", self.bk);
    f(prefix + "wv", self.wv);
    f(prefix + "bv", self.bv);
    f(prefix + "wo", self.wo);
    f(prefix + "bo", self.bo);
    f(prefix + "ln2_gain", self.ln2_gain);
    f(prefix + "ln2_bias", self.ln2_bias);
    f(prefix + "w1", self.w1);
    f(prefix + "b1", self.b1);
    f(prefix + "w2", self.w2);
    f(prefix + "b2", self.b2);
  }
};

// Weights of the encoder. Also used as the gradient container. Vectors are
// stored as 1 x n matrices so every tensor can be visited uniformly.
struct EncoderParams {
  Matrix token_embedding;     // vocab_size x d
  Matrix embedding_bias;      // 1 x d
  Matrix position_embedding;  // max_positions x d
  Matrix segment_embedding;   // 2 x d
  std::vector<LayerParams> layers;
  Matrix final_ln_gain, final_ln_bias;

  // Zero weights, unit layer-norm gains.
  static EncoderParams zeros(const EncoderConfig& cfg);
  // Truncated normal (std 0.02) matrices, zero biases, unit gains.
  static EncoderParams initialize(const EncoderConfig& cfg, std::uint64_t seed);
  // Same shapes, all zero (gradient buffer).
  static EncoderParams zeros_like(const EncoderParams& p);

  template <typename F>
  void visit(F&& f) {
    visit_impl(*this, f);
  }
  template <typename F>
  void visit(F&& f) const {
    visit_impl(*this, f);
  }

 private:
  template <typename Self, typename F>
  static void visit_impl(Self& self, F& f) {
    f(std::string("token_embedding"), self.token_embedding);
    f(std::string("embedding_bias"), self.embedding_bias);
    f(std::string("position_embedding"), self.position_embedding);
    f(std::string("segment_embedding"), self.segment_embedding);
    for (std::size_t l = 0; l < self.layers.size(); ++l)
      LayerParams::visit(self.layers[l], "layer" + std::to_string(l) + ".", f);
    f(std::string("final_ln_gain"), self.final_ln_gain);
    f(std::string("final_ln_bias"), self.final_ln_bias);
  }
};

// The token sequence fed to the encoder. Spans all have the same length.
struct EncoderInput {
  std::span<const std::int32_t> ids;
  std::span<const std::int32_t> segments;
  std::span<const std::int32_t> mask;  // 1 = attend, 0 = padding
};

struct LayerNormCache {
  Matrix xhat;
  std::vector<double> rstd;
};

struct LayerTape {
  Matrix x_in;
  LayerNormCache ln1;
  Matrix normed1;
  Matrix q, k, v;
  std::vector<Matrix> probs;  // one T x T matrix per head
  Matrix ctx;
  Matrix drop1;  // dropout scale per element; empty when inactive
  Matrix x_mid;
  LayerNormCache ln2;
  Matrix normed2;
  Matrix pre_act, act;
  Matrix drop2;
};

// Everything backward needs from a forward pass.
struct EncoderTape {
  std::vector<std::int32_t> ids, segments, mask;
  Matrix drop0;
  std::vector<LayerTape> layers;
  Matrix x_final;
  LayerNormCache final_ln;
};

struct EncoderOutput {
  Matrix hidden;  // T x d
  EncoderTape tape;
};

// Pre-norm transformer: h0 = token + bias + position + segment embeddings,
// then per layer x += Attn(LN(x)); x += FFN(LN(x)) with GELU, then a final
// layer norm. Dropout applies only when train_mode is set and is driven by
// rng_seed. Throws Error on an out-of-range id and NumericError naming the
// layer on a non-finite activation.
EncoderOutput encoder_forward(const EncoderParams& params, const EncoderConfig& cfg,
                              const EncoderInput& input, bool train_mode = false,
                              std::uint64_t rng_seed = 0);

// Accumulates parameter gradients into grads and returns the gradient with
// respect to the summed input embeddings (T x d).
Matrix encoder_backward(const EncoderParams& params, const EncoderConfig& cfg,
                        const EncoderTape& tape, const Matrix& grad_hidden, EncoderParams& grads);

double gelu(double x);
double gelu_grad(double x);

}  // namespace mrcner
