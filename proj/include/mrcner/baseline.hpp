#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mrcner/corpus.hpp"
#include "mrcner/matrix.hpp"

namespace mrcner {

// Softmax BIO classifier over the encoder's context rows. Class order is
// B, I, O.
struct BioHeadParams {
  Matrix w;  // d x 3
  Matrix b;  // 1 x 3

  static BioHeadParams zeros(std::size_t model_dim);
  static BioHeadParams initialize(std::size_t model_dim, std::uint64_t seed);

  template <typename F>
  void visit(F&& f) {
    f(std::string("w_bio"), w);
    f(std::string("b_bio"), b);
  }
  template <typename F>
  void visit(F&& f) const {
    f(std::string("w_bio"), w);
    f(std::string("b_bio"), b);
  }
};

inline constexpr std::int32_t kClassB = 0;
inline constexpr std::int32_t kClassI = 1;
inline constexpr std::int32_t kClassO = 2;

Matrix bio_logits(const Matrix& context, const BioHeadParams& params);

// Per-token class targets for a single entity type; spans of other types
// count as O.
std::vector<std::int32_t> bio_targets(std::span<const EntitySpan> spans, std::size_t length);

struct BioLossResult {
  double loss = 0.0;
  Matrix grad;  // d loss / d logits
};
BioLossResult bio_loss(const Matrix& logits, std::span<const std::int32_t> targets);

// Accumulates head gradients; returns d loss / d context.
Matrix bio_backward(const Matrix& context, const BioHeadParams& params, const Matrix& grad_logits,
                    BioHeadParams& grads);

struct BioDecodeResult {
  std::vector<EntitySpan> spans;
  std::size_t repair_count = 0;
};

// Per-token argmax -> repair -> spans. Ties resolve to the lower class index.
// Surfaces are attached when words are supplied.
BioDecodeResult bio_decode(const Matrix& logits, const std::string& entity_type,
                           std::span<const std::string> words = {});

}  // namespace mrcner
