#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>

#include "mrcner/matrix.hpp"

namespace mrcner {

enum class EndHeadVariant {
  Conditioned,  // end head reads [H_i ; softmax(start logits)_i]
  Ablation,     // end head reads H_i only
};

std::string variant_name(EndHeadVariant v);
EndHeadVariant parse_variant(const std::string& name);

struct SpanHeadParams {
  EndHeadVariant variant = EndHeadVariant::Conditioned;
  bool use_bias = true;
  Matrix w_start;  // d x 2
  Matrix b_start;  // 1 x 2
  Matrix w_end;    // (d + 2) x 2 conditioned, d x 2 ablation
  Matrix b_end;    // 1 x 2

  static SpanHeadParams zeros(std::size_t model_dim, EndHeadVariant variant, bool use_bias = true);
  static SpanHeadParams initialize(std::size_t model_dim, EndHeadVariant variant,
                                   std::uint64_t seed, bool use_bias = true);

  std::size_t model_dim() const { return w_start.rows(); }
  std::size_t end_input_dim() const { return w_end.rows(); }

  template <typename F>
  void visit(F&& f) {
    f(std::string("w_start"), w_start);
    f(std::string("b_start"), b_start);
    f(std::string("w_end"), w_end);
    f(std::string("b_end"), b_end);
  }
  template <typename F>
  void visit(F&& f) const {
    f(std::string("w_start"), w_start);
    f(std::string("b_start"), b_start);
    f(std::string("w_end"), w_end);
    f(std::string("b_end"), b_end);
  }
};

// Context rows [first, last] of the encoder output.
Matrix context_rows(const Matrix& hidden, std::size_t first, std::size_t last);

// Row-wise softmax.
Matrix softmax_rows(const Matrix& logits);

// N x 2: each context row mapped by w_start (+ b_start).
Matrix start_logits(const Matrix& context, const SpanHeadParams& params);
// N x 2. Conditioned: affine map of [H_i ; softmax(L_start)_i]. Ablation:
// affine map of H_i; start_logits is ignored. Throws ShapeError when shapes
// disagree with the variant.
Matrix end_logits(const Matrix& context, const SpanHeadParams& params, const Matrix& start_logits);

struct SpanLogits {
  Matrix start;
  Matrix end;
};

SpanLogits span_logits(const Matrix& context, const SpanHeadParams& params);

struct LossReport {
  double loss_start = 0.0;
  double loss_end = 0.0;
  double loss = 0.0;
  std::size_t token_count = 0;
};

struct SpanLossResult {
  LossReport report;
  Matrix grad_start;  // d loss / d start logits
  Matrix grad_end;
};

// Mean two-class cross-entropy over unmasked rows for each head, averaged
// as (start + end) / 2. An empty mask selects every row. Throws Error when
// no row is selected.
SpanLossResult span_loss(const Matrix& start, const Matrix& end,
                         std::span<const std::int32_t> y_start, std::span<const std::int32_t> y_end,
                         std::span<const std::int32_t> mask = {});

// Backpropagates logit gradients through both heads, including the
// softmax(L_start) input of the conditioned end head. Accumulates into
// grads and returns d loss / d context (N x d).
Matrix span_backward(const Matrix& context, const SpanHeadParams& params, const SpanLogits& logits,
                     const Matrix& grad_start, const Matrix& grad_end, SpanHeadParams& grads);

// Mean softmax cross-entropy of each row against class targets; writes
// d loss / d logits into grad when non-null.
double softmax_cross_entropy(const Matrix& logits, std::span<const std::int32_t> targets,
                             std::span<const std::int32_t> mask, Matrix* grad,
                             std::size_t* counted = nullptr);

}  // namespace mrcner
