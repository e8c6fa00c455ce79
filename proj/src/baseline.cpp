#include "mrcner/baseline.hpp"

#include "mrcner/error.hpp"
#include "mrcner/heads.hpp"
#include "mrcner/kernels.hpp"
#include "mrcner/random.hpp"

namespace mrcner {

BioHeadParams BioHeadParams::zeros(std::size_t model_dim) {
  return {Matrix(model_dim, 3), Matrix(1, 3)};
}

BioHeadParams BioHeadParams::initialize(std::size_t model_dim, std::uint64_t seed) {
  auto p = zeros(model_dim);
  Rng rng(seed);
  for (auto& v : p.w.values()) v = rng.truncated_normal(0.02);
  return p;
}

Matrix bio_logits(const Matrix& context, const BioHeadParams& params) {
  if (context.cols() != params.w.rows()) throw ShapeError("BIO head width mismatch");
  Matrix out;
  kernels::matmul(context, params.w, out, params.b.values());
  return out;
}

std::vector<std::int32_t> bio_targets(std::span<const EntitySpan> spans, std::size_t length) {
  std::vector<std::int32_t> t(length, kClassO);
  for (const auto& s : spans) {
    if (s.end >= length) throw ShapeError("span outside sequence");
    t[s.start] = kClassB;
    for (std::size_t i = s.start + 1; i <= s.end; ++i) t[i] = kClassI;
  }
  return t;
}

BioLossResult bio_loss(const Matrix& logits, std::span<const std::int32_t> targets) {
  if (logits.cols() != 3) throw ShapeError("BIO logits must be N x 3");
  BioLossResult r;
  r.loss = softmax_cross_entropy(logits, targets, {}, &r.grad);
  return r;
}

Matrix bio_backward(const Matrix& context, const BioHeadParams& params, const Matrix& grad_logits,
                    BioHeadParams& grads) {
  kernels::matmul_at_b_acc(context, grad_logits, grads.w);
  kernels::column_sum_acc(grad_logits, grads.b.values());
  Matrix d_context;
  kernels::matmul_a_bt(grad_logits, params.w, d_context);
  return d_context;
}

BioDecodeResult bio_decode(const Matrix& logits, const std::string& entity_type,
                           std::span<const std::string> words) {
  if (logits.cols() != 3) throw ShapeError("BIO logits must be N x 3");
  std::vector<BioLabel> raw(logits.rows());
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < 3; ++c)
      if (logits(r, c) > logits(r, best)) best = c;
    if (best == kClassB)
      raw[r] = BioLabel::begin(entity_type);
    else if (best == kClassI)
      raw[r] = BioLabel::inside(entity_type);
  }
  auto repaired = repair_bio(raw);
  BioDecodeResult out;
  out.repair_count = repaired.repair_count;
  out.spans = bio_to_spans(repaired.labels);
  if (!words.empty()) attach_surfaces(out.spans, words);
  return out;
}

}  // namespace mrcner
