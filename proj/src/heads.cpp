#include "mrcner/heads.hpp"

#include <cmath>

#include "mrcner/error.hpp"
#include "mrcner/kernels.hpp"
#include "mrcner/random.hpp"

namespace mrcner {

std::string variant_name(EndHeadVariant v) {
  return v == EndHeadVariant::Conditioned ? "conditioned" : "ablation";
}

EndHeadVariant parse_variant(const std::string& name) {
  if (name == "conditioned") return EndHeadVariant::Conditioned;
  if (name == "ablation") return EndHeadVariant::Ablation;
  throw Error("unknown head variant '" + name + "' (expected conditioned or ablation)");
}

SpanHeadParams SpanHeadParams::zeros(std::size_t model_dim, EndHeadVariant variant,
                                     bool use_bias) {
  SpanHeadParams p;
  p.variant = variant;
  p.use_bias = use_bias;
  p.w_start = Matrix(model_dim, 2);
  p.b_start = Matrix(1, 2);
  p.w_end = Matrix(variant == EndHeadVariant::Conditioned ? model_dim + 2 : model_dim, 2);
  p.b_end = Matrix(1, 2);
  return p;
}

SpanHeadParams SpanHeadParams::initialize(std::size_t model_dim, EndHeadVariant variant,
                                          std::uint64_t seed, bool use_bias) {
  auto p = zeros(model_dim, variant, use_bias);
  Rng rng(seed);
  for (auto& v : p.w_start.values()) v = rng.truncated_normal(0.02);
  for (auto& v : p.w_end.values()) v = rng.truncated_normal(0.02);
  return p;
}

Matrix context_rows(const Matrix& hidden, std::size_t first, std::size_t last) {
  if (first > last || last >= hidden.rows()) throw ShapeError("context range outside hidden rows");
  Matrix out(last - first + 1, hidden.cols());
  for (std::size_t r = first; r <= last; ++r) {
    const auto src = hidden.row(r);
    std::copy(src.begin(), src.end(), out.row(r - first).begin());
  }
  return out;
}

Matrix softmax_rows(const Matrix& logits) {
  Matrix p(logits.rows(), logits.cols());
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    const auto row = logits.row(r);
    double mx = row[0];
    for (double v : row) mx = std::max(mx, v);
    double z = 0.0;
    for (std::size_t c = 0; c < row.size(); ++c) z += p(r, c) = std::exp(row[c] - mx);
    for (std::size_t c = 0; c < row.size(); ++c) p(r, c) /= z;
  }
  return p;
}

namespace {

std::span<const double> bias_of(const Matrix& b, bool use_bias) {
  return use_bias ? std::span<const double>(b.values()) : std::span<const double>{};
}

Matrix end_head_input(const Matrix& context, const SpanHeadParams& params,
                      const Matrix& start_logits) {
  if (params.variant == EndHeadVariant::Ablation) return context;
  if (start_logits.rows() != context.rows() || start_logits.cols() != 2)
    throw ShapeError("conditioned end head needs N x 2 start logits");
  const Matrix probs = softmax_rows(start_logits);
  const std::size_t d = context.cols();
  Matrix in(context.rows(), d + 2);
  for (std::size_t r = 0; r < context.rows(); ++r) {
    for (std::size_t c = 0; c < d; ++c) in(r, c) = context(r, c);
    in(r, d) = probs(r, 0);
    in(r, d + 1) = probs(r, 1);
  }
  return in;
}

}  // namespace

Matrix start_logits(const Matrix& context, const SpanHeadParams& params) {
  if (context.cols() != params.model_dim()) throw ShapeError("start head width mismatch");
  Matrix out;
  kernels::matmul(context, params.w_start, out, bias_of(params.b_start, params.use_bias));
  return out;
}

Matrix end_logits(const Matrix& context, const SpanHeadParams& params, const Matrix& start) {
  const std::size_t expected =
      params.variant == EndHeadVariant::Conditioned ? context.cols() + 2 : context.cols();
  if (params.end_input_dim() != expected) throw ShapeError("end head width does not match variant");
  Matrix out;
  kernels::matmul(end_head_input(context, params, start), params.w_end, out,
                  bias_of(params.b_end, params.use_bias));
  return out;
}

SpanLogits span_logits(const Matrix& context, const SpanHeadParams& params) {
  SpanLogits l;
  l.start = start_logits(context, params);
  l.end = end_logits(context, params, l.start);
  return l;
}

double softmax_cross_entropy(const Matrix& logits, std::span<const std::int32_t> targets,
                             std::span<const std::int32_t> mask, Matrix* grad,
                             std::size_t* counted) {
  const std::size_t n = logits.rows(), k = logits.cols();
  if (targets.size() != n || (!mask.empty() && mask.size() != n))
    throw ShapeError("targets/mask length differs from logit rows");
  std::size_t count = 0;
  for (std::size_t r = 0; r < n; ++r) count += mask.empty() || mask[r] ? 1 : 0;
  if (count == 0) throw Error("cross-entropy over zero unmasked tokens");
  if (grad) *grad = Matrix(n, k);
  const Matrix probs = softmax_rows(logits);
  double total = 0.0;
  const double inv = 1.0 / static_cast<double>(count);
  for (std::size_t r = 0; r < n; ++r) {
    if (!mask.empty() && !mask[r]) continue;
    const auto y = static_cast<std::size_t>(targets[r]);
    if (y >= k) throw Error("target class out of range");
    const auto row = logits.row(r);
    double mx = row[0];
    for (double v : row) mx = std::max(mx, v);
    double z = 0.0;
    for (double v : row) z += std::exp(v - mx);
    total += std::log(z) + mx - row[y];
    if (grad)
      for (std::size_t c = 0; c < k; ++c) (*grad)(r, c) = (probs(r, c) - (c == y ? 1.0 : 0.0)) * inv;
  }
  if (counted) *counted = count;
  return total * inv;
}

SpanLossResult span_loss(const Matrix& start, const Matrix& end,
                         std::span<const std::int32_t> y_start, std::span<const std::int32_t> y_end,
                         std::span<const std::int32_t> mask) {
  if (start.cols() != 2 || end.cols() != 2 || start.rows() != end.rows())
    throw ShapeError("span logits must both be N x 2");
  SpanLossResult r;
  r.report.loss_start = softmax_cross_entropy(start, y_start, mask, &r.grad_start,
                                              &r.report.token_count);
  r.report.loss_end = softmax_cross_entropy(end, y_end, mask, &r.grad_end);
  r.report.loss = (r.report.loss_start + r.report.loss_end) / 2.0;
  for (auto& v : r.grad_start.values()) v *= 0.5;
  for (auto& v : r.grad_end.values()) v *= 0.5;
  return r;
}

Matrix span_backward(const Matrix& context, const SpanHeadParams& params, const SpanLogits& logits,
                     const Matrix& grad_start, const Matrix& grad_end, SpanHeadParams& grads) {
  const std::size_t n = context.rows(), d = context.cols();
  if (!grad_start.same_shape(logits.start) || !grad_end.same_shape(logits.end) ||
      logits.start.rows() != n)
    throw ShapeError("span gradient shapes do not match logits");

  const Matrix end_in = end_head_input(context, params, logits.start);
  kernels::matmul_at_b_acc(end_in, grad_end, grads.w_end);
  if (params.use_bias) kernels::column_sum_acc(grad_end, grads.b_end.values());
  Matrix d_end_in;
  kernels::matmul_a_bt(grad_end, params.w_end, d_end_in);

  Matrix d_start = grad_start;
  Matrix d_context(n, d);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < d; ++c) d_context(r, c) = d_end_in(r, c);

  if (params.variant == EndHeadVariant::Conditioned) {
    // d softmax: dl_i = p_i (dp_i - sum_j p_j dp_j)
    const Matrix probs = softmax_rows(logits.start);
    for (std::size_t r = 0; r < n; ++r) {
      const double dp0 = d_end_in(r, d), dp1 = d_end_in(r, d + 1);
      const double dot = probs(r, 0) * dp0 + probs(r, 1) * dp1;
      d_start(r, 0) += probs(r, 0) * (dp0 - dot);
      d_start(r, 1) += probs(r, 1) * (dp1 - dot);
    }
  }

  kernels::matmul_at_b_acc(context, d_start, grads.w_start);
  if (params.use_bias) kernels::column_sum_acc(d_start, grads.b_start.values());
  Matrix tmp;
  kernels::matmul_a_bt(d_start, params.w_start, tmp);
  kernels::add_inplace(d_context, tmp);
  return d_context;
}

}  // namespace mrcner
