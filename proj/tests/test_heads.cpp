#include <doctest.h>

#include <cmath>

#include "mrcner/error.hpp"
#include "mrcner/heads.hpp"
#include "mrcner/random.hpp"
#include "oracles.hpp"

using namespace mrcner;

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, std::uint64_t seed, double scale = 1.0) {
  Rng rng(seed);
  Matrix m(r, c);
  for (auto& v : m.values()) v = scale * rng.normal();
  return m;
}

SpanHeadParams random_head(std::size_t d, EndHeadVariant v, std::uint64_t seed) {
  auto p = SpanHeadParams::zeros(d, v);
  p.w_start = random_matrix(p.w_start.rows(), 2, seed);
  p.b_start = random_matrix(1, 2, seed + 1);
  p.w_end = random_matrix(p.w_end.rows(), 2, seed + 2);
  p.b_end = random_matrix(1, 2, seed + 3);
  return p;
}

}  // namespace

TEST_CASE("zero heads give zero logits") {
  const auto h = random_matrix(5, 4, 1);
  for (auto v : {EndHeadVariant::Conditioned, EndHeadVariant::Ablation}) {
    const auto p = SpanHeadParams::zeros(4, v);
    const auto logits = span_logits(h, p);
    for (double x : logits.start.values()) CHECK(x == 0.0);
    for (double x : logits.end.values()) CHECK(x == 0.0);
    const auto probs = softmax_rows(logits.start);
    for (double x : probs.values()) CHECK(x == 0.5);
  }
  CHECK(SpanHeadParams::zeros(4, EndHeadVariant::Conditioned).end_input_dim() == 6);
  CHECK(SpanHeadParams::zeros(4, EndHeadVariant::Ablation).end_input_dim() == 4);
}

TEST_CASE("one-hot row gives a 2w margin") {
  Matrix h(3, 4);
  h(1, 0) = 1.0;
  auto p = SpanHeadParams::zeros(4, EndHeadVariant::Ablation);
  p.w_start(0, 0) = -1.75;
  p.w_start(0, 1) = 1.75;
  const auto l = start_logits(h, p);
  CHECK(l(1, 1) - l(1, 0) == 3.5);
  CHECK(l(0, 1) - l(0, 0) == 0.0);
}

TEST_CASE("logits match a matrix-multiply oracle") {
  const std::size_t d = 6;
  const auto h = random_matrix(7, d, 2);
  for (auto v : {EndHeadVariant::Conditioned, EndHeadVariant::Ablation}) {
    const auto p = random_head(d, v, 10);
    const auto l = span_logits(h, p);
    for (std::size_t i = 0; i < 7; ++i) {
      std::vector<double> in(h.row(i).begin(), h.row(i).end());
      double s[2];
      for (int c = 0; c < 2; ++c) {
        s[c] = p.b_start(0, c);
        for (std::size_t k = 0; k < d; ++k) s[c] += in[k] * p.w_start(k, c);
        CHECK(l.start(i, c) == doctest::Approx(s[c]).epsilon(1e-12));
      }
      if (v == EndHeadVariant::Conditioned) {
        const double z = std::exp(s[0]) + std::exp(s[1]);
        in.push_back(std::exp(s[0]) / z);
        in.push_back(std::exp(s[1]) / z);
      }
      for (int c = 0; c < 2; ++c) {
        double e = p.b_end(0, c);
        for (std::size_t k = 0; k < in.size(); ++k) e += in[k] * p.w_end(k, c);
        CHECK(l.end(i, c) == doctest::Approx(e).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("conditioning path") {
  const std::size_t d = 4;
  const auto h = random_matrix(5, d, 3);
  auto p = SpanHeadParams::zeros(d, EndHeadVariant::Conditioned);
  p.w_start = random_matrix(d, 2, 4);
  p.w_end(d, 0) = 1.0;
  p.w_end(d + 1, 1) = 1.0;
  const auto l = span_logits(h, p);
  const auto probs = softmax_rows(l.start);
  for (std::size_t i = 0; i < 5; ++i)
    for (int c = 0; c < 2; ++c) CHECK(l.end(i, c) == doctest::Approx(probs(i, c)).epsilon(1e-15));

  // perturbing the start logits moves the conditioned end logits only
  auto shifted = l.start;
  shifted(2, 1) += 1.0;
  const auto cond_a = end_logits(h, p, l.start);
  const auto cond_b = end_logits(h, p, shifted);
  CHECK(cond_a(2, 1) != cond_b(2, 1));
  const auto abl = random_head(d, EndHeadVariant::Ablation, 5);
  CHECK(end_logits(h, abl, l.start) == end_logits(h, abl, shifted));
  CHECK(end_logits(h, SpanHeadParams::zeros(d, EndHeadVariant::Ablation), l.start) == Matrix(5, 2));

  // same shared weights, conditioned differs from ablation when probability weights are nonzero
  auto cond = random_head(d, EndHeadVariant::Conditioned, 6);
  auto abl2 = SpanHeadParams::zeros(d, EndHeadVariant::Ablation);
  abl2.w_start = cond.w_start;
  abl2.b_start = cond.b_start;
  abl2.b_end = cond.b_end;
  for (std::size_t k = 0; k < d; ++k)
    for (int c = 0; c < 2; ++c) abl2.w_end(k, c) = cond.w_end(k, c);
  CHECK_FALSE(span_logits(h, cond).end == span_logits(h, abl2).end);

  // shape mismatch
  auto broken = cond;
  broken.w_end = Matrix(d, 2);
  CHECK_THROWS_AS(end_logits(h, broken, l.start), ShapeError);
}

TEST_CASE("loss identities") {
  const Matrix zeros(4, 2);
  const std::vector<std::int32_t> ys{1, 0, 0, 1}, ye{0, 1, 0, 0};
  const auto r = span_loss(zeros, zeros, ys, ye);
  CHECK(std::fabs(r.report.loss_start - std::log(2.0)) <= 1e-12);
  CHECK(std::fabs(r.report.loss_end - std::log(2.0)) <= 1e-12);
  CHECK(std::fabs(r.report.loss - std::log(2.0)) <= 1e-12);
  CHECK(r.report.token_count == 4);

  // saturated-correct limit
  Matrix sat_s(4, 2), sat_e(4, 2);
  for (std::size_t i = 0; i < 4; ++i) {
    sat_s(i, ys[i]) = 50.0;
    sat_e(i, ye[i]) = 50.0;
  }
  const auto s = span_loss(sat_s, sat_e, ys, ye);
  CHECK(s.report.loss < 1e-20);
  CHECK(s.report.loss >= 0.0);

  // 3-token oracle
  Matrix l3(3, 2);
  l3(0, 0) = 0.3, l3(0, 1) = 1.2;
  l3(1, 0) = -0.4, l3(1, 1) = 0.9;
  l3(2, 0) = 2.0, l3(2, 1) = -1.0;
  const std::vector<std::int32_t> t3{1, 0, 0};
  const double expect = oracle::scalar_ce({{0.3, 1.2}, {-0.4, 0.9}, {2.0, -1.0}}, {1, 0, 0});
  const auto r3 = span_loss(l3, Matrix(3, 2), t3, std::vector<std::int32_t>{0, 0, 0});
  CHECK(std::fabs(r3.report.loss_start - expect) <= 1e-12);

  // symmetry under swapping the two terms
  const auto a = random_matrix(6, 2, 7), b = random_matrix(6, 2, 8);
  const std::vector<std::int32_t> y1{0, 1, 0, 0, 1, 0}, y2{1, 0, 0, 1, 0, 0};
  const auto fwd = span_loss(a, b, y1, y2);
  const auto rev = span_loss(b, a, y2, y1);
  CHECK(std::fabs(fwd.report.loss - rev.report.loss) <= 1e-15);
  CHECK(fwd.report.loss == doctest::Approx((fwd.report.loss_start + fwd.report.loss_end) / 2));

  // masking and the empty selection
  const std::vector<std::int32_t> mask{1, 1, 0, 0, 0, 0};
  CHECK(span_loss(a, b, y1, y2, mask).report.token_count == 2);
  CHECK_THROWS_AS(span_loss(a, b, y1, y2, std::vector<std::int32_t>(6, 0)), Error);
}

TEST_CASE("logit gradients match finite differences") {
  auto a = random_matrix(5, 2, 9), b = random_matrix(5, 2, 10);
  const std::vector<std::int32_t> y1{0, 1, 0, 0, 1}, y2{0, 0, 1, 0, 1};
  const auto r = span_loss(a, b, y1, y2);
  std::mt19937_64 gen(0);
  oracle::FdResult res;
  auto f = [&] { return span_loss(a, b, y1, y2).report.loss; };
  oracle::fd_check("start", a, r.grad_start, f, 100, gen, res, 1e-6);
  oracle::fd_check("end", b, r.grad_end, f, 100, gen, res, 1e-6);
  INFO(res.worst_where);
  CHECK(res.worst <= 1e-6);
}

TEST_CASE("head backward matches finite differences") {
  const std::size_t d = 5;
  for (auto v : {EndHeadVariant::Conditioned, EndHeadVariant::Ablation}) {
    auto h = random_matrix(6, d, 12);
    auto p = random_head(d, v, 13);
    const std::vector<std::int32_t> ys{0, 1, 0, 0, 1, 0}, ye{0, 0, 1, 0, 1, 0};
    auto loss = [&] {
      const auto l = span_logits(h, p);
      return span_loss(l.start, l.end, ys, ye).report.loss;
    };
    const auto l = span_logits(h, p);
    const auto r = span_loss(l.start, l.end, ys, ye);
    auto g = SpanHeadParams::zeros(d, v);
    const auto gh = span_backward(h, p, l, r.grad_start, r.grad_end, g);
    std::mt19937_64 gen(1);
    oracle::FdResult res;
    oracle::fd_check("h", h, gh, loss, 100, gen, res);
    oracle::fd_check("w_start", p.w_start, g.w_start, loss, 100, gen, res);
    oracle::fd_check("b_start", p.b_start, g.b_start, loss, 100, gen, res);
    oracle::fd_check("w_end", p.w_end, g.w_end, loss, 100, gen, res);
    oracle::fd_check("b_end", p.b_end, g.b_end, loss, 100, gen, res);
    INFO(variant_name(v) << " " << res.worst_where);
    CHECK(res.worst <= 1e-6);
  }
}

TEST_CASE("bias toggle") {
  const auto p = SpanHeadParams::initialize(4, EndHeadVariant::Conditioned, 3, false);
  CHECK_FALSE(p.use_bias);
  auto q = p;
  q.b_start(0, 0) = 5.0;  // ignored when bias is off
  const auto h = random_matrix(3, 4, 1);
  CHECK(start_logits(h, p) == start_logits(h, q));
  CHECK(parse_variant(variant_name(EndHeadVariant::Ablation)) == EndHeadVariant::Ablation);
}
