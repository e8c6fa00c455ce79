#include <doctest.h>

#include <cmath>
#include <limits>

#include "mrcner/encoder.hpp"
#include "mrcner/error.hpp"
#include "mrcner/random.hpp"
#include "oracles.hpp"

using namespace mrcner;

namespace {

EncoderConfig tiny(std::size_t layers = 1) {
  EncoderConfig c;
  c.layers = layers;
  c.model_dim = 8;
  c.heads = 2;
  c.ffn_dim = 16;
  c.vocab_size = 12;
  c.max_positions = 16;
  c.dropout_rate = 0.0;
  return c;
}

struct Seq {
  std::vector<std::int32_t> ids, seg, mask;
  EncoderInput input() const { return {ids, seg, mask}; }
};

Seq sequence(std::size_t active, std::size_t padded) {
  Seq s;
  for (std::size_t t = 0; t < padded; ++t) {
    const bool on = t < active;
    s.ids.push_back(on ? static_cast<std::int32_t>(1 + (t * 7) % 11) : 0);
    s.seg.push_back(on && t >= active / 2 ? 1 : 0);
    s.mask.push_back(on ? 1 : 0);
  }
  return s;
}

// Loss sum(H .* R) for a fixed random R; its gradient w.r.t. H is R.
struct Probe {
  Matrix r;
  double operator()(const Matrix& h) const {
    double s = 0;
    for (std::size_t i = 0; i < h.size(); ++i) s += h.values()[i] * r.values()[i];
    return s;
  }
};

Probe probe(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  Rng rng(seed);
  Probe p{Matrix(rows, cols)};
  for (auto& v : p.r.values()) v = rng.normal();
  return p;
}

}  // namespace

TEST_CASE("zero weights collapse to the normalized embedding sum") {
  auto cfg = tiny(1);
  auto p = EncoderParams::zeros(cfg);
  Rng rng(3);
  for (auto& v : p.token_embedding.values()) v = rng.normal();
  for (auto& v : p.position_embedding.values()) v = rng.normal();
  const auto s = sequence(6, 6);
  const auto out = encoder_forward(p, cfg, s.input());
  for (std::size_t t = 0; t < 6; ++t) {
    std::vector<double> e(cfg.model_dim);
    double mean = 0;
    for (std::size_t c = 0; c < e.size(); ++c) mean += e[c] = p.token_embedding(s.ids[t], c) + p.position_embedding(t, c);
    mean /= 8;
    double var = 0;
    for (double v : e) var += (v - mean) * (v - mean);
    var /= 8;
    for (std::size_t c = 0; c < e.size(); ++c)
      CHECK(out.hidden(t, c) == doctest::Approx((e[c] - mean) / std::sqrt(var + 1e-12)).epsilon(1e-12));
  }
}

TEST_CASE("forward matches the straight-line reference") {
  for (std::size_t layers : {1, 2}) {
    const auto cfg = tiny(layers);
    const auto p = EncoderParams::initialize(cfg, 11 + layers);
    auto big = p;
    // larger weights so attention is not near-uniform
    big.visit([](const std::string&, Matrix& m) {
      for (auto& v : m.values()) v *= 20.0;
    });
    for (const EncoderParams* params : {&p, static_cast<const EncoderParams*>(&big)}) {
      const auto s = sequence(9, 12);
      const auto out = encoder_forward(*params, cfg, s.input());
      const auto ref = oracle::reference_forward(*params, cfg, s.ids, s.seg, s.mask);
      double worst = 0;
      for (std::size_t t = 0; t < 9; ++t)
        for (std::size_t c = 0; c < cfg.model_dim; ++c)
          worst = std::max(worst, std::fabs(out.hidden(t, c) - ref[t][c]) / std::max(1.0, std::fabs(ref[t][c])));
      CHECK(worst <= 1e-10);
    }
  }
}

TEST_CASE("padding does not change active rows") {
  const auto cfg = tiny(2);
  const auto p = EncoderParams::initialize(cfg, 5);
  const auto short_seq = sequence(7, 7);
  const auto long_seq = sequence(7, 16);
  const auto a = encoder_forward(p, cfg, short_seq.input());
  const auto b = encoder_forward(p, cfg, long_seq.input());
  for (std::size_t t = 0; t < 7; ++t)
    for (std::size_t c = 0; c < cfg.model_dim; ++c)
      CHECK(a.hidden(t, c) == doctest::Approx(b.hidden(t, c)).epsilon(1e-12));
}

TEST_CASE("gradients match central differences") {
  for (const double dropout : {0.0, 0.2}) {
    auto cfg = tiny(1);
    cfg.dropout_rate = dropout;
    auto p = EncoderParams::initialize(cfg, 21);
    p.visit([](const std::string&, Matrix& m) {
      for (auto& v : m.values()) v *= 10.0;
    });
    // nonzero biases and gains away from 1 exercise every path
    Rng rng(8);
    p.visit([&](const std::string& name, Matrix& m) {
      if (name.find("b") != std::string::npos || name.find("gain") != std::string::npos)
        for (auto& v : m.values()) v += 0.3 * rng.normal();
    });
    const auto s = sequence(6, 6);
    const auto pr = probe(6, cfg.model_dim, 99);
    const bool train = dropout > 0;
    const auto out = encoder_forward(p, cfg, s.input(), train, 1234);
    auto grads = EncoderParams::zeros_like(p);
    encoder_backward(p, cfg, out.tape, pr.r, grads);

    std::mt19937_64 gen(1);
    oracle::FdResult result;
    auto loss = [&] { return pr(encoder_forward(p, cfg, s.input(), train, 1234).hidden); };
    std::vector<std::pair<std::string, Matrix*>> tensors;
    p.visit([&](const std::string& n, Matrix& m) { tensors.emplace_back(n, &m); });
    std::vector<const Matrix*> analytic;
    grads.visit([&](const std::string&, const Matrix& m) { analytic.push_back(&m); });
    for (std::size_t i = 0; i < tensors.size(); ++i)
      oracle::fd_check(tensors[i].first, *tensors[i].second, *analytic[i], loss, 60, gen, result);
    INFO("worst at " << result.worst_where << " dropout " << dropout);
    CHECK(result.worst <= 1e-4);
  }
}

TEST_CASE("zero upstream gradient and determinism") {
  auto cfg = tiny(2);
  cfg.dropout_rate = 0.1;
  const auto p = EncoderParams::initialize(cfg, 2);
  const auto s = sequence(8, 10);
  const auto out = encoder_forward(p, cfg, s.input(), true, 77);
  auto g0 = EncoderParams::zeros_like(p);
  encoder_backward(p, cfg, out.tape, Matrix(out.hidden.rows(), out.hidden.cols()), g0);
  g0.visit([](const std::string&, const Matrix& m) {
    for (double v : m.values()) CHECK(v == 0.0);
  });

  const auto pr = probe(out.hidden.rows(), cfg.model_dim, 4);
  auto g1 = EncoderParams::zeros_like(p), g2 = EncoderParams::zeros_like(p);
  const auto out2 = encoder_forward(p, cfg, s.input(), true, 77);
  CHECK(out.hidden == out2.hidden);
  encoder_backward(p, cfg, out.tape, pr.r, g1);
  encoder_backward(p, cfg, out2.tape, pr.r, g2);
  std::vector<Matrix> a, b;
  g1.visit([&](const std::string&, const Matrix& m) { a.push_back(m); });
  g2.visit([&](const std::string&, const Matrix& m) { b.push_back(m); });
  CHECK(a == b);

  // dropout only in train mode, and the seed matters
  const auto eval_a = encoder_forward(p, cfg, s.input(), false, 1);
  const auto eval_b = encoder_forward(p, cfg, s.input(), false, 2);
  CHECK(eval_a.hidden == eval_b.hidden);
  CHECK_FALSE(encoder_forward(p, cfg, s.input(), true, 78).hidden == out.hidden);
}

TEST_CASE("encoder errors") {
  const auto cfg = tiny(1);
  auto p = EncoderParams::initialize(cfg, 1);
  auto s = sequence(4, 4);
  s.ids[2] = 99;
  CHECK_THROWS_AS(encoder_forward(p, cfg, s.input()), Error);

  auto bad = sequence(4, 4);
  p.layers[0].w1(0, 0) = std::numeric_limits<double>::infinity();
  try {
    encoder_forward(p, cfg, bad.input());
    FAIL("expected a numeric error");
  } catch (const NumericError& e) {
    CHECK(std::string(e.what()).find("layer 0") != std::string::npos);
  }

  auto wrong = cfg;
  wrong.heads = 3;
  CHECK_THROWS_AS(wrong.validate(), Error);
}

TEST_CASE("gelu derivative") {
  for (double x : {-3.0, -0.5, 0.0, 0.7, 2.5}) {
    const double h = 1e-6;
    CHECK(gelu_grad(x) == doctest::Approx((gelu(x + h) - gelu(x - h)) / (2 * h)).epsilon(1e-8));
  }
}
