#include <doctest.h>

#include <cmath>

#include "mrcner/baseline.hpp"
#include "mrcner/random.hpp"
#include "oracles.hpp"

using namespace mrcner;

namespace {

Matrix from_classes(const std::vector<std::int32_t>& classes, double margin = 4.0) {
  Matrix m(classes.size(), 3);
  for (std::size_t i = 0; i < classes.size(); ++i) m(i, classes[i]) = margin;
  return m;
}

}  // namespace

TEST_CASE("decode examples") {
  const std::vector<std::string> words{"Meloxicam", "-", "induced", "liver", "toxicity", "."};
  const auto one = bio_decode(from_classes({kClassB, kClassO, kClassO, kClassO, kClassO, kClassO}), "CHEMICAL", words);
  CHECK(one.spans == std::vector<EntitySpan>{{0, 0, "CHEMICAL", "Meloxicam"}});
  CHECK(one.repair_count == 0);
  CHECK(bio_decode(from_classes({kClassO, kClassO}), "X").spans.empty());

  const auto repaired = bio_decode(from_classes({kClassO, kClassI, kClassI}), "X");
  CHECK(repaired.repair_count == 1);
  CHECK(repaired.spans == std::vector<EntitySpan>{{1, 2, "X", ""}});

  // ties go to the lower class index: all-zero logits decode as B everywhere
  const auto ties = bio_decode(Matrix(3, 3), "X");
  CHECK(ties.spans.size() == 3);
}

TEST_CASE("targets and loss") {
  const std::vector<EntitySpan> spans{{1, 3, "X", ""}, {5, 5, "X", ""}};
  CHECK(bio_targets(spans, 7) ==
        std::vector<std::int32_t>{kClassO, kClassB, kClassI, kClassI, kClassO, kClassB, kClassO});
  const auto uniform = bio_loss(Matrix(4, 3), std::vector<std::int32_t>{0, 1, 2, 2});
  CHECK(std::fabs(uniform.loss - std::log(3.0)) <= 1e-12);
  const auto targets = bio_targets(spans, 7);
  CHECK(bio_loss(from_classes(targets, 60.0), targets).loss < 1e-20);
}

TEST_CASE("baseline head gradients") {
  Rng rng(4);
  const std::size_t d = 5, n = 6;
  Matrix h(n, d);
  for (auto& v : h.values()) v = rng.normal();
  auto p = BioHeadParams::initialize(d, 3);
  for (auto& v : p.w.values()) v *= 30;
  for (auto& v : p.b.values()) v = rng.normal();
  const std::vector<std::int32_t> t{2, 0, 1, 2, 0, 2};
  auto loss = [&] { return bio_loss(bio_logits(h, p), t).loss; };
  const auto logits = bio_logits(h, p);
  const auto r = bio_loss(logits, t);
  auto g = BioHeadParams::zeros(d);
  const auto gh = bio_backward(h, p, r.grad, g);
  std::mt19937_64 gen(2);
  oracle::FdResult res;
  oracle::fd_check("h", h, gh, loss, 100, gen, res);
  oracle::fd_check("w", p.w, g.w, loss, 100, gen, res);
  oracle::fd_check("b", p.b, g.b, loss, 100, gen, res);
  INFO(res.worst_where);
  CHECK(res.worst <= 1e-6);
}
