#include <doctest.h>

#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "mrcner/error.hpp"
#include "mrcner/eval.hpp"

using namespace mrcner;

namespace {

EntitySpan span(std::size_t s, std::size_t e, const char* type = "X") { return {s, e, type, ""}; }

nlohmann::json oracle_cases() {
  std::ifstream in(MRCNER_FIXTURES "/ttest_oracle.json");
  REQUIRE(in);
  return nlohmann::json::parse(in).at("cases");
}

}  // namespace

TEST_CASE("F1 from precision and recall") {
  // the rounded pair gives 94.18 through the formula; counts with those
  // rounded precision and recall give 94.19
  CHECK(to_percent(f1_from(0.9437, 0.9400)) == 94.18);
  const auto r = report_from_counts(956, 57, 61);
  CHECK(to_percent(r.precision) == 94.37);
  CHECK(to_percent(r.recall) == 94.00);
  CHECK(std::fabs(to_percent(r.f1) - 94.19) <= 0.005);

  CHECK(report_from_counts(0, 0, 0).f1 == 0.0);
  CHECK(report_from_counts(5, 0, 0).f1 == 1.0);
}

TEST_CASE("rounding is half away from zero") {
  CHECK(round_half_away(94.185, 2) == 94.19);
  CHECK(round_half_away(0.125, 2) == 0.13);
  CHECK(round_half_away(-0.125, 2) == -0.13);
  CHECK(round_half_away(2.5, 0) == 3.0);
  CHECK(to_percent(0.5) == 50.0);
}

TEST_CASE("exact span matching") {
  SpanTable gold{{{"d", 0, "X"}, {span(0, 0)}}};
  SpanTable same = gold;
  const auto perfect = score(gold, same);
  CHECK(perfect.precision == 1.0);
  CHECK(perfect.recall == 1.0);
  CHECK(perfect.f1 == 1.0);

  SpanTable off{{{"d", 0, "X"}, {span(0, 1)}}};
  const auto miss = score(gold, off);
  CHECK(miss.tp == 0);
  CHECK(miss.fp == 1);
  CHECK(miss.fn == 1);
  CHECK(miss.f1 == 0.0);

  // wrong type counts as both an error and a miss
  SpanTable typed{{{"d", 0, "X"}, {span(0, 0, "Y")}}};
  CHECK(score(gold, typed).tp == 0);

  SpanTable unknown{{{"d", 9, "X"}, {span(0, 0)}}};
  CHECK_THROWS_AS(score(gold, unknown), Error);

  // missing key means no predictions for that sentence
  CHECK(score(gold, SpanTable{}).fn == 1);
}

TEST_CASE("F1 stays within bounds and between P and R") {
  for (std::size_t tp = 0; tp < 12; ++tp)
    for (std::size_t fp = 0; fp < 12; ++fp)
      for (std::size_t fn = 0; fn < 12; ++fn) {
        const auto r = report_from_counts(tp, fp, fn);
        CHECK(r.f1 >= 0.0);
        CHECK(r.f1 <= 1.0);
        if (tp > 0) {
          CHECK(r.f1 >= std::min(r.precision, r.recall) - 1e-15);
          CHECK(r.f1 <= std::max(r.precision, r.recall) + 1e-15);
        }
      }
}

TEST_CASE("aggregate") {
  const std::vector<double> five{1, 2, 3, 4, 5};
  const auto s = aggregate(five);
  CHECK(s.mean == 3.0);
  CHECK(s.max == 5.0);
  CHECK(s.std == doctest::Approx(1.5811388300841898).epsilon(1e-14));
  CHECK(s.std_defined);

  const std::vector<double> one{0.9};
  const auto single = aggregate(one);
  CHECK(single.mean == 0.9);
  CHECK(single.max == 0.9);
  CHECK(single.std == 0.0);
  CHECK_FALSE(single.std_defined);
  CHECK(to_json(single).at("std_undefined") == true);

  const std::vector<double> runs{92.92, 92.60, 92.58, 92.57834474939408, 92.82165525060597};
  const auto t = aggregate(runs);
  CHECK(round_half_away(t.mean, 2) == 92.70);
  CHECK(round_half_away(t.std, 2) == 0.16);
  CHECK(t.max == 92.92);
  CHECK_THROWS_AS(aggregate(std::vector<double>{}), Error);
}

TEST_CASE("t-test against frozen oracle values") {
  for (const auto& c : oracle_cases()) {
    const auto a = c.at("a").get<std::vector<double>>();
    const auto b = c.at("b").get<std::vector<double>>();
    for (const auto& [key, kind] : {std::pair{"welch", TTestKind::Welch}, std::pair{"student", TTestKind::Student}}) {
      const auto r = t_test(a, b, kind);
      const double p = c.at(key).at("p").get<double>();
      CHECK(r.t_statistic == doctest::Approx(c.at(key).at("t").get<double>()).epsilon(1e-9));
      CHECK(std::fabs(r.p_value - p) <= 1e-9);
      CHECK(r.stars == stars_for(p));
    }
    // swapping samples flips t and keeps p
    const auto fwd = t_test(a, b), rev = t_test(b, a);
    CHECK(fwd.t_statistic == doctest::Approx(-rev.t_statistic));
    CHECK(fwd.p_value == doctest::Approx(rev.p_value));
  }
}

TEST_CASE("star markers and degenerate samples") {
  CHECK(stars_name(stars_for(0.2)) == "ns");
  CHECK(stars_name(stars_for(0.05)) == "ns");
  CHECK(stars_name(stars_for(0.049)) == "*");
  CHECK(stars_name(stars_for(0.01)) == "*");
  CHECK(stars_name(stars_for(0.0099)) == "**");

  const std::vector<double> a{1, 1, 1}, b{2, 2, 2};
  const auto d = t_test(a, b);
  CHECK(d.degenerate);
  CHECK(d.p_value == 0.0);
  CHECK(to_json(d).at("degenerate") == true);
  const auto equal = t_test(a, a);
  CHECK(equal.p_value == 1.0);
  CHECK_FALSE(equal.degenerate);
  CHECK_THROWS_AS(t_test(std::vector<double>{1}, b), Error);
}

TEST_CASE("json round trip of run stats") {
  const std::vector<double> v{0.91, 0.93, 0.92};
  const auto back = run_stats_from_json(to_json(aggregate(v)));
  CHECK(back.values == v);
  const auto j = to_json(report_from_counts(3, 1, 2));
  CHECK(j.at("percent").at("precision") == 75.0);
}
