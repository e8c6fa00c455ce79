#include "mrcner/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <tuple>

#include <boost/math/distributions/students_t.hpp>

#include "mrcner/error.hpp"

namespace mrcner {

double f1_from(double precision, double recall) {
  return precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
}

EvalReport report_from_counts(std::size_t tp, std::size_t fp, std::size_t fn) {
  EvalReport r{tp, fp, fn};
  r.precision = tp + fp ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
  r.recall = tp + fn ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
  r.f1 = f1_from(r.precision, r.recall);
  return r;
}

EvalReport score(const SpanTable& gold, const SpanTable& predicted) {
  using Key = std::tuple<std::size_t, std::size_t, std::string>;
  std::size_t tp = 0, fp = 0, fn = 0;
  for (const auto& [origin, spans] : predicted) {
    if (!gold.contains(origin))
      throw Error("prediction for unknown sentence " + origin.doc_id + "/" +
                  std::to_string(origin.sent_id) + " (" + origin.entity_type + ")");
  }
  for (const auto& [origin, gold_spans] : gold) {
    std::set<Key> g, p;
    for (const auto& s : gold_spans) g.emplace(s.start, s.end, s.entity_type);
    if (const auto it = predicted.find(origin); it != predicted.end())
      for (const auto& s : it->second) p.emplace(s.start, s.end, s.entity_type);
    std::size_t hit = 0;
    for (const auto& k : p) hit += g.contains(k) ? 1 : 0;
    tp += hit;
    fp += p.size() - hit;
    fn += g.size() - hit;
  }
  return report_from_counts(tp, fp, fn);
}

double round_half_away(double value, int decimals) {
  const double scale = std::pow(10.0, decimals);
  // nudge by a few ulps so values like 94.185 stored as 94.18499999 round up
  const double scaled = value * scale;
  const double nudged = scaled + std::copysign(1e-9 * std::max(1.0, std::fabs(scaled)), scaled);
  return std::copysign(std::floor(std::fabs(nudged) + 0.5), scaled) / scale;
}

double to_percent(double fraction) { return round_half_away(fraction * 100.0, 2); }

RunStats aggregate(std::span<const double> values) {
  if (values.empty()) throw Error("aggregate needs at least one run");
  RunStats s;
  s.values.assign(values.begin(), values.end());
  const double n = static_cast<double>(values.size());
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  s.max = *std::max_element(values.begin(), values.end());
  if (values.size() >= 2) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(ss / (n - 1.0));
    s.std_defined = true;
  }
  return s;
}

std::string stars_name(Stars s) {
  switch (s) {
    case Stars::NotSignificant:
      return "ns";
    case Stars::P05:
      return "*";
    case Stars::P01:
      return "**";
  }
  return "ns";
}

Stars stars_for(double p) {
  if (p < 0.01) return Stars::P01;
  if (p < 0.05) return Stars::P05;
  return Stars::NotSignificant;
}

namespace {

std::pair<double, double> mean_var(std::span<const double> x) {
  const auto st = aggregate(x);
  return {st.mean, st.std * st.std};
}

}  // namespace

SignificanceResult t_test(std::span<const double> a, std::span<const double> b, TTestKind kind) {
  if (a.size() < 2 || b.size() < 2) throw Error("t-test needs at least two values per sample");
  const auto [ma, va] = mean_var(a);
  const auto [mb, vb] = mean_var(b);
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());

  double se2 = 0.0, dof = 0.0;
  if (kind == TTestKind::Welch) {
    const double qa = va / na, qb = vb / nb;
    se2 = qa + qb;
    const double denom = qa * qa / (na - 1.0) + qb * qb / (nb - 1.0);
    dof = denom > 0.0 ? se2 * se2 / denom : na + nb - 2.0;
  } else {
    dof = na + nb - 2.0;
    const double pooled = ((na - 1.0) * va + (nb - 1.0) * vb) / dof;
    se2 = pooled * (1.0 / na + 1.0 / nb);
  }

  SignificanceResult r;
  r.dof = dof;
  const double diff = ma - mb;
  if (se2 <= 0.0) {
    if (diff == 0.0) return r;
    r.t_statistic = std::copysign(std::numeric_limits<double>::infinity(), diff);
    r.p_value = 0.0;
    r.degenerate = true;
    r.stars = stars_for(r.p_value);
    return r;
  }
  r.t_statistic = diff / std::sqrt(se2);
  const boost::math::students_t dist(dof);
  r.p_value = std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(r.t_statistic))));
  r.stars = stars_for(r.p_value);
  return r;
}

nlohmann::json to_json(const EvalReport& r) {
  return {{"precision", r.precision},
          {"recall", r.recall},
          {"f1", r.f1},
          {"tp", r.tp},
          {"fp", r.fp},
          {"fn", r.fn},
          {"percent",
           {{"precision", to_percent(r.precision)},
            {"recall", to_percent(r.recall)},
            {"f1", to_percent(r.f1)}}}};
}

nlohmann::json to_json(const RunStats& s) {
  nlohmann::json j = {{"runs", s.values}, {"mean", s.mean}, {"std", s.std}, {"max", s.max}};
  if (!s.std_defined) j["std_undefined"] = true;
  return j;
}

nlohmann::json to_json(const SignificanceResult& s) {
  nlohmann::json j = {{"t", std::isfinite(s.t_statistic) ? nlohmann::json(s.t_statistic)
                                                         : nlohmann::json(s.t_statistic > 0 ? "inf" : "-inf")},
                      {"p", s.p_value},
                      {"dof", s.dof},
                      {"stars", stars_name(s.stars)}};
  if (s.degenerate) j["degenerate"] = true;
  return j;
}

RunStats run_stats_from_json(const nlohmann::json& j) {
  return aggregate(j.at("runs").get<std::vector<double>>());
}

}  // namespace mrcner
