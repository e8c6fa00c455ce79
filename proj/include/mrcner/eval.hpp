#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mrcner/corpus.hpp"
#include "mrcner/mrc_data.hpp"

namespace mrcner {

struct EvalReport {
  std::size_t tp = 0, fp = 0, fn = 0;
  double precision = 0.0, recall = 0.0, f1 = 0.0;  // fractions in [0, 1]
};

// P = tp/(tp+fp), R = tp/(tp+fn), F1 = 2PR/(P+R); each 0 on a zero denominator.
EvalReport report_from_counts(std::size_t tp, std::size_t fp, std::size_t fn);
double f1_from(double precision, double recall);

using SpanTable = std::map<Origin, std::vector<EntitySpan>>;

// Exact (start, end, type) micro matching. Throws Error when a prediction
// refers to a key absent from gold.
EvalReport score(const SpanTable& gold, const SpanTable& predicted);

// Rounds a fraction to a percentage with two decimals, half away from zero.
double to_percent(double fraction);
double round_half_away(double value, int decimals);

struct RunStats {
  std::vector<double> values;
  double mean = 0.0;
  double std = 0.0;  // sample (n - 1); 0 with std_defined = false for one run
  double max = 0.0;
  bool std_defined = false;
};

RunStats aggregate(std::span<const double> values);

enum class Stars { NotSignificant, P05, P01 };
std::string stars_name(Stars s);
Stars stars_for(double p_value);

enum class TTestKind { Welch, Student };

struct SignificanceResult {
  double t_statistic = 0.0;
  double p_value = 1.0;
  double dof = 0.0;
  Stars stars = Stars::NotSignificant;
  bool degenerate = false;  // both samples constant with different means
};

// Two-sided two-sample t-test (Welch by default). Needs >= 2 values per sample.
SignificanceResult t_test(std::span<const double> a, std::span<const double> b,
                          TTestKind kind = TTestKind::Welch);

nlohmann::json to_json(const EvalReport& r);
nlohmann::json to_json(const RunStats& s);
nlohmann::json to_json(const SignificanceResult& s);
RunStats run_stats_from_json(const nlohmann::json& j);

}  // namespace mrcner
