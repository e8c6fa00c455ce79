#include "mrcner/decode.hpp"

#include <algorithm>
#include <optional>

#include "mrcner/error.hpp"

namespace mrcner {

IndexSets extract_indexes(const Matrix& start_logits, const Matrix& end_logits) {
  if (start_logits.cols() != 2 || end_logits.cols() != 2)
    throw ShapeError("index extraction needs N x 2 logits");
  IndexSets sets;
  for (std::size_t i = 0; i < start_logits.rows(); ++i)
    if (start_logits(i, 1) > start_logits(i, 0)) sets.starts.push_back(i);
  for (std::size_t j = 0; j < end_logits.rows(); ++j)
    if (end_logits(j, 1) > end_logits(j, 0)) sets.ends.push_back(j);
  return sets;
}

namespace {

std::vector<SpanPair> match_end_driven(const std::vector<std::size_t>& starts,
                                       const std::vector<std::size_t>& ends) {
  std::vector<SpanPair> out;
  std::size_t next_start = 0;  // first start not yet consumed
  for (const std::size_t e : ends) {
    if (!out.empty() && e <= out.back().second) continue;
    // starts[next_start, hi) are the unconsumed starts <= e
    const auto hi = static_cast<std::size_t>(
        std::upper_bound(starts.begin(), starts.end(), e) - starts.begin());
    if (hi <= next_start) continue;
    out.emplace_back(starts[hi - 1], e);
    next_start = hi;
  }
  return out;
}

std::vector<SpanPair> match_start_driven(const std::vector<std::size_t>& starts,
                                         const std::vector<std::size_t>& ends) {
  // Mirror: visit starts descending, each claims the smallest end >= s that
  // precedes the previously emitted span.
  std::vector<SpanPair> out;
  std::size_t next_end = ends.size();  // ends[next_end, size) are consumed
  for (auto it = starts.rbegin(); it != starts.rend(); ++it) {
    const std::size_t s = *it;
    if (!out.empty() && s >= out.back().first) continue;
    const auto lo = static_cast<std::size_t>(
        std::lower_bound(ends.begin(), ends.end(), s) - ends.begin());
    if (lo >= next_end) continue;
    out.emplace_back(s, ends[lo]);
    next_end = lo;
  }
  std::reverse(out.begin(), out.end());
  return out;
}

}  // namespace

std::vector<SpanPair> nearest_match(const IndexSets& sets, MatchOrder order) {
  return order == MatchOrder::EndDriven ? match_end_driven(sets.starts, sets.ends)
                                        : match_start_driven(sets.starts, sets.ends);
}

std::vector<EntitySpan> decode_example(const MrcExample& example, const SpanLogits& logits,
                                       MatchOrder order) {
  if (logits.start.rows() != example.context_length())
    throw ShapeError("logit rows do not match the example's context length");
  const auto pairs = nearest_match(extract_indexes(logits.start, logits.end), order);
  return project_predictions(example, pairs);
}

}  // namespace mrcner
