#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "mrcner/corpus.hpp"
#include "mrcner/heads.hpp"
#include "mrcner/mrc_data.hpp"

namespace mrcner {

struct IndexSets {
  std::vector<std::size_t> starts;  // sorted, duplicate-free
  std::vector<std::size_t> ends;
  bool operator==(const IndexSets&) const = default;
};

using SpanPair = std::pair<std::size_t, std::size_t>;

// Row i is selected when class 1 strictly beats class 0; ties go to class 0.
IndexSets extract_indexes(const Matrix& start_logits, const Matrix& end_logits);

enum class MatchOrder {
  EndDriven,    // each end claims the nearest preceding start
  StartDriven,  // each start claims the nearest following end
};

// Ends are visited in ascending order; each end e takes the largest start s
// with s <= e that lies after the previously emitted span, and every start
// up to e is then consumed. Unpaired starts and ends are dropped. The result
// is sorted and non-overlapping. StartDriven is the mirror image.
std::vector<SpanPair> nearest_match(const IndexSets& sets,
                                    MatchOrder order = MatchOrder::EndDriven);

// extract_indexes -> nearest_match -> project_predictions.
std::vector<EntitySpan> decode_example(const MrcExample& example, const SpanLogits& logits,
                                       MatchOrder order = MatchOrder::EndDriven);

}  // namespace mrcner
