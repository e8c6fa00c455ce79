#pragma once

#include <cstddef>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "mrcner/corpus.hpp"
#include "mrcner/query.hpp"

namespace mrcner {

class Vocab {
 public:
  static constexpr std::int32_t kPad = 0;
  static constexpr std::int32_t kUnk = 1;
  static constexpr std::int32_t kCls = 2;
  static constexpr std::int32_t kSep = 3;
  static constexpr std::size_t kNumSpecial = 4;

  Vocab();
  // Ids must be in order; the first four entries must be the specials.
  explicit Vocab(std::vector<std::string> tokens_by_id);

  std::int32_t id(const std::string& token) const;
  const std::string& token(std::int32_t id) const { return tokens_.at(static_cast<std::size_t>(id)); }
  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  bool operator==(const Vocab& other) const { return tokens_ == other.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::int32_t> index_;
};

// Tokens seen fewer than min_count times are left out (they map to [UNK]).
// Ids follow (count desc, token asc).
Vocab build_vocab(std::span<const Sentence> sentences, std::span<const QuerySpec> queries,
                  std::size_t min_count = 1);
Vocab build_vocab(std::span<const std::vector<std::string>> token_lists, std::size_t min_count = 1);

enum class InputOrder { ContextFirst, QueryFirst };

struct SeqConfig {
  std::size_t seq_len = 128;
  InputOrder order = InputOrder::ContextFirst;
};

struct Origin {
  std::string doc_id;
  std::size_t sent_id = 0;
  std::string entity_type;

  bool operator==(const Origin&) const = default;
  auto operator<=>(const Origin&) const = default;
};

struct MrcExample {
  std::vector<std::int32_t> input_ids;
  std::vector<std::int32_t> segment_ids;
  std::vector<std::int32_t> attention_mask;
  std::pair<std::size_t, std::size_t> context_range{0, 0};  // inclusive positions in input_ids
  std::vector<std::int32_t> y_start;  // over context positions
  std::vector<std::int32_t> y_end;
  std::vector<EntitySpan> gold_spans;  // sentence coordinates, within the kept context
  Origin origin;
  std::vector<std::string> context;  // kept context words
  bool has_query = true;             // false for sequence-labeling examples
  std::size_t dropped_spans = 0;     // gold spans lost to truncation
  bool truncated = false;

  std::size_t context_length() const { return context_range.second - context_range.first + 1; }
  // Number of non-padding positions.
  std::size_t active_length() const;
};

// One (context, query, answers) record as stored in the triples file. A
// missing query marks a sequence-labeling record.
struct Triple {
  std::vector<std::string> context;
  std::optional<std::string> query;
  std::vector<EntitySpan> answers;  // sentence coordinates, type = entity_type
  std::string entity_type;
  std::string doc_id;
  std::size_t sent_id = 0;

  Origin origin() const { return {doc_id, sent_id, entity_type}; }
};

// One triple per (sentence, entity type); gold answers are the spans of that type.
std::vector<Triple> make_triples(std::span<const Sentence> sentences,
                                 std::span<const QuerySpec> queries);
// Query-free records for the labeling baseline.
std::vector<Triple> make_labeling_triples(std::span<const Sentence> sentences,
                                          std::span<const std::string> types);

// [CLS] context [SEP] query [SEP] [PAD]... (or query first). Over-long
// contexts are cut at the tail; gold spans not wholly inside the kept part
// are dropped and counted. Throws Error when not even one context token fits.
MrcExample make_example(const Sentence& sentence, const QuerySpec& query, const Vocab& vocab,
                        const SeqConfig& cfg);
MrcExample make_example(const Triple& triple, const Vocab& vocab, const SeqConfig& cfg);
// [CLS] context [SEP] for the labeling baseline; all segment ids 0.
MrcExample make_labeling_example(const Sentence& sentence, const std::string& entity_type,
                                 const Vocab& vocab, const SeqConfig& cfg);

// Context coordinates are sentence-relative; throws Error on out-of-range pairs.
std::vector<EntitySpan> project_predictions(
    const MrcExample& example, std::span<const std::pair<std::size_t, std::size_t>> spans);

struct TruncationReport {
  std::size_t examples = 0;
  std::size_t truncated_examples = 0;
  std::size_t dropped_spans = 0;
};
TruncationReport truncation_report(std::span<const MrcExample> examples);

// Triples JSON lines.
void write_triples(std::ostream& out, std::span<const Triple> triples);
std::vector<Triple> read_triples(std::istream& in);

}  // namespace mrcner
