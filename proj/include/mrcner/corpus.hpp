#pragma once

#include <cstddef>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace mrcner {

enum class Tag { B, I, O };

struct BioLabel {
  Tag tag = Tag::O;
  std::string entity_type;  // empty iff tag == O

  static BioLabel outside() { return {}; }
  static BioLabel begin(std::string type) { return {Tag::B, std::move(type)}; }
  static BioLabel inside(std::string type) { return {Tag::I, std::move(type)}; }

  bool operator==(const BioLabel&) const = default;
};

struct Token {
  std::string text;
  std::size_t index = 0;
  bool operator==(const Token&) const = default;
};

struct EntitySpan {
  std::size_t start = 0;
  std::size_t end = 0;  // inclusive
  std::string entity_type;
  std::string surface;

  bool operator==(const EntitySpan&) const = default;
};

struct Sentence {
  std::vector<Token> tokens;
  std::vector<BioLabel> labels;
  std::string doc_id;
  std::size_t sent_id = 0;

  std::size_t size() const { return tokens.size(); }
  std::vector<std::string> words() const;
};

struct ConllOptions {
  // '\t' by default; lines without the separator fall back to splitting on
  // whitespace runs.
  char column_sep = '\t';
  // Entity type assigned to bare "B"/"I" labels without a "-TYPE" suffix.
  std::string default_type = "ENTITY";
  std::string doc_id = "doc0";
};

struct ParseResult {
  std::vector<Sentence> sentences;
  std::size_t repair_count = 0;
};

ParseResult parse_conll(std::istream& in, const ConllOptions& opts = {});

// Writes "token<sep>label" lines with a blank line after every sentence.
// Labels carry a "-TYPE" suffix only when with_type_suffix is set.
void write_conll(std::ostream& out, std::span<const Sentence> sentences, char column_sep = '\t',
                 bool with_type_suffix = true);

// Raw label string -> label. Accepts B, I, O, B-X, I-X (also B_X). Returns
// nullopt for anything else.
std::optional<BioLabel> parse_label(const std::string& raw, const std::string& default_type);
std::string format_label(const BioLabel& label, bool with_type_suffix = true);

struct RepairResult {
  std::vector<BioLabel> labels;
  std::size_t repair_count = 0;
};

// Every I whose predecessor is not a B/I of the same type becomes a B.
RepairResult repair_bio(std::span<const BioLabel> labels);
// Same, starting from raw strings; throws ParseError naming the token index
// on an unknown tag.
RepairResult repair_bio(std::span<const std::string> raw, const std::string& default_type);

bool is_bio_valid(std::span<const BioLabel> labels);

// Surfaces are left empty; use attach_surfaces when tokens are available.
std::vector<EntitySpan> bio_to_spans(std::span<const BioLabel> labels);
std::vector<EntitySpan> sentence_spans(const Sentence& sentence);
void attach_surfaces(std::vector<EntitySpan>& spans, std::span<const std::string> words);
std::string span_surface(std::span<const std::string> words, std::size_t start, std::size_t end);

// Inverse of bio_to_spans. Throws ShapeError on overlapping, unsorted or
// out-of-range spans.
std::vector<BioLabel> spans_to_bio(std::span<const EntitySpan> spans, std::size_t length);

using EntityInventory = std::map<std::string, std::vector<std::string>>;

// entity_type -> distinct surfaces, case-sensitive, sorted.
EntityInventory entity_inventory(std::span<const Sentence> sentences);

// Distinct entity types present in the labels, sorted.
std::vector<std::string> entity_types(std::span<const Sentence> sentences);

}  // namespace mrcner
