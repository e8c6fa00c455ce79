#include "mrcner/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>

#include "mrcner/error.hpp"

namespace mrcner {

namespace {

bool is_blank(const std::string& line) {
  return std::all_of(line.begin(), line.end(),
                     [](unsigned char c) { return std::isspace(c) != 0; });
}

std::vector<std::string> split_columns(const std::string& line, char sep) {
  std::vector<std::string> cols;
  if (line.find(sep) != std::string::npos) {
    std::string cur;
    for (char c : line) {
      if (c == sep) {
        cols.push_back(std::move(cur));
        cur.clear();
      } else {
        cur.push_back(c);
      }
    }
    cols.push_back(std::move(cur));
    return cols;
  }
  std::istringstream ss(line);
  std::string col;
  while (ss >> col) cols.push_back(col);
  return cols;
}

bool continues(const BioLabel& prev, const BioLabel& cur) {
  return prev.tag != Tag::O && prev.entity_type == cur.entity_type;
}

}  // namespace

std::vector<std::string> Sentence::words() const {
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(t.text);
  return out;
}

std::optional<BioLabel> parse_label(const std::string& raw, const std::string& default_type) {
  if (raw == "O") return BioLabel::outside();
  if (raw.empty() || (raw[0] != 'B' && raw[0] != 'I')) return std::nullopt;
  const Tag tag = raw[0] == 'B' ? Tag::B : Tag::I;
  if (raw.size() == 1) return BioLabel{tag, default_type};
  if (raw[1] != '-' && raw[1] != '_') return std::nullopt;
  if (raw.size() == 2) return std::nullopt;
  return BioLabel{tag, raw.substr(2)};
}

std::string format_label(const BioLabel& label, bool with_type_suffix) {
  switch (label.tag) {
    case Tag::O:
      return "O";
    case Tag::B:
      return with_type_suffix ? "B-" + label.entity_type : "B";
    case Tag::I:
      return with_type_suffix ? "I-" + label.entity_type : "I";
  }
  return "O";
}

RepairResult repair_bio(std::span<const BioLabel> labels) {
  RepairResult out;
  out.labels.assign(labels.begin(), labels.end());
  for (std::size_t i = 0; i < out.labels.size(); ++i) {
    auto& cur = out.labels[i];
    if (cur.tag != Tag::I) continue;
    if (i == 0 || !continues(out.labels[i - 1], cur)) {
      cur.tag = Tag::B;
      ++out.repair_count;
    }
  }
  return out;
}

RepairResult repair_bio(std::span<const std::string> raw, const std::string& default_type) {
  std::vector<BioLabel> labels;
  labels.reserve(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    auto parsed = parse_label(raw[i], default_type);
    if (!parsed)
      throw ParseError("unknown BIO tag '" + raw[i] + "' at token " + std::to_string(i), 0);
    labels.push_back(std::move(*parsed));
  }
  return repair_bio(labels);
}

bool is_bio_valid(std::span<const BioLabel> labels) {
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto& l = labels[i];
    if ((l.tag == Tag::O) != l.entity_type.empty()) return false;
    if (l.tag == Tag::I && (i == 0 || !continues(labels[i - 1], l))) return false;
  }
  return true;
}

ParseResult parse_conll(std::istream& in, const ConllOptions& opts) {
  ParseResult result;
  std::vector<std::string> words;
  std::vector<BioLabel> labels;
  std::size_t line_no = 0;

  auto flush = [&] {
    if (words.empty()) return;
    auto repaired = repair_bio(labels);
    result.repair_count += repaired.repair_count;
    Sentence s;
    s.doc_id = opts.doc_id;
    s.sent_id = result.sentences.size();
    for (std::size_t i = 0; i < words.size(); ++i) s.tokens.push_back({std::move(words[i]), i});
    s.labels = std::move(repaired.labels);
    result.sentences.push_back(std::move(s));
    words.clear();
    labels.clear();
  };

  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (is_blank(line)) {
      flush();
      continue;
    }
    auto cols = split_columns(line, opts.column_sep);
    if (cols.size() != 2)
      throw ParseError("expected 2 columns, found " + std::to_string(cols.size()), line_no);
    if (cols[0].empty()) throw ParseError("empty token", line_no);
    auto label = parse_label(cols[1], opts.default_type);
    if (!label) throw ParseError("unknown BIO tag '" + cols[1] + "'", line_no);
    words.push_back(std::move(cols[0]));
    labels.push_back(std::move(*label));
  }
  if (in.bad()) throw ParseError("read failure", line_no);
  flush();
  return result;
}

void write_conll(std::ostream& out, std::span<const Sentence> sentences, char column_sep,
                 bool with_type_suffix) {
  for (const auto& s : sentences) {
    for (std::size_t i = 0; i < s.tokens.size(); ++i)
      out << s.tokens[i].text << column_sep << format_label(s.labels[i], with_type_suffix) << '\n';
    out << '\n';
  }
}

std::vector<EntitySpan> bio_to_spans(std::span<const BioLabel> labels) {
  std::vector<EntitySpan> spans;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto& l = labels[i];
    if (l.tag == Tag::O) continue;
    const bool opens = l.tag == Tag::B || spans.empty() || spans.back().end + 1 != i ||
                       spans.back().entity_type != l.entity_type;
    if (opens)
      spans.push_back({i, i, l.entity_type, {}});
    else
      spans.back().end = i;
  }
  return spans;
}

std::string span_surface(std::span<const std::string> words, std::size_t start, std::size_t end) {
  std::string out;
  for (std::size_t i = start; i <= end && i < words.size(); ++i) {
    if (i > start) out.push_back(' ');
    out += words[i];
  }
  return out;
}

void attach_surfaces(std::vector<EntitySpan>& spans, std::span<const std::string> words) {
  for (auto& s : spans) s.surface = span_surface(words, s.start, s.end);
}

std::vector<EntitySpan> sentence_spans(const Sentence& sentence) {
  auto spans = bio_to_spans(sentence.labels);
  attach_surfaces(spans, sentence.words());
  return spans;
}

std::vector<BioLabel> spans_to_bio(std::span<const EntitySpan> spans, std::size_t length) {
  std::vector<BioLabel> labels(length);
  for (std::size_t k = 0; k < spans.size(); ++k) {
    const auto& s = spans[k];
    if (s.start > s.end || s.end >= length)
      throw ShapeError("span (" + std::to_string(s.start) + "," + std::to_string(s.end) +
                       ") out of range for length " + std::to_string(length));
    if (k > 0 && spans[k - 1].end >= s.start)
      throw ShapeError("spans (" + std::to_string(spans[k - 1].start) + "," +
                       std::to_string(spans[k - 1].end) + ") and (" + std::to_string(s.start) +
                       "," + std::to_string(s.end) + ") overlap or are unsorted");
    labels[s.start] = BioLabel::begin(s.entity_type);
    for (std::size_t i = s.start + 1; i <= s.end; ++i) labels[i] = BioLabel::inside(s.entity_type);
  }
  return labels;
}

EntityInventory entity_inventory(std::span<const Sentence> sentences) {
  std::map<std::string, std::set<std::string>> sets;
  for (const auto& s : sentences)
    for (auto& span : sentence_spans(s)) sets[span.entity_type].insert(std::move(span.surface));
  EntityInventory inv;
  for (auto& [type, surfaces] : sets) inv[type].assign(surfaces.begin(), surfaces.end());
  return inv;
}

std::vector<std::string> entity_types(std::span<const Sentence> sentences) {
  std::set<std::string> types;
  for (const auto& s : sentences)
    for (const auto& l : s.labels)
      if (l.tag != Tag::O) types.insert(l.entity_type);
  return {types.begin(), types.end()};
}

}  // namespace mrcner
