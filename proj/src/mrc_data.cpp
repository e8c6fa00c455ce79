#include "mrcner/mrc_data.hpp"

#include <algorithm>
#include <map>

#include <nlohmann/json.hpp>

#include "mrcner/error.hpp"

namespace mrcner {

using nlohmann::json;

namespace {

const std::vector<std::string>& special_tokens() {
  static const std::vector<std::string> specials{"[PAD]", "[UNK]", "[CLS]", "[SEP]"};
  return specials;
}

bool is_special(const std::string& t) {
  const auto& s = special_tokens();
  return std::find(s.begin(), s.end(), t) != s.end();
}

struct Assembly {
  std::vector<std::string> context;
  const std::vector<std::string>* query = nullptr;  // null: labeling layout
  std::vector<EntitySpan> gold;
  Origin origin;
};

MrcExample assemble(Assembly a, const Vocab& vocab, const SeqConfig& cfg) {
  if (a.context.empty()) throw Error("empty context for " + a.origin.doc_id);
  const std::size_t query_len = a.query ? a.query->size() : 0;
  const std::size_t overhead = a.query ? 3 : 2;
  if (cfg.seq_len < overhead + query_len + 1)
    throw Error("seq_len " + std::to_string(cfg.seq_len) + " cannot hold a " +
                std::to_string(query_len) + "-token query plus context");

  MrcExample ex;
  ex.origin = a.origin;
  ex.has_query = a.query != nullptr;

  const std::size_t room = cfg.seq_len - overhead - query_len;
  if (a.context.size() > room) {
    a.context.resize(room);
    ex.truncated = true;
  }
  for (auto& s : a.gold) {
    if (s.end < a.context.size())
      ex.gold_spans.push_back(std::move(s));
    else
      ++ex.dropped_spans;
  }
  const std::size_t n = a.context.size();

  auto push = [&](std::int32_t id, std::int32_t segment) {
    ex.input_ids.push_back(id);
    ex.segment_ids.push_back(segment);
    ex.attention_mask.push_back(1);
  };
  auto push_context = [&](std::int32_t segment) {
    ex.context_range = {ex.input_ids.size(), ex.input_ids.size() + n - 1};
    for (const auto& w : a.context) push(vocab.id(w), segment);
  };
  auto push_query = [&](std::int32_t segment) {
    for (const auto& w : *a.query) push(vocab.id(w), segment);
  };

  push(Vocab::kCls, 0);
  if (!a.query) {
    push_context(0);
    push(Vocab::kSep, 0);
  } else if (cfg.order == InputOrder::ContextFirst) {
    push_context(0);
    push(Vocab::kSep, 0);
    push_query(1);
    push(Vocab::kSep, 1);
  } else {
    push_query(0);
    push(Vocab::kSep, 0);
    push_context(1);
    push(Vocab::kSep, 1);
  }
  while (ex.input_ids.size() < cfg.seq_len) {
    ex.input_ids.push_back(Vocab::kPad);
    ex.segment_ids.push_back(0);
    ex.attention_mask.push_back(0);
  }

  ex.y_start.assign(n, 0);
  ex.y_end.assign(n, 0);
  for (const auto& s : ex.gold_spans) {
    ex.y_start[s.start] = 1;
    ex.y_end[s.end] = 1;
  }
  ex.context = std::move(a.context);
  return ex;
}

std::vector<EntitySpan> spans_of_type(const Sentence& s, const std::string& type) {
  std::vector<EntitySpan> out;
  for (auto& span : sentence_spans(s))
    if (span.entity_type == type) out.push_back(std::move(span));
  return out;
}

}  // namespace

Vocab::Vocab() : Vocab(special_tokens()) {}

Vocab::Vocab(std::vector<std::string> tokens_by_id) : tokens_(std::move(tokens_by_id)) {
  const auto& specials = special_tokens();
  if (tokens_.size() < kNumSpecial || !std::equal(specials.begin(), specials.end(), tokens_.begin()))
    throw Error("vocabulary must start with [PAD] [UNK] [CLS] [SEP]");
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (!index_.emplace(tokens_[i], static_cast<std::int32_t>(i)).second)
      throw Error("duplicate vocabulary entry '" + tokens_[i] + "'");
  }
}

std::int32_t Vocab::id(const std::string& token) const {
  const auto it = index_.find(token);
  if (it == index_.end() || it->second < static_cast<std::int32_t>(kNumSpecial)) return kUnk;
  return it->second;
}

Vocab build_vocab(std::span<const std::vector<std::string>> token_lists, std::size_t min_count) {
  std::map<std::string, std::size_t> counts;
  for (const auto& list : token_lists)
    for (const auto& t : list)
      if (!is_special(t)) ++counts[t];
  std::vector<std::pair<std::string, std::size_t>> kept;
  for (auto& [t, c] : counts)
    if (c >= min_count) kept.emplace_back(t, c);
  std::stable_sort(kept.begin(), kept.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> tokens = special_tokens();
  for (auto& [t, c] : kept) tokens.push_back(t);
  return Vocab(std::move(tokens));
}

Vocab build_vocab(std::span<const Sentence> sentences, std::span<const QuerySpec> queries,
                  std::size_t min_count) {
  std::vector<std::vector<std::string>> lists;
  lists.reserve(sentences.size() + queries.size());
  for (const auto& s : sentences) lists.push_back(s.words());
  for (const auto& q : queries) lists.push_back(q.tokens);
  return build_vocab(lists, min_count);
}

std::size_t MrcExample::active_length() const {
  return static_cast<std::size_t>(std::count(attention_mask.begin(), attention_mask.end(), 1));
}

std::vector<Triple> make_triples(std::span<const Sentence> sentences,
                                 std::span<const QuerySpec> queries) {
  std::vector<Triple> out;
  out.reserve(sentences.size() * queries.size());
  for (const auto& s : sentences) {
    for (const auto& q : queries) {
      Triple t;
      t.context = s.words();
      t.query = q.text;
      t.answers = spans_of_type(s, q.entity_type);
      t.entity_type = q.entity_type;
      t.doc_id = s.doc_id;
      t.sent_id = s.sent_id;
      out.push_back(std::move(t));
    }
  }
  return out;
}

std::vector<Triple> make_labeling_triples(std::span<const Sentence> sentences,
                                          std::span<const std::string> types) {
  std::vector<Triple> out;
  for (const auto& s : sentences) {
    for (const auto& type : types) {
      Triple t;
      t.context = s.words();
      t.answers = spans_of_type(s, type);
      t.entity_type = type;
      t.doc_id = s.doc_id;
      t.sent_id = s.sent_id;
      out.push_back(std::move(t));
    }
  }
  return out;
}

MrcExample make_example(const Sentence& sentence, const QuerySpec& query, const Vocab& vocab,
                        const SeqConfig& cfg) {
  return assemble({sentence.words(), &query.tokens, spans_of_type(sentence, query.entity_type),
                   {sentence.doc_id, sentence.sent_id, query.entity_type}},
                  vocab, cfg);
}

MrcExample make_example(const Triple& triple, const Vocab& vocab, const SeqConfig& cfg) {
  std::vector<std::string> query_tokens;
  if (triple.query) query_tokens = split_whitespace(*triple.query);
  auto gold = triple.answers;
  for (auto& s : gold) {
    if (s.start > s.end || s.end >= triple.context.size())
      throw Error("answer (" + std::to_string(s.start) + "," + std::to_string(s.end) +
                  ") outside context of " + triple.doc_id + "/" + std::to_string(triple.sent_id));
    s.entity_type = triple.entity_type;
    s.surface = span_surface(triple.context, s.start, s.end);
  }
  return assemble({triple.context, triple.query ? &query_tokens : nullptr, std::move(gold),
                   triple.origin()},
                  vocab, cfg);
}

MrcExample make_labeling_example(const Sentence& sentence, const std::string& entity_type,
                                 const Vocab& vocab, const SeqConfig& cfg) {
  return assemble({sentence.words(), nullptr, spans_of_type(sentence, entity_type),
                   {sentence.doc_id, sentence.sent_id, entity_type}},
                  vocab, cfg);
}

std::vector<EntitySpan> project_predictions(
    const MrcExample& example, std::span<const std::pair<std::size_t, std::size_t>> spans) {
  std::vector<EntitySpan> out;
  out.reserve(spans.size());
  const std::size_t n = example.context_length();
  for (const auto& [start, end] : spans) {
    if (start > end || end >= n)
      throw Error("predicted span (" + std::to_string(start) + "," + std::to_string(end) +
                  ") outside context of length " + std::to_string(n));
    out.push_back({start, end, example.origin.entity_type, span_surface(example.context, start, end)});
  }
  return out;
}

TruncationReport truncation_report(std::span<const MrcExample> examples) {
  TruncationReport r;
  r.examples = examples.size();
  for (const auto& ex : examples) {
    r.truncated_examples += ex.truncated ? 1 : 0;
    r.dropped_spans += ex.dropped_spans;
  }
  return r;
}

void write_triples(std::ostream& out, std::span<const Triple> triples) {
  for (const auto& t : triples) {
    json answers = json::array();
    for (const auto& a : t.answers) answers.push_back({{"start", a.start}, {"end", a.end}});
    json j = {{"context", t.context},
              {"query", t.query ? json(*t.query) : json(nullptr)},
              {"answers", std::move(answers)},
              {"entity_type", t.entity_type},
              {"origin", {{"doc_id", t.doc_id}, {"sent_id", t.sent_id}}}};
    out << j.dump() << '\n';
  }
}

std::vector<Triple> read_triples(std::istream& in) {
  std::vector<Triple> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = json::parse(line);
      Triple t;
      t.context = j.at("context").get<std::vector<std::string>>();
      if (!j.at("query").is_null()) t.query = j.at("query").get<std::string>();
      t.entity_type = j.at("entity_type").get<std::string>();
      t.doc_id = j.at("origin").at("doc_id").get<std::string>();
      t.sent_id = j.at("origin").at("sent_id").get<std::size_t>();
      for (const auto& a : j.at("answers"))
        t.answers.push_back({a.at("start").get<std::size_t>(), a.at("end").get<std::size_t>(),
                             t.entity_type, {}});
      attach_surfaces(t.answers, t.context);
      out.push_back(std::move(t));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("malformed triple: ") + e.what(), line_no);
    }
  }
  return out;
}

}  // namespace mrcner
