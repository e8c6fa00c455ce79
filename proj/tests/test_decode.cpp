#include <doctest.h>

#include "mrcner/decode.hpp"
#include "mrcner/random.hpp"
#include "mrcner/synthetic.hpp"
#include "oracles.hpp"

using namespace mrcner;

namespace {

using Pairs = std::vector<SpanPair>;

IndexSets sets(std::vector<std::size_t> s, std::vector<std::size_t> e) { return {std::move(s), std::move(e)}; }

std::set<std::size_t> bits(unsigned mask, std::size_t n) {
  std::set<std::size_t> out;
  for (std::size_t i = 0; i < n; ++i)
    if (mask >> i & 1u) out.insert(i);
  return out;
}

SpanLogits gold_logits(const MrcExample& ex, double margin) {
  const std::size_t n = ex.context_length();
  SpanLogits l{Matrix(n, 2), Matrix(n, 2)};
  for (std::size_t i = 0; i < n; ++i) {
    l.start(i, ex.y_start[i]) = margin;
    l.end(i, ex.y_end[i]) = margin;
  }
  return l;
}

}  // namespace

TEST_CASE("index extraction") {
  Matrix zeros(4, 2);
  CHECK(extract_indexes(zeros, zeros) == IndexSets{});
  Matrix s(4, 2);
  s(0, 1) = 1, s(1, 0) = 1, s(2, 0) = 2, s(3, 1) = 0.5;
  CHECK(extract_indexes(s, zeros).starts == std::vector<std::size_t>{0, 3});

  Rng rng(1);
  Matrix a(30, 2), b(30, 2);
  for (auto& v : a.values()) v = rng.normal();
  for (auto& v : b.values()) v = rng.normal();
  const auto got = extract_indexes(a, b);
  std::vector<std::size_t> st, en;
  for (std::size_t i = 0; i < 30; ++i) {
    if (a(i, 1) > a(i, 0)) st.push_back(i);
    if (b(i, 1) > b(i, 0)) en.push_back(i);
  }
  CHECK(got.starts == st);
  CHECK(got.ends == en);
}

TEST_CASE("nearest match examples") {
  CHECK(nearest_match(sets({2, 7}, {4, 9})) == Pairs{{2, 4}, {7, 9}});
  CHECK(nearest_match(sets({}, {5})).empty());
  CHECK(nearest_match(sets({2, 3}, {5})) == Pairs{{3, 5}});
  CHECK(nearest_match(sets({2, 7}, {3, 4})) == Pairs{{2, 3}});
  CHECK(nearest_match(sets({4}, {4})) == Pairs{{4, 4}});
  CHECK(nearest_match(sets({5}, {2})).empty());
  // the second end has no start after the first span
  CHECK(nearest_match(sets({2, 3}, {5, 6})) == Pairs{{3, 5}});
}

TEST_CASE("exhaustive agreement over positions 0..6") {
  const std::size_t n = 7;
  for (unsigned sm = 0; sm < (1u << n); ++sm)
    for (unsigned em = 0; em < (1u << n); ++em) {
      const auto s = bits(sm, n), e = bits(em, n);
      const IndexSets in{{s.begin(), s.end()}, {e.begin(), e.end()}};
      const auto end_driven = nearest_match(in, MatchOrder::EndDriven);
      REQUIRE(end_driven == oracle::brute_end_driven(s, e, n));
      REQUIRE(end_driven == oracle::sweep_match(s, e, n));
      REQUIRE(nearest_match(in, MatchOrder::StartDriven) == end_driven);
      for (std::size_t k = 0; k < end_driven.size(); ++k) {
        REQUIRE(end_driven[k].first <= end_driven[k].second);
        if (k) REQUIRE(end_driven[k - 1].second < end_driven[k].first);
      }
      // pairing its own output is a fixed point
      IndexSets again;
      for (auto [a, b] : end_driven) {
        again.starts.push_back(a);
        again.ends.push_back(b);
      }
      REQUIRE(nearest_match(again) == end_driven);
    }
}

TEST_CASE("gold-target decode identity") {
  SyntheticOptions opts;
  opts.sentences = 300;
  opts.max_entities = 3;
  opts.max_length = 20;
  opts.min_length = 1;
  const auto corpus = synthetic_corpus(opts, 9);
  const auto q = make_query("CHEMICAL", QueryStrategy::zero(), {});
  for (const auto& s : corpus) {
    const auto ex = make_example(s, q, Vocab(), {64, {}});
    CHECK(decode_example(ex, gold_logits(ex, 10.0)) == ex.gold_spans);
    CHECK(decode_example(ex, gold_logits(ex, 10.0), MatchOrder::StartDriven) == ex.gold_spans);
  }
}

TEST_CASE("decode edge cases") {
  Sentence s;
  s.doc_id = "d";
  for (const char* w : {"Meloxicam", "-", "induced"}) s.tokens.push_back({w, s.tokens.size()});
  s.labels = {BioLabel::begin("CHEMICAL"), {}, {}};
  const auto ex = make_example(s, make_query("CHEMICAL", QueryStrategy::zero(), {}), Vocab(), {16, {}});
  CHECK(decode_example(ex, {Matrix(3, 2), Matrix(3, 2)}).empty());
  const auto spans = decode_example(ex, gold_logits(ex, 3.0));
  CHECK(spans == std::vector<EntitySpan>{{0, 0, "CHEMICAL", "Meloxicam"}});
}
