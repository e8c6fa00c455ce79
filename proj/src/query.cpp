#include "mrcner/query.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

#include "mrcner/error.hpp"
#include "mrcner/random.hpp"

namespace mrcner {

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

}  // namespace

QueryStrategy QueryStrategy::parse(const std::string& name) {
  const auto n = lower(name);
  if (n == "none") return none();
  if (n.size() >= 2 && n[0] == 'q' &&
      std::all_of(n.begin() + 1, n.end(), [](unsigned char c) { return std::isdigit(c); })) {
    const auto k = std::stoul(n.substr(1));
    return k == 0 ? zero() : top(k);
  }
  throw Error("unknown query strategy '" + name + "' (expected none, q0, q3, q5, q10)");
}

std::string QueryStrategy::name() const {
  switch (kind) {
    case Kind::None:
      return "none";
    case Kind::Zero:
      return "q0";
    case Kind::K:
      return "q" + std::to_string(k);
  }
  return "none";
}

std::string type_word(const std::string& entity_type) {
  const auto t = lower(entity_type);
  if (t == "chemical" || t == "drug" || t == "chem") return "chemical";
  if (t == "disease") return "disease";
  if (t == "protein" || t == "gene" || t == "gene/protein" || t == "protein/gene") return "protein";
  return t;
}

std::string render_query(const std::string& entity_type, const QueryStrategy& strategy,
                         const std::vector<std::string>& entities) {
  if (strategy.kind == QueryStrategy::Kind::None) return "none";
  std::string text = "Can you detect " + type_word(entity_type) + " entities";
  if (strategy.kind == QueryStrategy::Kind::K && !entities.empty()) {
    text += " like ";
    for (std::size_t i = 0; i < entities.size(); ++i) {
      if (i > 0) text += " or ";
      text += entities[i];
    }
  }
  return text + " ?";
}

std::vector<std::string> split_whitespace(const std::string& text) {
  std::istringstream ss(text);
  std::vector<std::string> out;
  std::string w;
  while (ss >> w) out.push_back(w);
  return out;
}

QuerySpec make_query(const std::string& entity_type, const QueryStrategy& strategy,
                     std::vector<std::string> entities, std::uint64_t seed) {
  QuerySpec spec;
  spec.entity_type = entity_type;
  spec.strategy = strategy;
  spec.seed = seed;
  if (strategy.kind == QueryStrategy::Kind::K) spec.sampled_entities = std::move(entities);
  spec.text = render_query(entity_type, strategy, spec.sampled_entities);
  spec.tokens = split_whitespace(spec.text);
  return spec;
}

QuerySpec build_query(const std::string& entity_type, const QueryStrategy& strategy,
                      const EntityInventory& inventory, std::uint64_t seed) {
  if (strategy.kind != QueryStrategy::Kind::K) return make_query(entity_type, strategy, {}, seed);

  const auto it = inventory.find(entity_type);
  if (it == inventory.end() || it->second.empty())
    throw Error("no known entities of type '" + entity_type + "' to build a " + strategy.name() +
                " query");

  // partial Fisher-Yates over a copy of the pool
  std::vector<std::string> pool = it->second;
  const std::size_t take = std::min(strategy.k, pool.size());
  Rng rng(mix_seed(seed, fnv1a(entity_type)));
  for (std::size_t i = 0; i < take; ++i) {
    const auto j = i + rng.below(pool.size() - i);
    std::swap(pool[i], pool[j]);
  }
  pool.resize(take);
  return make_query(entity_type, strategy, std::move(pool), seed);
}

std::size_t query_token_count(const QuerySpec& spec) { return spec.tokens.size(); }

}  // namespace mrcner
