#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "mrcner/corpus.hpp"

namespace mrcner {

struct QueryStrategy {
  enum class Kind { None, Zero, K };
  Kind kind = Kind::K;
  std::size_t k = 3;

  static QueryStrategy none() { return {Kind::None, 0}; }
  static QueryStrategy zero() { return {Kind::Zero, 0}; }
  static QueryStrategy top(std::size_t k) { return {Kind::K, k}; }

  // "none", "q0", "q3", "q5", "q10" (any "q<k>" with k > 0 is accepted).
  static QueryStrategy parse(const std::string& name);
  std::string name() const;

  bool operator==(const QueryStrategy&) const = default;
};

struct QuerySpec {
  std::string entity_type;
  QueryStrategy strategy;
  std::string text;
  std::vector<std::string> tokens;
  std::vector<std::string> sampled_entities;
  std::uint64_t seed = 0;
};

// chemical/drug -> "chemical", disease -> "disease", protein/gene -> "protein";
// anything else is lowercased.
std::string type_word(const std::string& entity_type);

// Fills the template for already-chosen entities. Entities are ignored for
// None and Zero.
std::string render_query(const std::string& entity_type, const QueryStrategy& strategy,
                         const std::vector<std::string>& entities);

// Samples min(k, |inventory[type]|) distinct entities uniformly without
// replacement from a generator seeded by (seed, entity_type). Throws Error
// for K(k) when the inventory has no entity of that type.
QuerySpec build_query(const std::string& entity_type, const QueryStrategy& strategy,
                      const EntityInventory& inventory, std::uint64_t seed);

// Builds a spec around explicitly chosen entities.
QuerySpec make_query(const std::string& entity_type, const QueryStrategy& strategy,
                     std::vector<std::string> entities, std::uint64_t seed = 0);

std::size_t query_token_count(const QuerySpec& spec);

std::vector<std::string> split_whitespace(const std::string& text);

}  // namespace mrcner
