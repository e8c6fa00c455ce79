#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "mrcner/corpus.hpp"

namespace mrcner {

struct SyntheticOptions {
  std::size_t sentences = 50;
  std::size_t filler_words = 100;  // "w0".."w99"
  std::size_t entity_words = 60;   // "chem0".."chem59"
  std::size_t min_length = 6;
  std::size_t max_length = 14;
  std::size_t max_entities = 2;    // per sentence, at least 1
  std::size_t max_entity_tokens = 3;
  std::string entity_type = "CHEMICAL";
  std::string doc_id = "synthetic";
};

// A separable corpus: entity tokens and filler tokens come from disjoint word
// lists and entities are always separated by at least one filler word.
std::vector<Sentence> synthetic_corpus(const SyntheticOptions& opts, std::uint64_t seed);

}  // namespace mrcner
