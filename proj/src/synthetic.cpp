#include "mrcner/synthetic.hpp"

#include "mrcner/error.hpp"
#include "mrcner/random.hpp"

namespace mrcner {

std::vector<Sentence> synthetic_corpus(const SyntheticOptions& o, std::uint64_t seed) {
  if (o.filler_words == 0 || o.entity_words == 0 || o.max_entities == 0 ||
      o.max_entity_tokens == 0 || o.min_length > o.max_length)
    throw Error("invalid synthetic corpus options");
  // worst case: every entity at full width, each followed by one filler, plus a leading filler
  if (o.max_entities * (o.max_entity_tokens + 1) + 1 > o.max_length)
    throw Error("max_length too small for the requested entities");

  Rng rng(seed);
  std::vector<Sentence> out;
  for (std::size_t s = 0; s < o.sentences; ++s) {
    const std::size_t n_ent = 1 + rng.below(o.max_entities);
    std::vector<std::size_t> widths(n_ent);
    std::size_t ent_tokens = 0;
    for (auto& w : widths) ent_tokens += w = 1 + rng.below(o.max_entity_tokens);
    const std::size_t min_len = std::max(o.min_length, ent_tokens + n_ent - 1);
    const std::size_t length = min_len + rng.below(o.max_length - min_len + 1);

    // distribute fillers into n_ent + 1 gaps, inner gaps at least 1
    std::vector<std::size_t> gaps(n_ent + 1, 0);
    for (std::size_t g = 1; g < n_ent; ++g) gaps[g] = 1;
    std::size_t spare = length - ent_tokens - (n_ent - 1);
    while (spare-- > 0) ++gaps[rng.below(gaps.size())];

    Sentence sent;
    sent.doc_id = o.doc_id;
    sent.sent_id = s;
    auto add = [&](std::string word, BioLabel label) {
      sent.tokens.push_back({std::move(word), sent.tokens.size()});
      sent.labels.push_back(std::move(label));
    };
    auto filler = [&] { return "w" + std::to_string(rng.below(o.filler_words)); };
    for (std::size_t e = 0; e <= n_ent; ++e) {
      for (std::size_t k = 0; k < gaps[e]; ++k) add(filler(), BioLabel::outside());
      if (e == n_ent) break;
      for (std::size_t k = 0; k < widths[e]; ++k)
        add("chem" + std::to_string(rng.below(o.entity_words)),
            k == 0 ? BioLabel::begin(o.entity_type) : BioLabel::inside(o.entity_type));
    }
    out.push_back(std::move(sent));
  }
  return out;
}

}  // namespace mrcner
