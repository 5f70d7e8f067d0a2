#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace semlab {

struct GenderPair {
    std::string male;
    std::string female;
};

// The 20 template pairs the generator builds sentences around.
const std::vector<GenderPair>& gender_pairs();

// The pairs the analogy benchmark queries (male, man, woman) -> female on.
const std::vector<GenderPair>& analogy_eval_pairs();

// Synthetic template corpus: each sentence places one gendered word next to
// gender-marker pronouns/titles and pair-specific topic words, so that
// male/female counterparts share topical contexts but differ in marker
// contexts. ~190 distinct tokens; roughly 7 tokens per sentence.
std::string make_gendered_corpus(std::size_t sentences, std::uint64_t seed);

}  // namespace semlab
