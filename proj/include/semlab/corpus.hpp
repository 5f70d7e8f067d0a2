#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace semlab {

// Token ids are dense 0..V-1, assigned by descending frequency with
// alphabetical tie-break so identical corpora always yield identical ids.
struct Vocabulary {
    std::vector<std::string> id_to_token;
    std::unordered_map<std::string, std::size_t> token_to_id;
    std::vector<std::size_t> counts;  // indexed by id
    std::size_t min_count = 1;

    std::size_t size() const { return id_to_token.size(); }
    bool contains(std::string_view token) const;
    // Throws OutOfVocabularyError naming the token.
    std::size_t id_of(std::string_view token) const;
};

struct TokenizedCorpus {
    std::vector<std::vector<std::size_t>> sentences;
    std::size_t total_tokens = 0;
};

// Lowercases, splits sentences on ./!/?/newline, and takes maximal
// alphanumeric runs as tokens (bytes >= 0x80 count as letters so UTF-8 words
// survive). Punctuation separates tokens.
std::vector<std::vector<std::string>> tokenize(std::string_view text);

// Tokenizes, drops tokens with corpus frequency < min_count from both the
// vocabulary and the sentences, and drops sentences that become empty.
// Throws EmptyCorpusError if nothing is left.
std::pair<Vocabulary, TokenizedCorpus> build_vocab(std::string_view text,
                                                   std::size_t min_count);

}  // namespace semlab
