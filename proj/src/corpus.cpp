#include "semlab/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <utility>

#include "semlab/errors.hpp"

namespace semlab {

bool Vocabulary::contains(std::string_view token) const {
    return token_to_id.find(std::string(token)) != token_to_id.end();
}

std::size_t Vocabulary::id_of(std::string_view token) const {
    auto it = token_to_id.find(std::string(token));
    if (it == token_to_id.end())
        throw OutOfVocabularyError("token not in vocabulary: \"" + std::string(token) +
                                   "\"");
    return it->second;
}

std::vector<std::vector<std::string>> tokenize(std::string_view text) {
    std::vector<std::vector<std::string>> sentences;
    std::vector<std::string> sentence;
    std::string word;
    auto flush_word = [&] {
        if (!word.empty()) {
            sentence.push_back(word);
            word.clear();
        }
    };
    auto flush_sentence = [&] {
        flush_word();
        if (!sentence.empty()) {
            sentences.push_back(std::move(sentence));
            sentence.clear();
        }
    };
    for (unsigned char c : text) {
        if (c >= 0x80 || std::isalnum(c)) {
            word.push_back(static_cast<char>(std::tolower(c)));
        } else if (c == '.' || c == '!' || c == '?' || c == '\n') {
            flush_sentence();
        } else {
            flush_word();
        }
    }
    flush_sentence();
    return sentences;
}

std::pair<Vocabulary, TokenizedCorpus> build_vocab(std::string_view text,
                                                   std::size_t min_count) {
    const auto raw = tokenize(text);
    std::unordered_map<std::string, std::size_t> freq;
    for (const auto& sent : raw)
        for (const auto& tok : sent) ++freq[tok];

    std::vector<std::pair<std::string, std::size_t>> kept;
    for (const auto& [tok, n] : freq)
        if (n >= min_count) kept.emplace_back(tok, n);
    if (kept.empty())
        throw EmptyCorpusError("corpus empty after min_count=" +
                               std::to_string(min_count) + " filtering");
    std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });

    Vocabulary vocab;
    vocab.min_count = min_count;
    vocab.id_to_token.reserve(kept.size());
    vocab.counts.reserve(kept.size());
    for (std::size_t id = 0; id < kept.size(); ++id) {
        vocab.id_to_token.push_back(kept[id].first);
        vocab.counts.push_back(kept[id].second);
        vocab.token_to_id.emplace(kept[id].first, id);
    }

    TokenizedCorpus corpus;
    for (const auto& sent : raw) {
        std::vector<std::size_t> ids;
        for (const auto& tok : sent) {
            auto it = vocab.token_to_id.find(tok);
            if (it != vocab.token_to_id.end()) ids.push_back(it->second);
        }
        if (!ids.empty()) {
            corpus.total_tokens += ids.size();
            corpus.sentences.push_back(std::move(ids));
        }
    }
    return {std::move(vocab), std::move(corpus)};
}

}  // namespace semlab
