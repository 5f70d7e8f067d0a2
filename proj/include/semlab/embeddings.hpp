#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "semlab/corpus.hpp"
#include "semlab/mat.hpp"
#include "semlab/rng.hpp"

namespace semlab {

enum class EmbedAlgo { cbow, skipgram };

struct EmbedConfig {
    EmbedAlgo algorithm = EmbedAlgo::cbow;
    std::size_t dim = 300;
    std::size_t window = 5;      // context radius; never crosses sentences
    std::size_t negatives = 5;   // negative samples per positive
    std::size_t epochs = 5;
    double lr_start = 0.025;
    double lr_end = 1e-4;        // linear decay over all training positions
    double subsample = 0.0;      // frequent-word discard threshold; 0 = off
    std::uint64_t seed = 0;
};

struct EmbeddingSpace {
    Vocabulary vocab;
    Mat vectors;  // V x d, input-side embeddings
    EmbedConfig config;

    std::span<const double> vector_of(std::string_view token) const {
        return vectors.row_span(vocab.id_of(token));
    }
};

// Cumulative unigram^(3/4) table for drawing negative samples.
class NegativeTable {
public:
    explicit NegativeTable(const std::vector<std::size_t>& counts);
    // Draws one id != avoid (redraws on collision).
    std::size_t sample(Rng& rng, std::size_t avoid) const;

private:
    std::vector<double> cumulative_;
};

// Negative-sampling logistic loss for one prediction step: the mean of the
// `inputs` rows of W_in scores `target` as the positive and each entry of
// `negatives` as a negative. CBOW uses inputs=context/target=center;
// skip-gram uses inputs={center}/target=context word.
double ns_pair_loss(const Mat& W_in, const Mat& W_out,
                    const std::vector<std::size_t>& inputs, std::size_t target,
                    const std::vector<std::size_t>& negatives);

// One exact-gradient SGD step on ns_pair_loss; returns the pre-update loss.
double ns_pair_step(Mat& W_in, Mat& W_out, const std::vector<std::size_t>& inputs,
                    std::size_t target, const std::vector<std::size_t>& negatives,
                    double lr);

// Trains input-side embeddings on the corpus. Deterministic given cfg.seed.
// Throws DegenerateVocabError if V < 2 and InsufficientContextError if no
// position has any in-window context.
EmbeddingSpace train_embeddings(const TokenizedCorpus& corpus, const Vocabulary& vocab,
                                const EmbedConfig& cfg);

struct AnalogyHit {
    std::string token;
    double similarity = 0.0;
};

// Ranks every vocabulary token by cosine similarity to a_v - b_v + c_v and
// returns the top_k. With exclude_queries the three query tokens are dropped
// from the ranking first. Ties break by token id.
std::vector<AnalogyHit> analogy(const EmbeddingSpace& space, std::string_view a,
                                std::string_view b, std::string_view c,
                                bool exclude_queries, std::size_t top_k);

}  // namespace semlab
