#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "semlab/embeddings.hpp"
#include "semlab/mat.hpp"
#include "semlab/sae.hpp"

namespace semlab {

enum class SimilarityMetric { cosine, euclidean, cityblock };

std::string metric_name(SimilarityMetric metric);

// cosine = u.v/(|u||v|); euclidean = -L2 distance; cityblock = -L1 distance.
// Distances are negated so "larger is more similar" holds for every metric.
double similarity(std::span<const double> u, std::span<const double> v,
                  SimilarityMetric metric);

struct NeighborEntry {
    std::size_t node = 0;
    double similarity = 0.0;
};

struct NeighborGraph {
    std::vector<std::string> labels;
    std::size_t k = 0;
    SimilarityMetric metric = SimilarityMetric::cosine;
    // Per node: min(k, V-1) neighbors, similarity descending, ties by id.
    std::vector<std::vector<NeighborEntry>> neighbors;
};

// Exhaustive k-NN over the rows of `points`. labels must align with rows.
NeighborGraph knn_graph(const Mat& points, const std::vector<std::string>& labels,
                        std::size_t k, SimilarityMetric metric);
NeighborGraph knn_graph(const EmbeddingSpace& space, std::size_t k,
                        SimilarityMetric metric);

struct OverlapEntry {
    std::string token;
    double overlap = 0.0;  // |NN_A ∩ NN_B| / k
    double jaccard = 0.0;
};

struct OverlapReport {
    std::vector<OverlapEntry> per_token;
    double mean_overlap = 0.0;
    double mean_jaccard = 0.0;
    double baseline = 0.0;  // k / (V - 1), the expected overlap of random spaces
    std::size_t k = 0;
    SimilarityMetric metric = SimilarityMetric::cosine;
};

// Shared-neighbor agreement between two spaces over the same vocabulary
// (matched by token, so id order may differ). Throws VocabularyMismatchError
// reporting the symmetric-difference size when the token sets differ.
OverlapReport nn_overlap(const EmbeddingSpace& a, const EmbeddingSpace& b, std::size_t k,
                         SimilarityMetric metric);

// One k-NN graph over tokens plus the model's alive latents (alive relative
// to the token vectors themselves); latents are embedded as their decoder
// rows and labeled "feat_<j>".
NeighborGraph unified_network(const EmbeddingSpace& space, const SaeModel& model,
                              std::size_t k, SimilarityMetric metric,
                              double eps_fire = kFireEps);

}  // namespace semlab
