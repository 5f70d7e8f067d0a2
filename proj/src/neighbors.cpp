#include "semlab/neighbors.hpp"

#include <algorithm>
#include <set>
#include <unordered_map>

#include "semlab/analysis.hpp"
#include "semlab/errors.hpp"

namespace semlab {

std::string metric_name(SimilarityMetric metric) {
    switch (metric) {
        case SimilarityMetric::cosine: return "cosine";
        case SimilarityMetric::euclidean: return "euclidean";
        case SimilarityMetric::cityblock: return "cityblock";
    }
    return "?";
}

double similarity(std::span<const double> u, std::span<const double> v,
                  SimilarityMetric metric) {
    switch (metric) {
        case SimilarityMetric::cosine: return cosine(u, v);
        case SimilarityMetric::euclidean: return -l2_dist(u, v);
        case SimilarityMetric::cityblock: return -l1_dist(u, v);
    }
    throw ValidationError("similarity: unknown metric");
}

NeighborGraph knn_graph(const Mat& points, const std::vector<std::string>& labels,
                        std::size_t k, SimilarityMetric metric) {
    if (k == 0) throw ValidationError("knn_graph: k must be >= 1");
    const std::size_t V = points.rows();
    if (V < 2) throw ValidationError("knn_graph: need at least 2 nodes");
    if (labels.size() != V)
        throw DimensionError("knn_graph: " + std::to_string(labels.size()) +
                             " labels for " + std::to_string(V) + " nodes");
    NeighborGraph graph;
    graph.labels = labels;
    graph.k = k;
    graph.metric = metric;
    graph.neighbors.resize(V);
    const std::size_t want = std::min(k, V - 1);
    std::vector<NeighborEntry> all;
    for (std::size_t i = 0; i < V; ++i) {
        all.clear();
        for (std::size_t j = 0; j < V; ++j) {
            if (j == i) continue;
            all.push_back({j, similarity(points.row_span(i), points.row_span(j), metric)});
        }
        std::sort(all.begin(), all.end(), [](const NeighborEntry& a, const NeighborEntry& b) {
            if (a.similarity != b.similarity) return a.similarity > b.similarity;
            return a.node < b.node;
        });
        graph.neighbors[i].assign(all.begin(), all.begin() + want);
    }
    return graph;
}

NeighborGraph knn_graph(const EmbeddingSpace& space, std::size_t k,
                        SimilarityMetric metric) {
    return knn_graph(space.vectors, space.vocab.id_to_token, k, metric);
}

OverlapReport nn_overlap(const EmbeddingSpace& a, const EmbeddingSpace& b, std::size_t k,
                         SimilarityMetric metric) {
    if (k == 0) throw ValidationError("nn_overlap: k must be >= 1");
    const std::size_t V = a.vocab.size();
    {
        std::set<std::string> sa(a.vocab.id_to_token.begin(), a.vocab.id_to_token.end());
        std::set<std::string> sb(b.vocab.id_to_token.begin(), b.vocab.id_to_token.end());
        std::size_t diff = 0;
        for (const auto& t : sa)
            if (!sb.count(t)) ++diff;
        for (const auto& t : sb)
            if (!sa.count(t)) ++diff;
        if (diff > 0)
            throw VocabularyMismatchError(
                "nn_overlap: vocabularies differ (symmetric difference of " +
                std::to_string(diff) + " tokens)");
    }
    if (V < 2) throw ValidationError("nn_overlap: need at least 2 shared tokens");

    const NeighborGraph ga = knn_graph(a, k, metric);
    const NeighborGraph gb = knn_graph(b, k, metric);
    // map b's ids back to a's ids via tokens
    std::vector<std::size_t> b_to_a(V), a_to_b(V);
    for (std::size_t ib = 0; ib < V; ++ib) {
        const std::size_t ia = a.vocab.id_of(b.vocab.id_to_token[ib]);
        b_to_a[ib] = ia;
        a_to_b[ia] = ib;
    }

    OverlapReport report;
    report.k = k;
    report.metric = metric;
    report.baseline = static_cast<double>(std::min(k, V - 1)) /
                      static_cast<double>(V - 1);
    const std::size_t want = std::min(k, V - 1);
    std::vector<char> in_a(V);
    for (std::size_t ia = 0; ia < V; ++ia) {
        std::fill(in_a.begin(), in_a.end(), 0);
        for (const NeighborEntry& e : ga.neighbors[ia]) in_a[e.node] = 1;
        std::size_t inter = 0;
        for (const NeighborEntry& e : gb.neighbors[a_to_b[ia]])
            if (in_a[b_to_a[e.node]]) ++inter;
        OverlapEntry entry;
        entry.token = a.vocab.id_to_token[ia];
        entry.overlap = static_cast<double>(inter) / static_cast<double>(want);
        entry.jaccard = static_cast<double>(inter) /
                        static_cast<double>(2 * want - inter);
        report.mean_overlap += entry.overlap;
        report.mean_jaccard += entry.jaccard;
        report.per_token.push_back(std::move(entry));
    }
    report.mean_overlap /= static_cast<double>(V);
    report.mean_jaccard /= static_cast<double>(V);
    return report;
}

NeighborGraph unified_network(const EmbeddingSpace& space, const SaeModel& model,
                              std::size_t k, SimilarityMetric metric, double eps_fire) {
    if (space.vectors.cols() != model.input_dim() ||
        space.vectors.cols() != model.output_dim())
        throw DimensionError("unified_network: embedding dim " +
                             std::to_string(space.vectors.cols()) + " vs model " +
                             std::to_string(model.input_dim()) + "->" +
                             std::to_string(model.output_dim()));
    const std::vector<std::size_t> alive = alive_features(model, space.vectors, eps_fire);
    const std::size_t V = space.vocab.size();
    Mat points(V + alive.size(), space.vectors.cols());
    std::vector<std::string> labels;
    labels.reserve(points.rows());
    for (std::size_t i = 0; i < V; ++i) {
        std::copy(space.vectors.row(i), space.vectors.row(i) + space.vectors.cols(),
                  points.row(i));
        labels.push_back(space.vocab.id_to_token[i]);
    }
    for (std::size_t r = 0; r < alive.size(); ++r) {
        const std::size_t j = alive[r];
        std::copy(model.W_dec.row(j), model.W_dec.row(j) + model.W_dec.cols(),
                  points.row(V + r));
        labels.push_back("feat_" + std::to_string(j));
    }
    return knn_graph(points, labels, k, metric);
}

}  // namespace semlab
