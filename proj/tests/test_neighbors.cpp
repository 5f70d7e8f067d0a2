#include <cmath>
#include <string>
#include <vector>

#include "doctest.h"
#include "semlab/errors.hpp"
#include "semlab/neighbors.hpp"
#include "semlab/rng.hpp"
#include "semlab/synth.hpp"

using namespace semlab;

namespace {

EmbeddingSpace space_from(const std::vector<std::string>& tokens, Mat vectors) {
    EmbeddingSpace space;
    space.vocab.id_to_token = tokens;
    for (std::size_t i = 0; i < tokens.size(); ++i)
        space.vocab.token_to_id[tokens[i]] = i;
    space.vocab.counts.assign(tokens.size(), 1);
    space.vectors = std::move(vectors);
    return space;
}

Mat random_vectors(std::size_t rows, std::size_t cols, std::uint64_t seed) {
    Rng rng(seed);
    Mat m(rows, cols);
    for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-1.0, 1.0);
    return m;
}

}  // namespace

TEST_CASE("similarity hand values per metric") {
    const std::vector<double> u = {1.0, 0.0}, v = {0.0, 1.0}, w = {3.0, 4.0};
    const std::vector<double> zero = {0.0, 0.0};
    CHECK(similarity(u, v, SimilarityMetric::cosine) == doctest::Approx(0.0));
    CHECK(similarity(u, u, SimilarityMetric::cosine) == doctest::Approx(1.0));
    CHECK(similarity(u, v, SimilarityMetric::euclidean) ==
          doctest::Approx(-std::sqrt(2.0)).epsilon(1e-15));
    CHECK(similarity(u, v, SimilarityMetric::cityblock) == doctest::Approx(-2.0));
    CHECK(similarity(w, zero, SimilarityMetric::euclidean) == doctest::Approx(-5.0));
    CHECK(similarity(w, zero, SimilarityMetric::cityblock) == doctest::Approx(-7.0));
    CHECK_THROWS_AS(similarity(u, zero, SimilarityMetric::cosine),
                    UndefinedSimilarityError);
    CHECK(metric_name(SimilarityMetric::cosine) == "cosine");
    CHECK(metric_name(SimilarityMetric::euclidean) == "euclidean");
    CHECK(metric_name(SimilarityMetric::cityblock) == "cityblock");
}

TEST_CASE("knn_graph on collinear points") {
    const Mat pts = Mat::from_rows({{0.0}, {1.0}, {3.0}, {7.0}});
    const std::vector<std::string> labels = {"a", "b", "c", "d"};
    const NeighborGraph g = knn_graph(pts, labels, 2, SimilarityMetric::euclidean);
    CHECK(g.k == 2);
    CHECK(g.labels == labels);
    REQUIRE(g.neighbors.size() == 4);
    REQUIRE(g.neighbors[0].size() == 2);
    CHECK(g.neighbors[0][0].node == 1);
    CHECK(g.neighbors[0][0].similarity == doctest::Approx(-1.0));
    CHECK(g.neighbors[0][1].node == 2);
    CHECK(g.neighbors[0][1].similarity == doctest::Approx(-3.0));
    CHECK(g.neighbors[2][0].node == 1);
    CHECK(g.neighbors[2][1].node == 0);
    CHECK(g.neighbors[3][0].node == 2);
}

TEST_CASE("knn_graph tie-break and k clipping") {
    const Mat pts = Mat::from_rows({{0.0}, {1.0}, {2.0}});
    const std::vector<std::string> labels = {"x", "y", "z"};
    // Node 1 is equidistant to 0 and 2; the lower id is listed first.
    const NeighborGraph g = knn_graph(pts, labels, 10, SimilarityMetric::euclidean);
    REQUIRE(g.neighbors[1].size() == 2);  // min(k, V-1)
    CHECK(g.neighbors[1][0].node == 0);
    CHECK(g.neighbors[1][1].node == 2);

    CHECK_THROWS_AS(knn_graph(pts, labels, 0, SimilarityMetric::cosine), ValidationError);
    CHECK_THROWS_AS(knn_graph(Mat::from_rows({{1.0}}), {"solo"}, 1,
                              SimilarityMetric::cosine),
                    ValidationError);
    CHECK_THROWS_AS(knn_graph(pts, {"x", "y"}, 1, SimilarityMetric::cosine),
                    DimensionError);
}

TEST_CASE("knn_graph cosine ignores magnitude") {
    const Mat pts = Mat::from_rows({{1.0, 0.0}, {20.0, 0.0}, {0.0, 1.0}});
    const NeighborGraph g =
        knn_graph(pts, {"a", "b", "c"}, 1, SimilarityMetric::cosine);
    CHECK(g.neighbors[0][0].node == 1);
    CHECK(g.neighbors[0][0].similarity == doctest::Approx(1.0));
    CHECK(g.neighbors[1][0].node == 0);
    CHECK(g.neighbors[2][0].similarity == doctest::Approx(0.0));
}

TEST_CASE("nn_overlap of a space with itself is 1") {
    const auto a = space_from({"t0", "t1", "t2", "t3", "t4"},
                              random_vectors(5, 3, 901));
    const OverlapReport rep = nn_overlap(a, a, 2, SimilarityMetric::cosine);
    CHECK(rep.mean_overlap == 1.0);
    CHECK(rep.mean_jaccard == 1.0);
    CHECK(rep.baseline == doctest::Approx(2.0 / 4.0));
    CHECK(rep.k == 2);
    REQUIRE(rep.per_token.size() == 5);
    for (const OverlapEntry& e : rep.per_token) {
        CHECK(e.overlap == 1.0);
        CHECK(e.jaccard == 1.0);
    }
    CHECK(rep.per_token[0].token == "t0");
}

TEST_CASE("nn_overlap matches tokens, not ids") {
    const Mat V = random_vectors(4, 3, 902);
    const auto a = space_from({"w", "x", "y", "z"}, V);
    // Same token -> vector mapping, stored under a permuted id order.
    Mat P(4, 3);
    const std::size_t perm[4] = {2, 0, 3, 1};  // b id i holds a id perm[i]
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t c = 0; c < 3; ++c) P(i, c) = V(perm[i], c);
    std::vector<std::string> toks(4);
    for (std::size_t i = 0; i < 4; ++i) toks[i] = a.vocab.id_to_token[perm[i]];
    const auto b = space_from(toks, std::move(P));
    const OverlapReport rep = nn_overlap(a, b, 2, SimilarityMetric::euclidean);
    CHECK(rep.mean_overlap == 1.0);
    CHECK(rep.mean_jaccard == 1.0);
}

TEST_CASE("nn_overlap is invariant under rotation") {
    Rng rng(903);
    const Mat V = random_vectors(8, 4, 904);
    const Mat R = make_dictionary(4, 4, DictionaryMode::orthogonal, rng).D;
    const auto a = space_from({"a", "b", "c", "d", "e", "f", "g", "h"}, V);
    auto b = a;
    b.vectors = matmul(V, R);
    const OverlapReport rep = nn_overlap(a, b, 3, SimilarityMetric::cosine);
    CHECK(rep.mean_overlap == 1.0);
    CHECK(rep.mean_jaccard == 1.0);
}

TEST_CASE("nn_overlap hand case with partial agreement") {
    const auto a = space_from({"t0", "t1", "t2"},
                              Mat::from_rows({{0.0}, {1.0}, {3.0}}));
    const auto b = space_from({"t0", "t1", "t2"},
                              Mat::from_rows({{0.0}, {1.0}, {-0.4}}));
    const OverlapReport rep = nn_overlap(a, b, 1, SimilarityMetric::euclidean);
    REQUIRE(rep.per_token.size() == 3);
    CHECK(rep.per_token[0].overlap == 0.0);  // t0: {t1} vs {t2}
    CHECK(rep.per_token[1].overlap == 1.0);  // t1: {t0} both
    CHECK(rep.per_token[2].overlap == 0.0);  // t2: {t1} vs {t0}
    CHECK(rep.per_token[1].jaccard == 1.0);
    CHECK(rep.per_token[0].jaccard == 0.0);
    CHECK(rep.mean_overlap == doctest::Approx(1.0 / 3.0));
    CHECK(rep.mean_jaccard == doctest::Approx(1.0 / 3.0));
    CHECK(rep.baseline == doctest::Approx(0.5));
}

TEST_CASE("nn_overlap jaccard is consistent with overlap") {
    const auto a = space_from({"p", "q", "r", "s", "t", "u"},
                              random_vectors(6, 4, 905));
    const auto b = space_from({"p", "q", "r", "s", "t", "u"},
                              random_vectors(6, 4, 906));
    const std::size_t k = 3;
    const OverlapReport rep = nn_overlap(a, b, k, SimilarityMetric::cosine);
    for (const OverlapEntry& e : rep.per_token) {
        const double inter = e.overlap * static_cast<double>(k);
        CHECK(e.jaccard ==
              doctest::Approx(inter / (2.0 * k - inter)).epsilon(1e-12));
    }
}

TEST_CASE("nn_overlap rejects mismatched vocabularies") {
    const auto a = space_from({"a", "b", "c"}, random_vectors(3, 2, 907));
    const auto b = space_from({"a", "b", "d"}, random_vectors(3, 2, 908));
    CHECK_THROWS_AS(nn_overlap(a, b, 1, SimilarityMetric::cosine),
                    VocabularyMismatchError);
    try {
        nn_overlap(a, b, 1, SimilarityMetric::cosine);
        FAIL("expected VocabularyMismatchError");
    } catch (const VocabularyMismatchError& e) {
        CHECK(std::string(e.what()).find("2 tokens") != std::string::npos);
    }
    CHECK_THROWS_AS(nn_overlap(a, a, 0, SimilarityMetric::cosine), ValidationError);
}

TEST_CASE("unified_network merges tokens and alive latents") {
    const auto space = space_from(
        {"t0", "t1", "t2"},
        Mat::from_rows({{1.0, 0.0}, {0.0, 1.0}, {0.8, 0.6}}));
    SaeModel model;
    model.W_enc = Mat::from_rows({{1.0, -1.0}, {0.0, -1.0}});
    model.b_enc = Mat(1, 2);
    model.W_dec = Mat::from_rows({{1.0, 0.0}, {0.0, 1.0}});
    model.b_dec = Mat(1, 2);
    // Latent 0 fires on t0/t2; latent 1 never fires on these tokens.
    const NeighborGraph g = unified_network(space, model, 2, SimilarityMetric::cosine);
    REQUIRE(g.labels.size() == 4);
    CHECK(g.labels[3] == "feat_0");
    REQUIRE(g.neighbors[3].size() == 2);
    CHECK(g.neighbors[3][0].node == 0);  // decoder row (1,0) == t0 direction
    CHECK(g.neighbors[3][0].similarity == doctest::Approx(1.0));
    CHECK(g.neighbors[3][1].node == 2);

    SaeModel wide = model;
    wide.W_enc = Mat(3, 2);
    wide.W_dec = Mat(2, 3);
    CHECK_THROWS_AS(unified_network(space, wide, 2, SimilarityMetric::cosine),
                    DimensionError);
}

TEST_CASE("unified_network keeps every latent that fires") {
    const auto space = space_from({"u", "v"}, Mat::from_rows({{1.0, 0.0}, {0.0, 1.0}}));
    SaeModel model;
    model.W_enc = Mat::from_rows({{1.0, 0.0}, {0.0, 1.0}});
    model.b_enc = Mat(1, 2);
    model.W_dec = Mat::from_rows({{0.6, 0.8}, {0.8, -0.6}});
    model.b_dec = Mat(1, 2);
    const NeighborGraph g = unified_network(space, model, 1, SimilarityMetric::cosine);
    REQUIRE(g.labels.size() == 4);
    CHECK(g.labels[2] == "feat_0");
    CHECK(g.labels[3] == "feat_1");
}
