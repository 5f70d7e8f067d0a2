#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "semlab/mat.hpp"
#include "semlab/rng.hpp"

namespace semlab {

enum class FeatureStructure { independent, hierarchical, attributes };

// Generator spec for synthetic sparse feature codes. Magnitudes of active
// features are uniform on (0, 1].
struct FeatureGenSpec {
    std::size_t n = 0;           // number of true features
    double p = 0.05;             // per-feature activation probability
    FeatureStructure structure = FeatureStructure::independent;
    // hierarchical: parent -> child edges (must form a forest); a child fires
    // with probability q only when its parent fired. Roots fire with p.
    std::vector<std::pair<std::size_t, std::size_t>> parent_edges;
    double q = 0.3;
    // attributes: per-group feature counts (consecutive index ranges); exactly
    // one feature per group is active in every sample.
    std::vector<std::size_t> group_sizes;
    double noise_sigma = 0.0;
    std::uint64_t seed = 0;
};

// Throws ValidationError on inconsistent specs (cycles, non-forest edges,
// group sizes < 2, group sizes not summing to n, p/q out of range).
void validate_spec(const FeatureGenSpec& spec);

// Feature order with parents before children (hierarchical structure only).
std::vector<std::size_t> topological_feature_order(const FeatureGenSpec& spec);

enum class DictionaryMode { random, orthogonal };

// Ground-truth feature directions: n unit-norm rows in d dimensions.
struct GroundTruthDictionary {
    Mat D;  // n x d, rows unit L2 norm
    std::size_t n_features() const { return D.rows(); }
    std::size_t dim() const { return D.cols(); }
};

struct ActivationDataset {
    Mat X;  // N x d rendered activations
    Mat S;  // N x n true codes (may be empty when codes are withheld)
    double noise_sigma = 0.0;
    std::uint64_t dict_hash = 0;
    FeatureGenSpec spec;
};

// Draws N sparse nonnegative code rows. Each sample derives its own
// counter-based sub-seed from one draw of `rng`, so generation order does not
// affect the result.
Mat sample_codes(const FeatureGenSpec& spec, std::size_t N, Rng& rng);

// random: rows drawn uniformly from the unit sphere; orthogonal: mutually
// orthonormal rows (requires n <= d, otherwise InfeasibleError).
GroundTruthDictionary make_dictionary(std::size_t n, std::size_t d, DictionaryMode mode,
                                      Rng& rng);

// X = S * D + sigma * gaussian noise, with per-row sub-seeded noise. Noise
// rows are redrawn in the (astronomically rare) event their norm exceeds
// 6*sigma*sqrt(d), which keeps the dataset invariant unconditional.
ActivationDataset render_activations(const Mat& S, const GroundTruthDictionary& dict,
                                     double sigma, Rng& rng);

// Gram matrix D * D^T; off-diagonals measure readout interference.
Mat interference_matrix(const GroundTruthDictionary& dict);

}  // namespace semlab
