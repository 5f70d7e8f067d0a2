#include "semlab/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "semlab/errors.hpp"

namespace semlab {

void validate_spec(const FeatureGenSpec& spec) {
    if (spec.n == 0) throw ValidationError("feature spec: n must be >= 1");
    if (spec.p < 0.0 || spec.p > 1.0)
        throw ValidationError("feature spec: p must lie in [0, 1]");
    switch (spec.structure) {
        case FeatureStructure::independent:
            break;
        case FeatureStructure::hierarchical: {
            if (spec.q < 0.0 || spec.q > 1.0)
                throw ValidationError("feature spec: q must lie in [0, 1]");
            std::vector<int> parent_of(spec.n, -1);
            for (const auto& [parent, child] : spec.parent_edges) {
                if (parent >= spec.n || child >= spec.n)
                    throw ValidationError("feature spec: edge index out of range");
                if (parent == child)
                    throw ValidationError("feature spec: self-edge " +
                                          std::to_string(parent));
                if (parent_of[child] != -1)
                    throw ValidationError("feature spec: feature " +
                                          std::to_string(child) +
                                          " has two parents (edges must form a forest)");
                parent_of[child] = static_cast<int>(parent);
            }
            // Walking up from any node must terminate at a root.
            for (std::size_t start = 0; start < spec.n; ++start) {
                int cur = parent_of[start];
                std::size_t steps = 0;
                while (cur != -1) {
                    if (++steps > spec.n)
                        throw ValidationError(
                            "feature spec: parent edges contain a cycle");
                    cur = parent_of[cur];
                }
            }
            break;
        }
        case FeatureStructure::attributes: {
            if (spec.group_sizes.empty())
                throw ValidationError("feature spec: attribute groups missing");
            std::size_t total = 0;
            for (std::size_t g : spec.group_sizes) {
                if (g < 2)
                    throw ValidationError("feature spec: attribute groups need >= 2 members");
                total += g;
            }
            if (total != spec.n)
                throw ValidationError("feature spec: group sizes sum to " +
                                      std::to_string(total) + ", expected n = " +
                                      std::to_string(spec.n));
            break;
        }
    }
    if (spec.noise_sigma < 0.0)
        throw ValidationError("feature spec: noise sigma must be >= 0");
}

std::vector<std::size_t> topological_feature_order(const FeatureGenSpec& spec) {
    validate_spec(spec);
    std::vector<int> parent_of(spec.n, -1);
    for (const auto& [parent, child] : spec.parent_edges)
        parent_of[child] = static_cast<int>(parent);
    std::vector<std::size_t> depth(spec.n, 0);
    for (std::size_t i = 0; i < spec.n; ++i) {
        int cur = parent_of[i];
        while (cur != -1) {
            ++depth[i];
            cur = parent_of[cur];
        }
    }
    std::vector<std::size_t> order(spec.n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return depth[a] < depth[b]; });
    return order;
}

namespace {

void sample_one_row(const FeatureGenSpec& spec,
                    const std::vector<std::size_t>& order,
                    const std::vector<int>& parent_of, Rng& r, double* row) {
    switch (spec.structure) {
        case FeatureStructure::independent:
            for (std::size_t j = 0; j < spec.n; ++j) {
                const double u = r.uniform();
                const double mag = r.uniform_pos();
                if (u < spec.p) row[j] = mag;
            }
            break;
        case FeatureStructure::hierarchical:
            // Parents first; a fixed two-draw budget per feature keeps the
            // stream layout independent of which features fire.
            for (std::size_t j : order) {
                const double u = r.uniform();
                const double mag = r.uniform_pos();
                const int par = parent_of[j];
                const bool parent_ok = (par == -1) || row[par] > 0.0;
                const double prob = (par == -1) ? spec.p : spec.q;
                if (parent_ok && u < prob) row[j] = mag;
            }
            break;
        case FeatureStructure::attributes: {
            std::size_t base = 0;
            for (std::size_t g : spec.group_sizes) {
                const std::size_t pick = r.uniform_index(g);
                row[base + pick] = r.uniform_pos();
                base += g;
            }
            break;
        }
    }
}

}  // namespace

Mat sample_codes(const FeatureGenSpec& spec, std::size_t N, Rng& rng) {
    validate_spec(spec);
    if (N == 0) throw ValidationError("sample_codes: N must be >= 1");
    std::vector<int> parent_of(spec.n, -1);
    for (const auto& [parent, child] : spec.parent_edges)
        parent_of[child] = static_cast<int>(parent);
    const std::vector<std::size_t> order = topological_feature_order(spec);

    Mat S(N, spec.n);
    const std::uint64_t base = rng.next_u64();
    for (std::size_t i = 0; i < N; ++i) {
        Rng r(base + i);
        sample_one_row(spec, order, parent_of, r, S.row(i));
    }
    return S;
}

GroundTruthDictionary make_dictionary(std::size_t n, std::size_t d, DictionaryMode mode,
                                      Rng& rng) {
    if (n == 0 || d == 0) throw ValidationError("make_dictionary: n and d must be >= 1");
    if (mode == DictionaryMode::orthogonal && n > d)
        throw InfeasibleError("make_dictionary: cannot fit " + std::to_string(n) +
                              " orthogonal directions in " + std::to_string(d) +
                              " dimensions");
    Mat D(n, d);
    for (std::size_t i = 0; i < n; ++i) {
        auto row = D.row_span(i);
        while (true) {
            for (double& x : row) x = rng.gaussian();
            if (mode == DictionaryMode::orthogonal) {
                // Modified Gram-Schmidt against the rows already fixed.
                for (std::size_t k = 0; k < i; ++k)
                    add_scaled(row, D.row_span(k), -dot(row, D.row_span(k)));
            }
            const double norm = l2_norm(row);
            if (norm > 1e-8) {
                for (double& x : row) x /= norm;
                break;
            }
        }
    }
    return GroundTruthDictionary{std::move(D)};
}

ActivationDataset render_activations(const Mat& S, const GroundTruthDictionary& dict,
                                     double sigma, Rng& rng) {
    if (S.cols() != dict.D.rows())
        throw DimensionError("render_activations: codes " + S.shape_str() +
                             " vs dictionary " + dict.D.shape_str());
    if (sigma < 0.0) throw ValidationError("render_activations: sigma must be >= 0");
    ActivationDataset out;
    out.X = matmul(S, dict.D);
    out.S = S;
    out.noise_sigma = sigma;
    out.dict_hash = mat_hash(dict.D);
    if (sigma > 0.0) {
        const std::size_t d = dict.D.cols();
        const double cap = 6.0 * sigma * std::sqrt(static_cast<double>(d));
        const std::uint64_t base = rng.next_u64();
        std::vector<double> noise(d);
        for (std::size_t i = 0; i < out.X.rows(); ++i) {
            Rng r(base + i);
            double norm;
            do {
                for (double& x : noise) x = sigma * r.gaussian();
                norm = l2_norm(noise);
            } while (norm > cap);
            add_scaled(out.X.row_span(i), noise, 1.0);
        }
    }
    out.X.require_finite("render_activations");
    return out;
}

Mat interference_matrix(const GroundTruthDictionary& dict) {
    return matmul(dict.D, transpose(dict.D));
}

}  // namespace semlab
