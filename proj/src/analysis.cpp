#include "semlab/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "semlab/errors.hpp"

namespace semlab {

namespace {

void require_same_ambient(const GroundTruthDictionary& truth, const SaeModel& model,
                          const char* context) {
    if (truth.D.cols() != model.W_dec.cols())
        throw DimensionError(std::string(context) + ": dictionary dim " +
                             std::to_string(truth.D.cols()) + " vs decoder dim " +
                             std::to_string(model.W_dec.cols()));
}

double f1_score(std::size_t tp, std::size_t fp, std::size_t fn) {
    const std::size_t denom = 2 * tp + fp + fn;
    if (denom == 0) return 0.0;
    return 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
}

}  // namespace

double mean_max_cosine(const GroundTruthDictionary& truth, const SaeModel& model,
                       bool use_abs) {
    require_same_ambient(truth, model, "mean_max_cosine");
    if (truth.D.rows() == 0) throw ValidationError("mean_max_cosine: empty dictionary");
    double total = 0.0;
    for (std::size_t i = 0; i < truth.D.rows(); ++i) {
        double best = -2.0;
        for (std::size_t j = 0; j < model.W_dec.rows(); ++j) {
            double c = cosine(truth.D.row_span(i), model.W_dec.row_span(j));
            if (use_abs) c = std::fabs(c);
            best = std::max(best, c);
        }
        total += best;
    }
    return total / static_cast<double>(truth.D.rows());
}

std::vector<MatchEntry> match_features(const GroundTruthDictionary& truth,
                                       const SaeModel& model, double tau) {
    require_same_ambient(truth, model, "match_features");
    struct Pair {
        double c;
        std::size_t i, j;
    };
    std::vector<Pair> pairs;
    pairs.reserve(truth.D.rows() * model.W_dec.rows());
    for (std::size_t i = 0; i < truth.D.rows(); ++i)
        for (std::size_t j = 0; j < model.W_dec.rows(); ++j)
            pairs.push_back({cosine(truth.D.row_span(i), model.W_dec.row_span(j)), i, j});
    std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
        if (a.c != b.c) return a.c > b.c;
        if (a.i != b.i) return a.i < b.i;
        return a.j < b.j;
    });
    std::vector<char> used_true(truth.D.rows(), 0), used_latent(model.W_dec.rows(), 0);
    std::vector<MatchEntry> matching;
    for (const Pair& p : pairs) {
        if (p.c < tau) break;
        if (used_true[p.i] || used_latent[p.j]) continue;
        used_true[p.i] = used_latent[p.j] = 1;
        matching.push_back({p.i, p.j, p.c});
    }
    return matching;
}

std::vector<std::size_t> alive_features(const SaeModel& model, const Mat& X,
                                        double eps_fire) {
    const Mat F = encode(model, X);
    std::vector<std::size_t> alive;
    for (std::size_t j = 0; j < F.cols(); ++j) {
        for (std::size_t i = 0; i < F.rows(); ++i) {
            if (F(i, j) > eps_fire) {
                alive.push_back(j);
                break;
            }
        }
    }
    return alive;
}

RecoveryReport recovery_report(const GroundTruthDictionary& truth, const SaeModel& model,
                               const Mat& X, double tau, double eps_fire) {
    RecoveryReport report;
    report.tau = tau;
    report.matching = match_features(truth, model, tau);
    report.mean_max_cosine = mean_max_cosine(truth, model);
    report.recovered.assign(truth.D.rows(), 0);
    for (const MatchEntry& e : report.matching) report.recovered[e.true_feature] = 1;
    report.alive_latents = alive_features(model, X, eps_fire).size();
    return report;
}

AbsorptionReport absorption_score(const SaeModel& model, const ActivationDataset& data,
                                  const std::vector<MatchEntry>& matching,
                                  double eps_fire) {
    if (data.spec.structure != FeatureStructure::hierarchical)
        throw ValidationError("absorption_score: dataset is not hierarchical");
    if (data.S.empty())
        throw ValidationError("absorption_score: dataset has no true codes");
    if (data.S.rows() != data.X.rows())
        throw DimensionError("absorption_score: codes " + data.S.shape_str() +
                             " vs activations " + data.X.shape_str());

    const Mat F = encode(model, data.X);
    AbsorptionReport report;
    report.eps_fire = eps_fire;
    double total = 0.0;
    for (const auto& [parent, child] : data.spec.parent_edges) {
        const MatchEntry* hit = nullptr;
        for (const MatchEntry& e : matching)
            if (e.true_feature == parent) {
                hit = &e;
                break;
            }
        if (!hit)
            throw UnmatchedParentError("absorption_score: parent feature " +
                                       std::to_string(parent) +
                                       " has no matched latent");
        AbsorptionEntry entry;
        entry.parent = parent;
        entry.child = child;
        entry.parent_latent = hit->latent;
        std::size_t fire_present = 0, fire_absent = 0;
        for (std::size_t i = 0; i < data.S.rows(); ++i) {
            const bool child_on = data.S(i, child) > 0.0;
            const bool parent_on = data.S(i, parent) > 0.0;
            const bool fires = F(i, entry.parent_latent) > eps_fire;
            if (child_on) {
                ++entry.n_child_present;
                fire_present += fires ? 1 : 0;
            } else if (parent_on) {
                ++entry.n_child_absent;
                fire_absent += fires ? 1 : 0;
            }
        }
        entry.rate_child_present =
            entry.n_child_present
                ? static_cast<double>(fire_present) / entry.n_child_present
                : 0.0;
        entry.rate_child_absent =
            entry.n_child_absent ? static_cast<double>(fire_absent) / entry.n_child_absent
                                 : 0.0;
        entry.absorption =
            entry.rate_child_absent > 0.0
                ? std::max(0.0, 1.0 - entry.rate_child_present / entry.rate_child_absent)
                : 0.0;
        total += entry.absorption;
        report.pairs.push_back(entry);
    }
    report.mean_absorption =
        report.pairs.empty() ? 0.0 : total / static_cast<double>(report.pairs.size());
    return report;
}

CompositionReport composition_score(const SaeModel& model, const ActivationDataset& data,
                                    double margin, double eps_fire) {
    if (data.spec.structure != FeatureStructure::attributes)
        throw ValidationError("composition_score: dataset has no attribute groups");
    if (data.S.empty())
        throw ValidationError("composition_score: dataset has no true codes");
    const std::size_t n = data.S.cols();
    const std::size_t N = data.S.rows();

    // group id per attribute
    std::vector<std::size_t> group_of(n);
    {
        std::size_t base = 0, g = 0;
        for (std::size_t size : data.spec.group_sizes) {
            for (std::size_t a = 0; a < size; ++a) group_of[base + a] = g;
            base += size;
            ++g;
        }
    }
    std::vector<char> attr_on(N * n);
    for (std::size_t i = 0; i < N; ++i)
        for (std::size_t a = 0; a < n; ++a)
            attr_on[i * n + a] = data.S(i, a) > 0.0 ? 1 : 0;

    const Mat F = encode(model, data.X);
    const std::vector<std::size_t> alive = alive_features(model, data.X, eps_fire);

    CompositionReport report;
    report.margin = margin;
    report.eps_fire = eps_fire;
    std::vector<char> fires(N);
    std::size_t composites = 0;
    for (std::size_t j : alive) {
        for (std::size_t i = 0; i < N; ++i) fires[i] = F(i, j) > eps_fire ? 1 : 0;
        CompositionEntry entry;
        entry.latent = j;
        entry.best_single_f1 = -1.0;
        for (std::size_t a = 0; a < n; ++a) {
            std::size_t tp = 0, fp = 0, fn = 0;
            for (std::size_t i = 0; i < N; ++i) {
                const bool truth = attr_on[i * n + a];
                if (fires[i] && truth)
                    ++tp;
                else if (fires[i])
                    ++fp;
                else if (truth)
                    ++fn;
            }
            const double f1 = f1_score(tp, fp, fn);
            if (f1 > entry.best_single_f1) {
                entry.best_single_f1 = f1;
                entry.best_single_attr = a;
            }
        }
        entry.best_pair_f1 = -1.0;
        for (std::size_t a = 0; a < n; ++a) {
            for (std::size_t b = a + 1; b < n; ++b) {
                if (group_of[a] == group_of[b]) continue;
                std::size_t tp = 0, fp = 0, fn = 0;
                for (std::size_t i = 0; i < N; ++i) {
                    const bool truth = attr_on[i * n + a] && attr_on[i * n + b];
                    if (fires[i] && truth)
                        ++tp;
                    else if (fires[i])
                        ++fp;
                    else if (truth)
                        ++fn;
                }
                const double f1 = f1_score(tp, fp, fn);
                if (f1 > entry.best_pair_f1) {
                    entry.best_pair_f1 = f1;
                    entry.pair_a = a;
                    entry.pair_b = b;
                }
            }
        }
        if (entry.best_single_f1 < 0.0) entry.best_single_f1 = 0.0;
        if (entry.best_pair_f1 < 0.0) entry.best_pair_f1 = 0.0;
        entry.composite = entry.best_pair_f1 >= entry.best_single_f1 + margin;
        composites += entry.composite ? 1 : 0;
        report.latents.push_back(entry);
    }
    report.composite_fraction =
        report.latents.empty()
            ? 0.0
            : static_cast<double>(composites) / static_cast<double>(report.latents.size());
    return report;
}

FeatureCard feature_card(const SaeModel& model, const Mat& X, std::size_t j,
                         std::size_t k, const Mat& reference_dirs, const Mat& readout,
                         const std::vector<std::string>& labels, std::size_t n_neighbors,
                         std::size_t n_effects, double eps_fire) {
    if (j >= model.width())
        throw IndexError("feature_card: latent " + std::to_string(j) + " out of range");
    if (!labels.empty() && labels.size() != X.rows())
        throw ValidationError("feature_card: " + std::to_string(labels.size()) +
                              " labels for " + std::to_string(X.rows()) + " samples");
    const Mat F = encode(model, X);
    std::vector<double> acts(X.rows());
    double peak = 0.0;
    for (std::size_t i = 0; i < X.rows(); ++i) {
        acts[i] = F(i, j);
        peak = std::max(peak, acts[i]);
    }
    if (peak <= eps_fire)
        throw DeadFeatureError("feature_card: latent " + std::to_string(j) +
                               " never fires on this dataset");

    FeatureCard card;
    card.latent = j;

    std::vector<std::size_t> order(X.rows());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&acts](std::size_t a, std::size_t b) {
        if (acts[a] != acts[b]) return acts[a] > acts[b];
        return a < b;
    });
    for (std::size_t r = 0; r < std::min(k, order.size()); ++r) {
        CardSample s;
        s.sample = order[r];
        s.activation = acts[order[r]];
        if (!labels.empty()) s.label = labels[order[r]];
        card.top_samples.push_back(std::move(s));
    }

    std::vector<double> nonzero;
    for (double a : acts)
        if (a > 0.0) nonzero.push_back(a);
    std::sort(nonzero.begin(), nonzero.end());
    card.deciles.resize(11);
    for (int q = 0; q <= 10; ++q) {
        const double pos = 0.1 * q * static_cast<double>(nonzero.size() - 1);
        const std::size_t lo = static_cast<std::size_t>(pos);
        const std::size_t hi = std::min(lo + 1, nonzero.size() - 1);
        const double frac = pos - static_cast<double>(lo);
        card.deciles[q] = nonzero[lo] * (1.0 - frac) + nonzero[hi] * frac;
    }

    if (!reference_dirs.empty()) {
        if (reference_dirs.cols() != model.output_dim())
            throw DimensionError("feature_card: reference dirs " +
                                 reference_dirs.shape_str() + " vs decoder dim " +
                                 std::to_string(model.output_dim()));
        std::vector<CardNeighbor> all;
        for (std::size_t t = 0; t < reference_dirs.rows(); ++t)
            all.push_back(
                {t, cosine(model.W_dec.row_span(j), reference_dirs.row_span(t))});
        std::sort(all.begin(), all.end(), [](const CardNeighbor& a, const CardNeighbor& b) {
            if (a.cosine != b.cosine) return a.cosine > b.cosine;
            return a.index < b.index;
        });
        all.resize(std::min(n_neighbors, all.size()));
        card.nearest = std::move(all);
    }

    if (!readout.empty()) {
        if (readout.rows() != model.output_dim())
            throw DimensionError("feature_card: readout " + readout.shape_str() +
                                 " vs decoder dim " +
                                 std::to_string(model.output_dim()));
        Mat row(1, model.output_dim());
        for (std::size_t c = 0; c < model.output_dim(); ++c) row(0, c) = model.W_dec(j, c);
        const Mat effects = matmul(row, readout);
        std::vector<ReadoutEffect> sorted;
        for (std::size_t c = 0; c < effects.cols(); ++c)
            sorted.push_back({c, effects(0, c)});
        std::sort(sorted.begin(), sorted.end(),
                  [](const ReadoutEffect& a, const ReadoutEffect& b) {
                      if (a.value != b.value) return a.value > b.value;
                      return a.index < b.index;
                  });
        for (const ReadoutEffect& e : sorted) {
            if (e.value > 0.0 && card.positive_effects.size() < n_effects)
                card.positive_effects.push_back(e);
        }
        for (auto it = sorted.rbegin(); it != sorted.rend(); ++it) {
            if (it->value < 0.0 && card.negative_effects.size() < n_effects)
                card.negative_effects.push_back(*it);
        }
    }
    return card;
}

std::string render_card(const FeatureCard& card) {
    std::ostringstream os;
    os << "feature " << card.latent << "\n";
    os << "  top activations:\n";
    for (const CardSample& s : card.top_samples) {
        os << "    sample " << s.sample << "  act " << s.activation;
        if (!s.label.empty()) os << "  [" << s.label << "]";
        os << "\n";
    }
    os << "  nonzero activation deciles:";
    for (double q : card.deciles) os << " " << q;
    os << "\n";
    if (!card.nearest.empty()) {
        os << "  nearest reference directions:\n";
        for (const CardNeighbor& nb : card.nearest)
            os << "    #" << nb.index << "  cos " << nb.cosine << "\n";
    }
    if (!card.positive_effects.empty()) {
        os << "  positive readout effects:";
        for (const ReadoutEffect& e : card.positive_effects)
            os << " " << e.index << ":" << e.value;
        os << "\n";
    }
    if (!card.negative_effects.empty()) {
        os << "  negative readout effects:";
        for (const ReadoutEffect& e : card.negative_effects)
            os << " " << e.index << ":" << e.value;
        os << "\n";
    }
    return os.str();
}

}  // namespace semlab
