#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "semlab/mat.hpp"
#include "semlab/sae.hpp"
#include "semlab/synth.hpp"

namespace semlab {

struct MatchEntry {
    std::size_t true_feature = 0;
    std::size_t latent = 0;
    double cosine = 0.0;
};

struct RecoveryReport {
    std::vector<MatchEntry> matching;  // injective in both directions
    double mean_max_cosine = 0.0;
    std::vector<char> recovered;  // per true feature, matched at >= tau
    std::size_t alive_latents = 0;
    double tau = 0.8;
};

struct AbsorptionEntry {
    std::size_t parent = 0;  // true feature ids
    std::size_t child = 0;
    std::size_t parent_latent = 0;
    double rate_child_present = 0.0;  // parent latent firing rate, child active
    double rate_child_absent = 0.0;   // same, parent active but child not
    double absorption = 0.0;
    std::size_t n_child_present = 0;
    std::size_t n_child_absent = 0;
};

struct AbsorptionReport {
    std::vector<AbsorptionEntry> pairs;
    double mean_absorption = 0.0;
    double eps_fire = kFireEps;
};

struct CompositionEntry {
    std::size_t latent = 0;
    double best_single_f1 = 0.0;
    std::size_t best_single_attr = 0;
    double best_pair_f1 = 0.0;
    std::size_t pair_a = 0;
    std::size_t pair_b = 0;
    bool composite = false;
};

struct CompositionReport {
    std::vector<CompositionEntry> latents;  // alive latents only
    double composite_fraction = 0.0;
    double margin = 0.1;
    double eps_fire = kFireEps;
};

struct CardSample {
    std::size_t sample = 0;
    double activation = 0.0;
    std::string label;  // filled only for textual datasets
};

struct CardNeighbor {
    std::size_t index = 0;  // row in the reference direction matrix
    double cosine = 0.0;
};

struct ReadoutEffect {
    std::size_t index = 0;
    double value = 0.0;
};

struct FeatureCard {
    std::size_t latent = 0;
    std::vector<CardSample> top_samples;  // activation descending, ties by id
    std::vector<double> deciles;          // 11 quantiles of nonzero activations
    std::vector<CardNeighbor> nearest;    // vs reference directions
    std::vector<ReadoutEffect> positive_effects;
    std::vector<ReadoutEffect> negative_effects;
};

// Mean over true features of the max over latents of cosine(true row,
// decoder row). use_abs compares directions up to sign.
double mean_max_cosine(const GroundTruthDictionary& truth, const SaeModel& model,
                       bool use_abs = false);

// Greedy injective matching by descending cosine; pairs below tau dropped.
std::vector<MatchEntry> match_features(const GroundTruthDictionary& truth,
                                       const SaeModel& model, double tau);

// Latents whose activation exceeds eps_fire on at least one row of X,
// ascending order.
std::vector<std::size_t> alive_features(const SaeModel& model, const Mat& X,
                                        double eps_fire = kFireEps);

RecoveryReport recovery_report(const GroundTruthDictionary& truth, const SaeModel& model,
                               const Mat& X, double tau = 0.8,
                               double eps_fire = kFireEps);

// Firing-rate comparison per hierarchy edge: how much less often the parent's
// matched latent fires when the child is present vs absent. Requires a
// hierarchical dataset with true codes; throws UnmatchedParentError if a
// parent has no latent in the matching.
AbsorptionReport absorption_score(const SaeModel& model, const ActivationDataset& data,
                                  const std::vector<MatchEntry>& matching,
                                  double eps_fire = kFireEps);

// F1 of each alive latent's firing set against single attributes and
// cross-group attribute pairs; a latent is composite when the best pair beats
// the best single attribute by `margin`.
CompositionReport composition_score(const SaeModel& model, const ActivationDataset& data,
                                    double margin = 0.1, double eps_fire = kFireEps);

// Card data for latent j: top-k activating samples, deciles of its nonzero
// activations, nearest reference directions by decoder-row cosine, and the
// strongest signed entries of decoder_row_j * readout. reference_dirs and
// labels may be empty; readout may be empty to skip effects. Throws
// DeadFeatureError if j never fires on X.
FeatureCard feature_card(const SaeModel& model, const Mat& X, std::size_t j,
                         std::size_t k, const Mat& reference_dirs, const Mat& readout,
                         const std::vector<std::string>& labels = {},
                         std::size_t n_neighbors = 5, std::size_t n_effects = 10,
                         double eps_fire = kFireEps);

// Human-readable one-feature summary.
std::string render_card(const FeatureCard& card);

}  // namespace semlab
