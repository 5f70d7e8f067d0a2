#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "semlab/mat.hpp"
#include "semlab/optim.hpp"
#include "semlab/rng.hpp"
#include "semlab/synth.hpp"

namespace semlab {

// A latent "fires" when its activation exceeds this; shared by the training
// logs and the downstream feature-analysis metrics.
inline constexpr double kFireEps = 1e-6;

// One hidden layer, ReLU latents. The same shape serves plain SAEs,
// transcoders (input_dim != output_dim allowed) and Matryoshka training.
struct SaeModel {
    Mat W_enc;  // d_in x m
    Mat b_enc;  // 1 x m
    Mat W_dec;  // m x d_out, rows kept unit-norm by the trainers
    Mat b_dec;  // 1 x d_out

    std::size_t input_dim() const { return W_enc.rows(); }
    std::size_t output_dim() const { return W_dec.cols(); }
    std::size_t width() const { return W_enc.cols(); }

    // Shape consistency + finiteness; throws DimensionError/NumericError.
    void require_valid() const;
};

struct SaeConfig {
    std::size_t m = 0;       // latent width
    double lambda = 0.0;     // L1 coefficient on the codes
    OptimKind optimizer = OptimKind::adam;
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::size_t batch_size = 64;
    std::size_t epochs = 10;
    std::uint64_t seed = 0;
    // Every `resample_interval` epochs, latents that never fired during the
    // epoch are re-pointed at high-residual data directions. 0 disables.
    std::size_t resample_interval = 0;
};

// Nested prefix groups: reconstruction is scored once per boundary using only
// latents [0, boundaries[i]), weighted by weights[i].
struct MatryoshkaConfig {
    std::vector<std::size_t> boundaries;  // strictly increasing, last == m
    std::vector<double> weights;          // same length, all > 0
};

// Single group covering all m latents; makes grouped training collapse to the
// plain SAE objective.
MatryoshkaConfig trivial_groups(std::size_t m);

// `groups` geometrically growing prefix sizes (capped at m distinct
// boundaries), uniform weights 1/G.
MatryoshkaConfig default_matryoshka(std::size_t m, std::size_t groups = 5);

void validate_matryoshka(const MatryoshkaConfig& mcfg, std::size_t m);

struct TranscoderTask {
    Mat X_in;   // N x d_in
    Mat X_out;  // N x d_out
};

struct SaeLoss {
    double total = 0.0;
    double recon = 0.0;
    double sparsity = 0.0;
};

struct SaeGrads {
    Mat W_enc, b_enc, W_dec, b_dec;
};

// F = ReLU(X * W_enc + b_enc); accepts a single row or a batch.
Mat encode(const SaeModel& model, const Mat& X);

// X_hat = F * W_dec + b_dec.
Mat decode(const SaeModel& model, const Mat& F);

// recon = mean_i ||x_i - decode(encode(x_i))||^2, sparsity = lambda * mean_i
// sum_j f_ij, total = recon + sparsity.
SaeLoss sae_loss(const SaeModel& model, const Mat& batch, double lambda);
SaeGrads sae_grad(const SaeModel& model, const Mat& batch, double lambda);

// Shared objective under all three trainers: reconstruct `target` from
// `X_in`, scoring each Matryoshka prefix separately. With trivial_groups and
// target == X_in this is exactly sae_loss.
SaeLoss grouped_loss(const SaeModel& model, const Mat& X_in, const Mat& target,
                     double lambda, const MatryoshkaConfig& mcfg);
std::pair<SaeLoss, SaeGrads> grouped_loss_grad(const SaeModel& model, const Mat& X_in,
                                               const Mat& target, double lambda,
                                               const MatryoshkaConfig& mcfg);

struct EpochStats {
    double total = 0.0;
    double recon = 0.0;
    double sparsity = 0.0;
    double alive_frac = 0.0;
};

struct TrainResult {
    SaeModel model;
    std::vector<EpochStats> log;  // one entry per completed epoch
};

// W_dec rows uniform on the unit sphere, W_enc = W_dec^T, zero biases.
SaeModel init_sae(std::size_t d_in, std::size_t d_out, std::size_t m, Rng& rng);

// Mini-batch Adam/SGD on the grouped objective with decoder rows renormalized
// to unit length after every step (scale folded into the encoder so the
// network function is unchanged). Throws TrainingDivergedError on non-finite
// loss, carrying the last completed epoch index.
TrainResult train_sae(const ActivationDataset& data, const SaeConfig& cfg);
TrainResult train_transcoder(const TranscoderTask& task, const SaeConfig& cfg);
TrainResult train_matryoshka(const ActivationDataset& data, const SaeConfig& cfg,
                             const MatryoshkaConfig& mcfg);

// f = encode(x); f_j set to `value` (or f_j + value when additive); returns
// decode of the edited code. x is a single row.
Mat clamp_feature(const SaeModel& model, const Mat& x, std::size_t j, double value,
                  bool additive = false);

}  // namespace semlab
