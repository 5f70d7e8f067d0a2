#include "semlab/sae.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "semlab/errors.hpp"

namespace semlab {

void SaeModel::require_valid() const {
    if (W_enc.empty() || W_dec.empty())
        throw DimensionError("sae model: empty weight matrices");
    if (b_enc.rows() != 1 || b_enc.cols() != W_enc.cols())
        throw DimensionError("sae model: b_enc is " + b_enc.shape_str() +
                             ", expected 1x" + std::to_string(W_enc.cols()));
    if (W_dec.rows() != W_enc.cols())
        throw DimensionError("sae model: W_dec is " + W_dec.shape_str() +
                             " but width is " + std::to_string(W_enc.cols()));
    if (b_dec.rows() != 1 || b_dec.cols() != W_dec.cols())
        throw DimensionError("sae model: b_dec is " + b_dec.shape_str() +
                             ", expected 1x" + std::to_string(W_dec.cols()));
    W_enc.require_finite("sae model W_enc");
    b_enc.require_finite("sae model b_enc");
    W_dec.require_finite("sae model W_dec");
    b_dec.require_finite("sae model b_dec");
}

MatryoshkaConfig trivial_groups(std::size_t m) {
    return MatryoshkaConfig{{m}, {1.0}};
}

MatryoshkaConfig default_matryoshka(std::size_t m, std::size_t groups) {
    if (m == 0) throw ValidationError("default_matryoshka: m must be >= 1");
    std::size_t G = std::min(groups == 0 ? 1 : groups, m);
    MatryoshkaConfig mcfg;
    mcfg.boundaries.resize(G);
    const double denom = std::pow(2.0, static_cast<double>(G)) - 1.0;
    for (std::size_t i = 0; i < G; ++i) {
        const double frac = (std::pow(2.0, static_cast<double>(i + 1)) - 1.0) / denom;
        std::size_t b = static_cast<std::size_t>(std::lround(frac * static_cast<double>(m)));
        if (i > 0) b = std::max(b, mcfg.boundaries[i - 1] + 1);
        b = std::max<std::size_t>(b, i + 1);
        mcfg.boundaries[i] = std::min(b, m - (G - 1 - i));
    }
    mcfg.boundaries.back() = m;
    mcfg.weights.assign(G, 1.0 / static_cast<double>(G));
    return mcfg;
}

void validate_matryoshka(const MatryoshkaConfig& mcfg, std::size_t m) {
    if (mcfg.boundaries.empty())
        throw ValidationError("matryoshka config: no group boundaries");
    if (mcfg.weights.size() != mcfg.boundaries.size())
        throw ValidationError("matryoshka config: " +
                              std::to_string(mcfg.boundaries.size()) + " boundaries vs " +
                              std::to_string(mcfg.weights.size()) + " weights");
    std::size_t prev = 0;
    for (std::size_t i = 0; i < mcfg.boundaries.size(); ++i) {
        const std::size_t b = mcfg.boundaries[i];
        if (b == 0)
            throw ValidationError("matryoshka config: boundaries must be >= 1");
        if (i > 0 && b <= prev)
            throw ValidationError(
                "matryoshka config: boundaries must be strictly increasing");
        if (mcfg.weights[i] <= 0.0)
            throw ValidationError("matryoshka config: weights must be positive");
        prev = b;
    }
    if (mcfg.boundaries.back() != m)
        throw ValidationError("matryoshka config: last boundary " +
                              std::to_string(mcfg.boundaries.back()) + " != width " +
                              std::to_string(m));
}

Mat encode(const SaeModel& model, const Mat& X) {
    if (X.cols() != model.input_dim())
        throw DimensionError("encode: input " + X.shape_str() + " vs d_in " +
                             std::to_string(model.input_dim()));
    Mat Z = matmul(X, model.W_enc);
    add_row_broadcast(Z, model.b_enc);
    for (std::size_t i = 0; i < Z.size(); ++i)
        if (Z.data()[i] < 0.0) Z.data()[i] = 0.0;
    return Z;
}

Mat decode(const SaeModel& model, const Mat& F) {
    if (F.cols() != model.width())
        throw DimensionError("decode: code " + F.shape_str() + " vs width " +
                             std::to_string(model.width()));
    Mat X = matmul(F, model.W_dec);
    add_row_broadcast(X, model.b_dec);
    return X;
}

namespace {

// Loss (and optionally gradients / fired-latent flags) of the grouped
// objective. All public loss/grad entry points funnel through here so the
// plain, transcoder and Matryoshka paths cannot drift apart.
SaeLoss grouped_core(const SaeModel& model, const Mat& X_in, const Mat& target,
                     double lambda, const MatryoshkaConfig& mcfg, SaeGrads* grads,
                     std::vector<char>* fired) {
    model.require_valid();
    validate_matryoshka(mcfg, model.width());
    if (lambda < 0.0) throw ValidationError("sae loss: lambda must be >= 0");
    if (X_in.rows() == 0) throw ValidationError("sae loss: empty batch");
    if (X_in.cols() != model.input_dim())
        throw DimensionError("sae loss: batch " + X_in.shape_str() + " vs d_in " +
                             std::to_string(model.input_dim()));
    if (target.cols() != model.output_dim() || target.rows() != X_in.rows())
        throw DimensionError("sae loss: target " + target.shape_str() +
                             " vs expected " + std::to_string(X_in.rows()) + "x" +
                             std::to_string(model.output_dim()));

    const std::size_t B = X_in.rows();
    const std::size_t m = model.width();
    const std::size_t d_out = model.output_dim();
    const std::size_t G = mcfg.boundaries.size();
    const double invB = 1.0 / static_cast<double>(B);

    Mat Z = matmul(X_in, model.W_enc);
    add_row_broadcast(Z, model.b_enc);
    Mat F = Z;
    for (std::size_t i = 0; i < F.size(); ++i)
        if (F.data()[i] < 0.0) F.data()[i] = 0.0;
    if (fired) {
        fired->assign(m, 0);
        for (std::size_t b = 0; b < B; ++b)
            for (std::size_t j = 0; j < m; ++j)
                if (F(b, j) > kFireEps) (*fired)[j] = 1;
    }

    Mat Xhat(B, d_out);
    add_row_broadcast(Xhat, model.b_dec);
    std::vector<Mat> R(G);
    double recon = 0.0;
    std::size_t lo = 0;
    for (std::size_t g = 0; g < G; ++g) {
        const std::size_t hi = mcfg.boundaries[g];
        Xhat += matmul(col_slice(F, lo, hi), row_slice(model.W_dec, lo, hi));
        R[g] = Xhat;
        R[g] -= target;
        double ss = 0.0;
        for (std::size_t i = 0; i < R[g].size(); ++i) ss += R[g].data()[i] * R[g].data()[i];
        recon += mcfg.weights[g] * ss * invB;
        lo = hi;
    }
    double l1 = 0.0;
    for (std::size_t i = 0; i < F.size(); ++i) l1 += F.data()[i];

    SaeLoss loss;
    loss.recon = recon;
    loss.sparsity = lambda * l1 * invB;
    loss.total = loss.recon + loss.sparsity;
    if (!std::isfinite(loss.recon))
        throw NumericError("sae loss: non-finite reconstruction term");
    if (!std::isfinite(loss.sparsity))
        throw NumericError("sae loss: non-finite sparsity term");

    if (!grads) return loss;

    // Suffix sums T_g = sum_{j >= g} w_j * R_j, built in place.
    R[G - 1] *= mcfg.weights[G - 1];
    for (std::size_t g = G - 1; g-- > 0;) {
        R[g] *= mcfg.weights[g];
        R[g] += R[g + 1];
    }
    const double scale = 2.0 * invB;

    grads->W_dec = Mat(m, d_out);
    Mat dF(B, m);
    lo = 0;
    for (std::size_t g = 0; g < G; ++g) {
        const std::size_t hi = mcfg.boundaries[g];
        const Mat Fseg = col_slice(F, lo, hi);
        const Mat Wseg = row_slice(model.W_dec, lo, hi);
        const Mat dW = matmul(transpose(Fseg), R[g]);
        for (std::size_t r = lo; r < hi; ++r)
            for (std::size_t c = 0; c < d_out; ++c)
                grads->W_dec(r, c) = scale * dW(r - lo, c);
        const Mat dFseg = matmul(R[g], transpose(Wseg));
        for (std::size_t b = 0; b < B; ++b)
            for (std::size_t c = lo; c < hi; ++c) dF(b, c) = scale * dFseg(b, c - lo);
        lo = hi;
    }
    grads->b_dec = col_sums(R[0]);
    grads->b_dec *= scale;

    const double lam_per = lambda * invB;
    Mat dZ(B, m);
    for (std::size_t i = 0; i < dZ.size(); ++i)
        dZ.data()[i] = Z.data()[i] > 0.0 ? dF.data()[i] + lam_per : 0.0;
    grads->W_enc = matmul(transpose(X_in), dZ);
    grads->b_enc = col_sums(dZ);
    return loss;
}

}  // namespace

SaeLoss sae_loss(const SaeModel& model, const Mat& batch, double lambda) {
    return grouped_core(model, batch, batch, lambda, trivial_groups(model.width()),
                        nullptr, nullptr);
}

SaeGrads sae_grad(const SaeModel& model, const Mat& batch, double lambda) {
    SaeGrads g;
    grouped_core(model, batch, batch, lambda, trivial_groups(model.width()), &g, nullptr);
    return g;
}

SaeLoss grouped_loss(const SaeModel& model, const Mat& X_in, const Mat& target,
                     double lambda, const MatryoshkaConfig& mcfg) {
    return grouped_core(model, X_in, target, lambda, mcfg, nullptr, nullptr);
}

std::pair<SaeLoss, SaeGrads> grouped_loss_grad(const SaeModel& model, const Mat& X_in,
                                               const Mat& target, double lambda,
                                               const MatryoshkaConfig& mcfg) {
    SaeGrads g;
    SaeLoss loss = grouped_core(model, X_in, target, lambda, mcfg, &g, nullptr);
    return {loss, std::move(g)};
}

SaeModel init_sae(std::size_t d_in, std::size_t d_out, std::size_t m, Rng& rng) {
    if (d_in == 0 || d_out == 0 || m == 0)
        throw ValidationError("init_sae: dimensions must be >= 1");
    auto sphere_rows = [&rng](std::size_t r, std::size_t c) {
        Mat M(r, c);
        for (std::size_t i = 0; i < r; ++i) {
            auto row = M.row_span(i);
            double norm = 0.0;
            do {
                for (double& x : row) x = rng.gaussian();
                norm = l2_norm(row);
            } while (norm < 1e-8);
            for (double& x : row) x /= norm;
        }
        return M;
    };
    SaeModel model;
    model.W_dec = sphere_rows(m, d_out);
    model.W_enc = d_in == d_out ? transpose(model.W_dec) : transpose(sphere_rows(m, d_in));
    model.b_enc = Mat(1, m);
    model.b_dec = Mat(1, d_out);
    return model;
}

namespace {

// Unit-norm constraint on decoder rows, with the scale folded into the
// encoder column so ReLU(s*z)*w/s == ReLU(z)*w and the network function is
// unchanged.
void renormalize_decoder(SaeModel& model) {
    const std::size_t m = model.width();
    const std::size_t d_in = model.input_dim();
    const std::size_t d_out = model.output_dim();
    for (std::size_t j = 0; j < m; ++j) {
        auto row = model.W_dec.row_span(j);
        const double s = l2_norm(row);
        if (s < 1e-12) {
            // Degenerate row; re-point it at a basis direction.
            for (double& x : row) x = 0.0;
            row[j % d_out] = 1.0;
            continue;
        }
        for (double& x : row) x /= s;
        for (std::size_t i = 0; i < d_in; ++i) model.W_enc(i, j) *= s;
        model.b_enc(0, j) *= s;
    }
}

OptimState make_optimizer(const SaeConfig& cfg) {
    return cfg.optimizer == OptimKind::adam
               ? make_adam(cfg.lr, cfg.beta1, cfg.beta2, cfg.eps)
               : make_sgd(cfg.lr);
}

void resample_dead_latents(SaeModel& model, const Mat& X_in, const Mat& target,
                           const std::vector<char>& fired, OptimState& opt_We,
                           OptimState& opt_be, OptimState& opt_Wd, OptimState& opt_bd) {
    std::vector<std::size_t> dead;
    for (std::size_t j = 0; j < fired.size(); ++j)
        if (!fired[j]) dead.push_back(j);
    if (dead.empty()) return;

    Mat Xhat = decode(model, encode(model, X_in));
    std::vector<std::pair<double, std::size_t>> resid(X_in.rows());
    for (std::size_t i = 0; i < X_in.rows(); ++i)
        resid[i] = {l2_dist(Xhat.row_span(i), target.row_span(i)), i};
    std::sort(resid.begin(), resid.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });

    double enc_norm_sum = 0.0;
    std::size_t alive = 0;
    for (std::size_t j = 0; j < fired.size(); ++j) {
        if (!fired[j]) continue;
        double s = 0.0;
        for (std::size_t i = 0; i < model.input_dim(); ++i)
            s += model.W_enc(i, j) * model.W_enc(i, j);
        enc_norm_sum += std::sqrt(s);
        ++alive;
    }
    const double enc_scale = 0.2 * (alive > 0 ? enc_norm_sum / alive : 1.0);

    std::vector<double> dir(model.output_dim());
    for (std::size_t k = 0; k < dead.size(); ++k) {
        const std::size_t sample = resid[k % resid.size()].second;
        for (std::size_t c = 0; c < dir.size(); ++c)
            dir[c] = target(sample, c) - Xhat(sample, c);
        const double norm = l2_norm(dir);
        if (norm < 1e-12) continue;
        const std::size_t j = dead[k];
        for (std::size_t c = 0; c < model.output_dim(); ++c) {
            model.W_dec(j, c) = dir[c] / norm;
            if (!opt_Wd.m.empty()) opt_Wd.m(j, c) = opt_Wd.v(j, c) = 0.0;
        }
        // Encoder can only see input space; reuse the direction when shapes
        // agree, otherwise just rescale the existing column.
        const bool same_space = model.input_dim() == model.output_dim();
        double col_norm = 0.0;
        for (std::size_t i = 0; i < model.input_dim(); ++i)
            col_norm += model.W_enc(i, j) * model.W_enc(i, j);
        col_norm = std::sqrt(col_norm);
        for (std::size_t i = 0; i < model.input_dim(); ++i) {
            const double base = same_space ? dir[i] / norm
                                           : (col_norm > 1e-12 ? model.W_enc(i, j) / col_norm : 0.0);
            model.W_enc(i, j) = enc_scale * base;
            if (!opt_We.m.empty()) opt_We.m(i, j) = opt_We.v(i, j) = 0.0;
        }
        model.b_enc(0, j) = 0.0;
        if (!opt_be.m.empty()) opt_be.m(0, j) = opt_be.v(0, j) = 0.0;
    }
    (void)opt_bd;
}

TrainResult train_grouped(const Mat& X_in, const Mat& target, const SaeConfig& cfg,
                          const MatryoshkaConfig& mcfg) {
    if (cfg.m == 0) throw ValidationError("train: latent width m must be >= 1");
    if (cfg.batch_size == 0) throw ValidationError("train: batch size must be >= 1");
    if (cfg.epochs == 0) throw ValidationError("train: epochs must be >= 1");
    if (X_in.rows() != target.rows())
        throw DimensionError("train: input rows " + std::to_string(X_in.rows()) +
                             " vs target rows " + std::to_string(target.rows()));
    if (X_in.rows() < cfg.batch_size)
        throw ValidationError("train: dataset of " + std::to_string(X_in.rows()) +
                              " rows is smaller than batch size " +
                              std::to_string(cfg.batch_size));
    X_in.require_finite("train input");
    target.require_finite("train target");
    validate_matryoshka(mcfg, cfg.m);

    const std::size_t N = X_in.rows();
    const std::size_t B = cfg.batch_size;
    const std::size_t n_batches = N / B;

    Rng rng(cfg.seed);
    SaeModel model = init_sae(X_in.cols(), target.cols(), cfg.m, rng);
    OptimState opt_We = make_optimizer(cfg);
    OptimState opt_be = make_optimizer(cfg);
    OptimState opt_Wd = make_optimizer(cfg);
    OptimState opt_bd = make_optimizer(cfg);

    std::vector<std::size_t> idx(N);
    std::iota(idx.begin(), idx.end(), 0);

    TrainResult result;
    int last_good = -1;
    Mat Xb(B, X_in.cols());
    Mat Yb(B, target.cols());
    std::vector<char> batch_fired, epoch_fired;

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        for (std::size_t i = N - 1; i > 0; --i) {
            const std::size_t j = rng.uniform_index(i + 1);
            std::swap(idx[i], idx[j]);
        }
        EpochStats stats;
        epoch_fired.assign(cfg.m, 0);
        try {
            for (std::size_t b = 0; b < n_batches; ++b) {
                for (std::size_t r = 0; r < B; ++r) {
                    const std::size_t src = idx[b * B + r];
                    std::copy(X_in.row(src), X_in.row(src) + X_in.cols(), Xb.row(r));
                    std::copy(target.row(src), target.row(src) + target.cols(),
                              Yb.row(r));
                }
                SaeGrads grads;
                const SaeLoss loss =
                    grouped_core(model, Xb, Yb, cfg.lambda, mcfg, &grads, &batch_fired);
                stats.total += loss.total;
                stats.recon += loss.recon;
                stats.sparsity += loss.sparsity;
                for (std::size_t j = 0; j < cfg.m; ++j)
                    if (batch_fired[j]) epoch_fired[j] = 1;
                optim_step_inplace(model.W_enc, grads.W_enc, opt_We);
                optim_step_inplace(model.b_enc, grads.b_enc, opt_be);
                optim_step_inplace(model.W_dec, grads.W_dec, opt_Wd);
                optim_step_inplace(model.b_dec, grads.b_dec, opt_bd);
                renormalize_decoder(model);
            }
        } catch (const NumericError& e) {
            throw TrainingDivergedError(
                std::string("training diverged at epoch ") + std::to_string(epoch) +
                    ": " + e.what(),
                last_good);
        }
        stats.total /= static_cast<double>(n_batches);
        stats.recon /= static_cast<double>(n_batches);
        stats.sparsity /= static_cast<double>(n_batches);
        std::size_t alive = 0;
        for (char f : epoch_fired) alive += f ? 1 : 0;
        stats.alive_frac = static_cast<double>(alive) / static_cast<double>(cfg.m);
        result.log.push_back(stats);
        last_good = static_cast<int>(epoch);

        if (cfg.resample_interval > 0 && (epoch + 1) % cfg.resample_interval == 0 &&
            epoch + 1 < cfg.epochs)
            resample_dead_latents(model, X_in, target, epoch_fired, opt_We, opt_be,
                                  opt_Wd, opt_bd);
    }
    result.model = std::move(model);
    return result;
}

}  // namespace

TrainResult train_sae(const ActivationDataset& data, const SaeConfig& cfg) {
    return train_grouped(data.X, data.X, cfg, trivial_groups(cfg.m));
}

TrainResult train_transcoder(const TranscoderTask& task, const SaeConfig& cfg) {
    return train_grouped(task.X_in, task.X_out, cfg, trivial_groups(cfg.m));
}

TrainResult train_matryoshka(const ActivationDataset& data, const SaeConfig& cfg,
                             const MatryoshkaConfig& mcfg) {
    return train_grouped(data.X, data.X, cfg, mcfg);
}

Mat clamp_feature(const SaeModel& model, const Mat& x, std::size_t j, double value,
                  bool additive) {
    if (j >= model.width())
        throw IndexError("clamp_feature: latent " + std::to_string(j) +
                         " out of range (width " + std::to_string(model.width()) + ")");
    if (x.rows() != 1)
        throw DimensionError("clamp_feature: expected a single row, got " +
                             x.shape_str());
    Mat f = encode(model, x);
    f(0, j) = additive ? f(0, j) + value : value;
    return decode(model, f);
}

}  // namespace semlab
