#pragma once

#include <utility>

#include "semlab/mat.hpp"

namespace semlab {

enum class OptimKind { sgd, adam };

// Per-parameter optimizer state. Adam keeps first/second moment accumulators
// shaped like the parameter; SGD keeps none.
struct OptimState {
    OptimKind kind = OptimKind::sgd;
    double lr = 0.01;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    Mat m;  // first moments (adam only)
    Mat v;  // second moments (adam only)
    long long step = 0;
};

OptimState make_sgd(double lr);
OptimState make_adam(double lr = 1e-3, double beta1 = 0.9, double beta2 = 0.999,
                     double eps = 1e-8);

// Pure update: returns (new params, advanced state). Adam uses the standard
// bias-corrected form p' = p - lr * m_hat / (sqrt(v_hat) + eps).
std::pair<Mat, OptimState> optim_step(const Mat& params, const Mat& grads,
                                      const OptimState& state);

// In-place variant used by the training loops.
void optim_step_inplace(Mat& params, const Mat& grads, OptimState& state);

}  // namespace semlab
