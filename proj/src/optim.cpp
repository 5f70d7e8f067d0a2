#include "semlab/optim.hpp"

#include <cmath>

#include "semlab/errors.hpp"

namespace semlab {

OptimState make_sgd(double lr) {
    if (lr <= 0.0) throw ValidationError("make_sgd: learning rate must be positive");
    OptimState s;
    s.kind = OptimKind::sgd;
    s.lr = lr;
    return s;
}

OptimState make_adam(double lr, double beta1, double beta2, double eps) {
    if (lr <= 0.0) throw ValidationError("make_adam: learning rate must be positive");
    if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0)
        throw ValidationError("make_adam: betas must lie in [0, 1)");
    if (eps <= 0.0) throw ValidationError("make_adam: eps must be positive");
    OptimState s;
    s.kind = OptimKind::adam;
    s.lr = lr;
    s.beta1 = beta1;
    s.beta2 = beta2;
    s.eps = eps;
    return s;
}

void optim_step_inplace(Mat& params, const Mat& grads, OptimState& state) {
    require_same_shape(params, grads, "optim_step");
    state.step += 1;
    if (state.kind == OptimKind::sgd) {
        for (std::size_t i = 0; i < params.size(); ++i)
            params.data()[i] -= state.lr * grads.data()[i];
        return;
    }
    if (state.m.empty()) {
        state.m = Mat(params.rows(), params.cols());
        state.v = Mat(params.rows(), params.cols());
    }
    require_same_shape(params, state.m, "optim_step: adam moments");
    const double b1 = state.beta1, b2 = state.beta2;
    const double bc1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
    double* p = params.data();
    const double* g = grads.data();
    double* m = state.m.data();
    double* v = state.v.data();
    for (std::size_t i = 0; i < params.size(); ++i) {
        m[i] = b1 * m[i] + (1.0 - b1) * g[i];
        v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
        const double mhat = m[i] / bc1;
        const double vhat = v[i] / bc2;
        p[i] -= state.lr * mhat / (std::sqrt(vhat) + state.eps);
    }
}

std::pair<Mat, OptimState> optim_step(const Mat& params, const Mat& grads,
                                      const OptimState& state) {
    Mat p = params;
    OptimState s = state;
    optim_step_inplace(p, grads, s);
    return {std::move(p), std::move(s)};
}

}  // namespace semlab
