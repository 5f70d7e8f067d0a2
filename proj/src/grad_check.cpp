#include "semlab/grad_check.hpp"

#include <algorithm>
#include <cmath>

#include "semlab/errors.hpp"

namespace semlab {

Mat finite_diff_grad(const std::function<double(const Mat&)>& f, const Mat& x, double h) {
    if (h <= 0.0) throw ValidationError("finite_diff_grad: h must be positive");
    Mat g(x.rows(), x.cols());
    Mat probe = x;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double orig = probe.data()[i];
        probe.data()[i] = orig + h;
        const double fp = f(probe);
        probe.data()[i] = orig - h;
        const double fm = f(probe);
        probe.data()[i] = orig;
        if (!std::isfinite(fp) || !std::isfinite(fm))
            throw NumericError("finite_diff_grad: non-finite f at probe point");
        g.data()[i] = (fp - fm) / (2.0 * h);
    }
    return g;
}

double rel_err(double a, double b, double floor) {
    const double denom = std::max(std::max(std::fabs(a), std::fabs(b)), floor);
    return std::fabs(a - b) / denom;
}

double max_rel_err(const Mat& a, const Mat& b, double floor) {
    require_same_shape(a, b, "max_rel_err");
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        worst = std::max(worst, rel_err(a.data()[i], b.data()[i], floor));
    return worst;
}

}  // namespace semlab
