#pragma once

#include <functional>

#include "semlab/mat.hpp"

namespace semlab {

// Central-difference gradient of a scalar function of a matrix argument.
// Probes f at x +/- h*e_ij per coordinate; throws NumericError if f returns a
// non-finite value at any probe point.
Mat finite_diff_grad(const std::function<double(const Mat&)>& f, const Mat& x,
                     double h = 1e-5);

// Elementwise relative error |a - f| / max(max(|a|, |f|), floor); used when
// comparing analytic gradients against finite differences.
double rel_err(double a, double b, double floor = 1e-8);
double max_rel_err(const Mat& a, const Mat& b, double floor = 1e-8);

}  // namespace semlab
