#pragma once

#include <functional>

namespace qdet {

// Scaled complementary error function exp(x^2) erfc(x), accurate for all x
// where the result is representable.
double erfcx(double x);

// Standard normal CDF and its inverse (Wichura's PPND16 algorithm).
double normal_cdf(double x);
double inverse_normal_cdf(double u);

// Adaptive Simpson quadrature. rel_tol is relative to the running estimate,
// abs_tol an absolute floor; depth limits recursion.
double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double rel_tol = 1e-13, double abs_tol = 0.0, int max_depth = 60);

}  // namespace qdet
