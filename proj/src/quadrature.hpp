#pragma once

#include <functional>

namespace diracloc::detail {

// Adaptive Gauss-Kronrod (31 points) on [a, b]. Throws NumericalError when
// the integrand is not finite or the error estimate misses the tolerance.
double integrate(const std::function<double(double)>& f, double a, double b,
                 double rel_tol = 1e-10);

// Fixed 15-point Gauss-Kronrod on [a, b], no adaptivity.
double integrate_fixed(const std::function<double(double)>& f, double a, double b);

}  // namespace diracloc::detail
