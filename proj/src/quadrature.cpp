#include "quadrature.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <limits>
#include <string>

#include "diracloc/error.hpp"

namespace diracloc::detail {

double integrate(const std::function<double(double)>& f, double a, double b, double rel_tol) {
  if (a == b) return 0.0;
  double err = 0.0;
  double l1 = 0.0;
  const double value = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
      f, a, b, 20, rel_tol, &err, &l1);
  if (!std::isfinite(value))
    throw NumericalError("quadrature: integrand not finite on [" + std::to_string(a) + ", " +
                         std::to_string(b) + "]");
  // Absolute floor so integrals that cancel to ~0 do not spuriously fail.
  const double floor = 64 * std::numeric_limits<double>::epsilon() * l1;
  if (err > rel_tol * std::fabs(value) * 10 && err > floor && err > rel_tol * l1)
    throw NumericalError("quadrature: no convergence on [" + std::to_string(a) + ", " +
                         std::to_string(b) + "], error estimate " + std::to_string(err));
  return value;
}

double integrate_fixed(const std::function<double(double)>& f, double a, double b) {
  if (a == b) return 0.0;
  return boost::math::quadrature::gauss_kronrod<double, 15>::integrate(f, a, b, 0);
}

}  // namespace diracloc::detail
