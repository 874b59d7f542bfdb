#include <cmath>
#include <numbers>
#include <string>

#include "diracloc/dynamics.hpp"
#include "diracloc/error.hpp"

namespace diracloc::dynamics {

double DensityField::tilde_density(std::size_t i, std::size_t l) const {
  const std::size_t idx = i * n_theta() + l;
  return std::norm(psi1[idx]) + std::norm(psi2[idx]);
}

double DensityField::integrate(const std::function<double(double)>& g) const {
  const double dtheta = 2.0 * std::numbers::pi / static_cast<double>(n_theta());
  double total = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    double ring = 0.0;
    for (std::size_t l = 0; l < n_theta(); ++l) ring += tilde_density(i, l);
    if (ring != 0.0) total += weight[i] * dtheta * g(r[i]) * ring;
  }
  return total;
}

DensityField synthesize_density(const WavePacket& wp, int theta_points) {
  if (theta_points < 4 * (wp.J_max + 1))
    throw PreconditionError("theta grid undersampled: need at least " +
                            std::to_string(4 * (wp.J_max + 1)) + " points, got " +
                            std::to_string(theta_points));
  const auto& grid = wp.grid;
  const std::size_t L = static_cast<std::size_t>(theta_points);
  // Node q sits at r = q h / 2: odd q are half nodes (upper component), even
  // q integer nodes (lower component), q = 0..2n.
  const std::size_t Q = 2 * static_cast<std::size_t>(grid.n) + 1;

  DensityField f;
  f.r.resize(Q);
  f.weight.assign(Q, grid.h);
  for (std::size_t q = 0; q < Q; ++q) f.r[q] = 0.5 * static_cast<double>(q) * grid.h;
  f.theta.resize(L);
  for (std::size_t l = 0; l < L; ++l)
    f.theta[l] = 2.0 * std::numbers::pi * static_cast<double>(l) / static_cast<double>(L);
  f.psi1.assign(Q * L, 0.0);
  f.psi2.assign(Q * L, 0.0);

  const double pref = 1.0 / std::sqrt(2.0 * std::numbers::pi * grid.h);
  const std::complex<double> minus_i(0.0, -1.0);
  std::vector<std::complex<double>> phase(L);
  for (const auto& c : wp.channels) {
    const int j = c.channel.j;
    const bool upper_first = c.channel.m > 0.0;
    for (std::size_t k = 0; k < c.re.size(); ++k) {
      const std::size_t q = upper_first ? k + 1 : k;
      const std::complex<double> a(c.re[k], c.im[k]);
      if (a == 0.0) continue;
      const bool upper = (q % 2) == 1;
      const int freq = upper ? j : j + 1;
      const std::complex<double> amp = pref * (upper ? a : minus_i * a);
      auto* row = (upper ? f.psi1.data() : f.psi2.data()) + q * L;
      for (std::size_t l = 0; l < L; ++l) row[l] += amp * std::polar(1.0, freq * f.theta[l]);
    }
  }
  return f;
}

}  // namespace diracloc::dynamics
