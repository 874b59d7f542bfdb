#pragma once
// Wave packets in the channel representation, windowed propagation, transport
// moments, truncation tail bounds and the synthesized position density.
//
// Channel amplitudes are stored as Euclidean chain vectors z = sqrt(h) phi,
// so ||phi||^2 = h sum |phi|^2 = sum |z|^2 and projections are plain dot
// products with the (Euclidean unit) eigenvectors.

#include <complex>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "diracloc/operators.hpp"
#include "diracloc/spectral.hpp"

namespace diracloc::dynamics {

enum class DecayModel { geometric, power, compact };

std::string_view to_string(DecayModel m) noexcept;
DecayModel parse_decay_model(std::string_view name);

// Unnormalised channel weights:
//   geometric  c_j = q^|j|                 (0 < q < 1)
//   power      c_j = (1 + |j|)^(-s/2)      (s > kappa + 1)
//   compact    c_j = 1 for |j| <= J_max, 0 beyond
struct DecaySpec {
  DecayModel model = DecayModel::geometric;
  double q = 0.5;
  double s = 4.0;

  double weight(int j) const;
};

using RadialShape = std::function<double(double)>;

// r exp(-(r - center)^2 / (2 width^2)); vanishes at the origin like r.
RadialShape gaussian_shell(double center, double width);

struct ChannelState {
  operators::Channel channel;
  std::vector<double> re, im;  // chain order, Euclidean scaling
  double weight = 0.0;         // normalised |c_j|

  double norm_sq() const;
};

struct WavePacket {
  double kappa = 0.0;
  int J_max = 0;
  DecaySpec decay;
  operators::RadialGrid grid;
  std::vector<ChannelState> channels;  // ascending j, -J_max..J_max
  double Z = 1.0;                      // sum of |c_j|^2 over stored channels
  double kappa_moment = 0.0;           // sum |j|^kappa ||phi_j||^2

  double norm_sq() const;
  const ChannelState* find(int j) const;
};

using EigenSets = std::map<int, spectral::EigenSet>;

// Throws PreconditionError when J_max < 0, the model is not normalisable
// (q outside (0, 1), power exponent s <= kappa + 1) or the shape vanishes.
WavePacket build_wavepacket(const RadialShape& shape, const DecaySpec& decay, double kappa,
                            int J_max, const operators::RadialGrid& grid);

// phi_j <- sum_k <psi_k, phi_j> psi_k for every channel.
WavePacket project_window(const WavePacket& wp, const EigenSets& eigsets);

// phi_j <- sum_k exp(-i E_k t) <psi_k, phi_j> psi_k; exact on the window span.
WavePacket evolve(const WavePacket& wp, const EigenSets& eigsets, double t);

struct MomentValue {
  double total = 0.0;
  std::vector<std::pair<int, double>> per_channel;  // ascending j
};

// sum_j sum_nodes r^kappa |z|^2 (= h sum r^kappa |phi|^2).
MomentValue moment(const WavePacket& wp, double kappa);

// sum_{|j| > J_max} (6 |m_j| / delta0)^kappa |c_j|^2 / Z.
double tail_bound(const WavePacket& wp, double delta0);
// Same bound for an arbitrary truncation and model (exposed for oracles).
double tail_bound(const DecaySpec& decay, double kappa, int J_max, double Z, double delta0);

// Moment of one channel along exact windowed evolution, prepared once so the
// eigenvectors can be released: M(t) = sum_kl conj(b_k) b_l G_kl with
// b_k = a_k exp(-i E_k t) and G_kl = sum_i r_i^kappa psi_k[i] psi_l[i].
class ChannelDynamics {
 public:
  ChannelDynamics(const ChannelState& state, const spectral::EigenSet& set,
                  std::span<const double> radii, double kappa);

  int j() const noexcept { return j_; }
  std::size_t size() const noexcept { return energies_.size(); }
  double projected_norm_sq() const noexcept { return norm_sq_; }
  double moment_at(double t) const;
  double norm_at(double t) const;

 private:
  int j_;
  std::vector<double> energies_;
  std::vector<std::complex<double>> coef_;
  std::vector<double> gram_;  // size() x size(), row-major
  double norm_sq_ = 0.0;
};

struct MomentSeries {
  double kappa = 0.0;
  spectral::Window window;
  std::vector<double> times;
  std::map<int, std::vector<double>> per_channel;
  std::vector<double> total;
  std::vector<double> norm;        // total norm along the evolution
  std::vector<double> time_average;  // (1/T) int_0^T M
  double tail_bound = 0.0;
  double fitted_exponent = 0.0;
  double fit_T_lo = 0.0, fit_T_hi = 0.0;
  double max_early = 0.0;          // max M over t <= T_end / 10
  double max_overall = 0.0;
  bool sup_proxy = false;          // max_overall <= 1.1 max_early
};

// Least-squares slope of log (time average) against log T over the last
// decade. Throws PreconditionError for fewer than 8 times or unsorted times.
void fit_exponent(MomentSeries& s);

MomentSeries moment_series(const std::vector<ChannelDynamics>& channels,
                           std::span<const double> times, double kappa);
MomentSeries moment_series(const WavePacket& wp, const EigenSets& eigsets,
                           std::span<const double> times, double kappa);

// Log-spaced grid of points_per_decade per decade on [t0, t1], both included.
std::vector<double> log_times(double t0, double t1, int points_per_decade = 64);

// Position-space density on the shared node set and a uniform theta grid.
// psi~ components are continuum values (z / sqrt h); psi = r^{-1/2} psi~.
struct DensityField {
  std::vector<double> r;       // ascending nodes (integer and half nodes)
  std::vector<double> weight;  // radial quadrature weight per node (h)
  std::vector<double> theta;   // 2 pi l / L
  std::vector<std::complex<double>> psi1, psi2;  // r.size() x theta.size(), row-major

  std::size_t n_theta() const noexcept { return theta.size(); }
  // |psi~|^2 at (i, l); |psi|^2 = this / r.
  double tilde_density(std::size_t i, std::size_t l) const;
  // int int g(r) |psi|^2 r dr dtheta by the node / trapezoid rule.
  double integrate(const std::function<double(double)>& g) const;
};

// Throws PreconditionError when theta_points < 4 (J_max + 1).
DensityField synthesize_density(const WavePacket& wp, int theta_points);

}  // namespace diracloc::dynamics
