#include <algorithm>
#include <cmath>
#include <string>

#include "diracloc/dynamics.hpp"
#include "diracloc/error.hpp"
#include "diracloc/simd/kernels.hpp"

namespace diracloc::dynamics {

namespace {

const spectral::EigenSet& set_for(const EigenSets& sets, const ChannelState& c,
                                  const operators::RadialGrid& grid) {
  auto it = sets.find(c.channel.j);
  if (it == sets.end())
    throw PreconditionError("no eigen set for channel j = " + std::to_string(c.channel.j));
  const auto& s = it->second;
  if (s.grid.n != grid.n || s.grid.h != grid.h)
    throw PreconditionError("grid mismatch between packet and eigenvectors (channel j = " +
                            std::to_string(c.channel.j) + ")");
  return s;
}

// phi <- sum_k phase_k <psi_k, phi> psi_k
ChannelState rebuild(const ChannelState& c, const spectral::EigenSet& s, double t) {
  ChannelState out;
  out.channel = c.channel;
  out.weight = c.weight;
  out.re.assign(c.re.size(), 0.0);
  out.im.assign(c.im.size(), 0.0);
  for (const auto& p : s.pairs) {
    if (p.psi.size() != c.re.size())
      throw PreconditionError("eigenvector length does not match the packet");
    const std::complex<double> a(simd::dot(p.psi, c.re), simd::dot(p.psi, c.im));
    const std::complex<double> b = (t == 0.0) ? a : a * std::polar(1.0, -p.E * t);
    simd::axpy(b.real(), p.psi, out.re);
    simd::axpy(b.imag(), p.psi, out.im);
  }
  return out;
}

WavePacket apply_all(const WavePacket& wp, const EigenSets& sets, double t) {
  WavePacket out = wp;
  for (std::size_t i = 0; i < wp.channels.size(); ++i)
    out.channels[i] = rebuild(wp.channels[i], set_for(sets, wp.channels[i], wp.grid), t);
  return out;
}

}  // namespace

WavePacket project_window(const WavePacket& wp, const EigenSets& eigsets) {
  return apply_all(wp, eigsets, 0.0);
}

WavePacket evolve(const WavePacket& wp, const EigenSets& eigsets, double t) {
  return apply_all(wp, eigsets, t);
}

ChannelDynamics::ChannelDynamics(const ChannelState& state, const spectral::EigenSet& set,
                                 std::span<const double> radii, double kappa)
    : j_(state.channel.j) {
  if (set.channel.j != state.channel.j)
    throw PreconditionError("eigen set and state belong to different channels");
  if (radii.size() != state.re.size())
    throw PreconditionError("radii do not match the channel dimension");
  const std::size_t K = set.pairs.size();
  energies_.resize(K);
  coef_.resize(K);
  gram_.assign(K * K, 0.0);
  std::vector<double> w(radii.size());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = std::pow(radii[i], kappa);
  for (std::size_t k = 0; k < K; ++k) {
    const auto& psi = set.pairs[k].psi;
    energies_[k] = set.pairs[k].E;
    coef_[k] = {simd::dot(psi, state.re), simd::dot(psi, state.im)};
    norm_sq_ += std::norm(coef_[k]);
  }
  for (std::size_t k = 0; k < K; ++k)
    for (std::size_t l = 0; l <= k; ++l)
      gram_[k * K + l] = gram_[l * K + k] =
          simd::weighted_dot(w, set.pairs[k].psi, set.pairs[l].psi);
}

double ChannelDynamics::moment_at(double t) const {
  const std::size_t K = size();
  std::vector<std::complex<double>> b(K);
  for (std::size_t k = 0; k < K; ++k) b[k] = coef_[k] * std::polar(1.0, -energies_[k] * t);
  double m = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    m += std::norm(b[k]) * gram_[k * K + k];
    double off = 0.0;
    for (std::size_t l = 0; l < k; ++l)
      off += (std::conj(b[k]) * b[l]).real() * gram_[k * K + l];
    m += 2.0 * off;
  }
  return m;
}

double ChannelDynamics::norm_at(double t) const {
  // Eigenphases have unit modulus; recomputed to expose rounding drift.
  double s = 0.0;
  for (std::size_t k = 0; k < size(); ++k)
    s += std::norm(coef_[k] * std::polar(1.0, -energies_[k] * t));
  return s;
}

std::vector<double> log_times(double t0, double t1, int points_per_decade) {
  if (!(t0 > 0.0) || !(t1 > t0) || points_per_decade < 1)
    throw PreconditionError("log_times needs 0 < t0 < t1 and points_per_decade >= 1");
  const int n = std::max(2, static_cast<int>(std::ceil(std::log10(t1 / t0) * points_per_decade)) + 1);
  std::vector<double> t(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    t[static_cast<std::size_t>(i)] = t0 * std::pow(t1 / t0, static_cast<double>(i) / (n - 1));
  t.front() = t0;
  t.back() = t1;
  return t;
}

void fit_exponent(MomentSeries& s) {
  const auto& t = s.times;
  if (t.size() < 8) throw PreconditionError("exponent fit needs at least 8 time points");
  for (std::size_t i = 0; i < t.size(); ++i)
    if (!(t[i] >= 0.0) || (i && !(t[i] > t[i - 1])))
      throw PreconditionError("times must be nonnegative and strictly increasing");

  // Running average (1/T) int_0^T M with M taken constant on [0, t_0].
  s.time_average.assign(t.size(), 0.0);
  double integral = s.total[0] * t[0];
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (i) integral += 0.5 * (s.total[i] + s.total[i - 1]) * (t[i] - t[i - 1]);
    s.time_average[i] = t[i] > 0.0 ? integral / t[i] : s.total[i];
  }

  const double T_end = t.back();
  s.fit_T_hi = T_end;
  s.fit_T_lo = T_end / 10.0;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] < s.fit_T_lo || !(t[i] > 0.0) || !(s.time_average[i] > 0.0)) continue;
    const double x = std::log(t[i]), y = std::log(s.time_average[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++n;
  }
  if (n < 2) throw PreconditionError("exponent fit needs at least 2 times in the last decade");
  const double den = n * sxx - sx * sx;
  s.fitted_exponent = den > 0.0 ? (n * sxy - sx * sy) / den : 0.0;

  s.max_early = 0.0;
  s.max_overall = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    s.max_overall = std::max(s.max_overall, s.total[i]);
    if (t[i] <= T_end / 10.0) s.max_early = std::max(s.max_early, s.total[i]);
  }
  s.sup_proxy = s.max_overall <= 1.1 * s.max_early;
}

MomentSeries moment_series(const std::vector<ChannelDynamics>& channels,
                           std::span<const double> times, double kappa) {
  MomentSeries s;
  s.kappa = kappa;
  s.times.assign(times.begin(), times.end());
  if (s.times.size() < 8) throw PreconditionError("exponent fit needs at least 8 time points");
  s.total.assign(s.times.size(), 0.0);
  s.norm.assign(s.times.size(), 0.0);
  std::vector<const ChannelDynamics*> order;
  for (const auto& c : channels) order.push_back(&c);
  std::sort(order.begin(), order.end(),
            [](const ChannelDynamics* a, const ChannelDynamics* b) { return a->j() < b->j(); });
  for (const auto* c : order) {
    auto& col = s.per_channel[c->j()];
    col.resize(s.times.size());
    for (std::size_t i = 0; i < s.times.size(); ++i) {
      if (s.times[i] < 0.0) throw PreconditionError("times must be nonnegative");
      col[i] = c->moment_at(s.times[i]);
      s.norm[i] += c->norm_at(s.times[i]);
    }
  }
  // Ascending-j reduction.
  for (const auto& [j, col] : s.per_channel)
    for (std::size_t i = 0; i < s.times.size(); ++i) s.total[i] += col[i];
  fit_exponent(s);
  return s;
}

MomentSeries moment_series(const WavePacket& wp, const EigenSets& eigsets,
                           std::span<const double> times, double kappa) {
  std::vector<ChannelDynamics> dyn;
  for (const auto& c : wp.channels) {
    const auto& set = set_for(eigsets, c, wp.grid);
    std::vector<double> radii(c.re.size());
    for (std::size_t k = 0; k < radii.size(); ++k)
      radii[k] = operators::chain_radius(c.channel, wp.grid, k);
    dyn.emplace_back(c, set, radii, kappa);
  }
  auto s = moment_series(dyn, times, kappa);
  if (!eigsets.empty()) s.window = eigsets.begin()->second.window;
  return s;
}

}  // namespace diracloc::dynamics
