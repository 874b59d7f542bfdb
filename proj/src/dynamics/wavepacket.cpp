#include <algorithm>
#include <cmath>
#include <string>

#include "diracloc/dynamics.hpp"
#include "diracloc/error.hpp"
#include "diracloc/simd/kernels.hpp"

namespace diracloc::dynamics {

namespace {

// Eulerian number <p, m>: permutations of p elements with m ascents.
double eulerian(int p, int m) {
  double s = 0.0;
  double binom = 1.0;  // C(p + 1, k)
  for (int k = 0; k <= m; ++k) {
    s += ((k % 2) ? -1.0 : 1.0) * binom * std::pow(m + 1 - k, p);
    binom = binom * (p + 1 - k) / (k + 1);
  }
  return s;
}

// sum_{i >= 0} i^p x^i = x A_p(x) / (1 - x)^{p + 1}, with S_0 = 1 / (1 - x).
double power_series(int p, double x) {
  if (p == 0) return 1.0 / (1.0 - x);
  double a = 0.0;
  for (int m = p - 1; m >= 0; --m) a = a * x + eulerian(p, m);
  return x * a / std::pow(1.0 - x, p + 1);
}

// sum_{i >= 0} (i + a)^kappa x^i for integer kappa, by the binomial expansion.
double shifted_power_series(int kappa, double a, double x) {
  double s = 0.0;
  double binom = 1.0;  // C(kappa, p)
  for (int p = 0; p <= kappa; ++p) {
    s += binom * std::pow(a, kappa - p) * power_series(p, x);
    binom = binom * (kappa - p) / (p + 1);
  }
  return s;
}

// Same sum by direct accumulation until the terms stop mattering.
double shifted_power_series_direct(double kappa, double a, double x) {
  double s = 0.0;
  for (long i = 0; i < 10'000'000; ++i) {
    const double t = std::pow(i + a, kappa) * std::pow(x, static_cast<double>(i));
    s += t;
    // Stop once past the peak of the terms and they no longer register.
    const bool decreasing = std::pow((i + 1 + a) / (i + a), kappa) * x < 1.0;
    if (decreasing && t < 1e-18 * s) break;
  }
  return s;
}

void check_model(const DecaySpec& d, double kappa) {
  switch (d.model) {
    case DecayModel::geometric:
      if (!(d.q > 0.0 && d.q < 1.0))
        throw PreconditionError("geometric decay needs 0 < q < 1");
      break;
    case DecayModel::power:
      if (!(d.s > kappa + 1.0))
        throw PreconditionError("power decay needs exponent s > kappa + 1 (got s = " +
                                std::to_string(d.s) + ")");
      break;
    case DecayModel::compact:
      break;
  }
}

}  // namespace

std::string_view to_string(DecayModel m) noexcept {
  switch (m) {
    case DecayModel::geometric: return "geometric";
    case DecayModel::power: return "power";
    case DecayModel::compact: return "compact";
  }
  return "unknown";
}

DecayModel parse_decay_model(std::string_view name) {
  for (DecayModel m : {DecayModel::geometric, DecayModel::power, DecayModel::compact})
    if (name == to_string(m)) return m;
  throw PreconditionError("unknown decay model '" + std::string(name) + "'");
}

double DecaySpec::weight(int j) const {
  const double aj = std::abs(j);
  switch (model) {
    case DecayModel::geometric: return std::pow(q, aj);
    case DecayModel::power: return std::pow(1.0 + aj, -0.5 * s);
    case DecayModel::compact: return 1.0;
  }
  return 0.0;
}

RadialShape gaussian_shell(double center, double width) {
  if (!(width > 0.0)) throw PreconditionError("gaussian shell needs width > 0");
  return [center, width](double r) {
    const double x = (r - center) / width;
    return r * std::exp(-0.5 * x * x);
  };
}

double ChannelState::norm_sq() const {
  return simd::dot(re, re) + simd::dot(im, im);
}

double WavePacket::norm_sq() const {
  double s = 0.0;
  for (const auto& c : channels) s += c.norm_sq();
  return s;
}

const ChannelState* WavePacket::find(int j) const {
  auto it = std::lower_bound(channels.begin(), channels.end(), j,
                             [](const ChannelState& c, int v) { return c.channel.j < v; });
  return (it != channels.end() && it->channel.j == j) ? &*it : nullptr;
}

WavePacket build_wavepacket(const RadialShape& shape, const DecaySpec& decay, double kappa,
                            int J_max, const operators::RadialGrid& grid) {
  if (J_max < 0) throw PreconditionError("build_wavepacket needs J_max >= 0");
  if (!(kappa >= 0.0)) throw PreconditionError("build_wavepacket needs kappa >= 0");
  check_model(decay, kappa);

  WavePacket wp;
  wp.kappa = kappa;
  wp.J_max = J_max;
  wp.decay = decay;
  wp.grid = grid;
  wp.Z = 0.0;
  for (int j = -J_max; j <= J_max; ++j) wp.Z += std::pow(decay.weight(j), 2);

  const double scale = 1.0 / std::sqrt(wp.Z);
  for (int j = -J_max; j <= J_max; ++j) {
    ChannelState st;
    st.channel = operators::Channel::of(j);
    const std::size_t dim = 2 * static_cast<std::size_t>(grid.n);
    st.re.resize(dim);
    st.im.assign(dim, 0.0);
    for (std::size_t k = 0; k < dim; ++k)
      st.re[k] = shape(operators::chain_radius(st.channel, grid, k));
    const double nrm = std::sqrt(simd::dot(st.re, st.re));
    if (!(nrm > 0.0) || !std::isfinite(nrm))
      throw PreconditionError("radial shape vanishes (or is not finite) on the grid");
    st.weight = decay.weight(j) * scale;
    for (double& x : st.re) x *= st.weight / nrm;
    wp.kappa_moment += std::pow(std::abs(j), kappa) * st.norm_sq();
    wp.channels.push_back(std::move(st));
  }
  return wp;
}

MomentValue moment(const WavePacket& wp, double kappa) {
  MomentValue mv;
  std::vector<double> w;
  for (const auto& c : wp.channels) {
    w.resize(c.re.size());
    for (std::size_t k = 0; k < w.size(); ++k)
      w[k] = std::pow(operators::chain_radius(c.channel, wp.grid, k), kappa);
    const double m = simd::weighted_sum_sq(w, c.re) + simd::weighted_sum_sq(w, c.im);
    mv.per_channel.emplace_back(c.channel.j, m);
  }
  // Fixed ascending-j reduction order.
  for (const auto& [j, m] : mv.per_channel) mv.total += m;
  return mv;
}

double tail_bound(const DecaySpec& decay, double kappa, int J_max, double Z, double delta0) {
  if (!(delta0 > 0.0 && delta0 < 1.0)) throw PreconditionError("tail_bound needs delta0 in (0, 1)");
  if (J_max < 0 || !(Z > 0.0)) throw PreconditionError("tail_bound needs J_max >= 0 and Z > 0");
  check_model(decay, kappa);
  const double pre = std::pow(6.0 / delta0, kappa) / Z;
  switch (decay.model) {
    case DecayModel::compact:
      return 0.0;
    case DecayModel::geometric: {
      // Channels j = J+1+i have |m| = i + J + 3/2, channels j = -(J+1+i) have
      // |m| = i + J + 1/2, both with |c_j|^2 = x^{J+1+i}.
      const double x = decay.q * decay.q;
      const double a_pos = J_max + 1.5, a_neg = J_max + 0.5;
      const double head = std::pow(x, J_max + 1);
      const double k_int = std::round(kappa);
      double s;
      if (kappa == k_int && kappa <= 64.0) {
        const int k = static_cast<int>(k_int);
        s = shifted_power_series(k, a_pos, x) + shifted_power_series(k, a_neg, x);
      } else {
        s = shifted_power_series_direct(kappa, a_pos, x) +
            shifted_power_series_direct(kappa, a_neg, x);
      }
      return pre * head * s;
    }
    case DecayModel::power: {
      // |m_j| <= 1 + |j| and sum_{k > J} (1 + k)^{kappa - s} <= int_J^inf, twice
      // for both signs of j.
      const double e = kappa - decay.s;
      return pre * 2.0 * std::pow(1.0 + J_max, e + 1.0) / (-(e + 1.0));
    }
  }
  return 0.0;
}

double tail_bound(const WavePacket& wp, double delta0) {
  return tail_bound(wp.decay, wp.kappa, wp.J_max, wp.Z, delta0);
}

}  // namespace diracloc::dynamics
