#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "diracloc/error.hpp"
#include "diracloc/spectral.hpp"

namespace diracloc::spectral {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double safe_log(double x) { return x > 0.0 ? std::log(x) : kNegInf; }

// log sum_k exp(t_k), ignoring -inf terms.
double log_sum_exp(const std::vector<double>& t) {
  double mx = kNegInf;
  for (double x : t) mx = std::max(mx, x);
  if (mx == kNegInf) return kNegInf;
  double s = 0.0;
  for (double x : t)
    if (x != kNegInf) s += std::exp(x - mx);
  return mx + std::log(s);
}

struct Weights {
  std::vector<double> radii, rho, log_A, log_f;
};

Weights weights(const fields::FieldProfile& profile, const operators::ChannelOperator& op,
                double r_j) {
  Weights w;
  w.radii = op.radii();
  w.rho = fields::agmon_weight_at(profile, w.radii);
  w.log_A.resize(w.radii.size());
  w.log_f.resize(w.radii.size());
  for (std::size_t k = 0; k < w.radii.size(); ++k) {
    w.log_A[k] = safe_log(std::fabs(profile.A(w.radii[k])));
    w.log_f[k] = safe_log(fields::smoothstep(w.radii[k] / r_j));
  }
  return w;
}

double weighted_log_norm(const Weights& w, const std::vector<double>& log_x, double gamma) {
  std::vector<double> t(log_x.size(), kNegInf);
  for (std::size_t k = 0; k < t.size(); ++k) {
    const double s = w.log_A[k] + w.log_f[k] + log_x[k];
    if (s != kNegInf) t[k] = 2.0 * (s + gamma * w.rho[k]);
  }
  return 0.5 * log_sum_exp(t);
}

}  // namespace

std::vector<double> log_amplitude(const operators::ChannelOperator& op, const EigenPair& pair) {
  const auto& z = pair.psi;
  const std::size_t n = z.size();
  if (n != op.dim()) throw PreconditionError("eigenvector does not belong to this operator");
  std::vector<double> out(n);
  double peak = 0.0;
  for (double x : z) peak = std::max(peak, std::fabs(x));
  std::size_t anchor = 0;
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = safe_log(std::fabs(z[i]));
    if (std::fabs(z[i]) >= 1e-8 * peak) anchor = i;
  }
  if (anchor + 1 >= n) return out;

  // q_i = z_{i-1} / z_i from the wall inwards; growing inwards is the stable
  // direction in the forbidden region.
  const auto d = op.diag();
  const auto e = op.off();
  const double E = pair.E;
  std::vector<double> q(n, 0.0);
  q[n - 1] = -(d[n - 1] - E) / e[n - 2];
  for (std::size_t i = n - 2; i > anchor; --i) {
    double inner = q[i + 1];
    if (inner == 0.0) inner = std::numeric_limits<double>::min();
    q[i] = -((d[i] - E) + e[i] / inner) / e[i - 1];
  }
  for (std::size_t i = anchor + 1; i < n; ++i) {
    if (!std::isfinite(q[i]) || q[i] == 0.0) return out;  // keep the direct values
  }
  for (std::size_t i = anchor + 1; i < n; ++i) out[i] = out[i - 1] - std::log(std::fabs(q[i]));
  return out;
}

double agmon_log_norm(const fields::FieldProfile& profile, const operators::ChannelOperator& op,
                      std::span<const double> x, double gamma, double r_j) {
  if (x.size() != op.dim()) throw PreconditionError("vector does not belong to this operator");
  if (!(r_j > 0.0)) throw PreconditionError("agmon_log_norm needs r_j > 0");
  const Weights w = weights(profile, op, r_j);
  std::vector<double> lx(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) lx[k] = safe_log(std::fabs(x[k]));
  return weighted_log_norm(w, lx, gamma);
}

AgmonReport agmon_check(const fields::FieldProfile& profile, const operators::ChannelOperator& op,
                        const EigenSet& eig_set, double gamma, double delta0,
                        const AgmonOptions& opts) {
  if (!(gamma >= 0.0 && gamma < 1.0)) throw PreconditionError("agmon_check needs gamma in [0, 1)");
  if (eig_set.channel.j != op.channel().j || eig_set.grid.n != op.grid().n ||
      eig_set.grid.h != op.grid().h)
    throw PreconditionError("eigen set was computed on a different channel or grid");

  AgmonReport rep;
  rep.channel = op.channel();
  rep.gamma = gamma;
  rep.delta0 = delta0;
  rep.r_j = fields::turning_radius(profile, op.channel().m, delta0);
  rep.R_max = op.grid().R_max();
  rep.unreliable = rep.R_max < 6.0 * rep.r_j;
  rep.small_grid = rep.R_max < 2.0 * rep.r_j;
  if (rep.small_grid && !opts.allow_small_grid)
    throw PreconditionError("grid too small relative to r_j: R_max = " +
                            std::to_string(rep.R_max) + " < 2 r_j = " +
                            std::to_string(2.0 * rep.r_j) + " (channel j = " +
                            std::to_string(op.channel().j) + ")");

  const Weights w = weights(profile, op, rep.r_j);
  const double rho2 = fields::agmon_weight(profile, 2.0 * rep.r_j);
  const double log_rhs = gamma * rho2 - std::log(rep.r_j);
  rep.max_log_ratio = kNegInf;

  for (std::size_t k = 0; k < eig_set.pairs.size(); ++k) {
    const auto& pair = eig_set.pairs[k];
    const auto la = log_amplitude(op, pair);
    AgmonEntry en;
    en.k = static_cast<int>(k);
    en.E = pair.E;
    en.gamma = gamma;
    en.log_lhs = weighted_log_norm(w, la, gamma);
    en.lhs = std::exp(en.log_lhs);
    en.rhs_scale = std::exp(log_rhs);
    en.log_ratio = en.log_lhs - log_rhs;
    en.ratio = std::exp(en.log_ratio);

    // Least-squares slope of log|psi| against rho on [2 r_j, 4 r_j].
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int cnt = 0;
    for (std::size_t i = 0; i < la.size(); ++i) {
      const double r = w.radii[i];
      if (r < 2.0 * rep.r_j || r > 4.0 * rep.r_j || !std::isfinite(la[i])) continue;
      sx += w.rho[i];
      sy += la[i];
      sxx += w.rho[i] * w.rho[i];
      sxy += w.rho[i] * la[i];
      ++cnt;
    }
    en.decay_points = cnt;
    const double den = cnt * sxx - sx * sx;
    en.decay_slope = (cnt >= 2 && den > 0.0) ? (cnt * sxy - sx * sy) / den
                                             : std::numeric_limits<double>::quiet_NaN();
    rep.max_log_ratio = std::max(rep.max_log_ratio, en.log_ratio);
    rep.entries.push_back(en);
  }
  rep.max_ratio = std::exp(rep.max_log_ratio);
  return rep;
}

}  // namespace diracloc::spectral
