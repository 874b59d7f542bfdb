// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "diracloc/dynamics.hpp"
#include "diracloc/fields.hpp"
#include "diracloc/operators.hpp"
#include "diracloc/spectral.hpp"

using namespace diracloc;
using operators::Channel;
using operators::RadialGrid;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

fields::FieldProfile linear(double a, double lambda) {
  const double p[] = {a, lambda};
  return fields::make_profile(fields::Family::linear, p);
}

double ls_slope(const std::vector<double>& x, const std::vector<double>& y) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

Outcome landau_levels() {
  const auto t0 = Clock::now();
  const double cb[] = {1.0, 0.0};
  const auto p = fields::make_profile(fields::Family::constant_B, cb);
  const double want[] = {0.0, std::sqrt(2.0), 2.0, std::sqrt(6.0), std::sqrt(8.0)};
  double worst = 0.0;
  bool ok = true;
  for (int j = 0; j <= 3; ++j) {
    const auto op = operators::assemble_channel_matrix(p, Channel::of(j), RadialGrid{0.01, 3000});
    const auto set = spectral::eigs_in_window(op, {-1e-6, 3.0});
    if (set.N() < 5) {
      ok = false;
      continue;
    }
    // Channels j >= 0 carry the zero mode (m > 0).
    for (int k = 0; k < 5; ++k) worst = std::max(worst, std::fabs(set.pairs[k].E - want[k]));
  }
  const double secs = seconds_since(t0);
  return {ok && worst <= 1e-2 && secs <= 60.0,
          fmt("max |E - sqrt(2n)| = %.3e over j = 0..3, %.2f s", worst, secs)};
}

Outcome hermiticity_unitarity() {
  // Exact symmetry of the dense matrices.
  bool symmetric = true;
  const double cb[] = {1.0, 0.0};
  for (const auto& p : {linear(1.0, 0.3), linear(0.3, 1.0), fields::make_profile(fields::Family::constant_B, cb)})
    for (int j : {-7, -1, 0, 4}) {
      const auto op = operators::assemble_channel_matrix(p, Channel::of(j), RadialGrid{0.05, 120});
      const auto M = op.dense();
      const std::size_t n = op.dim();
      for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < a; ++b) symmetric = symmetric && M[a * n + b] == M[b * n + a];
    }

  const auto p = linear(1.0, 0.3);
  const RadialGrid g{0.01, 4000};
  const auto raw = dynamics::build_wavepacket(dynamics::gaussian_shell(0.0, 1.0),
                                              {dynamics::DecayModel::geometric, 0.5, 4}, 2.0, 4, g);
  dynamics::EigenSets sets;
  for (const auto& c : raw.channels)
    sets.emplace(c.channel.j, spectral::eigs_in_window(operators::assemble_channel_matrix(p, c.channel, g), {-2, 2}));
  const auto once = dynamics::project_window(raw, sets);
  const auto twice = dynamics::project_window(once, sets);
  double idem = 0.0;
  for (std::size_t c = 0; c < once.channels.size(); ++c)
    for (std::size_t i = 0; i < once.channels[c].re.size(); ++i)
      idem = std::max({idem, std::fabs(once.channels[c].re[i] - twice.channels[c].re[i]),
                       std::fabs(once.channels[c].im[i] - twice.channels[c].im[i])});

  const double n0 = once.norm_sq();
  double drift = 0.0;
  for (double t = 0.0; t <= 200.0; t += 12.5)
    drift = std::max(drift, std::fabs(dynamics::evolve(once, sets, t).norm_sq() - n0));
  return {symmetric && drift <= 1e-10 && idem <= 1e-12,
          fmt("symmetric=%s, norm drift %.2e on [0, 200], idempotence %.2e", symmetric ? "exact" : "NO", drift, idem)};
}

Outcome turning_radii() {
  double worst = 0.0;
  for (double delta0 : {0.1, 0.5})
    for (double m = 0.5; m <= 40.5; m += 1.0) {
      const double closed = std::sqrt(m / delta0);
      for (double sm : {m, -m})
        worst = std::max(worst, std::fabs(fields::turning_radius(linear(1.0, 0.3), sm, delta0) - closed) / closed);
    }
  return {worst <= 1e-10, fmt("max relative error %.2e for |m| = 0.5..40.5, delta0 in {0.1, 0.5}", worst)};
}

Outcome bargmann() {
  const auto t0 = Clock::now();
  const auto p = linear(1.0, 0.3);
  const RadialGrid g{0.01, 4000};
  std::vector<double> lx, ly;
  bool dominated = true;
  std::string rows;
  for (int j = 5; j <= 40; j += 5) {
    const auto op = operators::assemble_channel_matrix(p, Channel::of(j), g);
    const auto b = spectral::bargmann_report(p, op, 2.0, 0.9);
    dominated = dominated && static_cast<double>(*b.N_numeric) <= b.bound;
    lx.push_back(std::log(b.channel.m));
    ly.push_back(std::log(b.ratio()));
    rows += fmt(" %g:%lld/%.0f", b.channel.m, static_cast<long long>(*b.N_numeric), b.bound);
  }
  const double slope = ls_slope(lx, ly);
  const double secs = seconds_since(t0);
  return {dominated && slope <= 0.05 && secs <= 300.0,
          fmt("N <= bound for all m (m:N/bound%s); ratio log-log slope %.3f; %.1f s", rows.c_str(), slope, secs)};
}

Outcome agmon() {
  const auto p = linear(1.0, 0.3);
  const auto g = RadialGrid::covering(90.0, 0.015);
  std::vector<double> xj, ylog;
  double worst_decay = -INFINITY;
  bool reliable = true;
  int eigfns = 0;
  for (int j = 2; j <= 20; ++j) {
    const auto op = operators::assemble_channel_matrix(p, Channel::of(j), g);
    const auto set = spectral::eigs_in_window(op, {-2.0, 2.0});
    const auto rep = spectral::agmon_check(p, op, set, 0.1, 0.1);
    reliable = reliable && !rep.unreliable;
    if (rep.entries.empty()) continue;
    xj.push_back(j);
    ylog.push_back(rep.max_log_ratio);
    for (const auto& e : rep.entries) {
      worst_decay = std::max(worst_decay, e.decay_slope);
      ++eigfns;
    }
  }
  const double trend = ls_slope(xj, ylog);
  return {reliable && trend <= 0.0 && worst_decay <= -0.1,
          fmt("log max-ratio slope in j %.3f over %zu channels; max decay slope against rho %.3f (need <= -0.1) over %d eigenfunctions",
              trend, xj.size(), worst_decay, eigfns)};
}

// Normalised windowed moment series for a geometric J_max = 20 packet.
dynamics::MomentSeries transport(const fields::FieldProfile& p, double R, double h, double t1) {
  const auto g = RadialGrid::covering(R, h);
  const auto wp = dynamics::build_wavepacket(dynamics::gaussian_shell(0.0, 1.0),
                                             {dynamics::DecayModel::geometric, 0.5, 4}, 2.0, 20, g);
  std::vector<dynamics::ChannelDynamics> dyn;
  double projected = 0.0;
  for (const auto& c : wp.channels) {
    const auto op = operators::assemble_channel_matrix(p, c.channel, g);
    const auto set = spectral::eigs_in_window(op, {-2.0, 2.0});
    dyn.emplace_back(c, set, op.radii(), 2.0);
    projected += dyn.back().projected_norm_sq();
  }
  const auto times = dynamics::log_times(0.1, t1, 64);
  auto s = dynamics::moment_series(dyn, times, 2.0);
  for (double& x : s.total) x /= projected;
  dynamics::fit_exponent(s);
  return s;
}

double max_rel_change(const dynamics::MomentSeries& a, const dynamics::MomentSeries& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.total.size(); ++i) d = std::max(d, std::fabs(a.total[i] - b.total[i]) / b.total[i]);
  return d;
}

Outcome dichotomy() {
  const auto t0 = Clock::now();
  const auto loc = linear(1.0, 0.3);
  const auto deloc = linear(0.3, 1.0);
  const auto l1 = transport(loc, 40.0, 0.01, 200.0);
  const auto l2 = transport(loc, 40.0, 0.005, 200.0);
  const auto d1 = transport(deloc, 55.0, 0.005, 40.0);
  const auto d2 = transport(deloc, 55.0, 0.0025, 40.0);
  // Boundedness proxy: running max settles (overall max within 10% of the
  // max over the first tenth of the horizon).
  double early20 = 0.0;
  for (std::size_t i = 0; i < l1.times.size(); ++i)
    if (l1.times[i] <= 20.0) early20 = std::max(early20, l1.total[i]);
  const double dl = max_rel_change(l1, l2), dd = max_rel_change(d1, d2);
  const bool ok = l1.fitted_exponent <= 0.3 && l1.sup_proxy && l1.max_overall <= 1.5 * early20 &&
                  d1.fitted_exponent >= 1.5 && dl < 0.01 && dd < 0.01;
  return {ok, fmt("localized exponent %.3f (sup proxy %s, max/max_early %.3f); delocalized exponent %.3f "
                  "(horizon 40); grid doubling %.2e / %.2e; %.0f s",
                  l1.fitted_exponent, l1.sup_proxy ? "stable" : "growing", l1.max_overall / l1.max_early,
                  d1.fitted_exponent, dl, dd, seconds_since(t0))};
}

Outcome decomposition() {
  const auto p = linear(1.0, 0.3);
  const RadialGrid g{0.01, 3000};
  const auto raw = dynamics::build_wavepacket(dynamics::gaussian_shell(0.5, 1.0),
                                              {dynamics::DecayModel::geometric, 0.5, 4}, 2.0, 8, g);
  dynamics::EigenSets sets;
  for (const auto& c : raw.channels)
    sets.emplace(c.channel.j, spectral::eigs_in_window(operators::assemble_channel_matrix(p, c.channel, g), {-2, 2}));
  double worst = 0.0;
  for (double t : {0.0, 7.5}) {
    const auto wp = t == 0.0 ? raw : dynamics::evolve(dynamics::project_window(raw, sets), sets, t);
    const double chan = dynamics::moment(wp, 2.0).total;
    const auto dens = dynamics::synthesize_density(wp, 64);
    const double quad = dens.integrate([](double r) { return r * r; });
    worst = std::max(worst, std::fabs(chan - quad) / chan);
  }
  return {worst <= 1e-6, fmt("max relative gap channel vs polar quadrature %.2e (J_max = 8, t in {0, 7.5})", worst)};
}

Outcome tails() {
  const dynamics::DecaySpec geo{dynamics::DecayModel::geometric, 0.5, 4};
  double worst = 0.0;
  for (double kappa : {1.0, 2.0, 2.5, 3.0})
    for (int J : {5, 20}) {
      double Z = 0.0;
      for (int j = -J; j <= J; ++j) Z += std::pow(0.25, std::abs(j));
      long double direct = 0.0L;
      for (int i = 1; i <= 200; ++i)
        for (int j : {J + i, -(J + i)})
          direct += std::pow(6.0L * std::fabs(j + 0.5L) / 0.5L, static_cast<long double>(kappa)) *
                    std::pow(0.25L, static_cast<long double>(std::abs(j)));
      const double closed = dynamics::tail_bound(geo, kappa, J, Z, 0.5);
      worst = std::max(worst, static_cast<double>(std::fabs(closed - direct / Z) / (direct / Z)));
    }

  // Moment of the truncated packet plus the tail bound, all at the full
  // normalisation, is nonincreasing as J_max grows: each step swaps a bound
  // for the channel's actual moment.
  const RadialGrid g{0.01, 2000};
  double Z_full = 0.0;
  for (int j = -200; j <= 200; ++j) Z_full += std::pow(0.25, std::abs(j));
  bool monotone = true;
  double prev = INFINITY;
  std::string seq;
  for (int J = 0; J <= 20; ++J) {
    const auto wp = dynamics::build_wavepacket(dynamics::gaussian_shell(0.0, 1.0), geo, 2.0, J, g);
    const double total = dynamics::moment(wp, 2.0).total * wp.Z / Z_full + dynamics::tail_bound(geo, 2.0, J, Z_full, 0.5);
    monotone = monotone && total <= prev;
    if (J % 5 == 0) seq += fmt(" J=%d:%.6g", J, total);
    prev = total;
  }
  return {worst <= 1e-10 && monotone,
          fmt("closed form vs 200-term sum max rel %.2e; moment + tail nonincreasing in J_max:%s", worst, seq.c_str())};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"landau-levels", landau_levels},
      {"hermiticity-unitarity", hermiticity_unitarity},
      {"turning-radius", turning_radii},
      {"bargmann-count-bound", bargmann},
      {"agmon-decay", agmon},
      {"localization-dichotomy", dichotomy},
      {"decomposition-identity", decomposition},
      {"tail-bound", tails},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%s %zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str());
    std::fflush(stdout);
  }
  return failed ? 1 : 0;
}
