#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "diracloc/error.hpp"
#include "diracloc/spectral.hpp"
#include "quadrature.hpp"

namespace diracloc::spectral {

namespace {

// Refines a change of pred between a (pred == pa) and b to full precision.
template <class Pred>
double bisect_change(Pred pred, double a, double b) {
  const bool pa = pred(a);
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (a + b);
    if (mid <= a || mid >= b) break;
    (pred(mid) == pa ? a : b) = mid;
  }
  return 0.5 * (a + b);
}

// Largest r below the ceiling where positivity fails; 0 when it never does.
double positivity_ball(const fields::FieldProfile& p, double eps, double delta, double ceiling) {
  auto fails = [&](double r) {
    const double a = p.A(r), v = p.V(r);
    return delta * a * a - std::fabs(p.dA(r)) <= 0.0 || eps * a * a - v * v / eps <= 0.0;
  };
  if (fails(ceiling))
    throw NumericalError("bargmann: positivity fails up to r = " + std::to_string(ceiling) +
                         " (profile violates con0-con2 on the probed range)");
  constexpr double kStep = 1.02;
  double hi = ceiling;
  double lo = ceiling / kStep;
  while (!fails(lo)) {
    hi = lo;
    lo /= kStep;
    if (lo < 1e-12) return 0.0;
  }
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (fails(mid) ? lo : hi) = mid;
  }
  return lo;
}

}  // namespace

double BargmannEntry::ratio() const {
  if (!N_numeric) return std::numeric_limits<double>::quiet_NaN();
  const double am = std::fabs(channel.m);
  return static_cast<double>(*N_numeric) / (am * std::log(am));
}

double default_bargmann_eps(double con1_limsup) {
  if (!(con1_limsup >= 0.0 && con1_limsup < 1.0))
    throw PreconditionError("default Bargmann eps needs limsup |V/A| < 1");
  return std::max(0.9, 0.5 * (1.0 + con1_limsup * con1_limsup));
}

BargmannEntry bargmann_bound(const fields::FieldProfile& profile, const operators::Channel& ch,
                             double E, double eps) {
  const double am = std::fabs(ch.m);
  if (!(am > 1.0)) throw PreconditionError("bargmann_bound needs |m| > 1");
  if (!(eps > 0.0 && eps < 1.0)) throw PreconditionError("bargmann_bound needs eps in (0, 1)");
  if (!(E >= 0.0) || !std::isfinite(E)) throw PreconditionError("bargmann_bound needs E >= 0");

  BargmannEntry b;
  b.channel = ch;
  b.E = E;
  b.eps = eps;
  b.delta = 0.5 * (1.0 - eps);
  const double q = 0.25 * b.delta;
  b.R_j = fields::turning_radius(profile, ch.m, q);

  b.ball_radius = positivity_ball(profile, eps, b.delta, std::max(1e3, 10.0 * b.R_j));
  if (b.ball_radius > 0.0) {
    constexpr int kSamples = 2000;
    for (int i = 1; i <= kSamples; ++i) {
      const double r = b.ball_radius * i / kSamples;
      const double v = profile.V(r);
      b.C = std::max(b.C, v * v / eps + std::fabs(profile.dA(r)));
    }
  }

  const double K = b.C + E * E / (1.0 - eps);
  auto in_D = [&](double r) { return am >= q * r * std::fabs(profile.A(r)); };
  auto W = [&](double r) {
    const double a = std::fabs(profile.A(r));
    return (in_D(r) ? b.delta * a * a - 2.0 * am * a / r : 0.0) - K;
  };

  // Breakpoints: changes of D membership, then sign changes of W^< inside
  // each piece, where it is continuous.
  constexpr int kScan = 4000;
  std::vector<double> pieces{0.0};
  double prev_r = b.R_j * 1e-9;
  bool prev_d = in_D(prev_r);
  for (int i = 1; i <= kScan; ++i) {
    const double r = b.R_j * i / kScan;
    const bool d = in_D(r);
    if (d != prev_d) pieces.push_back(bisect_change(in_D, prev_r, r));
    prev_r = r;
    prev_d = d;
  }
  pieces.push_back(b.R_j);
  std::vector<double> cuts;
  auto positive = [&](double r) { return W(r) >= 0.0; };
  for (std::size_t i = 0; i + 1 < pieces.size(); ++i) {
    const double a = pieces[i], c = pieces[i + 1];
    cuts.push_back(a);
    constexpr int kSub = 256;
    double ra = a + (c - a) * 1e-9;
    bool sa = positive(ra);
    for (int k = 1; k <= kSub; ++k) {
      const double rb = a + (c - a) * k / kSub * (1.0 - 1e-12);
      const bool sb = positive(rb);
      if (sb != sa) cuts.push_back(bisect_change(positive, ra, rb));
      ra = rb;
      sa = sb;
    }
  }
  cuts.push_back(b.R_j);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double a = cuts[i], c = cuts[i + 1];
    if (in_D(0.5 * (a + c))) b.D_measure += c - a;
    b.integral += detail::integrate([&](double r) { return r * std::fabs(W(r)); }, a, c);
  }
  b.bound = b.integral / (am - 0.5);

  double A_inf = 0.0;
  for (int i = 1; i <= 1000; ++i) A_inf = std::max(A_inf, std::fabs(profile.A(i / 1000.0)));
  b.majorant = (K * b.R_j * b.R_j / 2.0 + 2.0 * am * A_inf +
                (8.0 * am * am / b.delta) * std::max(0.0, std::log(b.R_j))) /
               (am - 0.5);
  return b;
}

BargmannEntry bargmann_report(const fields::FieldProfile& profile,
                              const operators::ChannelOperator& op, double E, double eps) {
  BargmannEntry b = bargmann_bound(profile, op.channel(), E, eps);
  b.N_numeric = count_in_window(op, E);
  return b;
}

}  // namespace diracloc::spectral
