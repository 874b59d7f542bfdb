#include "diracloc/fields.hpp"

#include <math.h>  // Boost 1.74 pchip calls unqualified isnan

#include <algorithm>
#include <boost/math/interpolators/pchip.hpp>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "diracloc/error.hpp"
#include "quadrature.hpp"

namespace diracloc::fields {

namespace {

std::shared_ptr<const RadialFn> share(RadialFn f) {
  if (!f) return nullptr;
  return std::make_shared<const RadialFn>(std::move(f));
}

RadialFn centered_difference(RadialFn f) {
  return [f = std::move(f)](double r) {
    double h = 1e-5 * std::max(1.0, std::fabs(r));
    if (r > 0.0) h = std::min(h, 0.5 * r);
    return (f(r + h) - f(r - h)) / (2.0 * h);
  };
}

void require_count(std::span<const double> params, std::size_t lo, std::size_t hi,
                   std::string_view family) {
  if (params.size() < lo || params.size() > hi) {
    std::ostringstream os;
    os << "family '" << family << "' takes " << lo;
    if (hi != lo) os << ".." << hi;
    os << " parameters, got " << params.size();
    throw PreconditionError(os.str());
  }
  for (double p : params)
    if (!std::isfinite(p)) throw PreconditionError("non-finite profile parameter");
}

// Least-squares slope of y against x.
double ls_slope(std::span<const double> x, std::span<const double> y) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxx > 0.0 ? sxy / sxx : 0.0;
}

// |f| nondecreasing and growing like a positive power on the given probes.
bool grows_without_bound(std::span<const double> r, std::span<const double> absf, double margin,
                         double* slope_out) {
  if (r.size() < 2) return false;
  std::vector<double> lr, lf;
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (!(absf[i] > 0.0) || !std::isfinite(absf[i])) {
      if (slope_out) *slope_out = 0.0;
      return false;
    }
    lr.push_back(std::log(r[i]));
    lf.push_back(std::log(absf[i]));
  }
  for (std::size_t i = 1; i < absf.size(); ++i)
    if (absf[i] < absf[i - 1] * (1.0 - 1e-12)) {
      if (slope_out) *slope_out = ls_slope(lr, lf);
      return false;
    }
  const double s = ls_slope(lr, lf);
  if (slope_out) *slope_out = s;
  return s >= margin;
}

}  // namespace

std::string_view to_string(Family f) noexcept {
  switch (f) {
    case Family::power: return "power";
    case Family::linear: return "linear";
    case Family::constant_B: return "constant_B";
    case Family::tabulated: return "tabulated";
    case Family::composite: return "composite";
    case Family::custom: return "custom";
  }
  return "unknown";
}

Family parse_family(std::string_view name) {
  for (Family f : {Family::power, Family::linear, Family::constant_B, Family::tabulated,
                   Family::composite, Family::custom})
    if (name == to_string(f)) return f;
  throw PreconditionError("unknown profile family '" + std::string(name) + "'");
}

std::string_view to_string(Regime r) noexcept {
  switch (r) {
    case Regime::localized: return "localized";
    case Regime::delocalized: return "delocalized";
    case Regime::indeterminate: return "indeterminate";
  }
  return "unknown";
}

Regime parse_regime(std::string_view name) {
  for (Regime r : {Regime::localized, Regime::delocalized, Regime::indeterminate})
    if (name == to_string(r)) return r;
  throw PreconditionError("unknown regime '" + std::string(name) + "'");
}

FieldProfile::FieldProfile(Family family, std::vector<double> params, RadialFn A, RadialFn V,
                           RadialFn dA, RadialFn B)
    : family_(family), params_(std::move(params)) {
  if (!A || !V) throw PreconditionError("profile needs both A and V");
  if (!dA) dA = centered_difference(A);
  a_ = share(std::move(A));
  v_ = share(std::move(V));
  da_ = share(std::move(dA));
  b_ = share(std::move(B));
}

FieldProfile FieldProfile::custom(RadialFn A, RadialFn V, RadialFn dA, RadialFn B) {
  return FieldProfile(Family::custom, {}, std::move(A), std::move(V), std::move(dA),
                      std::move(B));
}

double FieldProfile::B(double r) const {
  if (!b_) throw PreconditionError("profile has no magnetic field attached");
  return (*b_)(r);
}

FieldProfile FieldProfile::shifted(double c) const {
  FieldProfile out = *this;
  auto v = v_;
  out.v_ = share([v, c](double r) { return (*v)(r) + c; });
  return out;
}

std::string FieldProfile::describe() const {
  std::ostringstream os;
  os << to_string(family_) << '(';
  for (std::size_t i = 0; i < params_.size(); ++i) os << (i ? ", " : "") << params_[i];
  os << ')';
  return os.str();
}

FieldProfile make_profile(Family family, std::span<const double> params) {
  std::vector<double> p(params.begin(), params.end());
  switch (family) {
    case Family::linear: {
      require_count(params, 2, 2, "linear");
      const double a = p[0], lam = p[1];
      return FieldProfile(
          family, p, [a](double r) { return a * r; }, [lam](double r) { return lam * r; },
          [a](double) { return a; }, [a](double) { return 2.0 * a; });
    }
    case Family::power: {
      require_count(params, 2, 4, "power");
      const double a = p[0], e = p[1];
      if (!(e > 0.0)) throw PreconditionError("power family needs exponent p > 0");
      const double lam = p.size() > 2 ? p[2] : 0.0;
      const double q = p.size() > 3 ? p[3] : e;
      return FieldProfile(
          family, p, [a, e](double r) { return a * std::pow(r, e); },
          [lam, q](double r) { return lam == 0.0 ? 0.0 : lam * std::pow(r, q); },
          [a, e](double r) { return a * e * std::pow(r, e - 1.0); },
          [a, e](double r) { return a * (e + 1.0) * std::pow(r, e - 1.0); });
    }
    case Family::constant_B: {
      require_count(params, 1, 2, "constant_B");
      const double b = p[0];
      const double v0 = p.size() > 1 ? p[1] : 0.0;
      return FieldProfile(
          family, p, [b](double r) { return 0.5 * b * r; }, [v0](double) { return v0; },
          [b](double) { return 0.5 * b; }, [b](double) { return b; });
    }
    case Family::tabulated:
      throw PreconditionError("tabulated profiles are built from samples (make_tabulated)");
    case Family::composite:
      throw PreconditionError("composite profiles are built from parts (make_composite)");
    case Family::custom:
      throw PreconditionError("custom profiles are built from callables");
  }
  throw PreconditionError("unknown profile family");
}

namespace {

// PCHIP inside the table, linear continuation with the end slopes outside.
class Interpolant {
 public:
  Interpolant(std::vector<double> x, std::vector<double> y)
      : x0_(x.front()), x1_(x.back()), y0_(y.front()), y1_(y.back()) {
    using boost::math::interpolators::pchip;
    spline_ = std::make_shared<pchip<std::vector<double>>>(std::move(x), std::move(y));
    s0_ = spline_->prime(x0_);
    s1_ = spline_->prime(x1_);
  }
  double operator()(double r) const {
    if (r <= x0_) return y0_ + s0_ * (r - x0_);
    if (r >= x1_) return y1_ + s1_ * (r - x1_);
    return (*spline_)(r);
  }
  double prime(double r) const {
    if (r <= x0_) return s0_;
    if (r >= x1_) return s1_;
    return spline_->prime(r);
  }
  double lo() const { return x0_; }
  double hi() const { return x1_; }

 private:
  std::shared_ptr<boost::math::interpolators::pchip<std::vector<double>>> spline_;
  double x0_, x1_, y0_, y1_, s0_ = 0.0, s1_ = 0.0;
};

void check_table(const std::vector<double>& r, const std::vector<double>& y,
                 std::string_view what) {
  if (y.size() != r.size())
    throw PreconditionError("tabulated " + std::string(what) + " has " +
                            std::to_string(y.size()) + " samples for " +
                            std::to_string(r.size()) + " radii");
  for (double v : y)
    if (!std::isfinite(v)) throw PreconditionError("non-finite tabulated sample");
}

}  // namespace

FieldProfile make_tabulated(const TabulatedSamples& s) {
  if (s.r.size() < 4) throw PreconditionError("tabulated profile needs at least 4 radii");
  for (std::size_t i = 0; i < s.r.size(); ++i) {
    if (!(s.r[i] >= 0.0) || !std::isfinite(s.r[i]))
      throw PreconditionError("tabulated radii must be finite and non-negative");
    if (i && !(s.r[i] > s.r[i - 1]))
      throw PreconditionError("tabulated radii must be strictly increasing");
  }
  if (s.A.empty() == s.B.empty())
    throw PreconditionError("tabulated profile needs exactly one of A or B samples");

  RadialFn V = [](double) { return 0.0; };
  if (!s.V.empty()) {
    check_table(s.r, s.V, "V");
    Interpolant iv(s.r, s.V);
    V = [iv](double r) { return iv(r); };
  }

  if (!s.A.empty()) {
    check_table(s.r, s.A, "A");
    Interpolant ia(s.r, s.A);
    return FieldProfile(
        Family::tabulated, {}, [ia](double r) { return ia(r); }, std::move(V),
        [ia](double r) { return ia.prime(r); });
  }

  check_table(s.r, s.B, "B");
  Interpolant ib(s.r, s.B);
  // cum[k] = integral_0^{r_k} B(s) s ds; B*s is a quartic on each piece so a
  // 15-point rule is exact up to rounding.
  auto bs = [ib](double x) { return ib(x) * x; };
  auto cum = std::make_shared<std::vector<double>>(s.r.size());
  (*cum)[0] = detail::integrate_fixed(bs, 0.0, s.r[0]);
  for (std::size_t k = 1; k < s.r.size(); ++k)
    (*cum)[k] = (*cum)[k - 1] + detail::integrate_fixed(bs, s.r[k - 1], s.r[k]);
  auto radii = std::make_shared<std::vector<double>>(s.r);

  RadialFn A = [ib, cum, radii, bs](double r) {
    if (r <= 0.0) return 0.0;
    const auto& rr = *radii;
    auto it = std::upper_bound(rr.begin(), rr.end(), r);
    double acc = 0.0;
    double from = 0.0;
    if (it != rr.begin()) {
      const std::size_t k = static_cast<std::size_t>(it - rr.begin()) - 1;
      acc = (*cum)[k];
      from = rr[k];
    }
    // Between table nodes (or past the end) the rule is again exact.
    acc += detail::integrate_fixed(bs, from, r);
    return acc / r;
  };
  RadialFn B = [ib](double r) { return ib(r); };
  RadialFn dA = [A, ib](double r) { return ib(r) - A(r) / r; };
  return FieldProfile(Family::tabulated, {}, A, std::move(V), dA, B);
}

FieldProfile make_composite(std::vector<FieldProfile> parts) {
  if (parts.empty()) throw PreconditionError("composite profile needs at least one part");
  auto shared = std::make_shared<const std::vector<FieldProfile>>(std::move(parts));
  const bool all_b = std::all_of(shared->begin(), shared->end(),
                                 [](const FieldProfile& p) { return p.has_B(); });
  auto sum = [shared](auto member) {
    return [shared, member](double r) {
      double s = 0.0;
      for (const auto& p : *shared) s += (p.*member)(r);
      return s;
    };
  };
  RadialFn B;
  if (all_b) B = sum(&FieldProfile::B);
  return FieldProfile(Family::composite, {}, sum(&FieldProfile::A), sum(&FieldProfile::V),
                      sum(&FieldProfile::dA), std::move(B));
}

double vector_potential_from_B(const RadialFn& B, double r) {
  if (!(r > 0.0)) throw PreconditionError("vector_potential_from_B needs r > 0");
  const double integral = detail::integrate([&B](double s) { return B(s) * s; }, 0.0, r);
  return integral / r;
}

double agmon_weight(const FieldProfile& profile, double r) {
  if (!(r >= 0.0)) throw PreconditionError("agmon_weight needs r >= 0");
  return detail::integrate([&profile](double s) { return std::fabs(profile.A(s)); }, 0.0, r);
}

std::vector<double> agmon_weight_at(const FieldProfile& profile, std::span<const double> radii) {
  std::vector<double> out(radii.size());
  auto absA = [&profile](double s) { return std::fabs(profile.A(s)); };
  double acc = 0.0;
  double prev = 0.0;
  for (std::size_t i = 0; i < radii.size(); ++i) {
    if (radii[i] < prev) throw PreconditionError("agmon_weight_at needs ascending radii");
    // Node spacing is small against the scale of A, so a fixed rule per
    // segment is accurate; the adaptive rule handles the first (long) hop.
    acc += (i == 0) ? detail::integrate(absA, 0.0, radii[0])
                    : detail::integrate_fixed(absA, prev, radii[i]);
    if (!std::isfinite(acc)) throw NumericalError("agmon weight: A not finite");
    out[i] = acc;
    prev = radii[i];
  }
  return out;
}

HypothesisReport verify_hypothesis(const FieldProfile& profile, double R_start, double R_end,
                                   int n_probes, double margin) {
  if (!(R_start > 0.0) || !(R_end > R_start))
    throw PreconditionError("verify_hypothesis needs 0 < R_start < R_end");
  if (n_probes < 8) throw PreconditionError("verify_hypothesis needs at least 8 probes");

  HypothesisReport rep;
  rep.margin = margin;
  const double ratio = std::log(R_end / R_start) / (n_probes - 1);
  for (int k = 0; k < n_probes; ++k) {
    const double r = (k == n_probes - 1) ? R_end : R_start * std::exp(ratio * k);
    rep.probe_radii.push_back(r);
    rep.con0_witness.push_back(std::fabs(profile.A(r)));
  }

  const std::size_t half = static_cast<std::size_t>(n_probes) / 2;
  std::span<const double> tail_r(rep.probe_radii.data() + half, rep.probe_radii.size() - half);
  std::vector<double> tail_absA, tail_absV;
  double con1 = 0.0, con2 = 0.0, deloc = 0.0;
  bool any_a = false, any_v = false;
  for (std::size_t k = half; k < rep.probe_radii.size(); ++k) {
    const double r = rep.probe_radii[k];
    const double a = profile.A(r);
    const double v = profile.V(r);
    tail_absA.push_back(std::fabs(a));
    tail_absV.push_back(std::fabs(v));
    if (a == 0.0) {
      rep.skipped_probes.push_back(r);
    } else {
      any_a = true;
      con1 = std::max(con1, std::fabs(v / a));
      con2 = std::max(con2, std::fabs(profile.dA(r) / (a * a)));
    }
    if (v != 0.0) {
      any_v = true;
      deloc = std::max(deloc, std::fabs(a / v));
    }
  }
  const double inf = std::numeric_limits<double>::infinity();
  rep.con1_limsup = any_a ? con1 : inf;
  rep.con2_sup_tail = any_a ? con2 : inf;
  rep.deloc_limsup = any_v ? deloc : inf;
  rep.con0_pass = grows_without_bound(tail_r, tail_absA, margin, &rep.con0_loglog_slope);
  rep.V_unbounded = grows_without_bound(tail_r, tail_absV, margin, nullptr);

  if (rep.con0_pass && rep.con1_limsup < 1.0 - margin && rep.con2_sup_tail <= margin)
    rep.regime = Regime::localized;
  else if (rep.V_unbounded && rep.deloc_limsup < 1.0 - margin)
    rep.regime = Regime::delocalized;
  else
    rep.regime = Regime::indeterminate;
  return rep;
}

double turning_radius(const FieldProfile& profile, double m, double delta0, double ceiling) {
  if (!(delta0 > 0.0 && delta0 < 1.0))
    throw PreconditionError("turning_radius needs delta0 in (0, 1)");
  const double am = std::fabs(m);
  auto g = [&](double r) { return delta0 * r * std::fabs(profile.A(r)) - am; };

  if (g(ceiling) <= 0.0)
    throw NumericalError("turning_radius: profile violates con0 on probed range (|m| = " +
                         std::to_string(am) + ", ceiling " + std::to_string(ceiling) + ")");
  // Walk down a geometric grid until the set {g <= 0} is hit; the last
  // crossing below the ceiling brackets the supremum.
  constexpr double kStep = 1.02;
  constexpr double kFloor = 1e-12;
  double hi = ceiling;
  double lo = ceiling / kStep;
  while (g(lo) > 0.0) {
    hi = lo;
    lo /= kStep;
    if (lo < kFloor)
      throw NumericalError("turning_radius: delta0 r |A(r)| exceeds |m| down to r = 1e-12");
  }
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (g(mid) <= 0.0 ? lo : hi) = mid;
  }
  return lo;
}

double smoothstep(double x) noexcept {
  const double t = std::clamp(x - 1.0, 0.0, 1.0);
  return t * t * t * (t * (6.0 * t - 15.0) + 10.0);
}

double smoothstep_derivative(double x) noexcept {
  const double t = x - 1.0;
  if (t <= 0.0 || t >= 1.0) return 0.0;
  return 30.0 * t * t * (t - 1.0) * (t - 1.0);
}

CutoffSet make_cutoffs(const FieldProfile& profile, double m, double delta0) {
  CutoffSet c;
  c.delta0 = delta0;
  c.m = m;
  c.r_j = turning_radius(profile, m, delta0);
  return c;
}

}  // namespace diracloc::fields
