#pragma once
// Radial field profiles (vector potential A, scalar potential V, optional
// magnetic field B), the Agmon weight, turning radii and the smooth cutoffs
// that split the half-line into centrifugal and field-dominated regions.

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace diracloc::fields {

using RadialFn = std::function<double(double)>;

enum class Family { power, linear, constant_B, tabulated, composite, custom };

std::string_view to_string(Family f) noexcept;
// Throws PreconditionError on an unknown tag.
Family parse_family(std::string_view name);

// Immutable pair (A, V) plus A' and, when known, the generating B.
// Copies share the underlying callables.
class FieldProfile {
 public:
  FieldProfile(Family family, std::vector<double> params, RadialFn A, RadialFn V, RadialFn dA,
               RadialFn B = {});

  // A profile from arbitrary callables. Without dA a centered difference is used.
  static FieldProfile custom(RadialFn A, RadialFn V, RadialFn dA = {}, RadialFn B = {});

  Family family() const noexcept { return family_; }
  const std::vector<double>& params() const noexcept { return params_; }

  double A(double r) const { return (*a_)(r); }
  double V(double r) const { return (*v_)(r); }
  double dA(double r) const { return (*da_)(r); }
  bool has_B() const noexcept { return static_cast<bool>(b_); }
  double B(double r) const;

  // A_j = A - m/r, the channel's effective vector potential.
  double A_channel(double r, double m) const { return A(r) - m / r; }
  // A_j' = A' + m/r^2.
  double dA_channel(double r, double m) const { return dA(r) + m / (r * r); }

  // Same profile with V replaced by V + c.
  FieldProfile shifted(double c) const;

  std::string describe() const;

 private:
  Family family_;
  std::vector<double> params_;
  std::shared_ptr<const RadialFn> a_, v_, da_, b_;
};

// Closed-form families.
//   linear      [a, lambda]            A = a r,        V = lambda r
//   power       [a, p (, lambda (, q))] A = a r^p,     V = lambda r^q (q defaults to p)
//   constant_B  [B (, V0)]             A = B r / 2,    V = V0
// Throws PreconditionError for tabulated/composite (use the dedicated
// builders), wrong parameter counts, or p <= 0.
FieldProfile make_profile(Family family, std::span<const double> params);

// Sampled profile. Exactly one of A or B must be given; V is optional (zero).
// Samples are interpolated with a monotone cubic (PCHIP); outside the table
// the end segments are continued linearly.
struct TabulatedSamples {
  std::vector<double> r;
  std::vector<double> A;
  std::vector<double> B;
  std::vector<double> V;
};
FieldProfile make_tabulated(const TabulatedSamples& samples);

// Pointwise sum of the components' A, V, A' (and B when all have it).
FieldProfile make_composite(std::vector<FieldProfile> parts);

// (1/r) * integral_0^r B(s) s ds by adaptive Gauss-Kronrod, relative tolerance 1e-10.
double vector_potential_from_B(const RadialFn& B, double r);

// rho(r) = integral_0^r |A(s)| ds, relative tolerance 1e-10.
double agmon_weight(const FieldProfile& profile, double r);
// rho at each radius of an ascending list, accumulated segment by segment.
std::vector<double> agmon_weight_at(const FieldProfile& profile, std::span<const double> radii);

enum class Regime { localized, delocalized, indeterminate };
std::string_view to_string(Regime r) noexcept;
Regime parse_regime(std::string_view name);

struct HypothesisReport {
  std::vector<double> probe_radii;
  std::vector<double> con0_witness;     // |A(r_k)| at every probe
  bool con0_pass = false;
  double con0_loglog_slope = 0.0;       // growth rate of |A| over the last half
  double con1_limsup = 0.0;             // max |V/A| over the last half
  double con2_sup_tail = 0.0;           // max |A'/A^2| over the last half
  double deloc_limsup = 0.0;            // max |A/V| over the last half
  bool V_unbounded = false;
  double margin = 0.05;
  Regime regime = Regime::indeterminate;
  std::vector<double> skipped_probes;   // radii where A (or V) vanished
};

// Probes the asymptotic conditions on a geometric grid in [R_start, R_end].
// limsup/lim are approximated by the max over the last half of the grid.
HypothesisReport verify_hypothesis(const FieldProfile& profile, double R_start, double R_end,
                                   int n_probes, double margin = 0.05);

// Largest r with |m| >= delta0 * r * |A(r)|, located by a geometric scan from
// `ceiling` downwards and bisection to full double precision.
double turning_radius(const FieldProfile& profile, double m, double delta0,
                      double ceiling = 1e6);

// C^2 step: 0 for x <= 1, 1 for x >= 2, 6t^5 - 15t^4 + 10t^3 with t = x - 1 between.
double smoothstep(double x) noexcept;
double smoothstep_derivative(double x) noexcept;

struct CutoffSet {
  double delta0 = 0.1;
  double r_j = 0.0;
  double m = 0.5;

  double f(double r) const noexcept { return smoothstep(r / (3.0 * r_j)); }
  double f_c(double r) const noexcept { return 1.0 - f(r); }
  double f_tilde(double r) const noexcept { return smoothstep(r / r_j); }
};

CutoffSet make_cutoffs(const FieldProfile& profile, double m, double delta0);

}  // namespace diracloc::fields
