#pragma once
// Windowed eigenpairs of channel operators, eigenvalue counts, the Bargmann
// count bound and the weighted (Agmon) decay check.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "diracloc/fields.hpp"
#include "diracloc/operators.hpp"

namespace diracloc::spectral {

// Closed energy interval [lo, hi].
struct Window {
  double lo = 0.0;
  double hi = 0.0;

  bool contains(double E) const noexcept { return E >= lo && E <= hi; }
};

struct EigenPair {
  double E = 0.0;
  std::vector<double> psi;  // Euclidean unit vector in chain order
  double residual = 0.0;    // ||M psi - E psi||_2
};

struct EigenSet {
  operators::Channel channel;
  operators::RadialGrid grid;
  Window window;
  std::vector<EigenPair> pairs;  // ascending E
  double tol = 0.0;              // residual certificate threshold
  double gram_error = 0.0;       // max |<psi_a, psi_b> - delta_ab|
  int wall_modes_dropped = 0;    // box edge states removed from the window

  std::size_t N() const noexcept { return pairs.size(); }
};

struct EigOptions {
  // Drop eigenvectors carrying more than wall_weight of their mass in the
  // outer wall_shell fraction of the box (truncation artifacts).
  bool filter_wall_modes = true;
  double wall_shell = 0.05;
  double wall_weight = 0.5;
};

// tol <= 0 selects the default 1e-9 * ||M||_max * dim.
// Throws NumericalError (with the channel) if LAPACK fails or a certificate
// misses its tolerance; an empty window yields an empty set.
EigenSet eigs_in_window(const operators::ChannelOperator& op, Window I, double tol = 0.0,
                        const EigOptions& opts = {});

// Number of eigenvalues strictly below sigma (Sturm sequence / inertia).
std::int64_t inertia_count(const operators::ChannelOperator& op, double sigma);
// Same for several shifts at once.
std::vector<std::int64_t> inertia_counts(const operators::ChannelOperator& op,
                                         std::span<const double> sigmas);

struct WindowCount {
  std::int64_t raw = 0;    // inertia count in [-E, E]
  int wall_modes = 0;      // of which box edge states
  std::int64_t physical() const noexcept { return raw - wall_modes; }
};

// N_[-E,E]: inertia count minus the edge states that eigs_in_window drops.
WindowCount count_window_detail(const operators::ChannelOperator& op, double E,
                                const EigOptions& opts = {});
std::int64_t count_in_window(const operators::ChannelOperator& op, double E);

// ---- Bargmann bound -------------------------------------------------------

struct BargmannEntry {
  operators::Channel channel;
  double E = 0.0;
  double eps = 0.0;
  double delta = 0.0;           // (1 - eps) / 2
  double R_j = 0.0;             // turning radius at delta / 4
  double D_measure = 0.0;       // |D_j|
  double ball_radius = 0.0;     // radius of the ball where positivity fails
  double C = 0.0;               // sup over the ball of V^2/eps + |A'|
  double integral = 0.0;        // int r |W_j^<(r)| dr
  double bound = 0.0;           // integral / (|m| - 1/2)
  double majorant = 0.0;        // closed-form upper estimate of bound
  std::optional<std::int64_t> N_numeric;
  double ratio() const;         // N / (|m| ln |m|), NaN without N
};

// eps defaults (when <= 0) to max(0.9, (1 + L^2) / 2) with L = limsup |V/A|.
double default_bargmann_eps(double con1_limsup);

// Requires eps in (0, 1) and |m| > 1. Throws NumericalError when the D_j
// bracket or the positivity ball cannot be located.
BargmannEntry bargmann_bound(const fields::FieldProfile& profile, const operators::Channel& ch,
                             double E, double eps);

// bargmann_bound plus N_numeric from the assembled operator.
BargmannEntry bargmann_report(const fields::FieldProfile& profile,
                              const operators::ChannelOperator& op, double E, double eps);

// ---- Agmon decay ----------------------------------------------------------

struct AgmonEntry {
  int k = 0;                   // index within the eigen set
  double E = 0.0;
  double gamma = 0.0;
  double log_lhs = 0.0;        // log ||A e^{gamma rho} f~_j psi||, -inf when zero
  double lhs = 0.0;
  double rhs_scale = 0.0;      // e^{gamma rho(2 r_j)} / r_j
  double log_ratio = 0.0;
  double ratio = 0.0;          // lhs / rhs_scale
  double decay_slope = 0.0;    // LS slope of log|psi| against rho on [2 r_j, 4 r_j]
  int decay_points = 0;
};

struct AgmonReport {
  operators::Channel channel;
  double gamma = 0.0;
  double delta0 = 0.0;
  double r_j = 0.0;
  double R_max = 0.0;
  bool unreliable = false;     // R_max < 6 r_j
  bool small_grid = false;     // R_max < 2 r_j
  std::vector<AgmonEntry> entries;
  double max_ratio = 0.0;
  double max_log_ratio = 0.0;  // -inf for an empty set
};

struct AgmonOptions {
  bool allow_small_grid = false;  // otherwise R_max < 2 r_j throws
};

// log|psi_k| at every chain node, stitched with the inward ratio recurrence
// where the eigenvector has fallen below 1e-8 of its peak.
std::vector<double> log_amplitude(const operators::ChannelOperator& op, const EigenPair& pair);

// gamma in [0, 1); every eigenvector of eig_set must belong to op.
AgmonReport agmon_check(const fields::FieldProfile& profile, const operators::ChannelOperator& op,
                        const EigenSet& eig_set, double gamma, double delta0,
                        const AgmonOptions& opts = {});

// ||A e^{gamma rho} f~_j x|| for an arbitrary chain vector (log value).
double agmon_log_norm(const fields::FieldProfile& profile, const operators::ChannelOperator& op,
                      std::span<const double> x, double gamma, double r_j);

// ---- Box scaling ----------------------------------------------------------

struct BoxScalingRow {
  double R_max = 0.0;
  int n = 0;
  std::vector<double> eigenvalues;
};

struct BoxScalingTable {
  std::vector<BoxScalingRow> rows;
  // Max over eigenvalues of box i of the distance to the nearest one of box i + 1.
  std::vector<double> drift;
};

// Fixed spacing h for every box. R_list must be increasing with >= 3 entries.
BoxScalingTable box_scaling_diagnostic(const fields::FieldProfile& profile,
                                       const operators::Channel& ch, Window I,
                                       std::span<const double> R_list, double h);

}  // namespace diracloc::spectral
