#include "diracloc/operators.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "diracloc/error.hpp"

namespace diracloc::operators {

namespace {

void check_grid(const RadialGrid& grid) {
  if (!(grid.h > 0.0) || !std::isfinite(grid.h))
    throw PreconditionError("grid spacing must be positive and finite");
  if (grid.n < 2) throw PreconditionError("grid needs n >= 2 nodes per component");
}

double finite_or_throw(double x, const char* what, double r, int j) {
  if (!std::isfinite(x))
    throw NumericalError(std::string(what) + " not finite at r = " + std::to_string(r) +
                         " (channel j = " + std::to_string(j) + ")");
  return x;
}

}  // namespace

RadialGrid RadialGrid::covering(double R_max, double h_target) {
  if (!(R_max > 0.0) || !(h_target > 0.0))
    throw PreconditionError("grid needs R_max > 0 and h > 0");
  const int n = static_cast<int>(std::ceil(R_max / h_target - 1e-9));
  RadialGrid g{R_max / n, n};
  check_grid(g);
  return g;
}

RadialGrid RadialGrid::automatic(const fields::FieldProfile& profile, int j_max_abs,
                                 double delta0) {
  const double m = std::max(std::fabs(m_of(j_max_abs)), std::fabs(m_of(-j_max_abs)));
  const double R = std::max(40.0, 8.0 * fields::turning_radius(profile, m, delta0));
  const int n = std::min(8000, static_cast<int>(std::ceil(R / 0.02)));
  RadialGrid g{R / n, n};
  check_grid(g);
  return g;
}

double chain_radius(const Channel& ch, const RadialGrid& grid, std::size_t k) noexcept {
  const double kk = static_cast<double>(k);
  return ch.m > 0.0 ? 0.5 * (kk + 1.0) * grid.h : 0.5 * kk * grid.h;
}

Component chain_component(const Channel& ch, std::size_t k) noexcept {
  const bool even = (k % 2) == 0;
  if (ch.m > 0.0) return even ? Component::u : Component::v;
  return even ? Component::v : Component::u;
}

ChannelOperator::ChannelOperator(Channel ch, RadialGrid grid, std::vector<double> diag,
                                 std::vector<double> off)
    : ch_(ch), grid_(grid), diag_(std::move(diag)), off_(std::move(off)) {
  if (diag_.size() != 2 * static_cast<std::size_t>(grid_.n) || off_.size() + 1 != diag_.size())
    throw PreconditionError("channel matrix dimensions do not match the grid");
}

double ChannelOperator::radius(std::size_t k) const noexcept {
  return chain_radius(ch_, grid_, k);
}

Component ChannelOperator::component(std::size_t k) const noexcept {
  return chain_component(ch_, k);
}

std::vector<double> ChannelOperator::radii() const {
  std::vector<double> r(dim());
  for (std::size_t k = 0; k < r.size(); ++k) r[k] = radius(k);
  return r;
}

double ChannelOperator::max_abs() const noexcept {
  double m = 0.0;
  for (double x : diag_) m = std::max(m, std::fabs(x));
  for (double x : off_) m = std::max(m, std::fabs(x));
  return m;
}

std::vector<double> ChannelOperator::dense() const {
  const std::size_t n = dim();
  std::vector<double> a(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) a[i * n + i] = diag_[i];
  // Lower triangle from off_, upper mirrored from the same value.
  for (std::size_t i = 0; i + 1 < n; ++i) {
    a[(i + 1) * n + i] = off_[i];
    a[i * n + (i + 1)] = a[(i + 1) * n + i];
  }
  return a;
}

void ChannelOperator::write_dense(std::ostream& os) const {
  const std::size_t n = dim();
  const auto a = dense();
  char buf[32];
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < n; ++k) {
      std::snprintf(buf, sizeof buf, "%.17g", a[i * n + k]);
      if (k) os << ' ';
      os << buf;
    }
    os << '\n';
  }
}

void ChannelOperator::apply(std::span<const double> x, std::span<double> y) const {
  if (x.size() != dim() || y.size() != dim())
    throw PreconditionError("apply: vector length does not match the operator");
  const std::size_t n = dim();
  for (std::size_t i = 0; i < n; ++i) {
    double s = diag_[i] * x[i];
    if (i > 0) s += off_[i - 1] * x[i - 1];
    if (i + 1 < n) s += off_[i] * x[i + 1];
    y[i] = s;
  }
}

ChannelOperator assemble_channel_matrix(const fields::FieldProfile& profile, const Channel& ch,
                                        const RadialGrid& grid) {
  check_grid(grid);
  if (ch.m != m_of(ch.j)) throw PreconditionError("channel with m != j + 1/2");
  const std::size_t dim = 2 * static_cast<std::size_t>(grid.n);
  std::vector<double> d(dim), e(dim - 1);
  const double inv_h = 1.0 / grid.h;

  for (std::size_t k = 0; k < dim; ++k) {
    const double r = chain_radius(ch, grid, k);
    d[k] = finite_or_throw(profile.V(r), "V", r, ch.j);
  }
  for (std::size_t k = 0; k + 1 < dim; ++k) {
    const double mid = 0.5 * (chain_radius(ch, grid, k) + chain_radius(ch, grid, k + 1));
    const double aj = finite_or_throw(profile.A_channel(mid, ch.m), "A", mid, ch.j);
    // u-row first difference -(v_i - v_{i-1})/h: -1/h towards the outer v,
    // +1/h towards the inner one; v-row (u_{i+1} - u_i)/h is its transpose.
    const bool u_then_v = chain_component(ch, k) == Component::u;
    e[k] = (u_then_v ? -inv_h : inv_h) + 0.5 * aj;
  }
  return ChannelOperator(ch, grid, std::move(d), std::move(e));
}

SquaredMagneticOperator assemble_squared_magnetic(const fields::FieldProfile& profile,
                                                  const Channel& ch, const RadialGrid& grid) {
  check_grid(grid);
  SquaredMagneticOperator op;
  op.channel = ch;
  op.grid = grid;
  const std::size_t n = static_cast<std::size_t>(grid.n);
  const double lap = 2.0 / (grid.h * grid.h);
  op.up_diag.resize(n);
  op.down_diag.resize(n);
  op.up_potential.resize(n);
  op.down_potential.resize(n);
  op.off.assign(n - 1, -1.0 / (grid.h * grid.h));
  for (std::size_t i = 0; i < n; ++i) {
    const double r = static_cast<double>(i + 1) * grid.h;
    const double aj = finite_or_throw(profile.A_channel(r, ch.m), "A", r, ch.j);
    const double daj = finite_or_throw(profile.dA_channel(r, ch.m), "A'", r, ch.j);
    op.up_potential[i] = aj * aj - daj;
    op.down_potential[i] = aj * aj + daj;
    op.up_diag[i] = lap + op.up_potential[i];
    op.down_diag[i] = lap + op.down_potential[i];
  }
  return op;
}

}  // namespace diracloc::operators
