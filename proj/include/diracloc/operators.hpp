#pragma once
// Channel Hamiltonians h_j = [[V, -d/dr + A_j], [d/dr + A_j, V]] on a staggered
// half-line grid, and the squared magnetic blocks -d^2/dr^2 + A_j^2 -+ A_j'.
//
// Node families: the upper component u lives on half nodes (i - 1/2) h and
// the lower component v on integer nodes i h. Every channel is a symmetric
// tridiagonal matrix of dimension 2n under interleaved ordering:
//   m > 0: (u_1, v_1, ..., u_n, v_n),      v(0) = 0,  u((n + 1/2) h) = 0
//   m < 0: (v_0, u_1, v_1, ..., u_n),      u(-h/2) = 0, v(n h) = 0
// so that both signs share one node set and the origin closure is the one
// that converges for m = -1/2.

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "diracloc/fields.hpp"

namespace diracloc::operators {

constexpr double m_of(int j) noexcept { return j + 0.5; }

struct Channel {
  int j = 0;
  double m = 0.5;

  static constexpr Channel of(int j) noexcept { return {j, m_of(j)}; }
};

struct RadialGrid {
  double h = 0.0;
  int n = 0;

  double R_max() const noexcept { return n * h; }
  // i = 1..n
  double u_node(int i) const noexcept { return (i - 0.5) * h; }
  double v_node(int i) const noexcept { return i * h; }

  // n = ceil(R_max / h) nodes per component, spacing adjusted to land on R_max.
  static RadialGrid covering(double R_max, double h_target);
  // R_max = max(40, 8 r_{j_max}(delta0)), n = min(8000, ceil(R_max / 0.02)).
  static RadialGrid automatic(const fields::FieldProfile& profile, int j_max_abs, double delta0);
};

enum class Component : unsigned char { u = 0, v = 1 };

class ChannelOperator {
 public:
  ChannelOperator(Channel ch, RadialGrid grid, std::vector<double> diag, std::vector<double> off);

  const Channel& channel() const noexcept { return ch_; }
  const RadialGrid& grid() const noexcept { return grid_; }
  std::size_t dim() const noexcept { return diag_.size(); }

  std::span<const double> diag() const noexcept { return diag_; }
  // off[k] couples chain indices k and k + 1.
  std::span<const double> off() const noexcept { return off_; }

  // Radius and spinor component carried by chain index k.
  double radius(std::size_t k) const noexcept;
  Component component(std::size_t k) const noexcept;
  std::vector<double> radii() const;

  double max_abs() const noexcept;
  std::vector<double> dense() const;  // row-major dim x dim
  void write_dense(std::ostream& os) const;

  // y = M x
  void apply(std::span<const double> x, std::span<double> y) const;

 private:
  Channel ch_;
  RadialGrid grid_;
  std::vector<double> diag_, off_;
};

// Chain-index geometry, independent of the profile.
double chain_radius(const Channel& ch, const RadialGrid& grid, std::size_t k) noexcept;
Component chain_component(const Channel& ch, std::size_t k) noexcept;

// Throws PreconditionError for n < 2 or h <= 0, NumericalError when the
// profile is not finite at a node.
ChannelOperator assemble_channel_matrix(const fields::FieldProfile& profile, const Channel& ch,
                                        const RadialGrid& grid);

// Both blocks on the integer nodes i h, i = 1..n, Dirichlet at 0 and (n + 1) h.
struct SquaredMagneticOperator {
  Channel channel;
  RadialGrid grid;
  std::vector<double> up_diag, down_diag;  // 2/h^2 + A_j^2 -+ A_j'
  std::vector<double> off;                 // -1/h^2 for both blocks
  std::vector<double> up_potential, down_potential;  // A_j^2 -+ A_j' alone
};

SquaredMagneticOperator assemble_squared_magnetic(const fields::FieldProfile& profile,
                                                  const Channel& ch, const RadialGrid& grid);

}  // namespace diracloc::operators
