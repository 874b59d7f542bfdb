#include <algorithm>
#include <cmath>
#include <limits>

#include "diracloc/error.hpp"
#include "diracloc/spectral.hpp"

namespace diracloc::spectral {

BoxScalingTable box_scaling_diagnostic(const fields::FieldProfile& profile,
                                       const operators::Channel& ch, Window I,
                                       std::span<const double> R_list, double h) {
  if (R_list.size() < 3) throw PreconditionError("box scaling needs at least 3 box sizes");
  for (std::size_t i = 1; i < R_list.size(); ++i)
    if (!(R_list[i] > R_list[i - 1]))
      throw PreconditionError("box sizes must be strictly increasing");

  BoxScalingTable t;
  for (double R : R_list) {
    const auto grid = operators::RadialGrid::covering(R, h);
    const auto op = operators::assemble_channel_matrix(profile, ch, grid);
    const auto set = eigs_in_window(op, I);
    BoxScalingRow row;
    row.R_max = grid.R_max();
    row.n = grid.n;
    for (const auto& p : set.pairs) row.eigenvalues.push_back(p.E);
    t.rows.push_back(std::move(row));
  }
  // Each eigenvalue of the smaller box is matched to its nearest neighbour
  // in the next one.
  for (std::size_t i = 0; i + 1 < t.rows.size(); ++i) {
    const auto& a = t.rows[i].eigenvalues;
    const auto& b = t.rows[i + 1].eigenvalues;
    double drift = 0.0;
    if (!a.empty() && !b.empty())
      for (double e : a) {
        auto it = std::lower_bound(b.begin(), b.end(), e);
        double best = std::numeric_limits<double>::infinity();
        if (it != b.end()) best = *it - e;
        if (it != b.begin()) best = std::min(best, e - *(it - 1));
        drift = std::max(drift, best);
      }
    t.drift.push_back(drift);
  }
  return t;
}

}  // namespace diracloc::spectral
