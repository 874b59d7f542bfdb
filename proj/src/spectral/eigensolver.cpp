#include <lapacke.h>

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <limits>
#include <string>

#include "diracloc/error.hpp"
#include "diracloc/simd/kernels.hpp"
#include "diracloc/spectral.hpp"

namespace diracloc::spectral {

namespace {

std::string channel_tag(const operators::Channel& ch) {
  return "channel j = " + std::to_string(ch.j);
}

std::vector<double> squared(std::span<const double> e) {
  std::vector<double> e2(e.size());
  for (std::size_t i = 0; i < e.size(); ++i) e2[i] = e[i] * e[i];
  return e2;
}

double pivmin_of(std::span<const double> e2) {
  double mx = 1.0;
  for (double x : e2) mx = std::max(mx, x);
  return DBL_MIN * mx;
}

// Deterministic sign: the largest-magnitude entry is positive.
void fix_sign(std::vector<double>& z) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < z.size(); ++i)
    if (std::fabs(z[i]) > std::fabs(z[best])) best = i;
  if (z[best] < 0.0)
    for (double& x : z) x = -x;
}

double residual_of(const operators::ChannelOperator& op, const std::vector<double>& z, double E,
                   std::vector<double>& work) {
  const auto& k = simd::active();
  k.tridiag_matvec(op.diag().data(), op.off().data(), z.data(), work.data(), z.size());
  k.axpy(-E, z.data(), work.data(), z.size());
  return std::sqrt(k.dot(work.data(), work.data(), z.size()));
}

double rayleigh(const operators::ChannelOperator& op, const std::vector<double>& z,
                std::vector<double>& work) {
  const auto& k = simd::active();
  k.tridiag_matvec(op.diag().data(), op.off().data(), z.data(), work.data(), z.size());
  return k.dot(z.data(), work.data(), z.size()) / k.dot(z.data(), z.data(), z.size());
}

// Within a cluster of (nearly) equal eigenvalues the basis is arbitrary; a
// physical state and a box edge state can come out mixed. Rotate the cluster
// so that the wall weight is diagonal, which separates them.
void unmix_cluster(std::vector<EigenPair>& pairs, std::size_t first, std::size_t last,
                   std::size_t shell_begin, const operators::ChannelOperator& op,
                   std::vector<double>& work) {
  const std::size_t k = last - first;
  const std::size_t n = op.dim();
  std::vector<double> W(k * k);
  for (std::size_t a = 0; a < k; ++a)
    for (std::size_t b = 0; b <= a; ++b) {
      const auto& za = pairs[first + a].psi;
      const auto& zb = pairs[first + b].psi;
      W[a * k + b] = W[b * k + a] =
          simd::active().dot(za.data() + shell_begin, zb.data() + shell_begin, n - shell_begin);
    }
  std::vector<double> evals(k);
  const lapack_int info = LAPACKE_dsyev(LAPACK_ROW_MAJOR, 'V', 'U', static_cast<lapack_int>(k),
                                        W.data(), static_cast<lapack_int>(k), evals.data());
  if (info != 0)
    throw NumericalError("cluster rotation failed (" + channel_tag(op.channel()) + ")");
  std::vector<std::vector<double>> rotated(k, std::vector<double>(n, 0.0));
  for (std::size_t c = 0; c < k; ++c)
    for (std::size_t b = 0; b < k; ++b)
      simd::active().axpy(W[b * k + c], pairs[first + b].psi.data(), rotated[c].data(), n);
  for (std::size_t c = 0; c < k; ++c) {
    pairs[first + c].psi = std::move(rotated[c]);
    pairs[first + c].E = rayleigh(op, pairs[first + c].psi, work);
  }
}

}  // namespace

std::vector<std::int64_t> inertia_counts(const operators::ChannelOperator& op,
                                         std::span<const double> sigmas) {
  const auto e2 = squared(op.off());
  const double pivmin = pivmin_of(e2);
  const auto& k = simd::active();
  std::vector<std::int64_t> out(sigmas.size());
  for (std::size_t s = 0; s < sigmas.size(); s += simd::kSturmLanes) {
    double lanes[simd::kSturmLanes];
    std::int64_t counts[simd::kSturmLanes];
    for (std::size_t l = 0; l < simd::kSturmLanes; ++l)
      lanes[l] = sigmas[std::min(s + l, sigmas.size() - 1)];
    k.sturm_count(op.diag().data(), e2.data(), op.dim(), lanes, pivmin, counts);
    for (std::size_t l = 0; l < simd::kSturmLanes && s + l < sigmas.size(); ++l)
      out[s + l] = counts[l];
  }
  return out;
}

std::int64_t inertia_count(const operators::ChannelOperator& op, double sigma) {
  const double s[1] = {sigma};
  return inertia_counts(op, s)[0];
}

EigenSet eigs_in_window(const operators::ChannelOperator& op, Window I, double tol,
                        const EigOptions& opts) {
  if (!std::isfinite(I.lo) || !std::isfinite(I.hi) || I.lo > I.hi)
    throw PreconditionError("eigs_in_window needs a bounded window lo <= hi");
  const std::size_t n = op.dim();
  EigenSet set;
  set.channel = op.channel();
  set.grid = op.grid();
  set.window = I;
  set.tol = tol > 0.0 ? tol : 1e-9 * op.max_abs() * static_cast<double>(n);

  // The window is closed; LAPACK's value range is half-open (vl, vu].
  const double vl = std::nextafter(I.lo, -std::numeric_limits<double>::infinity());
  const double vu = I.hi;
  const double bounds[2] = {vl, std::nextafter(vu, std::numeric_limits<double>::infinity())};
  const auto c = inertia_counts(op, bounds);
  const std::int64_t expected = c[1] - c[0];
  if (expected <= 0) return set;

  std::vector<double> d(op.diag().begin(), op.diag().end());
  std::vector<double> e(n, 0.0);
  std::copy(op.off().begin(), op.off().end(), e.begin());
  const lapack_int nzc = static_cast<lapack_int>(expected + 8);
  std::vector<double> w(n);
  std::vector<double> z(n * static_cast<std::size_t>(nzc));
  std::vector<lapack_int> isuppz(2 * static_cast<std::size_t>(nzc));
  lapack_int found = 0;
  lapack_logical tryrac = 1;
  lapack_int info =
      LAPACKE_dstemr(LAPACK_COL_MAJOR, 'V', 'V', static_cast<lapack_int>(n), d.data(), e.data(),
                     vl, vu, 0, 0, &found, w.data(), z.data(), static_cast<lapack_int>(n), nzc,
                     isuppz.data(), &tryrac);
  if (info > 0) {
    // MRRR gives up on some tight clusters (box edge states next to a zero
    // mode); bisection plus inverse iteration handles them.
    std::copy(op.diag().begin(), op.diag().end(), d.begin());
    std::copy(op.off().begin(), op.off().end(), e.begin());
    std::vector<lapack_int> ifail(n);
    info = LAPACKE_dstevx(LAPACK_COL_MAJOR, 'V', 'V', static_cast<lapack_int>(n), d.data(),
                          e.data(), vl, vu, 0, 0, 0.0, &found, w.data(), z.data(),
                          static_cast<lapack_int>(n), ifail.data());
  }
  if (info != 0)
    throw NumericalError("eigensolver failed with info " + std::to_string(info) + " (" +
                         channel_tag(op.channel()) + ")");

  if (found != expected)
    throw NumericalError("Sturm count " + std::to_string(expected) + " and eigensolver count " +
                         std::to_string(found) + " disagree (" + channel_tag(op.channel()) + ")");

  std::vector<EigenPair> pairs;
  pairs.reserve(static_cast<std::size_t>(found));
  for (lapack_int i = 0; i < found; ++i) {
    EigenPair p;
    p.E = w[static_cast<std::size_t>(i)];
    p.psi.assign(z.begin() + static_cast<std::ptrdiff_t>(i) * static_cast<std::ptrdiff_t>(n),
                 z.begin() + static_cast<std::ptrdiff_t>(i + 1) * static_cast<std::ptrdiff_t>(n));
    pairs.push_back(std::move(p));
  }
  std::sort(pairs.begin(), pairs.end(),
            [](const EigenPair& a, const EigenPair& b) { return a.E < b.E; });

  std::vector<double> work(n);
  if (opts.filter_wall_modes && !pairs.empty()) {
    const double r_shell = (1.0 - opts.wall_shell) * op.grid().R_max();
    std::size_t shell_begin = n;
    for (std::size_t k = 0; k < n; ++k)
      if (op.radius(k) > r_shell) {
        shell_begin = k;
        break;
      }
    const double cluster_gap = 1e-8 * std::max(1.0, op.max_abs());
    std::size_t first = 0;
    for (std::size_t i = 1; i <= pairs.size(); ++i) {
      if (i < pairs.size() && pairs[i].E - pairs[i - 1].E <= cluster_gap) continue;
      if (i - first > 1) unmix_cluster(pairs, first, i, shell_begin, op, work);
      first = i;
    }
    std::vector<EigenPair> kept;
    for (auto& p : pairs) {
      const double ww = simd::active().dot(p.psi.data() + shell_begin,
                                           p.psi.data() + shell_begin, n - shell_begin);
      if (ww > opts.wall_weight)
        ++set.wall_modes_dropped;
      else
        kept.push_back(std::move(p));
    }
    pairs = std::move(kept);
    std::sort(pairs.begin(), pairs.end(),
              [](const EigenPair& a, const EigenPair& b) { return a.E < b.E; });
  }

  for (auto& p : pairs) {
    fix_sign(p.psi);
    p.residual = residual_of(op, p.psi, p.E, work);
    if (!(p.residual <= set.tol))
      throw NumericalError("eigenpair residual " + std::to_string(p.residual) +
                           " exceeds tolerance (" + channel_tag(op.channel()) + ")");
  }
  double gram = 0.0;
  for (std::size_t a = 0; a < pairs.size(); ++a)
    for (std::size_t b = 0; b <= a; ++b) {
      const double g = simd::active().dot(pairs[a].psi.data(), pairs[b].psi.data(), n);
      gram = std::max(gram, std::fabs(g - (a == b ? 1.0 : 0.0)));
    }
  if (!(gram <= 1e-9))
    throw NumericalError("eigenvectors not orthonormal, Gram error " + std::to_string(gram) +
                         " (" + channel_tag(op.channel()) + ")");
  set.gram_error = gram;
  // Rayleigh quotients of rotated clusters may leave the window by rounding.
  std::erase_if(pairs, [&](const EigenPair& p) { return !I.contains(p.E); });
  set.pairs = std::move(pairs);
  return set;
}

WindowCount count_window_detail(const operators::ChannelOperator& op, double E,
                                const EigOptions& opts) {
  if (!(E > 0.0)) throw PreconditionError("count_in_window needs E > 0");
  WindowCount wc;
  const double bounds[2] = {-E, std::nextafter(E, std::numeric_limits<double>::infinity())};
  const auto c = inertia_counts(op, bounds);
  wc.raw = c[1] - c[0];
  if (wc.raw == 0 || !opts.filter_wall_modes) return wc;
  const EigenSet set = eigs_in_window(op, {-E, E}, 0.0, opts);
  wc.wall_modes = set.wall_modes_dropped;
  if (static_cast<std::int64_t>(set.N()) != wc.physical())
    throw NumericalError("inertia count " + std::to_string(wc.raw) + " minus " +
                         std::to_string(wc.wall_modes) + " edge states differs from " +
                         std::to_string(set.N()) + " eigenpairs (" + channel_tag(op.channel()) +
                         ")");
  return wc;
}

std::int64_t count_in_window(const operators::ChannelOperator& op, double E) {
  return count_window_detail(op, E).physical();
}

}  // namespace diracloc::spectral
