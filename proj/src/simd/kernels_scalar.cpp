#include "diracloc/simd/kernels.hpp"

#include <cmath>

namespace diracloc::simd {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

double weighted_dot_scalar(const double* w, const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += w[i] * a[i] * b[i];
  return s;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void tridiag_matvec_scalar(const double* d, const double* e, const double* x, double* y,
                           std::size_t n) {
  if (n == 0) return;
  if (n == 1) {
    y[0] = d[0] * x[0];
    return;
  }
  y[0] = d[0] * x[0] + e[0] * x[1];
  for (std::size_t i = 1; i + 1 < n; ++i)
    y[i] = e[i - 1] * x[i - 1] + d[i] * x[i] + e[i] * x[i + 1];
  y[n - 1] = e[n - 2] * x[n - 2] + d[n - 1] * x[n - 1];
}

// Inertia of T - sigma via the LDL^T pivot recurrence (LAPACK dlaebz style).
void sturm_count_scalar(const double* d, const double* e2, std::size_t n, const double* shifts,
                        double pivmin, std::int64_t* counts) {
  for (std::size_t l = 0; l < kSturmLanes; ++l) {
    const double sigma = shifts[l];
    std::int64_t c = 0;
    double q = d[0] - sigma;
    if (std::fabs(q) < pivmin) q = -pivmin;
    c += q < 0.0;
    for (std::size_t i = 1; i < n; ++i) {
      q = (d[i] - sigma) - e2[i - 1] / q;
      if (std::fabs(q) < pivmin) q = -pivmin;
      c += q < 0.0;
    }
    counts[l] = c;
  }
}

constexpr KernelTable kScalar{
    Isa::scalar,         dot_scalar,          weighted_dot_scalar, axpy_scalar,
    tridiag_matvec_scalar, sturm_count_scalar,
};

}  // namespace

namespace detail {
const KernelTable& scalar_table() noexcept { return kScalar; }
}  // namespace detail

}  // namespace diracloc::simd
