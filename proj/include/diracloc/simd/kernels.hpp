#pragma once
// Data-parallel kernels behind the spectral and dynamics code.
//
// Every kernel has a scalar reference implementation; vector variants
// (AVX2+FMA on x86-64, NEON on aarch64) are selected once at runtime.
// Results of reductions may differ from the scalar path in the last few
// ulps because of summation order; Sturm counts are bit-identical.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

namespace diracloc::simd {

enum class Isa { scalar, avx2, neon };

std::string_view to_string(Isa isa) noexcept;

// Number of shifts processed by one sturm_count call.
inline constexpr std::size_t kSturmLanes = 4;

struct KernelTable {
  Isa isa;
  double (*dot)(const double* a, const double* b, std::size_t n);
  // sum_i w[i] * a[i] * b[i]
  double (*weighted_dot)(const double* w, const double* a, const double* b, std::size_t n);
  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // y = T x for the symmetric tridiagonal T = (diag d[0..n), offdiag e[0..n-1))
  void (*tridiag_matvec)(const double* d, const double* e, const double* x, double* y,
                         std::size_t n);
  // counts[l] = number of eigenvalues of T strictly below shifts[l], l < kSturmLanes.
  // e2 holds the squared off-diagonal; pivmin guards zero pivots.
  void (*sturm_count)(const double* d, const double* e2, std::size_t n, const double* shifts,
                      double pivmin, std::int64_t* counts);
};

bool supported(Isa isa) noexcept;

// Table for a specific ISA; throws PreconditionError if the CPU lacks it.
const KernelTable& table(Isa isa);

// Best supported table, unless DIRACLOC_SIMD=scalar|avx2|neon forces one.
const KernelTable& active();

// Span conveniences over active().
double dot(std::span<const double> a, std::span<const double> b);
double weighted_dot(std::span<const double> w, std::span<const double> a,
                    std::span<const double> b);
double weighted_sum_sq(std::span<const double> w, std::span<const double> a);
void axpy(double alpha, std::span<const double> x, std::span<double> y);

namespace detail {
const KernelTable& scalar_table() noexcept;
const KernelTable* avx2_table() noexcept;  // nullptr when not compiled in
const KernelTable* neon_table() noexcept;
}  // namespace detail

}  // namespace diracloc::simd
