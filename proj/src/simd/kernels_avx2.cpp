#include "diracloc/simd/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)
#include <immintrin.h>

#include <cmath>

#define DIRACLOC_AVX2 __attribute__((target("avx2,fma")))

namespace diracloc::simd {
namespace {

DIRACLOC_AVX2 inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d sh = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, sh));
}

DIRACLOC_AVX2 double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d s0 = _mm256_setzero_pd(), s1 = _mm256_setzero_pd();
  __m256d s2 = _mm256_setzero_pd(), s3 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 16 <= n; i += 16) {
    s0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), s0);
    s1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), s1);
    s2 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 8), _mm256_loadu_pd(b + i + 8), s2);
    s3 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 12), _mm256_loadu_pd(b + i + 12), s3);
  }
  for (; i + 4 <= n; i += 4)
    s0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), s0);
  double s = hsum(_mm256_add_pd(_mm256_add_pd(s0, s1), _mm256_add_pd(s2, s3)));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

DIRACLOC_AVX2 double weighted_dot_avx2(const double* w, const double* a, const double* b,
                                       std::size_t n) {
  __m256d s0 = _mm256_setzero_pd(), s1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256d p0 = _mm256_mul_pd(_mm256_loadu_pd(w + i), _mm256_loadu_pd(a + i));
    __m256d p1 = _mm256_mul_pd(_mm256_loadu_pd(w + i + 4), _mm256_loadu_pd(a + i + 4));
    s0 = _mm256_fmadd_pd(p0, _mm256_loadu_pd(b + i), s0);
    s1 = _mm256_fmadd_pd(p1, _mm256_loadu_pd(b + i + 4), s1);
  }
  for (; i + 4 <= n; i += 4) {
    __m256d p0 = _mm256_mul_pd(_mm256_loadu_pd(w + i), _mm256_loadu_pd(a + i));
    s0 = _mm256_fmadd_pd(p0, _mm256_loadu_pd(b + i), s0);
  }
  double s = hsum(_mm256_add_pd(s0, s1));
  for (; i < n; ++i) s += w[i] * a[i] * b[i];
  return s;
}

DIRACLOC_AVX2 void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
    _mm256_storeu_pd(y + i + 4,
                     _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4)));
  }
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  for (; i < n; ++i) y[i] += alpha * x[i];
}

DIRACLOC_AVX2 void tridiag_matvec_avx2(const double* d, const double* e, const double* x,
                                       double* y, std::size_t n) {
  if (n < 8) {
    detail::scalar_table().tridiag_matvec(d, e, x, y, n);
    return;
  }
  y[0] = d[0] * x[0] + e[0] * x[1];
  std::size_t i = 1;
  for (; i + 4 < n; i += 4) {
    __m256d acc = _mm256_mul_pd(_mm256_loadu_pd(e + i - 1), _mm256_loadu_pd(x + i - 1));
    acc = _mm256_fmadd_pd(_mm256_loadu_pd(d + i), _mm256_loadu_pd(x + i), acc);
    acc = _mm256_fmadd_pd(_mm256_loadu_pd(e + i), _mm256_loadu_pd(x + i + 1), acc);
    _mm256_storeu_pd(y + i, acc);
  }
  for (; i + 1 < n; ++i) y[i] = e[i - 1] * x[i - 1] + d[i] * x[i] + e[i] * x[i + 1];
  y[n - 1] = e[n - 2] * x[n - 2] + d[n - 1] * x[n - 1];
}

// Four shifts ride in the four lanes; the operation sequence per lane matches
// the scalar recurrence exactly, so counts agree bit for bit.
DIRACLOC_AVX2 void sturm_count_avx2(const double* d, const double* e2, std::size_t n,
                                    const double* shifts, double pivmin, std::int64_t* counts) {
  const __m256d sigma = _mm256_loadu_pd(shifts);
  const __m256d vpiv = _mm256_set1_pd(pivmin);
  const __m256d negpiv = _mm256_set1_pd(-pivmin);
  const __m256d absmask = _mm256_castsi256_pd(_mm256_set1_epi64x(0x7fffffffffffffffLL));
  const __m256d zero = _mm256_setzero_pd();

  __m256i c = _mm256_setzero_si256();
  __m256d q = _mm256_sub_pd(_mm256_set1_pd(d[0]), sigma);
  __m256d small = _mm256_cmp_pd(_mm256_and_pd(q, absmask), vpiv, _CMP_LT_OQ);
  q = _mm256_blendv_pd(q, negpiv, small);
  c = _mm256_sub_epi64(c, _mm256_castpd_si256(_mm256_cmp_pd(q, zero, _CMP_LT_OQ)));
  for (std::size_t i = 1; i < n; ++i) {
    __m256d t = _mm256_sub_pd(_mm256_set1_pd(d[i]), sigma);
    q = _mm256_sub_pd(t, _mm256_div_pd(_mm256_set1_pd(e2[i - 1]), q));
    small = _mm256_cmp_pd(_mm256_and_pd(q, absmask), vpiv, _CMP_LT_OQ);
    q = _mm256_blendv_pd(q, negpiv, small);
    c = _mm256_sub_epi64(c, _mm256_castpd_si256(_mm256_cmp_pd(q, zero, _CMP_LT_OQ)));
  }
  _mm256_storeu_si256(reinterpret_cast<__m256i*>(counts), c);
}

constexpr KernelTable kAvx2{
    Isa::avx2, dot_avx2, weighted_dot_avx2, axpy_avx2, tridiag_matvec_avx2, sturm_count_avx2,
};

}  // namespace

namespace detail {
const KernelTable* avx2_table() noexcept { return &kAvx2; }
}  // namespace detail

}  // namespace diracloc::simd

#else

namespace diracloc::simd::detail {
const KernelTable* avx2_table() noexcept { return nullptr; }
}  // namespace diracloc::simd::detail

#endif
