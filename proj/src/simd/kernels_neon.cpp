#include "diracloc/simd/kernels.hpp"

#include <arm_neon.h>

#include <cmath>

namespace diracloc::simd {
namespace {

double dot_neon(const double* a, const double* b, std::size_t n) {
  float64x2_t s0 = vdupq_n_f64(0.0), s1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    s0 = vfmaq_f64(s0, vld1q_f64(a + i), vld1q_f64(b + i));
    s1 = vfmaq_f64(s1, vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
  }
  double s = vaddvq_f64(vaddq_f64(s0, s1));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

double weighted_dot_neon(const double* w, const double* a, const double* b, std::size_t n) {
  float64x2_t s0 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2)
    s0 = vfmaq_f64(s0, vmulq_f64(vld1q_f64(w + i), vld1q_f64(a + i)), vld1q_f64(b + i));
  double s = vaddvq_f64(s0);
  for (; i < n; ++i) s += w[i] * a[i] * b[i];
  return s;
}

void axpy_neon(double alpha, const double* x, double* y, std::size_t n) {
  const float64x2_t va = vdupq_n_f64(alpha);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), va, vld1q_f64(x + i)));
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void tridiag_matvec_neon(const double* d, const double* e, const double* x, double* y,
                         std::size_t n) {
  if (n < 4) {
    detail::scalar_table().tridiag_matvec(d, e, x, y, n);
    return;
  }
  y[0] = d[0] * x[0] + e[0] * x[1];
  std::size_t i = 1;
  for (; i + 2 < n; i += 2) {
    float64x2_t acc = vmulq_f64(vld1q_f64(e + i - 1), vld1q_f64(x + i - 1));
    acc = vfmaq_f64(acc, vld1q_f64(d + i), vld1q_f64(x + i));
    acc = vfmaq_f64(acc, vld1q_f64(e + i), vld1q_f64(x + i + 1));
    vst1q_f64(y + i, acc);
  }
  for (; i + 1 < n; ++i) y[i] = e[i - 1] * x[i - 1] + d[i] * x[i] + e[i] * x[i + 1];
  y[n - 1] = e[n - 2] * x[n - 2] + d[n - 1] * x[n - 1];
}

// Two lanes per register, two registers for the four shifts.
void sturm_count_neon(const double* d, const double* e2, std::size_t n, const double* shifts,
                      double pivmin, std::int64_t* counts) {
  const float64x2_t vpiv = vdupq_n_f64(pivmin);
  const float64x2_t negpiv = vdupq_n_f64(-pivmin);
  const float64x2_t zero = vdupq_n_f64(0.0);
  for (std::size_t half = 0; half < 2; ++half) {
    const float64x2_t sigma = vld1q_f64(shifts + 2 * half);
    int64x2_t c = vdupq_n_s64(0);
    float64x2_t q = vsubq_f64(vdupq_n_f64(d[0]), sigma);
    q = vbslq_f64(vcltq_f64(vabsq_f64(q), vpiv), negpiv, q);
    c = vsubq_s64(c, vreinterpretq_s64_u64(vcltq_f64(q, zero)));
    for (std::size_t i = 1; i < n; ++i) {
      float64x2_t t = vsubq_f64(vdupq_n_f64(d[i]), sigma);
      q = vsubq_f64(t, vdivq_f64(vdupq_n_f64(e2[i - 1]), q));
      q = vbslq_f64(vcltq_f64(vabsq_f64(q), vpiv), negpiv, q);
      c = vsubq_s64(c, vreinterpretq_s64_u64(vcltq_f64(q, zero)));
    }
    vst1q_s64(counts + 2 * half, c);
  }
}

constexpr KernelTable kNeon{
    Isa::neon, dot_neon, weighted_dot_neon, axpy_neon, tridiag_matvec_neon, sturm_count_neon,
};

}  // namespace

namespace detail {
const KernelTable* neon_table() noexcept { return &kNeon; }
}  // namespace detail

}  // namespace diracloc::simd
