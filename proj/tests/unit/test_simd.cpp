#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "diracloc/simd/kernels.hpp"

using namespace diracloc::simd;

namespace {

std::vector<const KernelTable*> vector_tables() {
  std::vector<const KernelTable*> out;
  for (Isa isa : {Isa::avx2, Isa::neon})
    if (supported(isa)) out.push_back(&table(isa));
  return out;
}

std::vector<double> random_vec(std::mt19937_64& rng, std::size_t n, double lo, double hi) {
  std::uniform_real_distribution<double> d(lo, hi);
  std::vector<double> v(n);
  for (double& x : v) x = d(rng);
  return v;
}

}  // namespace

TEST_CASE("vector kernels match the scalar reference") {
  const auto& ref = detail::scalar_table();
  CHECK(ref.isa == Isa::scalar);
  std::mt19937_64 rng(20240601);
  for (const auto* t : vector_tables()) {
    CAPTURE(to_string(t->isa));
    for (std::size_t n : {0u, 1u, 3u, 4u, 7u, 8u, 15u, 64u, 1001u}) {
      CAPTURE(n);
      const auto a = random_vec(rng, n, -1, 1), b = random_vec(rng, n, -1, 1), w = random_vec(rng, n, 0, 2);
      double scale = 1e-300;
      for (std::size_t i = 0; i < n; ++i) scale += std::fabs(a[i] * b[i]) * (1 + w[i]);
      CHECK(std::fabs(t->dot(a.data(), b.data(), n) - ref.dot(a.data(), b.data(), n)) <= 1e-14 * scale);
      CHECK(std::fabs(t->weighted_dot(w.data(), a.data(), b.data(), n) -
                      ref.weighted_dot(w.data(), a.data(), b.data(), n)) <= 1e-14 * scale);

      auto y1 = b, y2 = b;
      t->axpy(0.37, a.data(), y1.data(), n);
      ref.axpy(0.37, a.data(), y2.data(), n);
      for (std::size_t i = 0; i < n; ++i) CHECK(y1[i] == doctest::Approx(y2[i]).epsilon(1e-15));

      if (n >= 2) {
        const auto d = random_vec(rng, n, -3, 3), e = random_vec(rng, n - 1, -1, 1);
        std::vector<double> m1(n), m2(n);
        t->tridiag_matvec(d.data(), e.data(), a.data(), m1.data(), n);
        ref.tridiag_matvec(d.data(), e.data(), a.data(), m2.data(), n);
        for (std::size_t i = 0; i < n; ++i) CHECK(m1[i] == doctest::Approx(m2[i]).epsilon(1e-14).scale(1.0));

        std::vector<double> e2(n - 1);
        for (std::size_t i = 0; i + 1 < n; ++i) e2[i] = e[i] * e[i];
        const double shifts[kSturmLanes] = {-2.5, -0.1, 0.0, 1.7};
        std::int64_t c1[kSturmLanes], c2[kSturmLanes];
        t->sturm_count(d.data(), e2.data(), n, shifts, 1e-300, c1);
        ref.sturm_count(d.data(), e2.data(), n, shifts, 1e-300, c2);
        for (std::size_t l = 0; l < kSturmLanes; ++l) CHECK(c1[l] == c2[l]);
      }
    }
  }
}

TEST_CASE("dispatch") {
  CHECK(supported(Isa::scalar));
  const auto& a = active();
  CHECK(supported(a.isa));
  CHECK(to_string(Isa::avx2) == "avx2");
}

TEST_CASE("span helpers") {
  const std::vector<double> a{1, 2, 3, 4, 5}, w{1, 1, 2, 2, 3};
  CHECK(dot(a, a) == 55.0);
  CHECK(weighted_sum_sq(w, a) == 1 + 4 + 18 + 32 + 75);
  std::vector<double> y(5, 1.0);
  axpy(2.0, a, y);
  CHECK(y[4] == 11.0);
}
