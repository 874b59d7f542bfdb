#include <cstdlib>
#include <string>

#include "diracloc/error.hpp"
#include "diracloc/simd/kernels.hpp"

namespace diracloc::simd {

#if !(defined(__aarch64__) || defined(_M_ARM64))
namespace detail {
const KernelTable* neon_table() noexcept { return nullptr; }
}  // namespace detail
#endif

std::string_view to_string(Isa isa) noexcept {
  switch (isa) {
    case Isa::scalar: return "scalar";
    case Isa::avx2: return "avx2";
    case Isa::neon: return "neon";
  }
  return "unknown";
}

bool supported(Isa isa) noexcept {
  switch (isa) {
    case Isa::scalar:
      return true;
    case Isa::avx2:
#if defined(__x86_64__) || defined(_M_X64)
      return detail::avx2_table() != nullptr && __builtin_cpu_supports("avx2") &&
             __builtin_cpu_supports("fma");
#else
      return false;
#endif
    case Isa::neon:
      return detail::neon_table() != nullptr;
  }
  return false;
}

const KernelTable& table(Isa isa) {
  if (!supported(isa))
    throw PreconditionError("SIMD variant '" + std::string(to_string(isa)) +
                            "' is not available on this machine");
  switch (isa) {
    case Isa::avx2: return *detail::avx2_table();
    case Isa::neon: return *detail::neon_table();
    case Isa::scalar: break;
  }
  return detail::scalar_table();
}

namespace {

const KernelTable& select() {
  if (const char* forced = std::getenv("DIRACLOC_SIMD")) {
    const std::string_view f(forced);
    for (Isa isa : {Isa::scalar, Isa::avx2, Isa::neon})
      if (f == to_string(isa) && supported(isa)) return table(isa);
  }
  if (supported(Isa::avx2)) return table(Isa::avx2);
  if (supported(Isa::neon)) return table(Isa::neon);
  return detail::scalar_table();
}

}  // namespace

const KernelTable& active() {
  static const KernelTable& t = select();
  return t;
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw PreconditionError("dot: length mismatch");
  return active().dot(a.data(), b.data(), a.size());
}

double weighted_dot(std::span<const double> w, std::span<const double> a,
                    std::span<const double> b) {
  if (a.size() != b.size() || w.size() != a.size())
    throw PreconditionError("weighted_dot: length mismatch");
  return active().weighted_dot(w.data(), a.data(), b.data(), a.size());
}

double weighted_sum_sq(std::span<const double> w, std::span<const double> a) {
  return weighted_dot(w, a, a);
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  if (x.size() != y.size()) throw PreconditionError("axpy: length mismatch");
  active().axpy(alpha, x.data(), y.data(), x.size());
}

}  // namespace diracloc::simd
