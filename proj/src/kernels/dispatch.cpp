#include <atomic>

#include "rdrn/error.hpp"
#include "rdrn/kernels.hpp"

namespace rdrn::kernels {

namespace {

Backend detect() {
#if defined(RDRN_HAVE_AVX2_KERNELS) && (defined(__GNUC__) || defined(__clang__))
  if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma")) return Backend::Avx2;
#endif
  return Backend::Scalar;
}

std::atomic<Backend>& current() {
  static std::atomic<Backend> backend{detect()};
  return backend;
}

}  // namespace

std::string_view backend_name(Backend b) {
  switch (b) {
    case Backend::Scalar:
      return "scalar";
    case Backend::Avx2:
      return "avx2";
  }
  return "unknown";
}

bool backend_available(Backend b) {
  if (b == Backend::Scalar) return true;
#if defined(RDRN_HAVE_AVX2_KERNELS) && (defined(__GNUC__) || defined(__clang__))
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Backend active_backend() { return current().load(std::memory_order_relaxed); }

void set_backend(Backend b) {
  if (!backend_available(b)) {
    throw ConfigError("kernel backend '" + std::string(backend_name(b)) + "' is not available");
  }
  current().store(b, std::memory_order_relaxed);
}

void gemm(bool trans_a, bool trans_b, int m, int n, int k, float alpha, const float* a, int lda,
          const float* b, int ldb, float beta, float* c, int ldc) {
#ifdef RDRN_HAVE_AVX2_KERNELS
  if (active_backend() == Backend::Avx2) {
    avx2::gemm(trans_a, trans_b, m, n, k, alpha, a, lda, b, ldb, beta, c, ldc);
    return;
  }
#endif
  scalar::gemm(trans_a, trans_b, m, n, k, alpha, a, lda, b, ldb, beta, c, ldc);
}

void axpy(int n, float alpha, const float* x, float* y) {
#ifdef RDRN_HAVE_AVX2_KERNELS
  if (active_backend() == Backend::Avx2) return avx2::axpy(n, alpha, x, y);
#endif
  scalar::axpy(n, alpha, x, y);
}

float dot(int n, const float* x, const float* y) {
#ifdef RDRN_HAVE_AVX2_KERNELS
  if (active_backend() == Backend::Avx2) return avx2::dot(n, x, y);
#endif
  return scalar::dot(n, x, y);
}

}  // namespace rdrn::kernels
