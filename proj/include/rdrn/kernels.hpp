#pragma once

// Dense float32 inner loops used by every layer.
//
// Each kernel has a scalar reference implementation and, on x86-64, an
// AVX2+FMA variant. The public entry points dispatch to the backend selected
// at runtime (auto-detected on first use, overridable with set_backend).
// Backends agree to rounding; a fixed backend is bitwise deterministic.

#include <string_view>

namespace rdrn::kernels {

enum class Backend { Scalar, Avx2 };

std::string_view backend_name(Backend b);
bool backend_available(Backend b);
Backend active_backend();
// Throws ConfigError when the backend is not available on this CPU/build.
void set_backend(Backend b);

// Row-major C[m x n] = alpha * op(A) * op(B) + beta * C, where op(A) is
// m x k and op(B) is k x n. lda/ldb/ldc are the row strides of the stored
// (untransposed) matrices.
void gemm(bool trans_a, bool trans_b, int m, int n, int k, float alpha, const float* a, int lda,
          const float* b, int ldb, float beta, float* c, int ldc);
// y += alpha * x
void axpy(int n, float alpha, const float* x, float* y);
float dot(int n, const float* x, const float* y);

namespace scalar {
void gemm(bool trans_a, bool trans_b, int m, int n, int k, float alpha, const float* a, int lda,
          const float* b, int ldb, float beta, float* c, int ldc);
void axpy(int n, float alpha, const float* x, float* y);
float dot(int n, const float* x, const float* y);
}  // namespace scalar

#if defined(__x86_64__) || defined(_M_X64)
#define RDRN_HAVE_AVX2_KERNELS 1
namespace avx2 {
void gemm(bool trans_a, bool trans_b, int m, int n, int k, float alpha, const float* a, int lda,
          const float* b, int ldb, float beta, float* c, int ldc);
void axpy(int n, float alpha, const float* x, float* y);
float dot(int n, const float* x, const float* y);
}  // namespace avx2
#endif

// RAII override of the active backend, restored on scope exit.
class ScopedBackend {
 public:
  explicit ScopedBackend(Backend b) : previous_(active_backend()) { set_backend(b); }
  ~ScopedBackend() { set_backend(previous_); }
  ScopedBackend(const ScopedBackend&) = delete;
  ScopedBackend& operator=(const ScopedBackend&) = delete;

 private:
  Backend previous_;
};

}  // namespace rdrn::kernels
