#include <vector>

#include "pack.hpp"
#include "rdrn/kernels.hpp"

namespace rdrn::kernels::scalar {

void gemm(bool trans_a, bool trans_b, int m, int n, int k, float alpha, const float* a, int lda,
          const float* b, int ldb, float beta, float* c, int ldc) {
  detail::scale_c(m, n, beta, c, ldc);
  if (m == 0 || n == 0 || k == 0 || alpha == 0.0f) return;
  thread_local std::vector<float> abuf, bbuf;
  int pa = 0, pb = 0;
  const float* pa_ptr = detail::pack(trans_a, m, k, a, lda, abuf, pa);
  const float* pb_ptr = detail::pack(trans_b, k, n, b, ldb, bbuf, pb);
  for (int i = 0; i < m; ++i) {
    float* crow = c + static_cast<std::size_t>(i) * ldc;
    const float* arow = pa_ptr + static_cast<std::size_t>(i) * pa;
    for (int p = 0; p < k; ++p) {
      const float av = alpha * arow[p];
      const float* brow = pb_ptr + static_cast<std::size_t>(p) * pb;
      for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

void axpy(int n, float alpha, const float* x, float* y) {
  for (int i = 0; i < n; ++i) y[i] += alpha * x[i];
}

float dot(int n, const float* x, const float* y) {
  float s = 0.0f;
  for (int i = 0; i < n; ++i) s += x[i] * y[i];
  return s;
}

}  // namespace rdrn::kernels::scalar
