// AVX2 + FMA variants. This translation unit is compiled with -mavx2 -mfma and
// must only be entered after a runtime CPU check.

#include <immintrin.h>

#include <vector>

#include "pack.hpp"
#include "rdrn/kernels.hpp"

namespace rdrn::kernels::avx2 {

namespace {

// MR rows of C, 16 columns at a time, accumulating over the full k range.
template <int MR>
void block_16(int k, float alpha, const float* a, int lda, const float* b, int ldb, float* c,
              int ldc) {
  __m256 acc[MR][2];
  for (int r = 0; r < MR; ++r) {
    acc[r][0] = _mm256_loadu_ps(c + r * ldc);
    acc[r][1] = _mm256_loadu_ps(c + r * ldc + 8);
  }
  for (int p = 0; p < k; ++p) {
    const __m256 b0 = _mm256_loadu_ps(b + static_cast<std::size_t>(p) * ldb);
    const __m256 b1 = _mm256_loadu_ps(b + static_cast<std::size_t>(p) * ldb + 8);
    for (int r = 0; r < MR; ++r) {
      const __m256 av = _mm256_set1_ps(alpha * a[static_cast<std::size_t>(r) * lda + p]);
      acc[r][0] = _mm256_fmadd_ps(av, b0, acc[r][0]);
      acc[r][1] = _mm256_fmadd_ps(av, b1, acc[r][1]);
    }
  }
  for (int r = 0; r < MR; ++r) {
    _mm256_storeu_ps(c + r * ldc, acc[r][0]);
    _mm256_storeu_ps(c + r * ldc + 8, acc[r][1]);
  }
}

template <int MR>
void block_8(int k, float alpha, const float* a, int lda, const float* b, int ldb, float* c,
             int ldc) {
  __m256 acc[MR];
  for (int r = 0; r < MR; ++r) acc[r] = _mm256_loadu_ps(c + r * ldc);
  for (int p = 0; p < k; ++p) {
    const __m256 b0 = _mm256_loadu_ps(b + static_cast<std::size_t>(p) * ldb);
    for (int r = 0; r < MR; ++r) {
      const __m256 av = _mm256_set1_ps(alpha * a[static_cast<std::size_t>(r) * lda + p]);
      acc[r] = _mm256_fmadd_ps(av, b0, acc[r]);
    }
  }
  for (int r = 0; r < MR; ++r) _mm256_storeu_ps(c + r * ldc, acc[r]);
}

template <int MR>
void row_panel(int n, int k, float alpha, const float* a, int lda, const float* b, int ldb,
               float* c, int ldc) {
  int j = 0;
  for (; j + 16 <= n; j += 16) block_16<MR>(k, alpha, a, lda, b + j, ldb, c + j, ldc);
  for (; j + 8 <= n; j += 8) block_8<MR>(k, alpha, a, lda, b + j, ldb, c + j, ldc);
  for (; j < n; ++j) {
    for (int r = 0; r < MR; ++r) {
      float s = c[r * ldc + j];
      for (int p = 0; p < k; ++p) {
        s += alpha * a[static_cast<std::size_t>(r) * lda + p] * b[static_cast<std::size_t>(p) * ldb + j];
      }
      c[r * ldc + j] = s;
    }
  }
}

float hsum(__m256 v) {
  __m128 lo = _mm256_castps256_ps128(v);
  __m128 hi = _mm256_extractf128_ps(v, 1);
  __m128 s = _mm_add_ps(lo, hi);
  s = _mm_hadd_ps(s, s);
  s = _mm_hadd_ps(s, s);
  return _mm_cvtss_f32(s);
}

}  // namespace

void gemm(bool trans_a, bool trans_b, int m, int n, int k, float alpha, const float* a, int lda,
          const float* b, int ldb, float beta, float* c, int ldc) {
  detail::scale_c(m, n, beta, c, ldc);
  if (m == 0 || n == 0 || k == 0 || alpha == 0.0f) return;
  thread_local std::vector<float> abuf, bbuf;
  int pa = 0, pb = 0;
  const float* ap = detail::pack(trans_a, m, k, a, lda, abuf, pa);
  const float* bp = detail::pack(trans_b, k, n, b, ldb, bbuf, pb);
  int i = 0;
  for (; i + 4 <= m; i += 4) {
    row_panel<4>(n, k, alpha, ap + static_cast<std::size_t>(i) * pa, pa, bp, pb,
                 c + static_cast<std::size_t>(i) * ldc, ldc);
  }
  for (; i < m; ++i) {
    row_panel<1>(n, k, alpha, ap + static_cast<std::size_t>(i) * pa, pa, bp, pb,
                 c + static_cast<std::size_t>(i) * ldc, ldc);
  }
}

void axpy(int n, float alpha, const float* x, float* y) {
  const __m256 av = _mm256_set1_ps(alpha);
  int i = 0;
  for (; i + 8 <= n; i += 8) {
    _mm256_storeu_ps(y + i, _mm256_fmadd_ps(av, _mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i)));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

float dot(int n, const float* x, const float* y) {
  __m256 acc = _mm256_setzero_ps();
  int i = 0;
  for (; i + 8 <= n; i += 8) {
    acc = _mm256_fmadd_ps(_mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i), acc);
  }
  float s = hsum(acc);
  for (; i < n; ++i) s += x[i] * y[i];
  return s;
}

}  // namespace rdrn::kernels::avx2
