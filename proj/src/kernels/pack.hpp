#pragma once

#include <vector>

namespace rdrn::kernels::detail {

// Copies op(src) (rows x cols after transposition) into a dense row-major buffer.
inline const float* pack(bool trans, int rows, int cols, const float* src, int ld,
                         std::vector<float>& buf, int& ld_out) {
  if (!trans) {
    ld_out = ld;
    return src;
  }
  buf.resize(static_cast<std::size_t>(rows) * cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      buf[static_cast<std::size_t>(r) * cols + c] = src[static_cast<std::size_t>(c) * ld + r];
    }
  }
  ld_out = cols;
  return buf.data();
}

inline void scale_c(int m, int n, float beta, float* c, int ldc) {
  if (beta == 1.0f) return;
  for (int i = 0; i < m; ++i) {
    float* row = c + static_cast<std::size_t>(i) * ldc;
    if (beta == 0.0f) {
      for (int j = 0; j < n; ++j) row[j] = 0.0f;
    } else {
      for (int j = 0; j < n; ++j) row[j] *= beta;
    }
  }
}

}  // namespace rdrn::kernels::detail
