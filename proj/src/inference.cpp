#include "rdrn/inference.hpp"

#include <algorithm>

#include "rdrn/degradation.hpp"
#include "rdrn/dihedral.hpp"
#include "rdrn/error.hpp"

namespace rdrn {

namespace {

void check_input(const Tensor& lr) {
  if (lr.n() != 1 || lr.c() != 3) {
    throw InputError("expected a (1, 3, H, W) image, got " + lr.shape().str());
  }
  if (lr.h() < 1 || lr.w() < 1) throw InputError("empty input image");
}

void check_output(const Tensor& sr, const Tensor& lr, int r) {
  if (sr.shape() != Shape{1, 3, r * lr.h(), r * lr.w()}) {
    throw ShapeError("upscaler returned " + sr.shape().str() + " for input " + lr.shape().str());
  }
}

// Pairwise sum keeps the result independent of branch order when all the
// branches agree.
Tensor mean_of(std::vector<Tensor> xs) {
  while (xs.size() > 1) {
    std::vector<Tensor> next;
    for (std::size_t i = 0; i + 1 < xs.size(); i += 2) {
      Tensor s = xs[i];
      const float* b = xs[i + 1].data();
      float* d = s.data();
      for (std::size_t k = 0; k < s.numel(); ++k) d[k] += b[k];
      next.push_back(std::move(s));
    }
    if (xs.size() % 2) next.push_back(std::move(xs.back()));
    xs = std::move(next);
  }
  return xs.front();
}

}  // namespace

Tensor BicubicUpscaler::upscale(const Tensor& lr) const {
  return bicubic_resize(lr, static_cast<double>(scale_));
}

Tensor NearestUpscaler::upscale(const Tensor& lr) const {
  const int r = scale_;
  Tensor out({lr.n(), lr.c(), lr.h() * r, lr.w() * r});
  for (int n = 0; n < lr.n(); ++n) {
    for (int c = 0; c < lr.c(); ++c) {
      for (int y = 0; y < out.h(); ++y) {
        for (int x = 0; x < out.w(); ++x) out.at(n, c, y, x) = lr.at(n, c, y / r, x / r);
      }
    }
  }
  return out;
}

Tensor superresolve(const Upscaler& up, const Tensor& lr, std::optional<int> tile, int overlap) {
  check_input(lr);
  const int r = up.scale();
  if (!tile) {
    Tensor sr = up.upscale(lr);
    check_output(sr, lr, r);
    return sr;
  }
  if (overlap < 0) throw InputError("tile overlap must be non-negative");
  if (*tile < overlap || *tile < 1) {
    throw InputError("tile size " + std::to_string(*tile) + " is smaller than the overlap " +
                     std::to_string(overlap));
  }
  const int t = *tile;
  const int h = lr.h(), w = lr.w();
  Tensor out({1, 3, h * r, w * r});
  for (int y0 = 0; y0 < h; y0 += t) {
    for (int x0 = 0; x0 < w; x0 += t) {
      const int th = std::min(t, h - y0), tw = std::min(t, w - x0);
      const int cy0 = std::max(0, y0 - overlap), cx0 = std::max(0, x0 - overlap);
      const int cy1 = std::min(h, y0 + th + overlap), cx1 = std::min(w, x0 + tw + overlap);
      const Tensor patch = crop(lr, cy0, cx0, cy1 - cy0, cx1 - cx0);
      const Tensor sr = up.upscale(patch);
      check_output(sr, patch, r);
      const int oy = (y0 - cy0) * r, ox = (x0 - cx0) * r;
      for (int c = 0; c < 3; ++c) {
        for (int y = 0; y < th * r; ++y) {
          const float* src = sr.plane(0, c) + static_cast<std::size_t>(oy + y) * sr.w() + ox;
          std::copy_n(src, tw * r, &out.at(0, c, y0 * r + y, x0 * r));
        }
      }
    }
  }
  return out;
}

std::vector<Tensor> ensemble_branches(const Upscaler& up, const Tensor& lr, std::optional<int> tile,
                                      int overlap) {
  check_input(lr);
  std::vector<Tensor> branches;
  branches.reserve(kDihedralCount);
  for (int t = 0; t < kDihedralCount; ++t) {
    branches.push_back(dihedral_inverse(superresolve(up, dihedral_apply(lr, t), tile, overlap), t));
  }
  return branches;
}

Tensor self_ensemble(const Upscaler& up, const Tensor& lr, std::optional<int> tile, int overlap) {
  Tensor sum = mean_of(ensemble_branches(up, lr, tile, overlap));
  for (float& v : sum.values()) v *= 1.0f / kDihedralCount;
  return sum;
}

}  // namespace rdrn
