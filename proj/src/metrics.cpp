#include "rdrn/metrics.hpp"

#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>
#include <vector>

#include "rdrn/error.hpp"

namespace rdrn {

std::string to_string(ChannelMode mode) { return mode == ChannelMode::Y ? "Y" : "RGB"; }

Tensor rgb_to_y(const Tensor& rgb) {
  if (rgb.c() != 3) {
    throw InputError("rgb_to_y expects 3 channels, got " + std::to_string(rgb.c()));
  }
  Tensor y({rgb.n(), 1, rgb.h(), rgb.w()});
  const std::size_t pl = rgb.shape().plane();
  for (int n = 0; n < rgb.n(); ++n) {
    const float* r = rgb.plane(n, 0);
    const float* g = rgb.plane(n, 1);
    const float* b = rgb.plane(n, 2);
    float* o = y.plane(n, 0);
    for (std::size_t i = 0; i < pl; ++i) {
      const double v = 65.481 * r[i] + 128.553 * g[i] + 24.966 * b[i] + 16.0;
      o[i] = static_cast<float>(v / 255.0);
    }
  }
  return y;
}

namespace {

Tensor prepare(const Tensor& img, int shave, ChannelMode mode) {
  if (shave < 0 || 2 * shave >= img.h() || 2 * shave >= img.w()) {
    throw InputError("shave of " + std::to_string(shave) + " leaves an empty region for " +
                     img.shape().str());
  }
  const Tensor src = mode == ChannelMode::Y ? rgb_to_y(img) : img;
  if (shave == 0) return src;
  return crop(src, shave, shave, src.h() - 2 * shave, src.w() - 2 * shave);
}

std::vector<double> window_1d() {
  constexpr int kSize = 11;
  constexpr double kSigma = 1.5;
  std::vector<double> w(kSize);
  double total = 0.0;
  for (int i = 0; i < kSize; ++i) {
    const double d = i - kSize / 2;
    w[i] = std::exp(-d * d / (2.0 * kSigma * kSigma));
    total += w[i];
  }
  for (double& v : w) v /= total;
  return w;
}

// Separable 'valid' Gaussian filter of one plane.
std::vector<double> filter_valid(const std::vector<double>& src, int h, int w,
                                 const std::vector<double>& win) {
  const int k = static_cast<int>(win.size());
  const int oh = h - k + 1, ow = w - k + 1;
  std::vector<double> tmp(static_cast<std::size_t>(oh) * w);
  for (int y = 0; y < oh; ++y) {
    for (int x = 0; x < w; ++x) {
      double s = 0.0;
      for (int i = 0; i < k; ++i) s += win[i] * src[static_cast<std::size_t>(y + i) * w + x];
      tmp[static_cast<std::size_t>(y) * w + x] = s;
    }
  }
  std::vector<double> out(static_cast<std::size_t>(oh) * ow);
  for (int y = 0; y < oh; ++y) {
    for (int x = 0; x < ow; ++x) {
      double s = 0.0;
      for (int j = 0; j < k; ++j) s += win[j] * tmp[static_cast<std::size_t>(y) * w + x + j];
      out[static_cast<std::size_t>(y) * ow + x] = s;
    }
  }
  return out;
}

double ssim_plane(const float* a, const float* b, int h, int w) {
  constexpr double c1 = 0.01 * 0.01;
  constexpr double c2 = 0.03 * 0.03;
  static const std::vector<double> win = window_1d();
  const std::size_t n = static_cast<std::size_t>(h) * w;
  std::vector<double> pa(n), pb(n), aa(n), bb(n), ab(n);
  for (std::size_t i = 0; i < n; ++i) {
    pa[i] = a[i];
    pb[i] = b[i];
    aa[i] = pa[i] * pa[i];
    bb[i] = pb[i] * pb[i];
    ab[i] = pa[i] * pb[i];
  }
  const auto mu_a = filter_valid(pa, h, w, win);
  const auto mu_b = filter_valid(pb, h, w, win);
  const auto e_aa = filter_valid(aa, h, w, win);
  const auto e_bb = filter_valid(bb, h, w, win);
  const auto e_ab = filter_valid(ab, h, w, win);
  double total = 0.0;
  for (std::size_t i = 0; i < mu_a.size(); ++i) {
    const double ma = mu_a[i], mb = mu_b[i];
    const double va = e_aa[i] - ma * ma;
    const double vb = e_bb[i] - mb * mb;
    const double cov = e_ab[i] - ma * mb;
    total += ((2 * ma * mb + c1) * (2 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
  }
  return total / static_cast<double>(mu_a.size());
}

}  // namespace

double psnr(const Tensor& a, const Tensor& b, int shave, ChannelMode mode) {
  check_same_shape(a, b, "psnr");
  const Tensor pa = prepare(a, shave, mode);
  const Tensor pb = prepare(b, shave, mode);
  double sum = 0.0;
  for (std::size_t i = 0; i < pa.numel(); ++i) {
    const double d = static_cast<double>(pa[i]) - pb[i];
    sum += d * d;
  }
  const double mse = sum / static_cast<double>(pa.numel());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / mse);
}

double ssim(const Tensor& a, const Tensor& b, int shave, ChannelMode mode) {
  check_same_shape(a, b, "ssim");
  const Tensor pa = prepare(a, shave, mode);
  const Tensor pb = prepare(b, shave, mode);
  if (pa.h() < 11 || pa.w() < 11) {
    throw InputError("ssim: region " + pa.shape().str() + " smaller than the 11x11 window");
  }
  double total = 0.0;
  int planes = 0;
  for (int n = 0; n < pa.n(); ++n) {
    for (int c = 0; c < pa.c(); ++c, ++planes) {
      total += ssim_plane(pa.plane(n, c), pb.plane(n, c), pa.h(), pa.w());
    }
  }
  return total / planes;
}

MetricResult evaluate(const Tensor& sr, const Tensor& hr, int shave, ChannelMode mode) {
  return {psnr(sr, hr, shave, mode), ssim(sr, hr, shave, mode), mode, shave};
}

std::string format_psnr(double db, int precision) {
  if (std::isinf(db)) return "inf";
  std::ostringstream os;
  os << std::fixed << std::setprecision(precision) << db;
  return os.str();
}

}  // namespace rdrn
