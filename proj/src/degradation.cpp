#include "rdrn/degradation.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <random>
#include <sstream>

#include "rdrn/error.hpp"

namespace rdrn {

std::string to_string(DegradationKind kind) {
  switch (kind) {
    case DegradationKind::BI:
      return "BI";
    case DegradationKind::BD:
      return "BD";
    case DegradationKind::DN:
      return "DN";
  }
  return "?";
}

DegradationKind parse_degradation_kind(const std::string& s) {
  std::string u = s;
  std::transform(u.begin(), u.end(), u.begin(), [](unsigned char c) { return std::toupper(c); });
  if (u == "BI") return DegradationKind::BI;
  if (u == "BD") return DegradationKind::BD;
  if (u == "DN") return DegradationKind::DN;
  throw ConfigError("unknown degradation kind '" + s + "' (expected BI, BD or DN)");
}

void DegradationSpec::validate() const {
  if (scale < 1) throw ConfigError("degradation scale must be positive");
  if (kind == DegradationKind::BD) {
    if (blur_kernel_size < 1 || blur_kernel_size % 2 == 0) {
      throw ConfigError("BD blur kernel size must be a positive odd integer");
    }
    if (!(blur_sigma > 0.0)) throw ConfigError("BD blur sigma must be positive");
  }
  if (kind == DegradationKind::DN && !(noise_sigma >= 0.0)) {
    throw ConfigError("DN noise sigma must be non-negative");
  }
}

std::string DegradationSpec::canonical() const {
  std::ostringstream os;
  os << std::setprecision(17) << "kind=" << to_string(kind) << ";scale=" << scale;
  if (kind == DegradationKind::BD) os << ";kernel=" << blur_kernel_size << ";sigma=" << blur_sigma;
  if (kind == DegradationKind::DN) os << ";noise=" << noise_sigma << ";seed=" << rng_seed;
  return os.str();
}

std::string DegradationSpec::hash_hex() const {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : canonical()) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

DegradationSpec DegradationSpec::bd_default(int scale) {
  DegradationSpec s;
  s.kind = DegradationKind::BD;
  s.scale = scale;
  return s;
}

DegradationSpec DegradationSpec::dn_default(int scale) {
  DegradationSpec s;
  s.kind = DegradationKind::DN;
  s.scale = scale;
  return s;
}

double cubic_kernel(double x) {
  const double ax = std::fabs(x);
  const double ax2 = ax * ax, ax3 = ax2 * ax;
  if (ax <= 1.0) return 1.5 * ax3 - 2.5 * ax2 + 1.0;
  if (ax <= 2.0) return -0.5 * ax3 + 2.5 * ax2 - 4.0 * ax + 2.0;
  return 0.0;
}

namespace {

struct Contribution {
  std::vector<int> index;
  std::vector<double> weight;
};

// Per-output-sample source indices and weights along one axis.
std::vector<Contribution> contributions(int in_len, int out_len, double scale) {
  const bool antialias = scale < 1.0;
  const double kernel_width = antialias ? 4.0 / scale : 4.0;
  const int taps = static_cast<int>(std::ceil(kernel_width)) + 2;
  std::vector<Contribution> out(out_len);
  for (int o = 0; o < out_len; ++o) {
    // 1-based output coordinate mapped to 1-based input coordinate.
    const double u = (o + 1) / scale + 0.5 * (1.0 - 1.0 / scale);
    const int left = static_cast<int>(std::floor(u - kernel_width / 2.0));
    double total = 0.0;
    Contribution c;
    for (int t = 0; t < taps; ++t) {
      const int idx = left + t;
      const double d = u - idx;
      const double wgt = antialias ? scale * cubic_kernel(scale * d) : cubic_kernel(d);
      if (wgt == 0.0) continue;
      // Symmetric extension: 1..n, n..1, repeated.
      int m = (idx - 1) % (2 * in_len);
      if (m < 0) m += 2 * in_len;
      const int src = m < in_len ? m : 2 * in_len - 1 - m;
      c.index.push_back(src);
      c.weight.push_back(wgt);
      total += wgt;
    }
    for (double& wgt : c.weight) wgt /= total;
    out[o] = std::move(c);
  }
  return out;
}

}  // namespace

Tensor bicubic_resize(const Tensor& img, double scale_factor) {
  if (!(scale_factor > 0.0)) throw InputError("bicubic_resize: scale factor must be positive");
  const int out_h = static_cast<int>(std::lround(img.h() * scale_factor));
  const int out_w = static_cast<int>(std::lround(img.w() * scale_factor));
  if (out_h < 1 || out_w < 1) throw InputError("bicubic_resize: output extent below 1 pixel");
  if (scale_factor == 1.0) return img;

  const auto ch = contributions(img.h(), out_h, scale_factor);
  const auto cw = contributions(img.w(), out_w, scale_factor);
  Tensor out({img.n(), img.c(), out_h, out_w});
  std::vector<double> tmp(static_cast<std::size_t>(out_h) * img.w());
  for (int n = 0; n < img.n(); ++n) {
    for (int c = 0; c < img.c(); ++c) {
      const float* p = img.plane(n, c);
      for (int y = 0; y < out_h; ++y) {
        for (int x = 0; x < img.w(); ++x) {
          double s = 0.0;
          for (std::size_t t = 0; t < ch[y].index.size(); ++t) {
            s += ch[y].weight[t] * p[static_cast<std::size_t>(ch[y].index[t]) * img.w() + x];
          }
          tmp[static_cast<std::size_t>(y) * img.w() + x] = s;
        }
      }
      float* o = out.plane(n, c);
      for (int y = 0; y < out_h; ++y) {
        const double* row = tmp.data() + static_cast<std::size_t>(y) * img.w();
        for (int x = 0; x < out_w; ++x) {
          double s = 0.0;
          for (std::size_t t = 0; t < cw[x].index.size(); ++t) s += cw[x].weight[t] * row[cw[x].index[t]];
          o[static_cast<std::size_t>(y) * out_w + x] = static_cast<float>(s);
        }
      }
    }
  }
  return out;
}

std::vector<double> gaussian_kernel(int size, double sigma) {
  if (size < 1 || size % 2 == 0) throw ConfigError("Gaussian kernel size must be odd");
  if (!(sigma > 0.0)) throw ConfigError("Gaussian sigma must be positive");
  const int r = size / 2;
  std::vector<double> k(static_cast<std::size_t>(size) * size);
  double total = 0.0;
  for (int i = -r; i <= r; ++i) {
    for (int j = -r; j <= r; ++j) {
      const double v = std::exp(-(i * i + j * j) / (2.0 * sigma * sigma));
      k[static_cast<std::size_t>(i + r) * size + (j + r)] = v;
      total += v;
    }
  }
  for (double& v : k) v /= total;
  return k;
}

Tensor gaussian_blur(const Tensor& img, int size, double sigma) {
  const auto k = gaussian_kernel(size, sigma);
  const int r = size / 2;
  const int h = img.h(), w = img.w();
  Tensor out(img.shape());
  for (int n = 0; n < img.n(); ++n) {
    for (int c = 0; c < img.c(); ++c) {
      const float* p = img.plane(n, c);
      float* o = out.plane(n, c);
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
          double s = 0.0;
          for (int i = -r; i <= r; ++i) {
            const int yy = std::clamp(y + i, 0, h - 1);
            for (int j = -r; j <= r; ++j) {
              const int xx = std::clamp(x + j, 0, w - 1);
              s += k[static_cast<std::size_t>(i + r) * size + (j + r)] * p[static_cast<std::size_t>(yy) * w + xx];
            }
          }
          o[static_cast<std::size_t>(y) * w + x] = static_cast<float>(s);
        }
      }
    }
  }
  return out;
}

Tensor crop_to_multiple(const Tensor& img, int scale) {
  const int h = img.h() - img.h() % scale;
  const int w = img.w() - img.w() % scale;
  if (h < scale || w < scale) throw InputError("image smaller than the scale factor");
  if (h == img.h() && w == img.w()) return img;
  return crop(img, 0, 0, h, w);
}

Tensor degrade(const Tensor& hr, const DegradationSpec& spec) {
  spec.validate();
  const Tensor src = crop_to_multiple(hr, spec.scale);
  const double factor = 1.0 / spec.scale;
  switch (spec.kind) {
    case DegradationKind::BI:
      return bicubic_resize(src, factor);
    case DegradationKind::BD:
      return bicubic_resize(gaussian_blur(src, spec.blur_kernel_size, spec.blur_sigma), factor);
    case DegradationKind::DN: {
      Tensor lr = bicubic_resize(src, factor);
      std::mt19937_64 rng(spec.rng_seed);
      std::normal_distribution<double> noise(0.0, spec.noise_sigma / 255.0);
      for (auto& v : lr.values()) {
        v = static_cast<float>(std::clamp(v + noise(rng), 0.0, 1.0));
      }
      return lr;
    }
  }
  throw ConfigError("unknown degradation kind");
}

}  // namespace rdrn
