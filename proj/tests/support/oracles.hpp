#pragma once

// Naive double-precision loop implementations used as references for the
// library's optimised operators. Nothing here calls into src/ except to read
// parameter values.

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "rdrn/blocks.hpp"
#include "rdrn/tensor.hpp"

namespace oracle {

using rdrn::Shape;
using rdrn::Tensor;

inline Tensor random_tensor(Shape s, std::uint64_t seed, float lo = -1.0f, float hi = 1.0f) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(lo, hi);
  Tensor t(s);
  for (float& v : t.values()) v = u(rng);
  return t;
}

inline double max_abs_diff(const Tensor& a, const Tensor& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.numel(); ++i) {
    m = std::max(m, std::abs(static_cast<double>(a[i]) - b[i]));
  }
  return m;
}

inline Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor* b, int stride, int pad) {
  const int cout = w.n(), cin = w.c(), k = w.h();
  const int ho = (x.h() + 2 * pad - k) / stride + 1;
  const int wo = (x.w() + 2 * pad - k) / stride + 1;
  Tensor out({x.n(), cout, ho, wo});
  for (int n = 0; n < x.n(); ++n) {
    for (int o = 0; o < cout; ++o) {
      for (int y = 0; y < ho; ++y) {
        for (int xx = 0; xx < wo; ++xx) {
          double acc = b ? (*b)[o] : 0.0;
          for (int i = 0; i < cin; ++i) {
            for (int ky = 0; ky < k; ++ky) {
              for (int kx = 0; kx < k; ++kx) {
                const int sy = y * stride - pad + ky, sx = xx * stride - pad + kx;
                if (sy < 0 || sx < 0 || sy >= x.h() || sx >= x.w()) continue;
                acc += static_cast<double>(w.at(o, i, ky, kx)) * x.at(n, i, sy, sx);
              }
            }
          }
          out.at(n, o, y, xx) = static_cast<float>(acc);
        }
      }
    }
  }
  return out;
}

inline Tensor conv(const rdrn::Conv2d& c, const Tensor& x) {
  return conv2d(x, c.weight->value, &c.bias->value, c.stride(), c.pad());
}

template <class F>
Tensor map(const Tensor& x, F f) {
  Tensor out(x.shape());
  for (std::size_t i = 0; i < x.numel(); ++i) out[i] = static_cast<float>(f(x[i]));
  return out;
}

template <class F>
Tensor zip(const Tensor& a, const Tensor& b, F f) {
  Tensor out(a.shape());
  for (std::size_t i = 0; i < a.numel(); ++i) out[i] = static_cast<float>(f(a[i], b[i]));
  return out;
}

inline Tensor add(const Tensor& a, const Tensor& b) {
  return zip(a, b, [](double p, double q) { return p + q; });
}
inline Tensor mul(const Tensor& a, const Tensor& b) {
  return zip(a, b, [](double p, double q) { return p * q; });
}
inline Tensor lrelu(const Tensor& x, double slope) {
  return map(x, [slope](double v) { return v >= 0 ? v : slope * v; });
}
inline Tensor relu(const Tensor& x) {
  return map(x, [](double v) { return v > 0 ? v : 0.0; });
}
inline Tensor sigmoid(const Tensor& x) {
  return map(x, [](double v) { return 1.0 / (1.0 + std::exp(-v)); });
}

inline Tensor concat(const Tensor& a, const Tensor& b) {
  Tensor out({a.n(), a.c() + b.c(), a.h(), a.w()});
  for (int n = 0; n < a.n(); ++n) {
    for (int c = 0; c < out.c(); ++c) {
      for (int y = 0; y < a.h(); ++y) {
        for (int x = 0; x < a.w(); ++x) {
          out.at(n, c, y, x) = c < a.c() ? a.at(n, c, y, x) : b.at(n, c - a.c(), y, x);
        }
      }
    }
  }
  return out;
}

// Inference-mode batch normalisation with the layer's running statistics.
inline Tensor batch_norm_eval(const rdrn::BatchNorm2d& bn, const Tensor& x) {
  Tensor out(x.shape());
  for (int n = 0; n < x.n(); ++n) {
    for (int c = 0; c < x.c(); ++c) {
      const double mean = bn.running_mean->value[c];
      const double inv = 1.0 / std::sqrt(double(bn.running_var->value[c]) + rdrn::BatchNorm2d::kEps);
      for (int y = 0; y < x.h(); ++y) {
        for (int xx = 0; xx < x.w(); ++xx) {
          out.at(n, c, y, xx) = static_cast<float>((x.at(n, c, y, xx) - mean) * inv *
                                                       bn.weight->value[c] +
                                                   bn.bias->value[c]);
        }
      }
    }
  }
  return out;
}

inline Tensor max_pool(const Tensor& x, int kh, int kw, int stride) {
  const int ho = (x.h() - kh) / stride + 1, wo = (x.w() - kw) / stride + 1;
  Tensor out({x.n(), x.c(), ho, wo});
  for (int n = 0; n < x.n(); ++n) {
    for (int c = 0; c < x.c(); ++c) {
      for (int y = 0; y < ho; ++y) {
        for (int xx = 0; xx < wo; ++xx) {
          float m = -INFINITY;
          for (int i = 0; i < kh; ++i) {
            for (int j = 0; j < kw; ++j) m = std::max(m, x.at(n, c, y * stride + i, xx * stride + j));
          }
          out.at(n, c, y, xx) = m;
        }
      }
    }
  }
  return out;
}

// Half-pixel-centre bilinear interpolation with edge clamping.
inline Tensor bilinear(const Tensor& x, int oh, int ow) {
  Tensor out({x.n(), x.c(), oh, ow});
  auto src = [](int d, int in, int o, int& i0, int& i1, double& f) {
    double s = (d + 0.5) * in / o - 0.5;
    if (s < 0) s = 0;
    i0 = std::min(static_cast<int>(std::floor(s)), in - 1);
    i1 = std::min(i0 + 1, in - 1);
    f = s - i0;
  };
  for (int n = 0; n < x.n(); ++n) {
    for (int c = 0; c < x.c(); ++c) {
      for (int y = 0; y < oh; ++y) {
        int y0, y1;
        double fy;
        src(y, x.h(), oh, y0, y1, fy);
        for (int xx = 0; xx < ow; ++xx) {
          int x0, x1;
          double fx;
          src(xx, x.w(), ow, x0, x1, fx);
          const double top = (1 - fx) * x.at(n, c, y0, x0) + fx * x.at(n, c, y0, x1);
          const double bot = (1 - fx) * x.at(n, c, y1, x0) + fx * x.at(n, c, y1, x1);
          out.at(n, c, y, xx) = static_cast<float>((1 - fy) * top + fy * bot);
        }
      }
    }
  }
  return out;
}

inline Tensor esa(const rdrn::Esa& e, const Tensor& x) {
  const Tensor c1_ = conv(e.conv1, x);
  const Tensor c1 = conv(e.conv2, c1_);
  const int kh = std::min(7, c1.h()), kw = std::min(7, c1.w());
  const Tensor vmax = max_pool(c1, kh, kw, 3);
  const Tensor vrange = relu(conv(e.conv_max, vmax));
  Tensor c3 = relu(conv(e.conv3, vrange));
  c3 = conv(e.conv3b, c3);
  c3 = bilinear(c3, x.h(), x.w());
  const Tensor cf = conv(e.conv_f, c1_);
  const Tensor m = sigmoid(conv(e.conv4, add(c3, cf)));
  return mul(x, m);
}

// O(N^2) attention over all query/key pairs, keys taken at full resolution
// (valid while max(H, W) <= the key-side limit).
inline Tensor nlsa(const rdrn::Nlsa& blk, const Tensor& x) {
  const Tensor q = conv(blk.match, x);
  const Tensor kraw = conv(blk.match, x);
  const Tensor v = conv(blk.assembly, x);
  const int P = x.h() * x.w(), cq = q.c(), cv = v.c();
  Tensor out = x;
  for (int n = 0; n < x.n(); ++n) {
    std::vector<double> k(static_cast<std::size_t>(P) * cq);
    for (int j = 0; j < P; ++j) {
      double sq = 0;
      for (int c = 0; c < cq; ++c) sq += double(kraw.plane(n, c)[j]) * kraw.plane(n, c)[j];
      const double nrm = std::max(std::sqrt(sq), 1e-12);
      for (int c = 0; c < cq; ++c) k[j * cq + c] = kraw.plane(n, c)[j] / nrm;
    }
    for (int i = 0; i < P; ++i) {
      std::vector<double> logits(P);
      double mx = -INFINITY;
      for (int j = 0; j < P; ++j) {
        double d = 0;
        for (int c = 0; c < cq; ++c) d += q.plane(n, c)[i] * k[j * cq + c];
        logits[j] = d;
        mx = std::max(mx, d);
      }
      double z = 0;
      for (double& l : logits) z += (l = std::exp(l - mx));
      for (int c = 0; c < cv; ++c) {
        double acc = 0;
        for (int j = 0; j < P; ++j) acc += logits[j] / z * v.plane(n, c)[j];
        out.plane(n, c)[i] += static_cast<float>(acc);
      }
    }
  }
  return out;
}

inline Tensor leaf(const rdrn::LeafBlock& b, const Tensor& x) {
  Tensor h = lrelu(conv(b.conv, batch_norm_eval(b.norm, x)), b.negative_slope);
  const std::size_t per = x.numel() / x.n();
  for (int n = 0; n < x.n(); ++n) {
    const float* p = x.sample(n);
    double mean = 0;
    for (std::size_t i = 0; i < per; ++i) mean += p[i];
    mean /= per;
    double var = 0;
    for (std::size_t i = 0; i < per; ++i) var += (p[i] - mean) * (p[i] - mean);
    const double sd = std::max(std::sqrt(var / (per - 1)), double(rdrn::LeafBlock::kStdFloor));
    const double f =
        std::exp(b.phi.weight->value[0] * std::log(sd) + b.phi.bias->value[0]);
    float* hp = h.sample(n);
    for (std::size_t i = 0; i < per; ++i) hp[i] = static_cast<float>(hp[i] * f);
  }
  return esa(b.esa, add(h, x));
}

inline Tensor pixel_shuffle(const Tensor& x, int r) {
  const int c = x.c() / (r * r);
  Tensor out({x.n(), c, x.h() * r, x.w() * r});
  for (int n = 0; n < x.n(); ++n) {
    for (int ch = 0; ch < c; ++ch) {
      for (int i = 0; i < r; ++i) {
        for (int j = 0; j < r; ++j) {
          for (int y = 0; y < x.h(); ++y) {
            for (int xx = 0; xx < x.w(); ++xx) {
              out.at(n, ch, y * r + i, xx * r + j) = x.at(n, ch * r * r + i * r + j, y, xx);
            }
          }
        }
      }
    }
  }
  return out;
}

inline double l1(const Tensor& a, const Tensor& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.numel(); ++i) s += std::abs(double(a[i]) - b[i]);
  return s / a.numel();
}

inline double l2(const Tensor& a, const Tensor& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.numel(); ++i) s += (double(a[i]) - b[i]) * (double(a[i]) - b[i]);
  return s / a.numel();
}

// Randomises the BN running statistics so inference-mode normalisation is
// not the identity.
inline void randomize_buffers(const std::vector<rdrn::NamedVar>& buffers, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(0.5f, 1.5f), m(-0.2f, 0.2f);
  for (const auto& b : buffers) {
    const bool is_var = b.name.find("running_var") != std::string::npos;
    for (float& v : b.var->value.values()) v = is_var ? u(rng) : m(rng);
  }
}

}  // namespace oracle
