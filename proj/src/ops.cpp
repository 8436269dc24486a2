#include "rdrn/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rdrn/error.hpp"
#include "rdrn/kernels.hpp"

namespace rdrn::ops {

namespace {

void require(const Var& v, const char* what) {
  if (!v || v->value.empty()) throw InputError(std::string(what) + ": empty input");
}

void im2col(const float* x, int c, int h, int w, int k, int stride, int pad, int oh, int ow,
            float* col) {
  const std::size_t opl = static_cast<std::size_t>(oh) * ow;
  for (int ci = 0; ci < c; ++ci) {
    const float* plane = x + static_cast<std::size_t>(ci) * h * w;
    for (int ki = 0; ki < k; ++ki) {
      for (int kj = 0; kj < k; ++kj) {
        float* row = col + (static_cast<std::size_t>(ci) * k * k + ki * k + kj) * opl;
        for (int y = 0; y < oh; ++y) {
          const int iy = y * stride - pad + ki;
          float* dst = row + static_cast<std::size_t>(y) * ow;
          if (iy < 0 || iy >= h) {
            std::fill_n(dst, ow, 0.0f);
            continue;
          }
          const float* src = plane + static_cast<std::size_t>(iy) * w;
          for (int xo = 0; xo < ow; ++xo) {
            const int ix = xo * stride - pad + kj;
            dst[xo] = (ix >= 0 && ix < w) ? src[ix] : 0.0f;
          }
        }
      }
    }
  }
}

void col2im(const float* col, int c, int h, int w, int k, int stride, int pad, int oh, int ow,
            float* x) {
  const std::size_t opl = static_cast<std::size_t>(oh) * ow;
  for (int ci = 0; ci < c; ++ci) {
    float* plane = x + static_cast<std::size_t>(ci) * h * w;
    for (int ki = 0; ki < k; ++ki) {
      for (int kj = 0; kj < k; ++kj) {
        const float* row = col + (static_cast<std::size_t>(ci) * k * k + ki * k + kj) * opl;
        for (int y = 0; y < oh; ++y) {
          const int iy = y * stride - pad + ki;
          if (iy < 0 || iy >= h) continue;
          const float* src = row + static_cast<std::size_t>(y) * ow;
          float* dst = plane + static_cast<std::size_t>(iy) * w;
          for (int xo = 0; xo < ow; ++xo) {
            const int ix = xo * stride - pad + kj;
            if (ix >= 0 && ix < w) dst[ix] += src[xo];
          }
        }
      }
    }
  }
}

template <class F, class G>
Var unary(const Var& x, F forward, G derivative) {
  require(x, "unary op");
  Tensor out(x->value.shape());
  const float* in = x->value.data();
  float* o = out.data();
  for (std::size_t i = 0; i < out.numel(); ++i) o[i] = forward(in[i]);
  return make_result(std::move(out), {x}, [derivative](Node& self) {
    Node& px = *self.parents[0];
    if (!px.requires_grad) return;
    Tensor& gx = px.grad_buffer();
    const float* g = self.grad.data();
    const float* xin = px.value.data();
    const float* y = self.value.data();
    for (std::size_t i = 0; i < gx.numel(); ++i) gx[i] += g[i] * derivative(xin[i], y[i]);
  });
}

}  // namespace

int conv_out_size(int in, int kernel, int stride, int pad) {
  return (in + 2 * pad - kernel) / stride + 1;
}

Var conv2d(const Var& x, const Var& weight, const Var& bias, int stride, int pad) {
  require(x, "conv2d");
  const Shape xs = x->value.shape();
  const Shape ws = weight->value.shape();
  if (ws.c != xs.c) {
    throw ShapeError("conv2d: input has " + std::to_string(xs.c) + " channels, weight expects " +
                     std::to_string(ws.c));
  }
  if (ws.h != ws.w) throw ShapeError("conv2d: non-square kernel");
  const int k = ws.h;
  const int cout = ws.n;
  const int oh = conv_out_size(xs.h, k, stride, pad);
  const int ow = conv_out_size(xs.w, k, stride, pad);
  if (oh < 1 || ow < 1) throw ShapeError("conv2d: input " + xs.str() + " too small for kernel");
  if (bias && bias->value.numel() != static_cast<std::size_t>(cout)) {
    throw ShapeError("conv2d: bias size mismatch");
  }

  const int ckk = xs.c * k * k;
  const int opl = oh * ow;
  const bool direct = (k == 1 && stride == 1 && pad == 0);
  Tensor out({xs.n, cout, oh, ow});
  std::vector<float> col(direct ? 0 : static_cast<std::size_t>(ckk) * opl);
  for (int n = 0; n < xs.n; ++n) {
    const float* src = x->value.sample(n);
    if (!direct) im2col(src, xs.c, xs.h, xs.w, k, stride, pad, oh, ow, col.data());
    float* dst = out.sample(n);
    if (bias) {
      for (int co = 0; co < cout; ++co) std::fill_n(dst + static_cast<std::size_t>(co) * opl, opl, bias->value[co]);
    }
    kernels::gemm(false, false, cout, opl, ckk, 1.0f, weight->value.data(), ckk,
                  direct ? src : col.data(), opl, bias ? 1.0f : 0.0f, dst, opl);
  }

  return make_result(std::move(out), {x, weight, bias}, [=](Node& self) {
    Node& px = *self.parents[0];
    Node& pw = *self.parents[1];
    Node* pb = self.parents[2].get();
    std::vector<float> colb(direct ? 0 : static_cast<std::size_t>(ckk) * opl);
    std::vector<float> dcol(static_cast<std::size_t>(ckk) * opl);
    for (int n = 0; n < xs.n; ++n) {
      const float* g = self.grad.sample(n);
      if (pw.requires_grad) {
        const float* src = px.value.sample(n);
        if (!direct) im2col(src, xs.c, xs.h, xs.w, k, stride, pad, oh, ow, colb.data());
        kernels::gemm(false, true, cout, ckk, opl, 1.0f, g, opl, direct ? src : colb.data(), opl,
                      1.0f, pw.grad_buffer().data(), ckk);
      }
      if (pb && pb->requires_grad) {
        Tensor& gb = pb->grad_buffer();
        for (int co = 0; co < cout; ++co) {
          const float* gp = g + static_cast<std::size_t>(co) * opl;
          float s = 0.0f;
          for (int i = 0; i < opl; ++i) s += gp[i];
          gb[co] += s;
        }
      }
      if (px.requires_grad) {
        float* gx = px.grad_buffer().sample(n);
        if (direct) {
          kernels::gemm(true, false, ckk, opl, cout, 1.0f, pw.value.data(), ckk, g, opl, 1.0f, gx,
                        opl);
        } else {
          kernels::gemm(true, false, ckk, opl, cout, 1.0f, pw.value.data(), ckk, g, opl, 0.0f,
                        dcol.data(), opl);
          col2im(dcol.data(), xs.c, xs.h, xs.w, k, stride, pad, oh, ow, gx);
        }
      }
    }
  });
}

Var add(const Var& a, const Var& b) {
  require(a, "add");
  check_same_shape(a->value, b->value, "add");
  Tensor out = a->value;
  kernels::axpy(static_cast<int>(out.numel()), 1.0f, b->value.data(), out.data());
  return make_result(std::move(out), {a, b}, [](Node& self) {
    for (auto& p : self.parents) {
      if (p->requires_grad) {
        kernels::axpy(static_cast<int>(self.grad.numel()), 1.0f, self.grad.data(),
                      p->grad_buffer().data());
      }
    }
  });
}

Var mul(const Var& a, const Var& b) {
  require(a, "mul");
  check_same_shape(a->value, b->value, "mul");
  Tensor out(a->value.shape());
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] = a->value[i] * b->value[i];
  return make_result(std::move(out), {a, b}, [](Node& self) {
    Node& pa = *self.parents[0];
    Node& pb = *self.parents[1];
    if (pa.requires_grad) {
      Tensor& g = pa.grad_buffer();
      for (std::size_t i = 0; i < g.numel(); ++i) g[i] += self.grad[i] * pb.value[i];
    }
    if (pb.requires_grad) {
      Tensor& g = pb.grad_buffer();
      for (std::size_t i = 0; i < g.numel(); ++i) g[i] += self.grad[i] * pa.value[i];
    }
  });
}

Var concat_channels(const Var& a, const Var& b) {
  require(a, "concat");
  const Shape sa = a->value.shape();
  const Shape sb = b->value.shape();
  if (sa.n != sb.n || sa.h != sb.h || sa.w != sb.w) {
    throw ShapeError("concat_channels: " + sa.str() + " vs " + sb.str());
  }
  Tensor out({sa.n, sa.c + sb.c, sa.h, sa.w});
  const std::size_t na = static_cast<std::size_t>(sa.c) * sa.plane();
  const std::size_t nb = static_cast<std::size_t>(sb.c) * sb.plane();
  for (int n = 0; n < sa.n; ++n) {
    std::copy_n(a->value.sample(n), na, out.sample(n));
    std::copy_n(b->value.sample(n), nb, out.sample(n) + na);
  }
  return make_result(std::move(out), {a, b}, [na, nb, batch = sa.n](Node& self) {
    Node& pa = *self.parents[0];
    Node& pb = *self.parents[1];
    for (int n = 0; n < batch; ++n) {
      const float* g = self.grad.sample(n);
      if (pa.requires_grad) kernels::axpy(static_cast<int>(na), 1.0f, g, pa.grad_buffer().sample(n));
      if (pb.requires_grad) {
        kernels::axpy(static_cast<int>(nb), 1.0f, g + na, pb.grad_buffer().sample(n));
      }
    }
  });
}

Var leaky_relu(const Var& x, float slope) {
  return unary(
      x, [slope](float v) { return v >= 0.0f ? v : slope * v; },
      [slope](float v, float) { return v >= 0.0f ? 1.0f : slope; });
}

Var relu(const Var& x) {
  return unary(
      x, [](float v) { return v > 0.0f ? v : 0.0f; },
      [](float v, float) { return v > 0.0f ? 1.0f : 0.0f; });
}

Var sigmoid(const Var& x) {
  return unary(
      x, [](float v) { return 1.0f / (1.0f + std::exp(-v)); },
      [](float, float y) { return y * (1.0f - y); });
}

Var log(const Var& x) {
  return unary(
      x, [](float v) { return std::log(v); }, [](float v, float) { return 1.0f / v; });
}

Var exp(const Var& x) {
  return unary(
      x, [](float v) { return std::exp(v); }, [](float, float y) { return y; });
}

Var batch_norm(const Var& x, const Var& gamma, const Var& beta, Tensor& running_mean,
               Tensor& running_var, bool training, float momentum, float eps) {
  require(x, "batch_norm");
  const Shape s = x->value.shape();
  if (gamma->value.numel() != static_cast<std::size_t>(s.c)) {
    throw ShapeError("batch_norm: channel mismatch");
  }
  const std::size_t pl = s.plane();
  const std::size_t count = static_cast<std::size_t>(s.n) * pl;
  std::vector<float> mean(s.c), inv_std(s.c);
  if (training) {
    for (int c = 0; c < s.c; ++c) {
      double sum = 0.0;
      for (int n = 0; n < s.n; ++n) {
        const float* p = x->value.plane(n, c);
        for (std::size_t i = 0; i < pl; ++i) sum += p[i];
      }
      const double mu = sum / static_cast<double>(count);
      double sq = 0.0;
      for (int n = 0; n < s.n; ++n) {
        const float* p = x->value.plane(n, c);
        for (std::size_t i = 0; i < pl; ++i) sq += (p[i] - mu) * (p[i] - mu);
      }
      const double var = sq / static_cast<double>(count);
      mean[c] = static_cast<float>(mu);
      inv_std[c] = static_cast<float>(1.0 / std::sqrt(var + eps));
      const double unbiased = count > 1 ? sq / static_cast<double>(count - 1) : var;
      running_mean[c] = static_cast<float>((1.0 - momentum) * running_mean[c] + momentum * mu);
      running_var[c] = static_cast<float>((1.0 - momentum) * running_var[c] + momentum * unbiased);
    }
  } else {
    for (int c = 0; c < s.c; ++c) {
      mean[c] = running_mean[c];
      inv_std[c] = 1.0f / std::sqrt(running_var[c] + eps);
    }
  }
  Tensor out(s);
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      const float* p = x->value.plane(n, c);
      float* o = out.plane(n, c);
      const float g = gamma->value[c] * inv_std[c];
      const float b = beta->value[c] - mean[c] * g;
      for (std::size_t i = 0; i < pl; ++i) o[i] = p[i] * g + b;
    }
  }
  return make_result(std::move(out), {x, gamma, beta}, [=](Node& self) {
    Node& px = *self.parents[0];
    Node& pg = *self.parents[1];
    Node& pbeta = *self.parents[2];
    for (int c = 0; c < s.c; ++c) {
      double sum_g = 0.0, sum_gx = 0.0;
      for (int n = 0; n < s.n; ++n) {
        const float* g = self.grad.plane(n, c);
        const float* p = px.value.plane(n, c);
        for (std::size_t i = 0; i < pl; ++i) {
          sum_g += g[i];
          sum_gx += g[i] * (p[i] - mean[c]) * inv_std[c];
        }
      }
      if (pg.requires_grad) pg.grad_buffer()[c] += static_cast<float>(sum_gx);
      if (pbeta.requires_grad) pbeta.grad_buffer()[c] += static_cast<float>(sum_g);
      if (!px.requires_grad) continue;
      const float scale = pg.value[c] * inv_std[c];
      const float mg = static_cast<float>(sum_g / static_cast<double>(count));
      const float mgx = static_cast<float>(sum_gx / static_cast<double>(count));
      for (int n = 0; n < s.n; ++n) {
        const float* g = self.grad.plane(n, c);
        const float* p = px.value.plane(n, c);
        float* gx = px.grad_buffer().plane(n, c);
        if (training) {
          for (std::size_t i = 0; i < pl; ++i) {
            const float xhat = (p[i] - mean[c]) * inv_std[c];
            gx[i] += scale * (g[i] - mg - xhat * mgx);
          }
        } else {
          for (std::size_t i = 0; i < pl; ++i) gx[i] += scale * g[i];
        }
      }
    }
  });
}

Var sample_std(const Var& x, float floor) {
  require(x, "sample_std");
  const Shape s = x->value.shape();
  const std::size_t m = static_cast<std::size_t>(s.c) * s.plane();
  Tensor out({s.n, 1, 1, 1});
  std::vector<float> means(s.n);
  std::vector<bool> floored(s.n);
  for (int n = 0; n < s.n; ++n) {
    const float* p = x->value.sample(n);
    double sum = 0.0;
    for (std::size_t i = 0; i < m; ++i) sum += p[i];
    const double mu = sum / static_cast<double>(m);
    double sq = 0.0;
    for (std::size_t i = 0; i < m; ++i) sq += (p[i] - mu) * (p[i] - mu);
    const double sd = m > 1 ? std::sqrt(sq / static_cast<double>(m - 1)) : 0.0;
    means[n] = static_cast<float>(mu);
    floored[n] = !(sd > floor);
    out[n] = floored[n] ? floor : static_cast<float>(sd);
  }
  return make_result(std::move(out), {x}, [=](Node& self) {
    Node& px = *self.parents[0];
    if (!px.requires_grad) return;
    for (int n = 0; n < s.n; ++n) {
      if (floored[n]) continue;
      const float coeff = self.grad[n] / (static_cast<float>(m - 1) * self.value[n]);
      const float* p = px.value.sample(n);
      float* g = px.grad_buffer().sample(n);
      for (std::size_t i = 0; i < m; ++i) g[i] += coeff * (p[i] - means[n]);
    }
  });
}

Var scale_per_sample(const Var& x, const Var& factor) {
  require(x, "scale_per_sample");
  const Shape s = x->value.shape();
  if (factor->value.numel() != static_cast<std::size_t>(s.n)) {
    throw ShapeError("scale_per_sample: factor must hold one value per sample");
  }
  const std::size_t m = static_cast<std::size_t>(s.c) * s.plane();
  Tensor out(s);
  for (int n = 0; n < s.n; ++n) {
    const float f = factor->value[n];
    const float* p = x->value.sample(n);
    float* o = out.sample(n);
    for (std::size_t i = 0; i < m; ++i) o[i] = p[i] * f;
  }
  return make_result(std::move(out), {x, factor}, [s, m](Node& self) {
    Node& px = *self.parents[0];
    Node& pf = *self.parents[1];
    for (int n = 0; n < s.n; ++n) {
      const float* g = self.grad.sample(n);
      if (px.requires_grad) {
        kernels::axpy(static_cast<int>(m), pf.value[n], g, px.grad_buffer().sample(n));
      }
      if (pf.requires_grad) {
        pf.grad_buffer()[n] += kernels::dot(static_cast<int>(m), g, px.value.sample(n));
      }
    }
  });
}

Var max_pool2d(const Var& x, int kh, int kw, int stride) {
  require(x, "max_pool2d");
  const Shape s = x->value.shape();
  const int oh = (s.h - kh) / stride + 1;
  const int ow = (s.w - kw) / stride + 1;
  if (kh < 1 || kw < 1 || oh < 1 || ow < 1) throw ShapeError("max_pool2d: window larger than input");
  Tensor out({s.n, s.c, oh, ow});
  std::vector<std::uint32_t> arg(out.numel());
  std::size_t idx = 0;
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      const float* p = x->value.plane(n, c);
      for (int y = 0; y < oh; ++y) {
        for (int xo = 0; xo < ow; ++xo, ++idx) {
          float best = -std::numeric_limits<float>::infinity();
          std::uint32_t best_i = 0;
          for (int i = 0; i < kh; ++i) {
            for (int j = 0; j < kw; ++j) {
              const std::uint32_t off = static_cast<std::uint32_t>((y * stride + i) * s.w + xo * stride + j);
              if (p[off] > best || (i == 0 && j == 0)) {
                best = p[off];
                best_i = off;
              }
            }
          }
          out[idx] = best;
          arg[idx] = best_i;
        }
      }
    }
  }
  const std::size_t opl = static_cast<std::size_t>(oh) * ow;
  return make_result(std::move(out), {x}, [s, opl, arg = std::move(arg)](Node& self) {
    Node& px = *self.parents[0];
    if (!px.requires_grad) return;
    Tensor& gx = px.grad_buffer();
    for (int n = 0; n < s.n; ++n) {
      for (int c = 0; c < s.c; ++c) {
        float* g = gx.plane(n, c);
        const std::size_t base = (static_cast<std::size_t>(n) * s.c + c) * opl;
        for (std::size_t i = 0; i < opl; ++i) g[arg[base + i]] += self.grad[base + i];
      }
    }
  });
}

Var avg_pool_ceil(const Var& x, int stride) {
  require(x, "avg_pool_ceil");
  const Shape s = x->value.shape();
  if (stride < 1) throw ConfigError("avg_pool_ceil: stride must be positive");
  const int oh = (s.h + stride - 1) / stride;
  const int ow = (s.w + stride - 1) / stride;
  Tensor out({s.n, s.c, oh, ow});
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      const float* p = x->value.plane(n, c);
      float* o = out.plane(n, c);
      for (int y = 0; y < oh; ++y) {
        for (int xo = 0; xo < ow; ++xo) {
          const int y1 = std::min(s.h, (y + 1) * stride), x1 = std::min(s.w, (xo + 1) * stride);
          float sum = 0.0f;
          for (int i = y * stride; i < y1; ++i) {
            for (int j = xo * stride; j < x1; ++j) sum += p[i * s.w + j];
          }
          o[y * ow + xo] = sum / static_cast<float>((y1 - y * stride) * (x1 - xo * stride));
        }
      }
    }
  }
  return make_result(std::move(out), {x}, [s, stride, oh, ow](Node& self) {
    Node& px = *self.parents[0];
    if (!px.requires_grad) return;
    for (int n = 0; n < s.n; ++n) {
      for (int c = 0; c < s.c; ++c) {
        const float* g = self.grad.plane(n, c);
        float* gx = px.grad_buffer().plane(n, c);
        for (int y = 0; y < oh; ++y) {
          for (int xo = 0; xo < ow; ++xo) {
            const int y1 = std::min(s.h, (y + 1) * stride), x1 = std::min(s.w, (xo + 1) * stride);
            const float v =
                g[y * ow + xo] / static_cast<float>((y1 - y * stride) * (x1 - xo * stride));
            for (int i = y * stride; i < y1; ++i) {
              for (int j = xo * stride; j < x1; ++j) gx[i * s.w + j] += v;
            }
          }
        }
      }
    }
  });
}

namespace {

struct LinearTap {
  int i0, i1;
  float w0, w1;
};

std::vector<LinearTap> bilinear_taps(int in, int out) {
  std::vector<LinearTap> taps(out);
  const double scale = static_cast<double>(in) / out;
  for (int o = 0; o < out; ++o) {
    double src = (o + 0.5) * scale - 0.5;
    if (src < 0.0) src = 0.0;
    int i0 = static_cast<int>(src);
    if (i0 > in - 1) i0 = in - 1;
    const int i1 = std::min(i0 + 1, in - 1);
    const float l1 = static_cast<float>(src - i0);
    taps[o] = {i0, i1, 1.0f - l1, l1};
  }
  return taps;
}

}  // namespace

Var resize_bilinear(const Var& x, int out_h, int out_w) {
  require(x, "resize_bilinear");
  const Shape s = x->value.shape();
  if (out_h < 1 || out_w < 1) throw ShapeError("resize_bilinear: empty output");
  const auto ty = bilinear_taps(s.h, out_h);
  const auto tx = bilinear_taps(s.w, out_w);
  Tensor out({s.n, s.c, out_h, out_w});
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      const float* p = x->value.plane(n, c);
      float* o = out.plane(n, c);
      for (int y = 0; y < out_h; ++y) {
        const float* r0 = p + static_cast<std::size_t>(ty[y].i0) * s.w;
        const float* r1 = p + static_cast<std::size_t>(ty[y].i1) * s.w;
        for (int xo = 0; xo < out_w; ++xo) {
          const LinearTap& t = tx[xo];
          o[y * out_w + xo] = ty[y].w0 * (t.w0 * r0[t.i0] + t.w1 * r0[t.i1]) +
                              ty[y].w1 * (t.w0 * r1[t.i0] + t.w1 * r1[t.i1]);
        }
      }
    }
  }
  return make_result(std::move(out), {x}, [s, out_h, out_w, ty, tx](Node& self) {
    Node& px = *self.parents[0];
    if (!px.requires_grad) return;
    for (int n = 0; n < s.n; ++n) {
      for (int c = 0; c < s.c; ++c) {
        const float* g = self.grad.plane(n, c);
        float* gx = px.grad_buffer().plane(n, c);
        for (int y = 0; y < out_h; ++y) {
          float* r0 = gx + static_cast<std::size_t>(ty[y].i0) * s.w;
          float* r1 = gx + static_cast<std::size_t>(ty[y].i1) * s.w;
          for (int xo = 0; xo < out_w; ++xo) {
            const LinearTap& t = tx[xo];
            const float v = g[y * out_w + xo];
            r0[t.i0] += ty[y].w0 * t.w0 * v;
            r0[t.i1] += ty[y].w0 * t.w1 * v;
            r1[t.i0] += ty[y].w1 * t.w0 * v;
            r1[t.i1] += ty[y].w1 * t.w1 * v;
          }
        }
      }
    }
  });
}

namespace {

// Applies the sub-pixel permutation (forward) or its inverse into `dst`.
void shuffle_planes(const Shape& in_shape, int r, const float* src, float* dst, bool inverse) {
  const int oc = in_shape.c / (r * r);
  const int h = in_shape.h, w = in_shape.w;
  const int ow = w * r;
  for (int n = 0; n < in_shape.n; ++n) {
    for (int c = 0; c < oc; ++c) {
      for (int i = 0; i < r; ++i) {
        for (int j = 0; j < r; ++j) {
          const std::size_t in_plane =
              (static_cast<std::size_t>(n) * in_shape.c + c * r * r + i * r + j) * h * w;
          const std::size_t out_plane = (static_cast<std::size_t>(n) * oc + c) * h * w * r * r;
          for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
              const std::size_t a = in_plane + static_cast<std::size_t>(y) * w + x;
              const std::size_t b = out_plane + static_cast<std::size_t>(y * r + i) * ow + x * r + j;
              if (inverse) {
                dst[a] += src[b];
              } else {
                dst[b] = src[a];
              }
            }
          }
        }
      }
    }
  }
}

}  // namespace

Tensor pixel_shuffle(const Tensor& x, int r) {
  const Shape s = x.shape();
  if (r < 1 || s.c % (r * r) != 0) {
    throw ShapeError("pixel_shuffle: channels " + std::to_string(s.c) + " not divisible by r^2");
  }
  Tensor out({s.n, s.c / (r * r), s.h * r, s.w * r});
  shuffle_planes(s, r, x.data(), out.data(), false);
  return out;
}

Var pixel_shuffle(const Var& x, int r) {
  require(x, "pixel_shuffle");
  Tensor out = pixel_shuffle(x->value, r);
  const Shape s = x->value.shape();
  return make_result(std::move(out), {x}, [s, r](Node& self) {
    Node& px = *self.parents[0];
    if (px.requires_grad) shuffle_planes(s, r, self.grad.data(), px.grad_buffer().data(), true);
  });
}

Var l2_normalize_channels(const Var& x, float eps) {
  require(x, "l2_normalize_channels");
  const Shape s = x->value.shape();
  const std::size_t pl = s.plane();
  Tensor out(s);
  std::vector<float> norms(static_cast<std::size_t>(s.n) * pl);
  for (int n = 0; n < s.n; ++n) {
    for (std::size_t i = 0; i < pl; ++i) {
      float sq = 0.0f;
      for (int c = 0; c < s.c; ++c) {
        const float v = x->value.plane(n, c)[i];
        sq += v * v;
      }
      const float nrm = std::max(std::sqrt(sq), eps);
      norms[n * pl + i] = nrm;
      for (int c = 0; c < s.c; ++c) out.plane(n, c)[i] = x->value.plane(n, c)[i] / nrm;
    }
  }
  return make_result(std::move(out), {x}, [s, pl, eps, norms = std::move(norms)](Node& self) {
    Node& px = *self.parents[0];
    if (!px.requires_grad) return;
    for (int n = 0; n < s.n; ++n) {
      for (std::size_t i = 0; i < pl; ++i) {
        const float nrm = norms[n * pl + i];
        float gy = 0.0f;
        for (int c = 0; c < s.c; ++c) gy += self.grad.plane(n, c)[i] * self.value.plane(n, c)[i];
        const bool clamped = nrm <= eps;
        for (int c = 0; c < s.c; ++c) {
          const float g = self.grad.plane(n, c)[i];
          const float y = self.value.plane(n, c)[i];
          px.grad_buffer().plane(n, c)[i] += clamped ? g / nrm : (g - y * gy) / nrm;
        }
      }
    }
  });
}

namespace {

void softmax_rows(float* s, int rows, int cols) {
  for (int r = 0; r < rows; ++r) {
    float* row = s + static_cast<std::size_t>(r) * cols;
    const float mx = *std::max_element(row, row + cols);
    float sum = 0.0f;
    for (int j = 0; j < cols; ++j) {
      row[j] = std::exp(row[j] - mx);
      sum += row[j];
    }
    const float inv = 1.0f / sum;
    for (int j = 0; j < cols; ++j) row[j] *= inv;
  }
}

constexpr int kQueryChunk = 1024;

}  // namespace

Var attention(const Var& q, const Var& k, const Var& v) {
  require(q, "attention");
  const Shape qs = q->value.shape(), ks = k->value.shape(), vs = v->value.shape();
  if (qs.n != ks.n || qs.n != vs.n || qs.c != ks.c || ks.h != vs.h || ks.w != vs.w) {
    throw ShapeError("attention: incompatible q " + qs.str() + ", k " + ks.str() + ", v " +
                     vs.str());
  }
  const int p = qs.h * qs.w;
  const int m = ks.h * ks.w;
  const int cq = qs.c, cv = vs.c;
  const bool record = should_record({&q, &k, &v});
  Tensor out({qs.n, cv, qs.h, qs.w});
  // Attention maps are kept only when a backward pass will need them.
  std::vector<float> maps(record ? static_cast<std::size_t>(qs.n) * p * m : 0);
  std::vector<float> scratch;
  std::vector<float> outT;
  for (int n = 0; n < qs.n; ++n) {
    const float* qn = q->value.sample(n);
    const float* kn = k->value.sample(n);
    const float* vn = v->value.sample(n);
    float* on = out.sample(n);
    for (int r0 = 0; r0 < p; r0 += kQueryChunk) {
      const int rows = std::min(kQueryChunk, p - r0);
      float* a;
      if (record) {
        a = maps.data() + (static_cast<std::size_t>(n) * p + r0) * m;
      } else {
        scratch.resize(static_cast<std::size_t>(rows) * m);
        a = scratch.data();
      }
      // scores[rows x m] = Q[:, r0:r0+rows]^T K
      kernels::gemm(true, false, rows, m, cq, 1.0f, qn + r0, p, kn, m, 0.0f, a, m);
      softmax_rows(a, rows, m);
      // out[:, r0:r0+rows] = V A^T  (cv x rows)
      outT.resize(static_cast<std::size_t>(cv) * rows);
      kernels::gemm(false, true, cv, rows, m, 1.0f, vn, m, a, m, 0.0f, outT.data(), rows);
      for (int c = 0; c < cv; ++c) {
        std::copy_n(outT.data() + static_cast<std::size_t>(c) * rows, rows,
                    on + static_cast<std::size_t>(c) * p + r0);
      }
    }
  }
  if (!record) return make_var(std::move(out));
  return make_result(std::move(out), {q, k, v}, [=, maps = std::move(maps)](Node& self) {
    Node& pq = *self.parents[0];
    Node& pk = *self.parents[1];
    Node& pv = *self.parents[2];
    std::vector<float> da(static_cast<std::size_t>(p) * m);
    for (int n = 0; n < qs.n; ++n) {
      const float* a = maps.data() + static_cast<std::size_t>(n) * p * m;
      const float* g = self.grad.sample(n);  // cv x p
      if (pv.requires_grad) {
        kernels::gemm(false, false, cv, m, p, 1.0f, g, p, a, m, 1.0f, pv.grad_buffer().sample(n), m);
      }
      if (!pq.requires_grad && !pk.requires_grad) continue;
      // dA = dO^T V  (p x m)
      kernels::gemm(true, false, p, m, cv, 1.0f, g, p, pv.value.sample(n), m, 0.0f, da.data(), m);
      for (int r = 0; r < p; ++r) {
        float* drow = da.data() + static_cast<std::size_t>(r) * m;
        const float* arow = a + static_cast<std::size_t>(r) * m;
        const float inner = kernels::dot(m, drow, arow);
        for (int j = 0; j < m; ++j) drow[j] = arow[j] * (drow[j] - inner);
      }
      if (pq.requires_grad) {
        kernels::gemm(false, true, cq, p, m, 1.0f, pk.value.sample(n), m, da.data(), m, 1.0f,
                      pq.grad_buffer().sample(n), p);
      }
      if (pk.requires_grad) {
        kernels::gemm(false, false, cq, m, p, 1.0f, pq.value.sample(n), p, da.data(), m, 1.0f,
                      pk.grad_buffer().sample(n), m);
      }
    }
  });
}

Var l1_loss(const Var& pred, const Tensor& target) {
  require(pred, "l1_loss");
  check_same_shape(pred->value, target, "l1_loss");
  double sum = 0.0;
  for (std::size_t i = 0; i < target.numel(); ++i) sum += std::fabs(pred->value[i] - target[i]);
  const double count = static_cast<double>(target.numel());
  Tensor out({1, 1, 1, 1}, static_cast<float>(sum / count));
  return make_result(std::move(out), {pred}, [target, count](Node& self) {
    Node& pp = *self.parents[0];
    if (!pp.requires_grad) return;
    const float g = static_cast<float>(self.grad[0] / count);
    Tensor& gp = pp.grad_buffer();
    for (std::size_t i = 0; i < gp.numel(); ++i) {
      const float d = pp.value[i] - target[i];
      gp[i] += d > 0.0f ? g : (d < 0.0f ? -g : 0.0f);
    }
  });
}

Var l2_loss(const Var& pred, const Tensor& target) {
  require(pred, "l2_loss");
  check_same_shape(pred->value, target, "l2_loss");
  double sum = 0.0;
  for (std::size_t i = 0; i < target.numel(); ++i) {
    const double d = static_cast<double>(pred->value[i]) - target[i];
    sum += d * d;
  }
  const double count = static_cast<double>(target.numel());
  Tensor out({1, 1, 1, 1}, static_cast<float>(sum / count));
  return make_result(std::move(out), {pred}, [target, count](Node& self) {
    Node& pp = *self.parents[0];
    if (!pp.requires_grad) return;
    const float g = static_cast<float>(2.0 * self.grad[0] / count);
    Tensor& gp = pp.grad_buffer();
    for (std::size_t i = 0; i < gp.numel(); ++i) gp[i] += g * (pp.value[i] - target[i]);
  });
}

Var weighted_sum(const std::vector<float>& weights, const std::vector<Var>& terms) {
  if (weights.size() != terms.size()) throw InputError("weighted_sum: size mismatch");
  double sum = 0.0;
  for (std::size_t i = 0; i < terms.size(); ++i) {
    if (terms[i]->value.numel() != 1) throw ShapeError("weighted_sum: terms must be scalars");
    sum += static_cast<double>(weights[i]) * terms[i]->value[0];
  }
  Tensor out({1, 1, 1, 1}, static_cast<float>(sum));
  return make_result(std::move(out), terms, [weights](Node& self) {
    for (std::size_t i = 0; i < self.parents.size(); ++i) {
      Node& p = *self.parents[i];
      if (p.requires_grad) p.grad_buffer()[0] += weights[i] * self.grad[0];
    }
  });
}

}  // namespace rdrn::ops
