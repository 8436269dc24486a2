#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "rdrn/autograd.hpp"

namespace rdrn {

using Rng = std::mt19937_64;

// A trainable tensor (or a persistent non-trainable buffer) with its
// fully-qualified name, e.g. "body.0.1.conv.weight".
struct NamedVar {
  std::string name;
  Var var;
};

Var make_parameter(Shape shape, float fill = 0.0f);

// k x k convolution with bias. Weights and bias use the usual
// U(-1/sqrt(fan_in), 1/sqrt(fan_in)) initialisation.
class Conv2d {
 public:
  Conv2d() = default;
  Conv2d(std::string name, int in_channels, int out_channels, int kernel, int stride, int pad,
         Rng& rng);

  Var forward(const Var& x) const;
  void collect(std::vector<NamedVar>& out) const;

  int in_channels() const { return in_; }
  int out_channels() const { return out_; }
  int kernel() const { return k_; }
  int stride() const { return stride_; }
  int pad() const { return pad_; }

  Var weight;
  Var bias;

 private:
  std::string name_;
  int in_ = 0, out_ = 0, k_ = 1, stride_ = 1, pad_ = 0;
};

class BatchNorm2d {
 public:
  static constexpr float kMomentum = 0.1f;
  static constexpr float kEps = 1e-5f;

  BatchNorm2d() = default;
  BatchNorm2d(std::string name, int channels);

  Var forward(const Var& x, bool training) const;
  void collect(std::vector<NamedVar>& out) const;
  void collect_buffers(std::vector<NamedVar>& out) const;

  Var weight;
  Var bias;
  Var running_mean;
  Var running_var;

 private:
  std::string name_;
};

}  // namespace rdrn
