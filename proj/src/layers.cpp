#include "rdrn/layers.hpp"

#include <cmath>

#include "rdrn/ops.hpp"

namespace rdrn {

Var make_parameter(Shape shape, float fill) { return make_var(Tensor(shape, fill), true); }

Conv2d::Conv2d(std::string name, int in_channels, int out_channels, int kernel, int stride,
               int pad, Rng& rng)
    : name_(std::move(name)),
      in_(in_channels),
      out_(out_channels),
      k_(kernel),
      stride_(stride),
      pad_(pad) {
  const float bound = 1.0f / std::sqrt(static_cast<float>(in_channels * kernel * kernel));
  std::uniform_real_distribution<float> dist(-bound, bound);
  Tensor w({out_channels, in_channels, kernel, kernel});
  for (auto& v : w.values()) v = dist(rng);
  // Zero biases: with random ones a narrow ReLU stage (the ESA branch has c/4
  // channels) can start entirely below zero and never receive a gradient.
  Tensor b({1, out_channels, 1, 1}, 0.0f);
  weight = make_var(std::move(w), true);
  bias = make_var(std::move(b), true);
}

Var Conv2d::forward(const Var& x) const { return ops::conv2d(x, weight, bias, stride_, pad_); }

void Conv2d::collect(std::vector<NamedVar>& out) const {
  out.push_back({name_ + ".weight", weight});
  out.push_back({name_ + ".bias", bias});
}

BatchNorm2d::BatchNorm2d(std::string name, int channels)
    : weight(make_parameter({1, channels, 1, 1}, 1.0f)),
      bias(make_parameter({1, channels, 1, 1}, 0.0f)),
      running_mean(make_var(Tensor({1, channels, 1, 1}, 0.0f))),
      running_var(make_var(Tensor({1, channels, 1, 1}, 1.0f))),
      name_(std::move(name)) {}

Var BatchNorm2d::forward(const Var& x, bool training) const {
  return ops::batch_norm(x, weight, bias, running_mean->value, running_var->value, training,
                         kMomentum, kEps);
}

void BatchNorm2d::collect(std::vector<NamedVar>& out) const {
  out.push_back({name_ + ".weight", weight});
  out.push_back({name_ + ".bias", bias});
}

void BatchNorm2d::collect_buffers(std::vector<NamedVar>& out) const {
  out.push_back({name_ + ".running_mean", running_mean});
  out.push_back({name_ + ".running_var", running_var});
}

}  // namespace rdrn
