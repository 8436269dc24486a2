#include "rdrn/optimizer.hpp"

#include <cmath>

#include "rdrn/error.hpp"

namespace rdrn {

Adam::Adam(std::vector<NamedVar> params, float beta1, float beta2, float eps)
    : params_(std::move(params)), beta1_(beta1), beta2_(beta2), eps_(eps) {
  for (const auto& p : params_) {
    state_.first_moment.emplace_back(p.var->value.shape());
    state_.second_moment.emplace_back(p.var->value.shape());
  }
}

void Adam::step(float lr) {
  ++state_.step;
  const double c1 = 1.0 - std::pow(static_cast<double>(beta1_), static_cast<double>(state_.step));
  const double c2 = 1.0 - std::pow(static_cast<double>(beta2_), static_cast<double>(state_.step));
  const float step_size = static_cast<float>(lr / c1);
  const float inv_sqrt_c2 = static_cast<float>(1.0 / std::sqrt(c2));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Node& p = *params_[i].var;
    if (!p.has_grad()) continue;
    float* m = state_.first_moment[i].data();
    float* v = state_.second_moment[i].data();
    const float* g = p.grad.data();
    float* w = p.value.data();
    for (std::size_t j = 0; j < p.value.numel(); ++j) {
      m[j] = beta1_ * m[j] + (1.0f - beta1_) * g[j];
      v[j] = beta2_ * v[j] + (1.0f - beta2_) * g[j] * g[j];
      w[j] -= step_size * m[j] / (std::sqrt(v[j]) * inv_sqrt_c2 + eps_);
    }
  }
}

void Adam::zero_grad() {
  for (auto& p : params_) p.var->grad = Tensor();
}

void Adam::load_state(AdamState state) {
  if (state.first_moment.size() != params_.size() || state.second_moment.size() != params_.size()) {
    throw InputError("optimizer state has " + std::to_string(state.first_moment.size()) +
                     " entries, expected " + std::to_string(params_.size()));
  }
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (!(state.first_moment[i].shape() == params_[i].var->value.shape()) ||
        !(state.second_moment[i].shape() == params_[i].var->value.shape())) {
      throw InputError("optimizer state shape mismatch for " + params_[i].name);
    }
  }
  state_ = std::move(state);
}

}  // namespace rdrn
