#pragma once

#include <vector>

#include "rdrn/layers.hpp"

namespace rdrn {

struct AdamState {
  long step = 0;
  std::vector<Tensor> first_moment;
  std::vector<Tensor> second_moment;
};

// Adaptive moment estimation over a fixed parameter list. Parameters without
// a gradient buffer are skipped for that step.
class Adam {
 public:
  explicit Adam(std::vector<NamedVar> params, float beta1 = 0.9f, float beta2 = 0.999f,
                float eps = 1e-8f);

  void step(float learning_rate);
  void zero_grad();

  const AdamState& state() const { return state_; }
  // Throws InputError when the moment shapes do not match the parameters.
  void load_state(AdamState state);
  const std::vector<NamedVar>& params() const { return params_; }

 private:
  std::vector<NamedVar> params_;
  float beta1_, beta2_, eps_;
  AdamState state_;
};

}  // namespace rdrn
