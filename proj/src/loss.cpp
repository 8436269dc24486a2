#include "rdrn/loss.hpp"

#include "rdrn/error.hpp"
#include "rdrn/ops.hpp"

namespace rdrn {

void IsWeights::validate() const {
  bool any = w_final > 0.0f;
  if (w_final < 0.0f) throw InputError("IS weights must be non-negative");
  for (const auto& [id, w] : per_tap) {
    if (w < 0.0f) throw InputError("IS weight for tap " + std::to_string(id) + " is negative");
    any = any || w > 0.0f;
  }
  if (!any) throw InputError("IS weights: at least one weight must be positive");
}

std::set<TapId> IsWeights::active_taps() const {
  std::set<TapId> out;
  for (const auto& [id, w] : per_tap) {
    if (w > 0.0f) out.insert(id);
  }
  return out;
}

std::size_t IsWeights::term_count() const {
  return (w_final > 0.0f ? 1 : 0) + active_taps().size();
}

IsWeights default_is_weights(const std::vector<TapInfo>& taps, const std::set<int>& zero_levels) {
  IsWeights w;
  for (const auto& tap : taps) w.per_tap[tap.id] = zero_levels.count(tap.level) ? 0.0f : 1.0f;
  return w;
}

IsWeights default_is_weights(const Rdrn& model) {
  return default_is_weights(model.taps(), model.config().effective_aux_zero_levels());
}

IsWeights uniform_is_weights(const std::vector<TapInfo>& taps, float value) {
  IsWeights w;
  w.w_final = value;
  for (const auto& tap : taps) w.per_tap[tap.id] = value;
  return w;
}

Var l1_loss(const Var& pred, const Tensor& target) { return ops::l1_loss(pred, target); }
Var l2_loss(const Var& pred, const Tensor& target) { return ops::l2_loss(pred, target); }

float l1_loss(const Tensor& pred, const Tensor& target) {
  NoGradGuard guard;
  return ops::l1_loss(make_var(pred), target)->value[0];
}

float l2_loss(const Tensor& pred, const Tensor& target) {
  NoGradGuard guard;
  return ops::l2_loss(make_var(pred), target)->value[0];
}

Var base_loss(LossKind kind, const Var& pred, const Tensor& target) {
  return kind == LossKind::L1 ? ops::l1_loss(pred, target) : ops::l2_loss(pred, target);
}

Var is_loss(const ForwardOutput& out, const Tensor& target, const IsWeights& w, LossKind kind) {
  w.validate();
  for (const auto& [id, value] : out.aux_sr) {
    if (!w.per_tap.count(id)) {
      throw InputError("IS weights have no entry for tap " + std::to_string(id));
    }
  }
  std::vector<float> weights;
  std::vector<Var> terms;
  if (w.w_final > 0.0f) {
    weights.push_back(w.w_final);
    terms.push_back(base_loss(kind, out.final_sr, target));
  }
  for (const auto& [id, weight] : w.per_tap) {
    if (weight <= 0.0f) continue;
    auto it = out.aux_sr.find(id);
    if (it == out.aux_sr.end()) {
      throw InputError("IS weights reference tap " + std::to_string(id) +
                       " missing from the forward output");
    }
    weights.push_back(weight);
    terms.push_back(base_loss(kind, it->second, target));
  }
  return ops::weighted_sum(weights, terms);
}

}  // namespace rdrn
