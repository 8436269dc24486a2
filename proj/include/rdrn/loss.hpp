#pragma once

#include <map>
#include <set>
#include <vector>

#include "rdrn/model.hpp"

namespace rdrn {

enum class LossKind { L1, L2 };

// Weights of the intermediate-supervision objective:
// w_final * L(final) + sum_tap per_tap[tap] * L(aux[tap]).
struct IsWeights {
  float w_final = 1.0f;
  std::map<TapId, float> per_tap;

  // Throws InputError on negative weights or when every weight is zero.
  void validate() const;
  // Taps with a strictly positive weight.
  std::set<TapId> active_taps() const;
  std::size_t term_count() const;
};

// Default rule: w_final = 1; taps whose source level is in zero_levels get 0,
// every other tap gets 1.
IsWeights default_is_weights(const std::vector<TapInfo>& taps, const std::set<int>& zero_levels);
IsWeights default_is_weights(const Rdrn& model);
IsWeights uniform_is_weights(const std::vector<TapInfo>& taps, float w = 1.0f);

Var l1_loss(const Var& pred, const Tensor& target);
Var l2_loss(const Var& pred, const Tensor& target);
float l1_loss(const Tensor& pred, const Tensor& target);
float l2_loss(const Tensor& pred, const Tensor& target);
Var base_loss(LossKind kind, const Var& pred, const Tensor& target);

// Weighted objective. Every positively weighted tap must be present in
// out.aux_sr and every aux output must have a weight, else InputError.
// Zero-weight terms are not evaluated and contribute exactly nothing.
Var is_loss(const ForwardOutput& out, const Tensor& target, const IsWeights& w, LossKind kind);

}  // namespace rdrn
