#include "rdrn/model.hpp"

#include "rdrn/error.hpp"
#include "rdrn/ops.hpp"

namespace rdrn {

BlockConfig RdrnConfig::block_config() const {
  BlockConfig b;
  b.channels = channels;
  b.esa_reduction = esa_reduction;
  b.negative_slope = negative_slope;
  b.nlsa_reduction = nlsa_reduction;
  b.nlsa_max_key_side = nlsa_max_key_side;
  return b;
}

std::set<int> RdrnConfig::effective_nlsa_levels() const {
  std::set<int> out;
  for (int l : nlsa_levels) {
    if (l >= 0 && l <= depth) out.insert(l);
  }
  return out;
}

std::set<int> RdrnConfig::effective_aux_zero_levels() const {
  std::set<int> out;
  for (int l : aux_zero_levels) {
    if (l >= 0 && l < depth) out.insert(l);
  }
  return out;
}

void RdrnConfig::validate() const {
  if (depth < 0) throw ConfigError("depth must be non-negative");
  validate_scale(scale);
  block_config().validate();
  for (int l : nlsa_levels) {
    if (l < 0) throw ConfigError("nlsa level must be non-negative");
  }
  for (int l : aux_zero_levels) {
    if (l < 0) throw ConfigError("aux zero level must be non-negative");
  }
}

namespace {

Conv2d make_shallow(const RdrnConfig& cfg, Rng& rng) {
  cfg.validate();
  return Conv2d("shallow", 3, cfg.channels, 3, 1, 1, rng);
}

}  // namespace

Rdrn::Rdrn(RdrnConfig cfg) : cfg_(std::move(cfg)) {
  Rng rng(cfg_.seed);
  shallow_ = make_shallow(cfg_, rng);
  tree_ = build_rdrb(cfg_.depth, cfg_.block_config(), cfg_.effective_nlsa_levels(), rng);
  head_ = ReconstructionHead("head", cfg_.channels, cfg_.scale, cfg_.cascade_x8, rng);
  taps_ = list_taps(tree_);
  for (const auto& tap : taps_) {
    aux_heads_.emplace(tap.id, ReconstructionHead("aux." + std::to_string(tap.id), cfg_.channels,
                                                  cfg_.scale, false, rng));
  }
}

ForwardOutput Rdrn::forward(const Var& lr, const ForwardOptions& opt) const {
  if (lr->value.c() != 3) {
    throw InputError("expected a 3-channel image, got " + std::to_string(lr->value.c()) +
                     " channels");
  }
  Var shallow = shallow_.forward(lr);
  RdrbOutput deep = rdrb_forward(shallow, tree_, opt.training);
  ForwardOutput out;
  out.final_sr = head_.forward(ops::add(shallow, deep.out));
  if (opt.compute_aux) {
    for (const auto& [id, value] : deep.taps) {
      if (opt.only_taps && !opt.only_taps->count(id)) continue;
      out.aux_sr.emplace(id, aux_heads_.at(id).forward(value));
    }
  }
  return out;
}

ForwardOutput Rdrn::forward(const Tensor& lr, const ForwardOptions& opt) const {
  return forward(make_var(lr), opt);
}

Tensor Rdrn::infer(const Tensor& lr) const {
  NoGradGuard guard;
  ForwardOptions opt;
  opt.compute_aux = false;
  return forward(lr, opt).final_sr->value;
}

std::vector<NamedVar> Rdrn::parameters(bool include_aux) const {
  std::vector<NamedVar> out;
  shallow_.collect(out);
  tree_.collect(out);
  head_.collect(out);
  if (include_aux) {
    for (const auto& [id, h] : aux_heads_) h.collect(out);
  }
  return out;
}

std::vector<NamedVar> Rdrn::buffers() const {
  std::vector<NamedVar> out;
  tree_.collect_buffers(out);
  return out;
}

std::size_t Rdrn::parameter_count(bool include_aux) const {
  std::size_t n = 0;
  for (const auto& p : parameters(include_aux)) n += p.var->value.numel();
  return n;
}

void Rdrn::zero_grad() const {
  for (const auto& p : parameters()) p.var->grad = Tensor();
}

}  // namespace rdrn
