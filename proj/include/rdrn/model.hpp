#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <vector>

#include "rdrn/blocks.hpp"

namespace rdrn {

struct RdrnConfig {
  int depth = 5;
  int channels = 64;
  int scale = 4;
  // Node levels that carry a non-local attention block.
  std::set<int> nlsa_levels{3};
  // Taps whose source node has one of these levels get zero loss weight.
  std::set<int> aux_zero_levels{1, 2};
  int esa_reduction = 4;
  float negative_slope = 0.05f;
  int nlsa_reduction = 4;
  int nlsa_max_key_side = 48;
  // x8 only: three x2 conv+shuffle stages instead of one x8 shuffle.
  bool cascade_x8 = false;
  std::uint64_t seed = 0;

  BlockConfig block_config() const;
  // Levels of nlsa_levels / aux_zero_levels that exist in a depth-T tree.
  std::set<int> effective_nlsa_levels() const;
  std::set<int> effective_aux_zero_levels() const;
  void validate() const;
  bool operator==(const RdrnConfig&) const = default;
};

struct ForwardOptions {
  bool training = false;
  bool compute_aux = true;
  // When set, only auxiliary heads for these taps are evaluated.
  const std::set<TapId>* only_taps = nullptr;
};

struct ForwardOutput {
  Var final_sr;
  std::map<TapId, Var> aux_sr;
};

// Shallow 3x3 extractor -> recursive block tree -> reconstruction head on
// (shallow + deep) features, plus one light head per tap.
class Rdrn {
 public:
  explicit Rdrn(RdrnConfig cfg);

  const RdrnConfig& config() const { return cfg_; }
  int scale() const { return cfg_.scale; }
  const RdrbNode& tree() const { return tree_; }
  const std::vector<TapInfo>& taps() const { return taps_; }
  const Conv2d& shallow() const { return shallow_; }
  const ReconstructionHead& head() const { return head_; }
  const std::map<TapId, ReconstructionHead>& aux_heads() const { return aux_heads_; }

  ForwardOutput forward(const Var& lr, const ForwardOptions& opt = {}) const;
  ForwardOutput forward(const Tensor& lr, const ForwardOptions& opt = {}) const;
  // Final SR only, no graph, inference-mode normalisation.
  Tensor infer(const Tensor& lr) const;

  // Trainable tensors in canonical order: shallow, tree (pre-order), head,
  // aux heads by tap id.
  std::vector<NamedVar> parameters(bool include_aux = true) const;
  std::vector<NamedVar> buffers() const;
  std::size_t parameter_count(bool include_aux = true) const;
  void zero_grad() const;

 private:
  RdrnConfig cfg_;
  Conv2d shallow_;
  RdrbNode tree_;
  ReconstructionHead head_;
  std::map<TapId, ReconstructionHead> aux_heads_;
  std::vector<TapInfo> taps_;
};

}  // namespace rdrn
