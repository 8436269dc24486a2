#pragma once

// Building blocks of the recursive residual network: the ESA gate, the
// non-local attention block, the AdaDM-modulated leaf block (level 0), the
// recursive block tree and the sub-pixel reconstruction head.

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "rdrn/layers.hpp"

namespace rdrn {

struct BlockConfig {
  int channels = 64;
  int esa_reduction = 4;
  float negative_slope = 0.05f;
  int nlsa_reduction = 4;
  // Keys/values of the attention block are average-pooled so that neither
  // side exceeds this many positions.
  int nlsa_max_key_side = 48;

  // Throws ConfigError.
  void validate() const;
};

// Enhanced spatial attention: a sigmoid mask computed from a strided,
// max-pooled low resolution branch and upsampled back to the input size.
class Esa {
 public:
  static constexpr int kPoolKernel = 7;
  static constexpr int kPoolStride = 3;

  Esa() = default;
  Esa(const std::string& name, int channels, int reduction, Rng& rng);

  // x * mask(x)
  Var forward(const Var& x) const;
  // Gate values in (0, 1), same shape as x.
  Var mask(const Var& x) const;
  void collect(std::vector<NamedVar>& out) const;
  int channels() const { return conv1.in_channels(); }

  Conv2d conv1;     // c -> c/r, 1x1
  Conv2d conv_f;    // c/r -> c/r, 1x1 skip
  Conv2d conv2;     // c/r -> c/r, 3x3 stride 2
  Conv2d conv_max;  // 3x3 on the pooled map
  Conv2d conv3;
  Conv2d conv3b;
  Conv2d conv4;  // c/r -> c, 1x1
};

// Pooled edge extents used by Esa for an input of height/width `extent`.
int esa_strided_extent(int extent);
int esa_pool_kernel(int strided_extent);
int esa_pooled_extent(int strided_extent);

// Dense non-local attention with a residual connection:
// out = x + softmax(match(x) . normalize(match(keys))) assembly(keys).
class Nlsa {
 public:
  Nlsa() = default;
  Nlsa(const std::string& name, int channels, int reduction, int max_key_side, Rng& rng);

  Var forward(const Var& x) const;
  void collect(std::vector<NamedVar>& out) const;
  int key_stride(int h, int w) const;

  Conv2d match;     // c -> c/r, 1x1
  Conv2d assembly;  // c -> c, 1x1

 private:
  int max_key_side_ = 48;
};

int nlsa_key_stride(int h, int w, int max_key_side);

// Level-0 block: h = act(conv3x3(bn(x))) * exp(phi(log std(x))); ESA(h + x).
class LeafBlock {
 public:
  static constexpr float kStdFloor = 1e-8f;

  LeafBlock(const std::string& name, const BlockConfig& cfg, Rng& rng);

  Var forward(const Var& x, bool training) const;
  // Per-sample AdaDM factor exp(phi(log s)), shape (N, 1, 1, 1).
  Var modulation(const Var& x) const;
  void collect(std::vector<NamedVar>& out) const;
  void collect_buffers(std::vector<NamedVar>& out) const;

  BatchNorm2d norm;
  Conv2d conv;
  Conv2d phi;  // 1 -> 1 scalar map on log std, initialised to identity
  Esa esa;
  float negative_slope;
};

using TapId = int;
inline constexpr TapId kNoTap = -1;

// One node of the recursive block tree. Leaves carry a LeafBlock; internal
// nodes of level t carry two level t-1 children, a 1x1 fusion conv (2c -> c),
// ESA and, on configured levels, an Nlsa block.
struct RdrbNode {
  int level = 0;
  std::string path;
  // Tap exposing this node's output to an auxiliary head; kNoTap for the root.
  TapId tap_id = kNoTap;
  // Tap ids of the two children's outputs (empty for leaves).
  std::vector<TapId> aux_tap_ids;

  std::unique_ptr<LeafBlock> leaf;
  std::unique_ptr<RdrbNode> first;
  std::unique_ptr<RdrbNode> second;
  std::optional<Conv2d> fuse;
  std::optional<Esa> esa;
  std::optional<Nlsa> nlsa;
  float negative_slope = 0.05f;

  bool is_leaf() const { return leaf != nullptr; }
  void collect(std::vector<NamedVar>& out) const;
  void collect_buffers(std::vector<NamedVar>& out) const;
};

struct TapInfo {
  TapId id;
  std::string path;  // path of the node whose output is tapped
  int level;         // level of that node
};

// Builds the depth-T tree rooted at `path`. No parameters are shared between
// nodes. Taps are numbered in pre-order over non-root nodes.
RdrbNode build_rdrb(int depth, const BlockConfig& cfg, const std::set<int>& nlsa_levels, Rng& rng,
                    const std::string& path = "body");

std::size_t count_nodes(const RdrbNode& root);
std::vector<TapInfo> list_taps(const RdrbNode& root);

struct RdrbOutput {
  Var out;
  std::map<TapId, Var> taps;
};

RdrbOutput rdrb_forward(const Var& x, const RdrbNode& node, bool training);

// Convolution + sub-pixel layer producing a 3-channel image at scale r.
// With cascade (r = 8 only) the upsampling is three conv + x2 shuffle stages
// followed by a 3x3 conv to RGB.
class ReconstructionHead {
 public:
  ReconstructionHead() = default;
  ReconstructionHead(const std::string& name, int channels, int scale, bool cascade, Rng& rng);

  Var forward(const Var& x) const;
  void collect(std::vector<NamedVar>& out) const;
  int scale() const { return scale_; }
  const std::vector<Conv2d>& convs() const { return convs_; }
  bool cascade() const { return cascade_; }

 private:
  std::vector<Conv2d> convs_;
  int scale_ = 2;
  bool cascade_ = false;
};

// Throws ConfigError unless r is one of 2, 3, 4, 8.
void validate_scale(int scale);

}  // namespace rdrn
