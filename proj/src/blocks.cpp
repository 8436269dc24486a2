#include "rdrn/blocks.hpp"

#include <algorithm>
#include <functional>

#include "rdrn/error.hpp"
#include "rdrn/ops.hpp"

namespace rdrn {

void BlockConfig::validate() const {
  if (channels < 1) throw ConfigError("channels must be positive");
  if (esa_reduction < 1 || channels % esa_reduction != 0) {
    throw ConfigError("channels (" + std::to_string(channels) +
                      ") must be divisible by esa_reduction (" + std::to_string(esa_reduction) +
                      ")");
  }
  if (nlsa_reduction < 1 || channels % nlsa_reduction != 0) {
    throw ConfigError("channels must be divisible by nlsa_reduction");
  }
  if (!(negative_slope > 0.0f && negative_slope < 1.0f)) {
    throw ConfigError("negative_slope must lie in (0, 1)");
  }
  if (nlsa_max_key_side < 1) throw ConfigError("nlsa_max_key_side must be positive");
}

void validate_scale(int scale) {
  if (scale != 2 && scale != 3 && scale != 4 && scale != 8) {
    throw ConfigError("unsupported scale " + std::to_string(scale) + " (expected 2, 3, 4 or 8)");
  }
}

// ---------------------------------------------------------------------------
// ESA

int esa_strided_extent(int extent) { return ops::conv_out_size(extent, 3, 2, 1); }
int esa_pool_kernel(int strided_extent) { return std::min(Esa::kPoolKernel, strided_extent); }
int esa_pooled_extent(int strided_extent) {
  return (strided_extent - esa_pool_kernel(strided_extent)) / Esa::kPoolStride + 1;
}

Esa::Esa(const std::string& name, int channels, int reduction, Rng& rng) {
  if (channels % reduction != 0) throw ConfigError("ESA channels not divisible by reduction");
  const int f = channels / reduction;
  conv1 = Conv2d(name + ".conv1", channels, f, 1, 1, 0, rng);
  conv_f = Conv2d(name + ".conv_f", f, f, 1, 1, 0, rng);
  conv2 = Conv2d(name + ".conv2", f, f, 3, 2, 1, rng);
  conv_max = Conv2d(name + ".conv_max", f, f, 3, 1, 1, rng);
  conv3 = Conv2d(name + ".conv3", f, f, 3, 1, 1, rng);
  conv3b = Conv2d(name + ".conv3b", f, f, 3, 1, 1, rng);
  conv4 = Conv2d(name + ".conv4", f, channels, 1, 1, 0, rng);
}

Var Esa::mask(const Var& x) const {
  if (x->value.c() != channels()) {
    throw ConfigError("ESA expects " + std::to_string(channels()) + " channels, got " +
                      std::to_string(x->value.c()));
  }
  const int h = x->value.h(), w = x->value.w();
  Var c1_ = conv1.forward(x);
  Var c1 = conv2.forward(c1_);
  Var v_max = ops::max_pool2d(c1, esa_pool_kernel(c1->value.h()), esa_pool_kernel(c1->value.w()),
                              kPoolStride);
  Var v_range = ops::relu(conv_max.forward(v_max));
  Var c3 = ops::relu(conv3.forward(v_range));
  c3 = conv3b.forward(c3);
  c3 = ops::resize_bilinear(c3, h, w);
  Var cf = conv_f.forward(c1_);
  Var c4 = conv4.forward(ops::add(c3, cf));
  return ops::sigmoid(c4);
}

Var Esa::forward(const Var& x) const { return ops::mul(x, mask(x)); }

void Esa::collect(std::vector<NamedVar>& out) const {
  for (const Conv2d* c : {&conv1, &conv_f, &conv2, &conv_max, &conv3, &conv3b, &conv4}) {
    c->collect(out);
  }
}

// ---------------------------------------------------------------------------
// NLSA

int nlsa_key_stride(int h, int w, int max_key_side) {
  const int side = std::max(h, w);
  return (side + max_key_side - 1) / max_key_side;
}

Nlsa::Nlsa(const std::string& name, int channels, int reduction, int max_key_side, Rng& rng)
    : match(name + ".match", channels, channels / reduction, 1, 1, 0, rng),
      assembly(name + ".assembly", channels, channels, 1, 1, 0, rng),
      max_key_side_(max_key_side) {}

int Nlsa::key_stride(int h, int w) const { return nlsa_key_stride(h, w, max_key_side_); }

Var Nlsa::forward(const Var& x) const {
  const int stride = key_stride(x->value.h(), x->value.w());
  Var keys_in = stride > 1 ? ops::avg_pool_ceil(x, stride) : x;
  Var q = match.forward(x);
  Var k = ops::l2_normalize_channels(match.forward(keys_in));
  Var v = assembly.forward(keys_in);
  return ops::add(x, ops::attention(q, k, v));
}

void Nlsa::collect(std::vector<NamedVar>& out) const {
  match.collect(out);
  assembly.collect(out);
}

// ---------------------------------------------------------------------------
// Leaf block

LeafBlock::LeafBlock(const std::string& name, const BlockConfig& cfg, Rng& rng)
    : norm(name + ".norm", cfg.channels),
      conv(name + ".conv", cfg.channels, cfg.channels, 3, 1, 1, rng),
      phi(name + ".phi", 1, 1, 1, 1, 0, rng),
      esa(name + ".esa", cfg.channels, cfg.esa_reduction, rng),
      negative_slope(cfg.negative_slope) {
  phi.weight->value.fill(1.0f);
  phi.bias->value.fill(0.0f);
}

Var LeafBlock::modulation(const Var& x) const {
  Var s = ops::sample_std(x, kStdFloor);
  return ops::exp(phi.forward(ops::log(s)));
}

Var LeafBlock::forward(const Var& x, bool training) const {
  Var h = ops::leaky_relu(conv.forward(norm.forward(x, training)), negative_slope);
  h = ops::scale_per_sample(h, modulation(x));
  return esa.forward(ops::add(h, x));
}

void LeafBlock::collect(std::vector<NamedVar>& out) const {
  norm.collect(out);
  conv.collect(out);
  phi.collect(out);
  esa.collect(out);
}

void LeafBlock::collect_buffers(std::vector<NamedVar>& out) const { norm.collect_buffers(out); }

// ---------------------------------------------------------------------------
// Recursive tree

void RdrbNode::collect(std::vector<NamedVar>& out) const {
  if (leaf) {
    leaf->collect(out);
    return;
  }
  fuse->collect(out);
  esa->collect(out);
  if (nlsa) nlsa->collect(out);
  first->collect(out);
  second->collect(out);
}

void RdrbNode::collect_buffers(std::vector<NamedVar>& out) const {
  if (leaf) {
    leaf->collect_buffers(out);
    return;
  }
  first->collect_buffers(out);
  second->collect_buffers(out);
}

namespace {

std::unique_ptr<RdrbNode> build_node(int level, const BlockConfig& cfg,
                                     const std::set<int>& nlsa_levels, Rng& rng,
                                     const std::string& path) {
  auto node = std::make_unique<RdrbNode>();
  node->level = level;
  node->path = path;
  node->negative_slope = cfg.negative_slope;
  if (level == 0) {
    node->leaf = std::make_unique<LeafBlock>(path, cfg, rng);
    return node;
  }
  node->fuse.emplace(path + ".fuse", 2 * cfg.channels, cfg.channels, 1, 1, 0, rng);
  node->esa.emplace(path + ".esa", cfg.channels, cfg.esa_reduction, rng);
  if (nlsa_levels.count(level)) {
    node->nlsa.emplace(path + ".nlsa", cfg.channels, cfg.nlsa_reduction, cfg.nlsa_max_key_side,
                       rng);
  }
  node->first = build_node(level - 1, cfg, nlsa_levels, rng, path + ".0");
  node->second = build_node(level - 1, cfg, nlsa_levels, rng, path + ".1");
  return node;
}

void assign_taps(RdrbNode& node, TapId& next) {
  if (node.is_leaf()) return;
  for (RdrbNode* child : {node.first.get(), node.second.get()}) {
    child->tap_id = next++;
    node.aux_tap_ids.push_back(child->tap_id);
    assign_taps(*child, next);
  }
}

}  // namespace

RdrbNode build_rdrb(int depth, const BlockConfig& cfg, const std::set<int>& nlsa_levels, Rng& rng,
                    const std::string& path) {
  if (depth < 0) throw ConfigError("recursion depth must be non-negative");
  cfg.validate();
  RdrbNode root = std::move(*build_node(depth, cfg, nlsa_levels, rng, path));
  TapId next = 0;
  assign_taps(root, next);
  return root;
}

std::size_t count_nodes(const RdrbNode& root) {
  if (root.is_leaf()) return 1;
  return 1 + count_nodes(*root.first) + count_nodes(*root.second);
}

std::vector<TapInfo> list_taps(const RdrbNode& root) {
  std::vector<TapInfo> taps;
  std::function<void(const RdrbNode&)> visit = [&](const RdrbNode& n) {
    if (n.is_leaf()) return;
    for (const RdrbNode* child : {n.first.get(), n.second.get()}) {
      taps.push_back({child->tap_id, child->path, child->level});
      visit(*child);
    }
  };
  visit(root);
  return taps;
}

RdrbOutput rdrb_forward(const Var& x, const RdrbNode& node, bool training) {
  if (node.is_leaf()) return {node.leaf->forward(x, training), {}};
  RdrbOutput a = rdrb_forward(x, *node.first, training);
  RdrbOutput b = rdrb_forward(a.out, *node.second, training);
  Var fused = ops::add(node.fuse->forward(ops::concat_channels(a.out, b.out)), x);
  Var out = node.esa->forward(ops::leaky_relu(fused, node.negative_slope));
  if (node.nlsa) out = node.nlsa->forward(out);

  RdrbOutput result{out, std::move(a.taps)};
  result.taps.merge(b.taps);
  result.taps.emplace(node.first->tap_id, a.out);
  result.taps.emplace(node.second->tap_id, b.out);
  return result;
}

// ---------------------------------------------------------------------------
// Reconstruction head

ReconstructionHead::ReconstructionHead(const std::string& name, int channels, int scale,
                                       bool cascade, Rng& rng)
    : scale_(scale), cascade_(cascade && scale == 8) {
  validate_scale(scale);
  if (cascade_) {
    for (int i = 0; i < 3; ++i) {
      convs_.emplace_back(name + ".up" + std::to_string(i), channels, 4 * channels, 3, 1, 1, rng);
    }
    convs_.emplace_back(name + ".out", channels, 3, 3, 1, 1, rng);
  } else {
    convs_.emplace_back(name + ".conv", channels, 3 * scale * scale, 3, 1, 1, rng);
  }
}

Var ReconstructionHead::forward(const Var& x) const {
  if (!cascade_) return ops::pixel_shuffle(convs_.front().forward(x), scale_);
  Var h = x;
  for (int i = 0; i < 3; ++i) h = ops::pixel_shuffle(convs_[i].forward(h), 2);
  return convs_.back().forward(h);
}

void ReconstructionHead::collect(std::vector<NamedVar>& out) const {
  for (const auto& c : convs_) c.collect(out);
}

}  // namespace rdrn
