#pragma once

// Closed-form parameter and multiply-accumulate counts for an RdrnConfig,
// derived from the layer shapes without instantiating a model.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "rdrn/model.hpp"

namespace rdrn {

struct TensorCost {
  std::string name;
  std::uint64_t params = 0;
};

struct NodeCost {
  std::string path;  // "shallow", tree node path, "head" or "aux.<id>"
  int level = -1;    // tree level, -1 outside the tree
  std::uint64_t params = 0;
  std::uint64_t flops = 0;
};

struct AnalysisOptions {
  bool include_aux = false;  // count auxiliary heads (training-time only)
  bool flops_x2 = false;     // report 2 * MACs instead of MACs
};

struct CostReport {
  std::uint64_t params = 0;
  std::uint64_t flops = 0;
  int input_h = 0;
  int input_w = 0;
  bool flops_are_macs = true;
  // One entry per trainable tensor, in the model's canonical order.
  std::vector<TensorCost> tensors;
  // One entry per component; tree nodes list only their own payload.
  std::vector<NodeCost> breakdown;

  // Aggregates of the tree entries by level.
  std::map<int, std::pair<std::uint64_t, std::uint64_t>> per_level() const;
};

std::uint64_t conv_params(int kernel, int c_in, int c_out);
std::uint64_t conv_macs(int kernel, int c_in, int c_out, int out_h, int out_w);

CostReport analyze(const RdrnConfig& cfg, int input_h, int input_w, const AnalysisOptions& opt = {});
std::uint64_t count_params(const RdrnConfig& cfg, bool include_aux = false);
std::uint64_t estimate_flops(const RdrnConfig& cfg, int input_h, int input_w,
                             bool include_aux = false);

// Diagnostic: width c (multiple of lcm(esa, nlsa reductions)) whose parameter
// count at cfg.depth is closest to `target`.
int search_channels(const RdrnConfig& cfg, std::uint64_t target, int max_channels = 1024);

}  // namespace rdrn
