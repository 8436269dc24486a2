#include "rdrn/analysis.hpp"

#include <cstdlib>
#include <numeric>

#include "rdrn/error.hpp"

namespace rdrn {

std::uint64_t conv_params(int kernel, int c_in, int c_out) {
  return static_cast<std::uint64_t>(kernel) * kernel * c_in * c_out + c_out;
}

std::uint64_t conv_macs(int kernel, int c_in, int c_out, int out_h, int out_w) {
  return static_cast<std::uint64_t>(kernel) * kernel * c_in * c_out * out_h * out_w;
}

std::map<int, std::pair<std::uint64_t, std::uint64_t>> CostReport::per_level() const {
  std::map<int, std::pair<std::uint64_t, std::uint64_t>> out;
  for (const auto& e : breakdown) {
    if (e.level < 0) continue;
    out[e.level].first += e.params;
    out[e.level].second += e.flops;
  }
  return out;
}

namespace {

class Counter {
 public:
  Counter(const RdrnConfig& cfg, int h, int w, CostReport& report)
      : cfg_(cfg), h_(h), w_(w), report_(report) {}

  void conv(NodeCost& node, const std::string& name, int k, int cin, int cout, int oh, int ow) {
    report_.tensors.push_back({name + ".weight", static_cast<std::uint64_t>(k) * k * cin * cout});
    report_.tensors.push_back({name + ".bias", static_cast<std::uint64_t>(cout)});
    node.params += conv_params(k, cin, cout);
    node.flops += conv_macs(k, cin, cout, oh, ow);
  }

  void esa(NodeCost& node, const std::string& name) {
    const int c = cfg_.channels, f = c / cfg_.esa_reduction;
    const int h2 = esa_strided_extent(h_), w2 = esa_strided_extent(w_);
    const int hp = esa_pooled_extent(h2), wp = esa_pooled_extent(w2);
    conv(node, name + ".conv1", 1, c, f, h_, w_);
    conv(node, name + ".conv_f", 1, f, f, h_, w_);
    conv(node, name + ".conv2", 3, f, f, h2, w2);
    conv(node, name + ".conv_max", 3, f, f, hp, wp);
    conv(node, name + ".conv3", 3, f, f, hp, wp);
    conv(node, name + ".conv3b", 3, f, f, hp, wp);
    conv(node, name + ".conv4", 1, f, c, h_, w_);
  }

  void nlsa(NodeCost& node, const std::string& name) {
    const int c = cfg_.channels, cq = c / cfg_.nlsa_reduction;
    const int s = nlsa_key_stride(h_, w_, cfg_.nlsa_max_key_side);
    const int hk = (h_ + s - 1) / s, wk = (w_ + s - 1) / s;
    const std::uint64_t queries = static_cast<std::uint64_t>(h_) * w_;
    const std::uint64_t keys = static_cast<std::uint64_t>(hk) * wk;
    conv(node, name + ".match", 1, c, cq, h_, w_);
    node.flops += conv_macs(1, c, cq, hk, wk);  // match is applied to the keys as well
    conv(node, name + ".assembly", 1, c, c, hk, wk);
    node.flops += queries * keys * cq;  // scores
    node.flops += queries * keys * c;   // aggregation
  }

  void tree(int level, const std::string& path) {
    NodeCost node{path, level, 0, 0};
    const int c = cfg_.channels;
    if (level == 0) {
      report_.tensors.push_back({path + ".norm.weight", static_cast<std::uint64_t>(c)});
      report_.tensors.push_back({path + ".norm.bias", static_cast<std::uint64_t>(c)});
      node.params += 2ull * c;
      conv(node, path + ".conv", 3, c, c, h_, w_);
      conv(node, path + ".phi", 1, 1, 1, 1, 1);
      esa(node, path + ".esa");
      report_.breakdown.push_back(node);
      return;
    }
    conv(node, path + ".fuse", 1, 2 * c, c, h_, w_);
    esa(node, path + ".esa");
    if (nlsa_levels_.count(level)) nlsa(node, path + ".nlsa");
    report_.breakdown.push_back(node);
    tree(level - 1, path + ".0");
    tree(level - 1, path + ".1");
  }

  void head(const std::string& name, bool cascade) {
    NodeCost node{name, -1, 0, 0};
    const int c = cfg_.channels, r = cfg_.scale;
    if (cascade) {
      for (int i = 0; i < 3; ++i) {
        const int m = 1 << i;
        conv(node, name + ".up" + std::to_string(i), 3, c, 4 * c, h_ * m, w_ * m);
      }
      conv(node, name + ".out", 3, c, 3, 8 * h_, 8 * w_);
    } else {
      conv(node, name + ".conv", 3, c, 3 * r * r, h_, w_);
    }
    report_.breakdown.push_back(node);
  }

  void run(bool include_aux) {
    nlsa_levels_ = cfg_.effective_nlsa_levels();
    NodeCost shallow{"shallow", -1, 0, 0};
    conv(shallow, "shallow", 3, 3, cfg_.channels, h_, w_);
    report_.breakdown.push_back(shallow);
    tree(cfg_.depth, "body");
    head("head", cfg_.cascade_x8 && cfg_.scale == 8);
    if (include_aux) {
      const int taps = (1 << (cfg_.depth + 1)) - 2;
      for (int id = 0; id < taps; ++id) head("aux." + std::to_string(id), false);
    }
  }

 private:
  const RdrnConfig& cfg_;
  int h_, w_;
  CostReport& report_;
  std::set<int> nlsa_levels_;
};

}  // namespace

CostReport analyze(const RdrnConfig& cfg, int input_h, int input_w, const AnalysisOptions& opt) {
  cfg.validate();
  if (input_h < 1 || input_w < 1) throw InputError("input extent must be at least 1x1");
  CostReport report;
  report.input_h = input_h;
  report.input_w = input_w;
  report.flops_are_macs = !opt.flops_x2;
  Counter(cfg, input_h, input_w, report).run(opt.include_aux);
  for (const auto& e : report.breakdown) {
    report.params += e.params;
    report.flops += e.flops;
  }
  if (opt.flops_x2) {
    report.flops *= 2;
    for (auto& e : report.breakdown) e.flops *= 2;
  }
  return report;
}

std::uint64_t count_params(const RdrnConfig& cfg, bool include_aux) {
  AnalysisOptions opt;
  opt.include_aux = include_aux;
  return analyze(cfg, 1, 1, opt).params;
}

std::uint64_t estimate_flops(const RdrnConfig& cfg, int input_h, int input_w, bool include_aux) {
  AnalysisOptions opt;
  opt.include_aux = include_aux;
  return analyze(cfg, input_h, input_w, opt).flops;
}

int search_channels(const RdrnConfig& cfg, std::uint64_t target, int max_channels) {
  const int step = std::lcm(cfg.esa_reduction, cfg.nlsa_reduction);
  int best = step;
  std::uint64_t best_err = UINT64_MAX;
  RdrnConfig probe = cfg;
  for (int c = step; c <= max_channels; c += step) {
    probe.channels = c;
    const std::uint64_t p = count_params(probe);
    const std::uint64_t err = p > target ? p - target : target - p;
    if (err < best_err) {
      best_err = err;
      best = c;
    }
  }
  return best;
}

}  // namespace rdrn
