// rdrn: train, fine-tune, evaluate and run recursive residual SR networks.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "rdrn/analysis.hpp"
#include "rdrn/checkpoint.hpp"
#include "rdrn/config.hpp"
#include "rdrn/dataset.hpp"
#include "rdrn/degradation.hpp"
#include "rdrn/error.hpp"
#include "rdrn/image.hpp"
#include "rdrn/inference.hpp"
#include "rdrn/metrics.hpp"
#include "rdrn/training.hpp"

namespace fs = std::filesystem;
using namespace rdrn;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

// Flags that mirror config-file keys. A flag given on the command line
// overrides the file; the merged map is what the subcommand runs with.
class KeyFlags {
 public:
  explicit KeyFlags(CLI::App* app) : app_(app) {}

  void option(const std::string& flag, const std::string& key, const std::string& help) {
    auto* opt = app_->add_option("--" + flag, raw_[key], help);
    opts_.emplace_back(key, opt);
  }

  void toggle(const std::string& flag, const std::string& key, const std::string& help) {
    auto* on = app_->add_flag("--" + flag)->description(help);
    auto* off = app_->add_flag("--no-" + flag)->description("Disable --" + flag);
    on->excludes(off);
    toggles_.emplace_back(key, on, off);
  }

  KeyValues merged(const KeyValues& file) const {
    KeyValues kv = file;
    for (const auto& [key, opt] : opts_) {
      if (opt->count() > 0) kv[key] = raw_.at(key);
    }
    for (const auto& [key, on, off] : toggles_) {
      if (on->count() > 0) kv[key] = "true";
      if (off->count() > 0) kv[key] = "false";
    }
    return kv;
  }

 private:
  CLI::App* app_;
  std::map<std::string, std::string> raw_;
  std::vector<std::pair<std::string, CLI::Option*>> opts_;
  std::vector<std::tuple<std::string, CLI::Option*, CLI::Option*>> toggles_;
};

void add_model_flags(KeyFlags& f) {
  f.option("depth", "depth", "Recursion depth T");
  f.option("channels", "channels", "Feature channels c");
  f.option("scale", "scale", "Upscaling factor (2, 3, 4 or 8)");
  f.option("nlsa-levels", "nlsa_levels", "Tree levels with non-local attention, e.g. 3 or 3..5");
  f.option("aux-zero-levels", "aux_zero_levels", "Tap levels with zero loss weight");
  f.option("esa-reduction", "esa_reduction", "ESA channel reduction");
  f.option("negative-slope", "negative_slope", "Leaky ReLU slope");
  f.option("nlsa-reduction", "nlsa_reduction", "Attention embedding reduction");
  f.option("nlsa-max-key-side", "nlsa_max_key_side", "Largest key grid side before pooling");
  f.toggle("cascade-x8", "cascade_x8", "Use three x2 stages for x8 heads");
  f.option("seed", "seed", "Weight initialisation seed");
}

void add_train_flags(KeyFlags& f) {
  f.option("lr", "learning_rate", "Initial learning rate");
  f.option("decay-steps", "decay_steps", "Steps between learning-rate decays (0: total/4)");
  f.option("decay-factor", "decay_factor", "Learning-rate decay factor");
  f.option("batch", "batch_size", "Batch size");
  f.option("patch", "patch_size", "LR patch side in pixels");
  f.option("steps", "total_steps", "Total optimisation steps of the stage");
  f.option("train-seed", "train_seed", "Sampling seed");
  f.toggle("augment", "augment", "Random dihedral augmentation");
  f.option("is-weights", "is_weights", "paper-default, uniform or final-only");
  f.option("checkpoint-every", "checkpoint_every", "Checkpoint period in steps (0: end only)");
}

void add_degradation_flags(KeyFlags& f) {
  f.option("degradation", "degradation", "BI, BD or DN");
  f.option("blur-kernel-size", "blur_kernel_size", "BD Gaussian kernel size");
  f.option("blur-sigma", "blur_sigma", "BD Gaussian sigma");
  f.option("noise-sigma", "noise_sigma", "DN noise level in 8-bit units");
  f.option("noise-seed", "noise_seed", "DN noise seed");
}

KeyValues load_config_file(const std::string& path, const std::vector<const std::set<std::string>*>& allowed) {
  if (path.empty()) return {};
  KeyValues kv = read_key_values(path);
  for (const auto& [k, v] : kv) {
    bool known = false;
    for (const auto* set : allowed) known = known || set->count(k);
    if (!known) throw ConfigError("unknown key '" + k + "' in " + path);
  }
  return kv;
}

KeyValues only(const KeyValues& kv, const std::set<std::string>& keys) {
  KeyValues out;
  for (const auto& [k, v] : kv) {
    if (keys.count(k)) out[k] = v;
  }
  return out;
}

void echo_config(const std::string& command, const KeyValues& kv) {
  std::cerr << "# rdrn " << command << " effective config\n" << format_key_values(kv);
}

std::string fixed(double v, int precision) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(precision) << v;
  return os.str();
}

std::vector<TrainingPair> to_pairs(const Dataset& ds) {
  std::vector<TrainingPair> pairs;
  for (const auto& img : ds.images) pairs.push_back({img.hr, img.lr});
  return pairs;
}

Dataset load_training_set(const std::string& root, const DegradationSpec& spec) {
  Dataset ds = load_dataset(root, spec);
  for (const auto& s : ds.skipped) std::cerr << "skipped " << s.name << ": " << s.reason << "\n";
  if (ds.images.empty()) throw IoError("no usable images under " + root);
  std::cerr << "loaded " << ds.images.size() << " training images from " << root << "\n";
  return ds;
}

// ---------------------------------------------------------------------------
// train / finetune

struct TrainArgs {
  std::string config, data, out, log, init;
  bool resume = false;
};

int run_training(const TrainArgs& args, const KeyFlags& flags, Stage stage) {
  const KeyValues file =
      load_config_file(args.config, {&model_keys(), &train_keys(), &degradation_keys()});
  KeyValues kv = flags.merged(file);
  kv["stage"] = to_string(stage);

  std::optional<LoadedCheckpoint> init;
  RdrnConfig model_cfg;
  if (stage == Stage::L2Finetune) {
    init.emplace(load_checkpoint(args.init));
    if (init->meta.stage != Stage::L1) {
      throw InputError("--init must be an l1 checkpoint, got " + to_string(init->meta.stage));
    }
    for (const auto& k : model_keys()) {
      if (kv.count(k)) throw ConfigError("model key '" + k + "' comes from the --init checkpoint");
    }
    model_cfg = init->meta.model;
    // Fine-tuning inherits the first stage's schedule unless overridden.
    KeyValues base = to_key_values(init->meta.train);
    base.erase("stage");
    for (const auto& [k, v] : base) kv.emplace(k, v);
  } else {
    model_cfg = model_config_from(only(kv, model_keys()));
  }
  TrainConfig train_cfg = train_config_from(only(kv, train_keys()));
  DegradationSpec spec = degradation_from(only(kv, degradation_keys()));
  spec.scale = model_cfg.scale;
  spec.validate();

  KeyValues effective = to_key_values(model_cfg);
  for (const auto& [k, v] : to_key_values(train_cfg)) effective[k] = v;
  for (const auto& [k, v] : to_key_values(spec)) effective[k] = v;
  echo_config(to_string(stage), effective);

  std::error_code ec;
  fs::create_directories(args.out, ec);
  if (ec) throw IoError("cannot create " + args.out);
  std::ofstream(fs::path(args.out) / "config.txt") << format_key_values(effective);

  Rdrn model = init ? std::move(init->model) : Rdrn(model_cfg);
  TrainOptions opts;
  if (init) opts.init_stage = init->meta.stage;
  if (args.resume && fs::exists(fs::path(args.out) / "manifest.json")) {
    LoadedCheckpoint prev = load_checkpoint(args.out);
    if (!(prev.meta.model == model_cfg) || prev.meta.stage != stage) {
      throw ConfigError("--resume: checkpoint in " + args.out + " has a different model or stage");
    }
    load_weights(args.out, model);
    opts.start_step = prev.meta.step;
    opts.optimizer_state = prev.optimizer;
    opts.init_stage = stage == Stage::L2Finetune ? std::optional<Stage>(Stage::L1) : std::nullopt;
    std::cerr << "resuming at step " << opts.start_step << "\n";
  }

  const Dataset ds = load_training_set(args.data, spec);
  const fs::path log_path = args.log.empty() ? fs::path(args.out) / "train_log.jsonl" : fs::path(args.log);
  std::ofstream log(log_path, opts.start_step > 0 ? std::ios::app : std::ios::trunc);
  if (!log) throw IoError("cannot write " + log_path.string());
  opts.log = &log;
  opts.dump_dir = fs::path(args.out) / "nan_dump";
  opts.on_checkpoint = [&](const Adam& adam, long step) {
    save_checkpoint(args.out, model, {model_cfg, train_cfg, stage, step}, &adam.state());
    std::cerr << "checkpoint at step " << step << " -> " << args.out << "\n";
  };
  const TrainResult res = train_stage(model, to_pairs(ds), train_cfg, opts);
  if (!res.log.empty()) {
    const StepRecord& last = res.log.back();
    std::cout << "stage=" << to_string(stage) << " steps=" << last.step + 1 << " loss=" << last.loss
              << " final_loss=" << last.final_loss << " seconds=" << fixed(last.wall_time, 1) << "\n";
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// eval

struct EvalArgs {
  std::string config, data, checkpoint, baseline, csv, jsonl;
  int scale = 0;
  int shave = -1;
  bool ensemble = false;
  std::optional<int> tile;
};

int run_eval(const EvalArgs& args, const KeyFlags& flags) {
  const KeyValues kv = flags.merged(load_config_file(args.config, {&degradation_keys()}));
  if (args.checkpoint.empty() == args.baseline.empty()) {
    throw ConfigError("eval needs exactly one of --checkpoint or --baseline");
  }
  std::optional<LoadedCheckpoint> ckpt;
  std::unique_ptr<Upscaler> up;
  int scale = args.scale;
  if (!args.checkpoint.empty()) {
    ckpt.emplace(load_checkpoint(args.checkpoint));
    if (scale != 0 && scale != ckpt->model.scale()) {
      throw ConfigError("--scale disagrees with the checkpoint's scale");
    }
    scale = ckpt->model.scale();
    up = std::make_unique<ModelUpscaler>(ckpt->model);
  } else {
    if (scale == 0) scale = 4;
    validate_scale(scale);
    if (args.baseline == "bicubic") {
      up = std::make_unique<BicubicUpscaler>(scale);
    } else if (args.baseline != "hr") {
      throw ConfigError("--baseline must be bicubic or hr");
    }
  }
  DegradationSpec spec = degradation_from(kv);
  spec.scale = scale;
  spec.validate();
  const int shave = args.shave >= 0 ? args.shave : scale;

  KeyValues effective = to_key_values(spec);
  effective["shave"] = std::to_string(shave);
  effective["source"] = args.checkpoint.empty() ? "baseline:" + args.baseline : args.checkpoint;
  effective["ensemble"] = args.ensemble ? "true" : "false";
  echo_config("eval", effective);

  Dataset ds = load_dataset(args.data, spec);
  struct Row {
    std::string name;
    MetricResult y, rgb;
  };
  std::vector<Row> rows;
  std::vector<SkippedImage> skipped = ds.skipped;
  for (const auto& img : ds.images) {
    try {
      Tensor sr;
      if (!up) {
        sr = img.hr;
      } else if (args.ensemble) {
        sr = self_ensemble(*up, img.lr, args.tile);
      } else {
        sr = superresolve(*up, img.lr, args.tile);
      }
      // Model and bicubic scores are computed on what would be written to disk.
      if (up) sr = quantize8(sr);
      rows.push_back({img.name, evaluate(sr, img.hr, shave, ChannelMode::Y),
                      evaluate(sr, img.hr, shave, ChannelMode::RGB)});
    } catch (const std::invalid_argument& e) {
      skipped.push_back({img.name, e.what()});
    }
  }
  for (const auto& s : skipped) std::cerr << "skipped " << s.name << ": " << s.reason << "\n";
  if (rows.empty()) {
    std::cerr << "error: no image could be evaluated\n";
    return kExitFailure;
  }

  Row mean{"mean", {0, 0, ChannelMode::Y, shave}, {0, 0, ChannelMode::RGB, shave}};
  for (const auto& r : rows) {
    mean.y.psnr_db += r.y.psnr_db / rows.size();
    mean.y.ssim += r.y.ssim / rows.size();
    mean.rgb.psnr_db += r.rgb.psnr_db / rows.size();
    mean.rgb.ssim += r.rgb.ssim / rows.size();
  }
  std::vector<Row> all = rows;
  all.push_back(mean);

  std::ostringstream csv;
  csv << "image,psnr_y,ssim_y,psnr_rgb,ssim_rgb\n";
  for (const auto& r : all) {
    csv << r.name << "," << format_psnr(r.y.psnr_db) << "," << fixed(r.y.ssim, 6) << ","
        << format_psnr(r.rgb.psnr_db) << "," << fixed(r.rgb.ssim, 6) << "\n";
  }
  std::cout << csv.str() << "\n";
  std::cout << std::left << std::setw(24) << "image" << std::right << std::setw(12) << "PSNR-Y"
            << std::setw(10) << "SSIM-Y" << std::setw(12) << "PSNR-RGB" << std::setw(10)
            << "SSIM-RGB" << "\n";
  for (const auto& r : all) {
    std::cout << std::left << std::setw(24) << r.name << std::right << std::setw(12)
              << format_psnr(r.y.psnr_db) << std::setw(10) << fixed(r.y.ssim, 4) << std::setw(12)
              << format_psnr(r.rgb.psnr_db) << std::setw(10) << fixed(r.rgb.ssim, 4) << "\n";
  }
  if (!args.csv.empty()) {
    std::ofstream out(args.csv);
    if (!out) throw IoError("cannot write " + args.csv);
    out << csv.str();
  }
  if (!args.jsonl.empty()) {
    std::ofstream out(args.jsonl);
    if (!out) throw IoError("cannot write " + args.jsonl);
    for (const auto& r : all) {
      nlohmann::json j{{"image", r.name},
                       {"psnr_y", format_psnr(r.y.psnr_db, 6)},
                       {"ssim_y", r.y.ssim},
                       {"psnr_rgb", format_psnr(r.rgb.psnr_db, 6)},
                       {"ssim_rgb", r.rgb.ssim},
                       {"shave", shave},
                       {"summary", &r == &all.back()}};
      out << j.dump() << "\n";
    }
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// sr

struct SrArgs {
  std::string input, output, checkpoint;
  bool ensemble = false;
  std::optional<int> tile;
  int overlap = kDefaultTileOverlap;
  int bit_depth = 8;
};

int run_sr(const SrArgs& args) {
  const LoadedCheckpoint ckpt = load_checkpoint(args.checkpoint);
  const ModelUpscaler up(ckpt.model);
  const Tensor lr = read_png(args.input);
  const Tensor sr = args.ensemble ? self_ensemble(up, lr, args.tile, args.overlap)
                                  : superresolve(up, lr, args.tile, args.overlap);
  write_png(args.output, sr, args.bit_depth);
  std::cerr << args.input << " " << lr.w() << "x" << lr.h() << " -> " << args.output << " "
            << sr.w() << "x" << sr.h() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// analyze

struct AnalyzeArgs {
  std::string config, sweep;
  int height = 64, width = 64;
  bool include_aux = false, flops_x2 = false, csv = false;
  long long search_params = 0;
};

int run_analyze(const AnalyzeArgs& args, const KeyFlags& flags) {
  const KeyValues kv = flags.merged(load_config_file(args.config, {&model_keys()}));
  RdrnConfig cfg = model_config_from(kv);
  const AnalysisOptions opt{args.include_aux, args.flops_x2};
  const std::string unit = args.flops_x2 ? "flops" : "macs";

  if (!args.sweep.empty()) {
    const std::set<int> depths = parse_int_set(args.sweep);
    if (depths.empty()) throw ConfigError("--sweep needs at least one depth");
    if (args.csv) std::cout << "depth,params," << unit << ",params_ratio," << unit << "_ratio\n";
    else
      std::cout << std::setw(6) << "depth" << std::setw(16) << "params" << std::setw(20) << unit
                << std::setw(14) << "params_ratio" << std::setw(14) << (unit + "_ratio") << "\n";
    std::optional<CostReport> prev;
    for (int d : depths) {
      cfg.depth = d;
      const CostReport rep = analyze(cfg, args.height, args.width, opt);
      const std::string rp = prev ? fixed(double(rep.params) / prev->params, 4) : "";
      const std::string rf = prev ? fixed(double(rep.flops) / prev->flops, 4) : "";
      if (args.csv) {
        std::cout << d << "," << rep.params << "," << rep.flops << "," << rp << "," << rf << "\n";
      } else {
        std::cout << std::setw(6) << d << std::setw(16) << rep.params << std::setw(20) << rep.flops
                  << std::setw(14) << (rp.empty() ? "-" : rp) << std::setw(14)
                  << (rf.empty() ? "-" : rf) << "\n";
      }
      prev = rep;
    }
    return kExitOk;
  }

  const CostReport rep = analyze(cfg, args.height, args.width, opt);
  if (args.csv) {
    std::cout << "component,level,params," << unit << "\n";
    for (const auto& e : rep.breakdown) {
      std::cout << e.path << "," << e.level << "," << e.params << "," << e.flops << "\n";
    }
    std::cout << "total,," << rep.params << "," << rep.flops << "\n";
  } else {
    std::cout << "depth: " << cfg.depth << "\nchannels: " << cfg.channels << "\nscale: " << cfg.scale
              << "\ninput: 3x" << args.height << "x" << args.width << "\nparams: " << rep.params
              << "\n" << unit << ": " << rep.flops << "\naux_heads_counted: "
              << (args.include_aux ? "yes" : "no") << "\nper_level:\n";
    for (const auto& [level, pf] : rep.per_level()) {
      std::cout << "  level " << level << ": params " << pf.first << ", " << unit << " " << pf.second
                << "\n";
    }
    std::cout << "outside_tree:\n";
    for (const auto& e : rep.breakdown) {
      if (e.level < 0) {
        std::cout << "  " << e.path << ": params " << e.params << ", " << unit << " " << e.flops << "\n";
      }
    }
  }
  if (args.search_params > 0) {
    const int c = search_channels(cfg, static_cast<std::uint64_t>(args.search_params));
    RdrnConfig probe = cfg;
    probe.channels = c;
    const auto p = count_params(probe);
    std::cout << "closest_channels: " << c << " (params " << p << ", "
              << fixed(100.0 * (double(p) - args.search_params) / args.search_params, 2)
              << "% from target)\n";
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// degrade

struct DegradeArgs {
  std::string config, input, output, data;
  int scale = 4;
};

int run_degrade(const DegradeArgs& args, const KeyFlags& flags) {
  const KeyValues kv = flags.merged(load_config_file(args.config, {&degradation_keys()}));
  DegradationSpec spec = degradation_from(kv);
  spec.scale = args.scale;
  spec.validate();
  echo_config("degrade", to_key_values(spec));
  if (!args.data.empty()) {
    const Dataset ds = load_dataset(args.data, spec);
    for (const auto& s : ds.skipped) std::cerr << "skipped " << s.name << ": " << s.reason << "\n";
    std::cout << ds.images.size() << " images cached in " << lr_cache_dir(args.data, spec).string()
              << "\n";
    return ds.images.empty() ? kExitFailure : kExitOk;
  }
  if (args.input.empty() || args.output.empty()) {
    throw ConfigError("degrade needs --input and --output, or --data");
  }
  const Tensor lr = degrade(read_png(args.input), spec);
  write_png(args.output, lr, 8);
  std::cout << args.output << " " << lr.w() << "x" << lr.h() << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Recursive residual network for single-image super-resolution"};
  app.require_subcommand(1);

  TrainArgs train_args, finetune_args;
  auto* train = app.add_subcommand("train", "First stage: l1 training from scratch");
  train->add_option("--config", train_args.config, "Key-value config file");
  train->add_option("--data", train_args.data, "Dataset root (<root>/HR/*.png)")->required();
  train->add_option("--out", train_args.out, "Checkpoint directory")->required();
  train->add_option("--log", train_args.log, "Step log (default <out>/train_log.jsonl)");
  train->add_flag("--resume", train_args.resume, "Continue from the checkpoint in --out");
  KeyFlags train_flags(train);
  add_model_flags(train_flags);
  add_train_flags(train_flags);
  add_degradation_flags(train_flags);

  auto* finetune = app.add_subcommand("finetune", "Second stage: l2 fine-tuning of an l1 checkpoint");
  finetune->add_option("--config", finetune_args.config, "Key-value config file");
  finetune->add_option("--init", finetune_args.init, "l1 checkpoint to start from")->required();
  finetune->add_option("--data", finetune_args.data, "Dataset root")->required();
  finetune->add_option("--out", finetune_args.out, "Checkpoint directory")->required();
  finetune->add_option("--log", finetune_args.log, "Step log (default <out>/train_log.jsonl)");
  finetune->add_flag("--resume", finetune_args.resume, "Continue from the checkpoint in --out");
  KeyFlags finetune_flags(finetune);
  add_train_flags(finetune_flags);
  add_degradation_flags(finetune_flags);

  EvalArgs eval_args;
  auto* eval = app.add_subcommand("eval", "PSNR/SSIM on a dataset folder");
  eval->add_option("--config", eval_args.config, "Key-value config file");
  eval->add_option("--data", eval_args.data, "Dataset root")->required();
  eval->add_option("--checkpoint", eval_args.checkpoint, "Model checkpoint directory");
  eval->add_option("--baseline", eval_args.baseline, "bicubic or hr instead of a model");
  eval->add_option("--scale", eval_args.scale, "Scale for baselines (default 4)");
  eval->add_option("--shave", eval_args.shave, "Border pixels ignored (default: scale)");
  eval->add_flag("--ensemble", eval_args.ensemble, "Eight-way geometric self-ensemble");
  eval->add_option("--tile", eval_args.tile, "Tile size for memory-bounded inference");
  eval->add_option("--csv", eval_args.csv, "Also write the CSV table here");
  eval->add_option("--jsonl", eval_args.jsonl, "Write line-delimited records here");
  KeyFlags eval_flags(eval);
  add_degradation_flags(eval_flags);

  SrArgs sr_args;
  auto* sr = app.add_subcommand("sr", "Super-resolve one PNG");
  sr->add_option("--input", sr_args.input, "LR image")->required();
  sr->add_option("--output", sr_args.output, "SR image")->required();
  sr->add_option("--checkpoint", sr_args.checkpoint, "Model checkpoint directory")->required();
  sr->add_flag("--ensemble", sr_args.ensemble, "Eight-way geometric self-ensemble");
  sr->add_option("--tile", sr_args.tile, "Tile size");
  sr->add_option("--overlap", sr_args.overlap, "Context pixels around each tile");
  sr->add_option("--bit-depth", sr_args.bit_depth, "Output PNG bit depth")->check(CLI::IsMember({8, 16}));

  AnalyzeArgs an_args;
  auto* an = app.add_subcommand("analyze", "Parameter and multiply-accumulate counts");
  an->add_option("--config", an_args.config, "Key-value config file");
  an->add_option("--height", an_args.height, "Input height")->check(CLI::PositiveNumber);
  an->add_option("--width", an_args.width, "Input width")->check(CLI::PositiveNumber);
  an->add_option("--sweep", an_args.sweep, "Depth range, e.g. 3..6");
  an->add_flag("--include-aux", an_args.include_aux, "Count auxiliary heads");
  an->add_flag("--flops-x2", an_args.flops_x2, "Report 2 x MACs");
  an->add_flag("--csv", an_args.csv, "CSV output");
  an->add_option("--search-params", an_args.search_params, "Find the width closest to this count");
  KeyFlags an_flags(an);
  add_model_flags(an_flags);

  DegradeArgs dg_args;
  auto* dg = app.add_subcommand("degrade", "Generate LR images");
  dg->add_option("--config", dg_args.config, "Key-value config file");
  dg->add_option("--input", dg_args.input, "HR image");
  dg->add_option("--output", dg_args.output, "LR image");
  dg->add_option("--data", dg_args.data, "Dataset root: fill the LR cache");
  dg->add_option("--scale", dg_args.scale, "Downscaling factor");
  KeyFlags dg_flags(dg);
  add_degradation_flags(dg_flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*train) return run_training(train_args, train_flags, Stage::L1);
    if (*finetune) return run_training(finetune_args, finetune_flags, Stage::L2Finetune);
    if (*eval) return run_eval(eval_args, eval_flags);
    if (*sr) return run_sr(sr_args);
    if (*an) return run_analyze(an_args, an_flags);
    if (*dg) return run_degrade(dg_args, dg_flags);
  } catch (const ConfigError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const TrainingDiverged& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}
