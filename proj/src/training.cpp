#include "rdrn/training.hpp"

#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "rdrn/dihedral.hpp"
#include "rdrn/error.hpp"

namespace rdrn {

std::string to_string(Stage stage) { return stage == Stage::L1 ? "l1" : "l2_finetune"; }

Stage parse_stage(const std::string& s) {
  if (s == "l1") return Stage::L1;
  if (s == "l2_finetune" || s == "l2") return Stage::L2Finetune;
  throw ConfigError("unknown training stage '" + s + "' (expected l1 or l2_finetune)");
}

LossKind stage_loss(Stage stage) { return stage == Stage::L1 ? LossKind::L1 : LossKind::L2; }

void TrainConfig::validate() const {
  if (!(learning_rate >= 0.0f)) throw ConfigError("learning rate must be non-negative");
  if (decay_steps < 0) throw ConfigError("decay_steps must be non-negative");
  if (!(decay_factor > 0.0f)) throw ConfigError("decay_factor must be positive");
  if (batch_size < 1) throw ConfigError("batch_size must be positive");
  if (lr_patch_size < 1) throw ConfigError("lr_patch_size must be positive");
  if (total_steps < 0) throw ConfigError("total_steps must be non-negative");
  if (is_weights != "paper-default" && is_weights != "uniform" && is_weights != "final-only") {
    throw ConfigError("is_weights must be paper-default, uniform or final-only");
  }
}

float TrainConfig::learning_rate_at(long step) const {
  const long period = decay_steps > 0 ? decay_steps : std::max(1L, total_steps / 4);
  return learning_rate * std::pow(decay_factor, static_cast<float>(step / period));
}

IsWeights resolve_is_weights(const Rdrn& model, const std::string& rule) {
  if (rule == "paper-default") return default_is_weights(model);
  if (rule == "uniform") return uniform_is_weights(model.taps());
  if (rule == "final-only") {
    IsWeights w = uniform_is_weights(model.taps(), 0.0f);
    w.w_final = 1.0f;
    return w;
  }
  throw ConfigError("unknown IS weight rule '" + rule + "'");
}

TrainingPair sample_patch(const Tensor& hr, const Tensor& lr, int patch, Rng& rng) {
  if (lr.h() == 0 || hr.h() % lr.h() != 0 || hr.w() % lr.w() != 0 ||
      hr.h() / lr.h() != hr.w() / lr.w()) {
    throw InputError("HR " + hr.shape().str() + " is not an integer multiple of LR " +
                     lr.shape().str());
  }
  const int r = hr.h() / lr.h();
  if (patch > lr.h() || patch > lr.w() || patch < 1) {
    throw InputError("patch size " + std::to_string(patch) + " exceeds LR image " +
                     lr.shape().str());
  }
  std::uniform_int_distribution<int> dy(0, lr.h() - patch), dx(0, lr.w() - patch);
  const int y = dy(rng);
  const int x = dx(rng);
  return {crop(hr, r * y, r * x, r * patch, r * patch), crop(lr, y, x, patch, patch)};
}

TrainingPair augment(const TrainingPair& pair, int transform) {
  return {dihedral_apply(pair.hr, transform), dihedral_apply(pair.lr, transform)};
}

TrainingPair augment(const TrainingPair& pair, Rng& rng) {
  std::uniform_int_distribution<int> pick(0, kDihedralCount - 1);
  return augment(pair, pick(rng));
}

std::uint64_t weights_hash(const Rdrn& model) {
  std::uint64_t h = 1469598103934665603ull;
  for (const auto& p : model.parameters()) {
    const auto* bytes = reinterpret_cast<const unsigned char*>(p.var->value.data());
    for (std::size_t i = 0; i < p.var->value.numel() * sizeof(float); ++i) {
      h ^= bytes[i];
      h *= 1099511628211ull;
    }
  }
  return h;
}

std::string to_json_line(const StepRecord& r) {
  nlohmann::json j{{"step", r.step},
                   {"loss", r.loss},
                   {"final_loss", r.final_loss},
                   {"lr", r.learning_rate},
                   {"wall_time", r.wall_time}};
  return j.dump();
}

namespace {

void write_raw(const std::filesystem::path& path, const Tensor& t) {
  std::ofstream os(path, std::ios::binary);
  os.write(reinterpret_cast<const char*>(t.data()), static_cast<std::streamsize>(t.numel() * sizeof(float)));
}

std::string dump_batch(const std::filesystem::path& dir, long step, const Tensor& lr,
                       const Tensor& hr, double loss) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  write_raw(dir / "batch_lr.f32", lr);
  write_raw(dir / "batch_hr.f32", hr);
  nlohmann::json info{{"step", step},
                      {"loss", std::isnan(loss) ? "nan" : (loss > 0 ? "inf" : "-inf")},
                      {"lr_shape", {lr.n(), lr.c(), lr.h(), lr.w()}},
                      {"hr_shape", {hr.n(), hr.c(), hr.h(), hr.w()}},
                      {"dtype", "float32-le"}};
  std::ofstream(dir / "dump.json") << info.dump(2) << "\n";
  return dir.string();
}

}  // namespace

TrainResult train_stage(Rdrn& model, const std::vector<TrainingPair>& data, const TrainConfig& cfg,
                        const TrainOptions& opts) {
  cfg.validate();
  if (data.empty()) throw InputError("training set is empty");
  if (cfg.stage == Stage::L2Finetune && opts.init_stage != Stage::L1) {
    throw InputError("l2_finetune must be initialised from an l1 checkpoint");
  }
  const int r = model.scale();
  for (const auto& pair : data) {
    if (pair.hr.h() != r * pair.lr.h() || pair.hr.w() != r * pair.lr.w()) {
      throw InputError("training pair is not aligned at scale " + std::to_string(r));
    }
    if (cfg.lr_patch_size * r > std::min(pair.hr.h(), pair.hr.w())) {
      throw ConfigError("lr_patch_size * scale exceeds the smallest HR training image");
    }
  }

  const IsWeights weights = resolve_is_weights(model, cfg.is_weights);
  const std::set<TapId> active = weights.active_taps();
  const LossKind kind = stage_loss(cfg.stage);

  Adam adam(model.parameters());
  if (opts.optimizer_state) adam.load_state(*opts.optimizer_state);

  TrainResult result;
  result.initial_weights_hash = weights_hash(model);
  Rng rng(cfg.seed);
  const auto t0 = std::chrono::steady_clock::now();
  std::uniform_int_distribution<std::size_t> pick(0, data.size() - 1);

  if (opts.start_step < 0 || opts.start_step > cfg.total_steps) {
    throw InputError("start_step must lie in [0, total_steps]");
  }
  auto next_batch = [&](std::vector<Tensor>& lr_batch, std::vector<Tensor>& hr_batch) {
    for (int b = 0; b < cfg.batch_size; ++b) {
      const TrainingPair& src = data[pick(rng)];
      TrainingPair patch = sample_patch(src.hr, src.lr, cfg.lr_patch_size, rng);
      if (cfg.augment) patch = augment(patch, rng);
      lr_batch.push_back(std::move(patch.lr));
      hr_batch.push_back(std::move(patch.hr));
    }
  };
  // Replay the sampler so a resumed run sees the batches it would have seen.
  for (long step = 0; step < opts.start_step; ++step) {
    std::vector<Tensor> skip_lr, skip_hr;
    next_batch(skip_lr, skip_hr);
  }

  for (long step = opts.start_step; step < cfg.total_steps; ++step) {
    std::vector<Tensor> lr_batch, hr_batch;
    next_batch(lr_batch, hr_batch);
    const Tensor lr = stack_samples(lr_batch);
    const Tensor hr = stack_samples(hr_batch);

    ForwardOptions fo;
    fo.training = true;
    fo.only_taps = &active;
    ForwardOutput out = model.forward(lr, fo);
    Var loss = is_loss(out, hr, weights, kind);
    const double value = loss->value[0];
    if (!std::isfinite(value)) {
      const std::string where = dump_batch(opts.dump_dir, step, lr, hr, value);
      throw TrainingDiverged("non-finite loss at step " + std::to_string(step) +
                                 "; batch dumped to " + where,
                             step, where);
    }
    double final_value;
    {
      NoGradGuard guard;
      final_value = base_loss(kind, out.final_sr, hr)->value[0];
    }

    adam.zero_grad();
    backward(loss);
    const float lr_now = cfg.learning_rate_at(step);
    adam.step(lr_now);

    StepRecord rec;
    rec.step = step;
    rec.loss = value;
    rec.final_loss = final_value;
    rec.learning_rate = lr_now;
    rec.wall_time =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.log.push_back(rec);
    if (opts.log) *opts.log << to_json_line(rec) << "\n";

    const bool last = step + 1 == cfg.total_steps;
    if (opts.on_checkpoint &&
        (last || (cfg.checkpoint_every > 0 && (step + 1) % cfg.checkpoint_every == 0))) {
      opts.on_checkpoint(adam, step + 1);
    }
  }
  adam.zero_grad();
  result.optimizer = adam.state();
  return result;
}

}  // namespace rdrn
