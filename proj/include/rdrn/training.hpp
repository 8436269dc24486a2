#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "rdrn/loss.hpp"
#include "rdrn/model.hpp"
#include "rdrn/optimizer.hpp"

namespace rdrn {

enum class Stage { L1, L2Finetune };

std::string to_string(Stage stage);
Stage parse_stage(const std::string& s);
LossKind stage_loss(Stage stage);

struct TrainConfig {
  Stage stage = Stage::L1;
  float learning_rate = 2e-4f;
  long decay_steps = 0;  // 0: a quarter of total_steps
  float decay_factor = 0.5f;
  int batch_size = 16;
  int lr_patch_size = 48;
  long total_steps = 1000;
  std::uint64_t seed = 0;
  bool augment = true;
  // "paper-default", "uniform" or "final-only".
  std::string is_weights = "paper-default";
  long checkpoint_every = 0;  // 0: only at the end

  void validate() const;
  float learning_rate_at(long step) const;
  bool operator==(const TrainConfig&) const = default;
};

IsWeights resolve_is_weights(const Rdrn& model, const std::string& rule);

struct TrainingPair {
  Tensor hr;  // (1, 3, r*H, r*W)
  Tensor lr;  // (1, 3, H, W)
};

// Aligned random crop: LR patch at (y, x), HR patch at (r*y, r*x).
TrainingPair sample_patch(const Tensor& hr, const Tensor& lr, int lr_patch_size, Rng& rng);
// Same dihedral transform applied to both patches; `transform` chosen
// uniformly from the 8 group elements.
TrainingPair augment(const TrainingPair& pair, Rng& rng);
TrainingPair augment(const TrainingPair& pair, int transform);

struct StepRecord {
  long step = 0;
  double loss = 0.0;        // full objective
  double final_loss = 0.0;  // base loss of the final output alone
  double learning_rate = 0.0;
  double wall_time = 0.0;  // seconds since the stage started
};

struct TrainOptions {
  // Stage of the checkpoint the model was initialised from, if any.
  std::optional<Stage> init_stage;
  std::optional<AdamState> optimizer_state;
  // Steps of this stage already completed (resume); the schedule and the
  // step counter continue from here up to total_steps.
  long start_step = 0;
  std::ostream* log = nullptr;  // line-delimited JSON records
  std::filesystem::path dump_dir = "nan_dump";
  // Called every checkpoint_every steps and at the end.
  std::function<void(const Adam&, long step)> on_checkpoint;
};

struct TrainResult {
  std::vector<StepRecord> log;
  AdamState optimizer;
  std::uint64_t initial_weights_hash = 0;
};

// Runs optimisation steps start_step .. total_steps - 1 of the stage's base loss inside the
// IS objective. Throws TrainingDiverged (after writing the offending batch to
// opts.dump_dir) when the objective is not finite.
TrainResult train_stage(Rdrn& model, const std::vector<TrainingPair>& data, const TrainConfig& cfg,
                        const TrainOptions& opts = {});

// FNV-1a over the raw bytes of every parameter in canonical order.
std::uint64_t weights_hash(const Rdrn& model);

std::string to_json_line(const StepRecord& r);

}  // namespace rdrn
