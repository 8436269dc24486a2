#pragma once

// Checkpoint directory layout:
//   manifest.json   configs, step, tensor index (name, shape, offset)
//   weights.bin     little-endian float32 parameters then buffers
//   optimizer.bin   optional Adam moments in parameter order

#include <filesystem>
#include <optional>

#include "rdrn/model.hpp"
#include "rdrn/optimizer.hpp"
#include "rdrn/training.hpp"

namespace rdrn {

struct CheckpointMeta {
  RdrnConfig model;
  TrainConfig train;
  Stage stage = Stage::L1;
  long step = 0;
};

struct LoadedCheckpoint {
  CheckpointMeta meta;
  Rdrn model;
  std::optional<AdamState> optimizer;
};

void save_checkpoint(const std::filesystem::path& dir, const Rdrn& model, const CheckpointMeta& meta,
                     const AdamState* optimizer = nullptr);

// Builds a model from the stored config and fills it.
LoadedCheckpoint load_checkpoint(const std::filesystem::path& dir);

// Fills an existing model. Throws CheckpointError naming the first tensor
// whose name or shape disagrees with the model.
void load_weights(const std::filesystem::path& dir, const Rdrn& model);

CheckpointMeta read_checkpoint_meta(const std::filesystem::path& dir);

// Number of parameter tensors listed in the manifest (buffers excluded).
std::size_t manifest_tensor_count(const std::filesystem::path& dir);

}  // namespace rdrn
