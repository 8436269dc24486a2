#pragma once

#include <optional>

#include "rdrn/model.hpp"

namespace rdrn {

// Anything that maps a (1, 3, H, W) image to (1, 3, rH, rW).
class Upscaler {
 public:
  virtual ~Upscaler() = default;
  virtual int scale() const = 0;
  virtual Tensor upscale(const Tensor& lr) const = 0;
};

class ModelUpscaler final : public Upscaler {
 public:
  explicit ModelUpscaler(const Rdrn& model) : model_(model) {}
  int scale() const override { return model_.scale(); }
  Tensor upscale(const Tensor& lr) const override { return model_.infer(lr); }

 private:
  const Rdrn& model_;
};

class BicubicUpscaler final : public Upscaler {
 public:
  explicit BicubicUpscaler(int scale) : scale_(scale) {}
  int scale() const override { return scale_; }
  Tensor upscale(const Tensor& lr) const override;

 private:
  int scale_;
};

class NearestUpscaler final : public Upscaler {
 public:
  explicit NearestUpscaler(int scale) : scale_(scale) {}
  int scale() const override { return scale_; }
  Tensor upscale(const Tensor& lr) const override;

 private:
  int scale_;
};

inline constexpr int kDefaultTileOverlap = 8;

// Whole-image SR. With `tile`, the input is cut into tile x tile cores, each
// processed with `overlap` pixels of surrounding context; only the core of
// every tile's output is kept. Exact for models whose receptive field fits in
// the overlap; for global-context models (ESA pooling, NLSA) it is an
// approximation.
Tensor superresolve(const Upscaler& up, const Tensor& lr, std::optional<int> tile = std::nullopt,
                    int overlap = kDefaultTileOverlap);

// Mean of the 8 dihedral branches, each mapped back by the inverse transform.
Tensor self_ensemble(const Upscaler& up, const Tensor& lr, std::optional<int> tile = std::nullopt,
                     int overlap = kDefaultTileOverlap);

// The 8 back-transformed branch outputs, in transform order.
std::vector<Tensor> ensemble_branches(const Upscaler& up, const Tensor& lr,
                                      std::optional<int> tile = std::nullopt,
                                      int overlap = kDefaultTileOverlap);

}  // namespace rdrn
