#include "../support/fixtures.hpp"
#include "../support/oracles.hpp"
#include "doctest.h"
#include "rdrn/error.hpp"
#include "rdrn/inference.hpp"
#include "rdrn/ops.hpp"

using namespace rdrn;

namespace {

// Purely local model: 3x3 conv stack (receptive radius 2) and pixel shuffle.
class LocalConvUpscaler final : public Upscaler {
 public:
  explicit LocalConvUpscaler(int r) : r_(r) {
    Rng rng(3);
    a_ = Conv2d("a", 3, 8, 3, 1, 1, rng);
    b_ = Conv2d("b", 8, 3 * r * r, 3, 1, 1, rng);
  }
  int scale() const override { return r_; }
  Tensor upscale(const Tensor& lr) const override {
    NoGradGuard ng;
    return ops::pixel_shuffle(b_.forward(ops::leaky_relu(a_.forward(make_var(lr)), 0.05f)), r_)
        ->value;
  }

 private:
  int r_;
  Conv2d a_, b_;
};

// Adds a fixed asymmetric pattern, so branches of the ensemble differ.
class SkewedUpscaler final : public Upscaler {
 public:
  int scale() const override { return 2; }
  Tensor upscale(const Tensor& lr) const override {
    Tensor y = NearestUpscaler(2).upscale(lr);
    for (int c = 0; c < 3; ++c) {
      for (int i = 0; i < y.h(); ++i) {
        for (int j = 0; j < y.w(); ++j) y.at(0, c, i, j) += 0.01f * ((i * 7 + j * 3 + c) % 11);
      }
    }
    return y;
  }
};

}  // namespace

TEST_CASE("output dimensions are r times the input") {
  RdrnConfig c;
  c.depth = 1;
  c.channels = 8;
  c.scale = 4;
  const Rdrn model(c);
  const ModelUpscaler up(model);
  CHECK(superresolve(up, Tensor({1, 3, 32, 32})).shape() == Shape{1, 3, 128, 128});
  CHECK(superresolve(up, Tensor({1, 3, 32, 32})).all_finite());
  CHECK(superresolve(up, Tensor({1, 3, 13, 7}), 8, 8).shape() == Shape{1, 3, 52, 28});
}

TEST_CASE("tiling is exact for a model whose receptive field fits the overlap") {
  const LocalConvUpscaler up(2);
  const Tensor lr = fixtures::test_card(96, 96);
  const Tensor whole = superresolve(up, lr);
  const Tensor tiled = superresolve(up, lr, 48);
  CHECK(oracle::max_abs_diff(whole, tiled) < 1e-4);
  const Tensor uneven = superresolve(up, crop(lr, 0, 0, 70, 53), 20, 8);
  CHECK(oracle::max_abs_diff(uneven, superresolve(up, crop(lr, 0, 0, 70, 53))) < 1e-4);
}

TEST_CASE("tiling the full model stays close away from seams") {
  RdrnConfig c;
  c.depth = 1;
  c.channels = 8;
  c.scale = 2;
  const Rdrn model(c);
  const ModelUpscaler up(model);
  const Tensor lr = fixtures::test_card(40, 40);
  const Tensor a = superresolve(up, lr), b = superresolve(up, lr, 20, 8);
  CHECK(b.shape() == a.shape());
  CHECK(b.all_finite());
}

TEST_CASE("tile smaller than the overlap is rejected") {
  const NearestUpscaler up(2);
  CHECK_THROWS_AS(superresolve(up, Tensor({1, 3, 16, 16}), 4, 8), InputError);
  CHECK_THROWS_AS(superresolve(up, Tensor({1, 1, 16, 16})), InputError);
}

TEST_CASE("self-ensemble of an equivariant upsampler equals a single pass") {
  const NearestUpscaler up(3);
  const Tensor lr = oracle::random_tensor({1, 3, 11, 7}, 4, 0.0f, 1.0f);
  const Tensor single = superresolve(up, lr);
  const Tensor ens = self_ensemble(up, lr);
  CHECK(std::equal(single.values().begin(), single.values().end(), ens.values().begin()));
}

TEST_CASE("self-ensemble preserves constants") {
  const BicubicUpscaler up(2);
  const Tensor ens = self_ensemble(up, Tensor({1, 3, 9, 10}, 0.4f));
  for (float v : ens.values()) CHECK(std::abs(v - 0.4f) < 1e-6);
}

TEST_CASE("ensemble error never exceeds the worst branch") {
  const SkewedUpscaler up;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Tensor lr = oracle::random_tensor({1, 3, 6, 5}, seed, 0.0f, 1.0f);
    const Tensor target = oracle::random_tensor({1, 3, 12, 10}, seed + 50, 0.0f, 1.0f);
    const auto branches = ensemble_branches(up, lr);
    double worst = 0;
    for (const auto& b : branches) worst = std::max(worst, oracle::l2(b, target));
    CHECK(oracle::l2(self_ensemble(up, lr), target) <= worst + 1e-12);
  }
  const auto branches = ensemble_branches(up, oracle::random_tensor({1, 3, 6, 5}, 1));
  CHECK(oracle::max_abs_diff(branches[0], branches[5]) > 0.0);
}
