#include <filesystem>
#include <set>
#include <sstream>

#include "../support/fixtures.hpp"
#include "../support/oracles.hpp"
#include "doctest.h"
#include "json.hpp"
#include "rdrn/dihedral.hpp"
#include "rdrn/error.hpp"
#include "rdrn/training.hpp"

using namespace rdrn;
namespace fs = std::filesystem;

namespace {

RdrnConfig small_model() {
  RdrnConfig c;
  c.depth = 1;
  c.channels = 8;
  c.scale = 2;
  return c;
}

TrainConfig quick(long steps) {
  TrainConfig t;
  t.batch_size = 2;
  t.lr_patch_size = 8;
  t.total_steps = steps;
  t.learning_rate = 1e-3f;
  return t;
}

std::vector<TrainingPair> data() {
  return {fixtures::bicubic_pair(fixtures::test_card(32, 32), 2),
          fixtures::bicubic_pair(fixtures::test_card(24, 40, 3), 2)};
}

bool same_values(const Rdrn& a, const Rdrn& b) {
  const auto pa = a.parameters(), pb = b.parameters();
  for (std::size_t i = 0; i < pa.size(); ++i) {
    const auto va = pa[i].var->value.values(), vb = pb[i].var->value.values();
    if (!std::equal(va.begin(), va.end(), vb.begin())) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("patch sampling keeps LR and HR aligned") {
  // Each LR pixel encodes its coordinates; each HR pixel its LR parent.
  const int r = 3, h = 20, w = 17;
  Tensor lr({1, 3, h, w}), hr({1, 3, h * r, w * r});
  for (int y = 0; y < h * r; ++y) {
    for (int x = 0; x < w * r; ++x) {
      for (int c = 0; c < 3; ++c) {
        hr.at(0, c, y, x) = static_cast<float>(y * 1000 + x + c);
        if (y < h && x < w) lr.at(0, c, y, x) = static_cast<float>(y * 100 + x + c);
      }
    }
  }
  Rng rng(1);
  for (int i = 0; i < 10000; ++i) {
    const TrainingPair p = sample_patch(hr, lr, 5, rng);
    const int y = static_cast<int>(p.lr[0]) / 100, x = static_cast<int>(p.lr[0]) % 100;
    REQUIRE(p.hr.shape() == Shape{1, 3, 15, 15});
    REQUIRE(oracle::max_abs_diff(p.hr, crop(hr, r * y, r * x, 15, 15)) == 0.0);
    REQUIRE(oracle::max_abs_diff(p.lr, crop(lr, y, x, 5, 5)) == 0.0);
  }
}

TEST_CASE("patch sampling edge cases") {
  const TrainingPair pair = fixtures::bicubic_pair(fixtures::test_card(96, 96), 2);
  Rng rng(2);
  const TrainingPair p = sample_patch(pair.hr, pair.lr, 48, rng);
  CHECK(oracle::max_abs_diff(p.lr, pair.lr) == 0.0);
  CHECK(oracle::max_abs_diff(p.hr, pair.hr) == 0.0);
  CHECK_THROWS_AS(sample_patch(pair.hr, pair.lr, 49, rng), InputError);
  CHECK_THROWS_AS(sample_patch(pair.hr, crop(pair.lr, 0, 0, 47, 48), 8, rng), InputError);
}

TEST_CASE("dihedral augmentation") {
  Tensor marked({1, 1, 3, 3});
  for (int i = 0; i < 9; ++i) marked[i] = static_cast<float>(i);
  CHECK(oracle::max_abs_diff(dihedral_apply(marked, 0), marked) == 0.0);
  std::set<std::vector<float>> seen;
  for (int t = 0; t < kDihedralCount; ++t) {
    const Tensor y = dihedral_apply(marked, t);
    seen.insert(std::vector<float>(y.values().begin(), y.values().end()));
    const Tensor x = oracle::random_tensor({2, 3, 5, 7}, t);
    const Tensor back = dihedral_inverse(dihedral_apply(x, t), t);
    REQUIRE(back.shape() == x.shape());
    CHECK(oracle::max_abs_diff(back, x) == 0.0);
  }
  CHECK(seen.size() == 8);

  const TrainingPair pair = fixtures::bicubic_pair(fixtures::test_card(12, 8), 2);
  for (int t = 0; t < kDihedralCount; ++t) {
    const TrainingPair a = augment(pair, t);
    CHECK(oracle::max_abs_diff(a.hr, dihedral_apply(pair.hr, t)) == 0.0);
    CHECK(oracle::max_abs_diff(a.lr, dihedral_apply(pair.lr, t)) == 0.0);
  }
  CHECK(augment(pair, 4).lr.shape() == Shape{1, 3, 4, 6});
}

TEST_CASE("learning-rate schedule halves every quarter") {
  TrainConfig t;
  t.total_steps = 1000;
  CHECK(t.learning_rate_at(0) == doctest::Approx(2e-4));
  CHECK(t.learning_rate_at(249) == doctest::Approx(2e-4));
  CHECK(t.learning_rate_at(250) == doctest::Approx(1e-4));
  CHECK(t.learning_rate_at(999) == doctest::Approx(2.5e-5));
  t.decay_steps = 10;
  CHECK(t.learning_rate_at(25) == doctest::Approx(5e-5));
}

TEST_CASE("zero learning rate leaves the weights bitwise unchanged") {
  Rdrn model(small_model());
  const auto before = weights_hash(model);
  TrainConfig t = quick(3);
  t.learning_rate = 0.0f;
  const TrainResult r = train_stage(model, data(), t);
  CHECK(r.initial_weights_hash == before);
  CHECK(weights_hash(model) == before);
}

TEST_CASE("same seed, same loss curve") {
  Rdrn a(small_model()), b(small_model());
  const auto ra = train_stage(a, data(), quick(6));
  const auto rb = train_stage(b, data(), quick(6));
  REQUIRE(ra.log.size() == 6);
  for (std::size_t i = 0; i < ra.log.size(); ++i) CHECK(ra.log[i].loss == rb.log[i].loss);
  CHECK(same_values(a, b));
  Rdrn c(small_model());
  TrainConfig other = quick(6);
  other.seed = 1;
  const auto rc = train_stage(c, data(), other);
  CHECK(rc.log.back().loss != ra.log.back().loss);
}

TEST_CASE("resuming reproduces an uninterrupted run") {
  Rdrn split(small_model());
  TrainConfig first = quick(8);
  first.total_steps = 4;
  // The first half uses the schedule of the full run.
  first.decay_steps = 2;
  TrainConfig whole = quick(8);
  whole.decay_steps = 2;
  Rdrn ref(small_model());
  const auto rr = train_stage(ref, data(), whole);
  const auto r1 = train_stage(split, data(), first);
  TrainOptions opts;
  opts.optimizer_state = r1.optimizer;
  opts.start_step = 4;
  const auto r2 = train_stage(split, data(), whole, opts);
  REQUIRE(r2.log.size() == 4);
  CHECK(r2.log.front().step == 4);
  for (int i = 0; i < 4; ++i) {
    CHECK(r1.log[i].loss == rr.log[i].loss);
    CHECK(r2.log[i].loss == rr.log[4 + i].loss);
  }
  CHECK(same_values(split, ref));
}

TEST_CASE("fine-tuning requires an l1 initialisation and starts from its weights") {
  Rdrn model(small_model());
  TrainConfig l2 = quick(2);
  l2.stage = Stage::L2Finetune;
  CHECK_THROWS_AS(train_stage(model, data(), l2), InputError);
  train_stage(model, data(), quick(3));
  const auto stage1 = weights_hash(model);
  TrainOptions opts;
  opts.init_stage = Stage::L1;
  const auto r = train_stage(model, data(), l2, opts);
  CHECK(r.initial_weights_hash == stage1);
  CHECK(weights_hash(model) != stage1);
}

TEST_CASE("training defaults to the loss module's weighting rule") {
  RdrnConfig c = small_model();
  c.depth = 3;
  const Rdrn model(c);
  const IsWeights a = resolve_is_weights(model, "paper-default");
  const IsWeights b = default_is_weights(model);
  CHECK(a.w_final == b.w_final);
  CHECK(a.per_tap == b.per_tap);
  CHECK(resolve_is_weights(model, "final-only").term_count() == 1);
  CHECK(resolve_is_weights(model, "uniform").term_count() == 15);
  CHECK_THROWS_AS(resolve_is_weights(model, "bogus"), ConfigError);
}

TEST_CASE("patches larger than the smallest HR image are rejected") {
  Rdrn model(small_model());
  TrainConfig t = quick(1);
  t.lr_patch_size = 13;
  CHECK_THROWS_AS(train_stage(model, data(), t), ConfigError);
}

TEST_CASE("a non-finite objective aborts with a batch dump") {
  Rdrn model(small_model());
  model.parameters()[0].var->value[0] = NAN;
  const fs::path dir = fs::temp_directory_path() / "rdrn_nan_dump_test";
  fs::remove_all(dir);
  TrainOptions opts;
  opts.dump_dir = dir;
  try {
    train_stage(model, data(), quick(2), opts);
    FAIL("expected TrainingDiverged");
  } catch (const TrainingDiverged& e) {
    CHECK(e.step() == 0);
    CHECK(fs::exists(dir / "batch_lr.f32"));
    CHECK(fs::exists(dir / "batch_hr.f32"));
    CHECK(fs::file_size(dir / "batch_lr.f32") == 2 * 3 * 8 * 8 * sizeof(float));
    CHECK(fs::exists(dir / "dump.json"));
  }
  fs::remove_all(dir);
}

TEST_CASE("step log lines are JSON records") {
  Rdrn model(small_model());
  std::ostringstream log;
  TrainOptions opts;
  opts.log = &log;
  int checkpoints = 0;
  opts.on_checkpoint = [&](const Adam&, long) { ++checkpoints; };
  TrainConfig t = quick(4);
  t.checkpoint_every = 2;
  train_stage(model, data(), t, opts);
  CHECK(checkpoints == 2);
  std::istringstream in(log.str());
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    const auto j = nlohmann::json::parse(line);
    CHECK(j.at("step").get<long>() == n);
    CHECK(j.contains("loss"));
    CHECK(j.contains("lr"));
    CHECK(j.contains("wall_time"));
    ++n;
  }
  CHECK(n == 4);
}
