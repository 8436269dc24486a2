#include "../support/coverage.hpp"
#include "../support/oracles.hpp"
#include "doctest.h"
#include "rdrn/error.hpp"
#include "rdrn/model.hpp"
#include "rdrn/ops.hpp"

using namespace rdrn;

namespace {

RdrnConfig tiny(int depth, int scale = 2, int channels = 8) {
  RdrnConfig cfg;
  cfg.depth = depth;
  cfg.scale = scale;
  cfg.channels = channels;
  return cfg;
}

}  // namespace

TEST_CASE("output is r times the input on odd non-square inputs") {
  for (int r : {2, 3, 4, 8}) {
    const Rdrn model(tiny(1, r));
    const Tensor lr = oracle::random_tensor({1, 3, 7, 5}, 1, 0.0f, 1.0f);
    const ForwardOutput out = model.forward(lr);
    CHECK(out.final_sr->value.shape() == Shape{1, 3, 7 * r, 5 * r});
    for (const auto& [id, sr] : out.aux_sr) CHECK(sr->value.shape() == Shape{1, 3, 7 * r, 5 * r});
  }
  RdrnConfig cascade = tiny(0, 8);
  cascade.cascade_x8 = true;
  CHECK(Rdrn(cascade).infer(Tensor({1, 3, 3, 5})).shape() == Shape{1, 3, 24, 40});
}

TEST_CASE("auxiliary output count is 2^(T+1) - 2") {
  for (int t = 0; t <= 4; ++t) {
    const Rdrn model(tiny(t, 2, 4));
    CHECK(model.taps().size() == (std::size_t{1} << (t + 1)) - 2);
    CHECK(model.aux_heads().size() == model.taps().size());
    const ForwardOutput out = model.forward(Tensor({1, 3, 4, 4}, 0.3f));
    CHECK(out.aux_sr.size() == model.taps().size());
  }
}

TEST_CASE("gradient coverage under the default intermediate-supervision weights") {
  const Rdrn model(tiny(3, 2, 16));
  const coverage::Report rep = coverage::run(model, 24, 3);
  CHECK(rep.backbone_total > 0);
  CHECK(rep.backbone_without_grad.empty());
  for (const auto& n : rep.backbone_without_grad) MESSAGE(n);
  CHECK(rep.zero_weight_aux_tensors == 2 * 6);
  CHECK(rep.zero_weight_aux_with_grad.empty());
  CHECK(rep.active_aux_tensors == 2 * 8);
  CHECK(rep.active_aux_without_grad.empty());
}

TEST_CASE("with a closed deep branch the output is the head of the shallow features") {
  const Rdrn model(tiny(2, 3));
  std::vector<NamedVar> tree;
  model.tree().collect(tree);
  for (const auto& p : tree) p.var->value.fill(0.0f);
  // A saturated-off gate at the root zeroes the deep features exactly.
  model.tree().esa->conv4.bias->value.fill(-1e4f);
  const Tensor lr = oracle::random_tensor({1, 3, 6, 5}, 2, 0.0f, 1.0f);
  const Tensor want = model.head().forward(model.shallow().forward(make_var(lr)))->value;
  CHECK(oracle::max_abs_diff(model.infer(lr), want) == 0.0);
}

TEST_CASE("final output adds the deep features to the shallow ones") {
  const Rdrn model(tiny(1));
  const Tensor lr = oracle::random_tensor({1, 3, 5, 6}, 3, 0.0f, 1.0f);
  const Var shallow = model.shallow().forward(make_var(lr));
  const Var deep = rdrb_forward(shallow, model.tree(), false).out;
  const Tensor want = model.head().forward(ops::add(shallow, deep))->value;
  CHECK(oracle::max_abs_diff(model.infer(lr), want) == 0.0);
}

TEST_CASE("forward passes are bitwise deterministic") {
  const Rdrn a(tiny(2)), b(tiny(2));
  const Tensor lr = oracle::random_tensor({1, 3, 9, 7}, 4, 0.0f, 1.0f);
  const Tensor ya = a.infer(lr), yb = a.infer(lr), yc = b.infer(lr);
  CHECK(std::equal(ya.values().begin(), ya.values().end(), yb.values().begin()));
  CHECK(std::equal(ya.values().begin(), ya.values().end(), yc.values().begin()));
  const Tensor yd = a.forward(lr).final_sr->value;
  CHECK(std::equal(ya.values().begin(), ya.values().end(), yd.values().begin()));
}

TEST_CASE("different seeds give different weights") {
  RdrnConfig c = tiny(1);
  c.seed = 7;
  CHECK(Rdrn(tiny(1)).parameters()[0].var->value[0] != Rdrn(c).parameters()[0].var->value[0]);
}

TEST_CASE("untrained model on a zero image gives a finite output") {
  const Rdrn model(tiny(2));
  CHECK(model.infer(Tensor({1, 3, 8, 8})).all_finite());
}

TEST_CASE("parameter names are unique and in canonical order") {
  const Rdrn model(tiny(2));
  const auto params = model.parameters();
  std::set<std::string> names;
  for (const auto& p : params) CHECK(names.insert(p.name).second);
  CHECK(params.front().name == "shallow.weight");
  CHECK(params.back().name.rfind("aux.5.", 0) == 0);
  const auto backbone = model.parameters(false);
  CHECK(backbone.back().name.rfind("head.", 0) == 0);
  CHECK(model.buffers().size() == 2 * 4);
}

TEST_CASE("invalid inputs and configurations") {
  const Rdrn model(tiny(0));
  CHECK_THROWS_AS(model.infer(Tensor({1, 1, 4, 4})), InputError);
  CHECK_THROWS_AS(Rdrn(tiny(1, 5)), ConfigError);
  RdrnConfig bad = tiny(1);
  bad.channels = 10;
  CHECK_THROWS_AS(Rdrn{bad}, ConfigError);
}

TEST_CASE("configured levels outside the tree are ignored") {
  RdrnConfig c = tiny(2);
  c.nlsa_levels = {0, 3, 5};
  CHECK(c.effective_nlsa_levels() == std::set<int>{0});
  CHECK(c.effective_aux_zero_levels() == std::set<int>{1});
}
