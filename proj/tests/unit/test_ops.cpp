#include <cmath>
#include <functional>

#include "../support/oracles.hpp"
#include "doctest.h"
#include "rdrn/error.hpp"
#include "rdrn/ops.hpp"

using namespace rdrn;

namespace {

using Fn = std::function<Var(const std::vector<Var>&)>;

// Central differences of mean((f(x) + p)^2) for a fixed random p, compared with the
// analytic gradient of every input.
void check_gradients(const Fn& f, std::vector<Tensor> inputs, double tol = 2e-2,
                     float h = 1e-2f) {
  std::vector<Var> vars;
  for (auto& t : inputs) vars.push_back(make_var(t, true));
  Var out = f(vars);
  const Tensor proj = oracle::random_tensor(out->value.shape(), 99);
  auto smooth = [&](const std::vector<Var>& vs) {
    Var o = f(vs);
    return ops::l2_loss(ops::add(o, make_var(proj)), Tensor(o->value.shape()));
  };
  Var loss = smooth(vars);
  backward(loss);
  for (std::size_t vi = 0; vi < vars.size(); ++vi) {
    const Tensor analytic = vars[vi]->grad;
    REQUIRE(analytic.numel() == inputs[vi].numel());
    const std::size_t stride = std::max<std::size_t>(1, inputs[vi].numel() / 40);
    for (std::size_t i = 0; i < inputs[vi].numel(); i += stride) {
      auto eval = [&](float delta) {
        NoGradGuard ng;
        std::vector<Var> vs;
        for (std::size_t j = 0; j < inputs.size(); ++j) {
          Tensor t = inputs[j];
          if (j == vi) t[i] += delta;
          vs.push_back(make_var(t));
        }
        return static_cast<double>(smooth(vs)->value[0]);
      };
      const double numeric = (eval(h) - eval(-h)) / (2.0 * h);
      const double a = analytic[i];
      CAPTURE(vi);
      CAPTURE(i);
      CHECK(std::abs(a - numeric) <= tol * (std::abs(numeric) + 1e-2));
    }
  }
}

}  // namespace

TEST_CASE("conv2d matches the direct-convolution oracle") {
  for (int k : {1, 3}) {
    for (int stride : {1, 2}) {
      const int pad = k / 2;
      const Tensor x = oracle::random_tensor({2, 3, 9, 7}, 1);
      const Tensor w = oracle::random_tensor({5, 3, k, k}, 2);
      const Tensor b = oracle::random_tensor({1, 5, 1, 1}, 3);
      const Tensor got = ops::conv2d(make_var(x), make_var(w), make_var(b), stride, pad)->value;
      const Tensor want = oracle::conv2d(x, w, &b, stride, pad);
      REQUIRE(got.shape() == want.shape());
      CHECK(oracle::max_abs_diff(got, want) < 1e-5);
    }
  }
}

TEST_CASE("conv2d gradients") {
  check_gradients(
      [](const std::vector<Var>& v) { return ops::conv2d(v[0], v[1], v[2], 1, 1); },
      {oracle::random_tensor({2, 2, 5, 4}, 1), oracle::random_tensor({3, 2, 3, 3}, 2),
       oracle::random_tensor({1, 3, 1, 1}, 3)});
  check_gradients(
      [](const std::vector<Var>& v) { return ops::conv2d(v[0], v[1], v[2], 2, 1); },
      {oracle::random_tensor({1, 2, 7, 6}, 4), oracle::random_tensor({2, 2, 3, 3}, 5),
       oracle::random_tensor({1, 2, 1, 1}, 6)});
  check_gradients(
      [](const std::vector<Var>& v) { return ops::conv2d(v[0], v[1], v[2], 1, 0); },
      {oracle::random_tensor({2, 4, 3, 3}, 7), oracle::random_tensor({3, 4, 1, 1}, 8),
       oracle::random_tensor({1, 3, 1, 1}, 9)});
}

TEST_CASE("elementwise and structural op gradients") {
  const Shape s{2, 3, 4, 5};
  check_gradients([](const std::vector<Var>& v) { return ops::add(v[0], v[1]); },
                  {oracle::random_tensor(s, 1), oracle::random_tensor(s, 2)});
  check_gradients([](const std::vector<Var>& v) { return ops::mul(v[0], v[1]); },
                  {oracle::random_tensor(s, 3), oracle::random_tensor(s, 4)});
  check_gradients([](const std::vector<Var>& v) { return ops::concat_channels(v[0], v[1]); },
                  {oracle::random_tensor(s, 5), oracle::random_tensor({2, 1, 4, 5}, 6)});
  // Inputs kept clear of the kink, where the central difference straddles two slopes.
  Tensor off_kink = oracle::random_tensor(s, 7);
  for (float& v : off_kink.values()) v += v < 0.0f ? -0.05f : 0.05f;
  check_gradients([](const std::vector<Var>& v) { return ops::leaky_relu(v[0], 0.05f); },
                  {off_kink}, 2e-2, 1e-3f);
  check_gradients([](const std::vector<Var>& v) { return ops::sigmoid(v[0]); },
                  {oracle::random_tensor(s, 8)});
  check_gradients([](const std::vector<Var>& v) { return ops::exp(v[0]); },
                  {oracle::random_tensor(s, 9)});
  check_gradients([](const std::vector<Var>& v) { return ops::log(v[0]); },
                  {oracle::random_tensor(s, 10, 0.5f, 2.0f)});
  check_gradients([](const std::vector<Var>& v) { return ops::pixel_shuffle(v[0], 2); },
                  {oracle::random_tensor({1, 8, 3, 2}, 11)});
  check_gradients([](const std::vector<Var>& v) { return ops::resize_bilinear(v[0], 7, 9); },
                  {oracle::random_tensor({1, 2, 3, 4}, 12)});
  check_gradients([](const std::vector<Var>& v) { return ops::avg_pool_ceil(v[0], 2); },
                  {oracle::random_tensor({1, 2, 5, 3}, 13)});
  check_gradients([](const std::vector<Var>& v) { return ops::max_pool2d(v[0], 3, 2, 2); },
                  {oracle::random_tensor({1, 2, 7, 6}, 14)}, 2e-2, 1e-3f);
  check_gradients([](const std::vector<Var>& v) { return ops::l2_normalize_channels(v[0]); },
                  {oracle::random_tensor({1, 4, 3, 3}, 15)});
}

TEST_CASE("statistics and attention gradients") {
  check_gradients([](const std::vector<Var>& v) { return ops::sample_std(v[0], 1e-8f); },
                  {oracle::random_tensor({3, 2, 3, 3}, 1)});
  check_gradients([](const std::vector<Var>& v) { return ops::scale_per_sample(v[0], v[1]); },
                  {oracle::random_tensor({2, 3, 2, 2}, 2), oracle::random_tensor({2, 1, 1, 1}, 3)});
  check_gradients(
      [](const std::vector<Var>& v) { return ops::attention(v[0], v[1], v[2]); },
      {oracle::random_tensor({2, 2, 3, 3}, 4), oracle::random_tensor({2, 2, 2, 2}, 5),
       oracle::random_tensor({2, 3, 2, 2}, 6)});
  Tensor rm({1, 3, 1, 1}), rv({1, 3, 1, 1}, 1.0f);
  check_gradients(
      [&](const std::vector<Var>& v) {
        return ops::batch_norm(v[0], v[1], v[2], rm, rv, true, 0.1f, 1e-5f);
      },
      {oracle::random_tensor({4, 3, 2, 2}, 7), oracle::random_tensor({1, 3, 1, 1}, 8, 0.5f, 1.5f),
       oracle::random_tensor({1, 3, 1, 1}, 9)});
}

TEST_CASE("weighted_sum and losses are differentiable") {
  const Tensor target = oracle::random_tensor({1, 2, 3, 3}, 2);
  check_gradients(
      [&](const std::vector<Var>& v) {
        return ops::weighted_sum({0.3f, 2.0f},
                                 {ops::l2_loss(v[0], target), ops::l1_loss(v[1], target)});
      },
      {oracle::random_tensor({1, 2, 3, 3}, 3), oracle::random_tensor({1, 2, 3, 3}, 4)});
}

TEST_CASE("pixel shuffle follows the channel-to-space index map") {
  const Tensor x = oracle::random_tensor({2, 3 * 9, 4, 5}, 3);
  const Tensor got = ops::pixel_shuffle(x, 3);
  CHECK(got.shape() == Shape{2, 3, 12, 15});
  CHECK(oracle::max_abs_diff(got, oracle::pixel_shuffle(x, 3)) == 0.0);
}

TEST_CASE("bilinear resize and max pooling match the loop oracles") {
  const Tensor x = oracle::random_tensor({1, 2, 5, 7}, 4);
  CHECK(oracle::max_abs_diff(ops::resize_bilinear(make_var(x), 11, 6)->value,
                             oracle::bilinear(x, 11, 6)) < 1e-6);
  CHECK(oracle::max_abs_diff(ops::max_pool2d(make_var(x), 3, 3, 2)->value,
                             oracle::max_pool(x, 3, 3, 2)) == 0.0);
}

TEST_CASE("sample_std is floored and unbiased") {
  Tensor c({2, 1, 2, 2}, 3.0f);
  c[4] = 0.0f;
  c[5] = 2.0f;
  c[6] = 4.0f;
  c[7] = 6.0f;
  const Tensor s = ops::sample_std(make_var(c), 1e-8f)->value;
  CHECK(s[0] == doctest::Approx(1e-8f));
  CHECK(s[1] == doctest::Approx(std::sqrt(20.0 / 3.0)));
}

TEST_CASE("ops reject mismatched shapes") {
  CHECK_THROWS_AS(ops::add(make_var(Tensor({1, 2, 3, 3})), make_var(Tensor({1, 2, 3, 4}))),
                  ShapeError);
  CHECK_THROWS_AS(ops::conv2d(make_var(Tensor({1, 2, 3, 3})), make_var(Tensor({1, 3, 3, 3})),
                              nullptr, 1, 1),
                  ShapeError);
  CHECK_THROWS_AS(ops::l1_loss(make_var(Tensor({1, 2, 3, 3})), Tensor({1, 2, 3, 4})), ShapeError);
}

TEST_CASE("no graph is recorded without gradients") {
  const Var x = make_var(oracle::random_tensor({1, 1, 2, 2}, 1), true);
  {
    NoGradGuard ng;
    Var y = ops::exp(x);
    CHECK(y->parents.empty());
    CHECK_FALSE(y->requires_grad);
  }
  Var y = ops::exp(x);
  CHECK(y->requires_grad);
}
