#pragma once

// Minimal reverse-mode automatic differentiation over Tensor.
//
// A Var is a shared node holding a value, an optional gradient and the
// closure that pushes its gradient to its parents. Graph recording happens
// only while gradients are enabled on the calling thread and at least one
// input requires a gradient, so inference forwards build no graph.

#include <functional>
#include <memory>
#include <vector>

#include "rdrn/tensor.hpp"

namespace rdrn {

struct Node;
using Var = std::shared_ptr<Node>;

struct Node {
  Tensor value;
  Tensor grad;
  bool requires_grad = false;
  std::vector<Var> parents;
  std::function<void(Node&)> backward_fn;

  // Gradient buffer, zero-initialised to the value's shape on first use.
  Tensor& grad_buffer();
  bool has_grad() const { return !grad.empty(); }
};

Var make_var(Tensor value, bool requires_grad = false);

bool grad_enabled();

class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

// True when an op with these inputs should record a backward closure.
bool should_record(std::initializer_list<const Var*> inputs);

// Builds the result node of an op; attaches `fn` when recording.
Var make_result(Tensor value, std::vector<Var> parents, std::function<void(Node&)> fn);

// Back-propagates from a single-element root (seeded with 1).
void backward(const Var& root);

}  // namespace rdrn
