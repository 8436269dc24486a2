#pragma once

// Differentiable tensor operations. Each returns a new Var and, when
// recording, a closure accumulating gradients into its inputs.

#include <vector>

#include "rdrn/autograd.hpp"

namespace rdrn::ops {

int conv_out_size(int in, int kernel, int stride, int pad);

// x (N, Cin, H, W), weight (Cout, Cin, k, k), bias (1, Cout, 1, 1) or null.
Var conv2d(const Var& x, const Var& weight, const Var& bias, int stride, int pad);

Var add(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var concat_channels(const Var& a, const Var& b);

Var leaky_relu(const Var& x, float negative_slope);
Var relu(const Var& x);
Var sigmoid(const Var& x);
Var log(const Var& x);
Var exp(const Var& x);

// Per-channel batch normalisation. In training mode the batch statistics are
// used and the running buffers are updated in place.
Var batch_norm(const Var& x, const Var& gamma, const Var& beta, Tensor& running_mean,
               Tensor& running_var, bool training, float momentum, float eps);

// Unbiased per-sample standard deviation over (C, H, W), floored at `floor`.
// Result shape (N, 1, 1, 1).
Var sample_std(const Var& x, float floor);

// x (N, C, H, W) scaled by factor (N, 1, 1, 1).
Var scale_per_sample(const Var& x, const Var& factor);

Var max_pool2d(const Var& x, int kernel_h, int kernel_w, int stride);
// Average over stride x stride windows; edge windows average what exists.
// Output extent ceil(H / stride) x ceil(W / stride).
Var avg_pool_ceil(const Var& x, int stride);
// Bilinear resize, half-pixel centres (align_corners = false).
Var resize_bilinear(const Var& x, int out_h, int out_w);
// (N, C*r*r, H, W) -> (N, C, r*H, r*W).
Var pixel_shuffle(const Var& x, int r);
Tensor pixel_shuffle(const Tensor& x, int r);

// Unit L2 norm along channels at every spatial position.
Var l2_normalize_channels(const Var& x, float eps = 1e-12f);

// Dot-product attention per sample. q (N, Cq, H, W) queries at H*W positions,
// k (N, Cq, Hk, Wk) keys, v (N, Cv, Hk, Wk) values. Output (N, Cv, H, W):
// out[:, i] = sum_j softmax_j(q_i . k_j) v_j.
Var attention(const Var& q, const Var& k, const Var& v);

// Mean absolute / squared error against a constant target; scalar result.
Var l1_loss(const Var& pred, const Tensor& target);
Var l2_loss(const Var& pred, const Tensor& target);
// sum_i weights[i] * terms[i] for scalar terms.
Var weighted_sum(const std::vector<float>& weights, const std::vector<Var>& terms);

}  // namespace rdrn::ops
