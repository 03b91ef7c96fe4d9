// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "tivgan/nn/autodiff.hpp"

// Differentiable op inventory. Image tensors are NCHW, volumes NCDHW.
// Every op checks shapes and throws ShapeError naming itself and the dims.
namespace tivgan::nn {

// Elementwise, same shape.
template <typename S> Var<S> add(const Var<S>& a, const Var<S>& b);
template <typename S> Var<S> sub(const Var<S>& a, const Var<S>& b);
template <typename S> Var<S> mul(const Var<S>& a, const Var<S>& b);
/// scale * x + shift
template <typename S> Var<S> affine(const Var<S>& x, double scale, double shift);

template <typename S> Var<S> operator+(const Var<S>& a, const Var<S>& b) { return add(a, b); }
template <typename S> Var<S> operator-(const Var<S>& a, const Var<S>& b) { return sub(a, b); }
template <typename S> Var<S> operator*(const Var<S>& a, const Var<S>& b) { return mul(a, b); }

template <typename S> Var<S> sigmoid(const Var<S>& x);
template <typename S> Var<S> tanh(const Var<S>& x);
template <typename S> Var<S> relu(const Var<S>& x);
template <typename S> Var<S> leaky_relu(const Var<S>& x, double slope);
template <typename S> Var<S> log(const Var<S>& x);
/// log(sigmoid(x)) without underflow; the gradient stays nonzero for large |x|.
template <typename S> Var<S> log_sigmoid(const Var<S>& x);
/// Gradient passes only where lo <= x <= hi.
template <typename S> Var<S> clamp(const Var<S>& x, double lo, double hi);

template <typename S> Var<S> sum(const Var<S>& x);
template <typename S> Var<S> mean(const Var<S>& x);
/// [N, C, ...] -> [N, C], averaging every trailing axis.
template <typename S> Var<S> spatial_mean(const Var<S>& x);
/// [N, D] -> [N, D, H, W]
template <typename S> Var<S> broadcast_spatial(const Var<S>& x, std::int64_t h, std::int64_t w);

template <typename S> Var<S> reshape(const Var<S>& x, Shape shape);
/// Concatenation along `axis`; all other dims must agree.
template <typename S> Var<S> concat(const std::vector<Var<S>>& xs, std::size_t axis);
template <typename S> Var<S> concat_channels(const std::vector<Var<S>>& xs) { return concat(xs, 1); }
/// Rows of x along axis 0, in the order given (repeats allowed).
template <typename S> Var<S> index_select(const Var<S>& x, const std::vector<std::int64_t>& rows);

/// x [N, in] . W^T [in, out] + b
template <typename S> Var<S> linear(const Var<S>& x, const Var<S>& weight, const Var<S>& bias);
template <typename S> Var<S> linear(const Var<S>& x, const Var<S>& weight);

/// Normalizes each (sample, channel) plane to zero mean, unit variance.
template <typename S> Var<S> instance_norm(const Var<S>& x, double eps = 1e-5);

/// Mean cross-entropy of softmax(logits [N, K]) against integer labels.
template <typename S> Var<S> softmax_cross_entropy(const Var<S>& logits, const std::vector<int>& labels);

struct Conv2dOptions {
  std::int64_t stride = 1;
  std::int64_t padding = 0;
};

struct Conv3dOptions {
  std::int64_t stride[3] = {1, 1, 1};
  std::int64_t padding[3] = {0, 0, 0};
};

/// x [N, Cin, H, W], weight [Cout, Cin, k, k], bias [Cout] (may be invalid).
template <typename S>
Var<S> conv2d(const Var<S>& x, const Var<S>& weight, const Var<S>& bias, Conv2dOptions opt);

/// x [N, Cin, H, W], weight [Cin, Cout, k, k]; output side (H-1)*stride - 2*pad + k.
template <typename S>
Var<S> conv_transpose2d(const Var<S>& x, const Var<S>& weight, const Var<S>& bias, Conv2dOptions opt);

/// x [N, Cin, D, H, W], weight [Cout, Cin, kd, kh, kw].
template <typename S>
Var<S> conv3d(const Var<S>& x, const Var<S>& weight, const Var<S>& bias, Conv3dOptions opt);

}  // namespace tivgan::nn
