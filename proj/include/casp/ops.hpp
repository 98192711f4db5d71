// Copyright (c) 2026 The casp authors
// SPDX-License-Identifier: Apache-2.0
//
// The differentiable op set. Every op works on tracked and untracked tensors
// alike: with no tape involved it is a plain forward computation, which is
// also how backward closures compute their gradient algebra.
//
// Binary ops broadcast trailing dimensions (right-aligned; a dim matches if
// equal or 1). Point coordinates are normalized (x, y) in [0,1]^2 with
// x_pix = x_norm*W - 0.5, so (0.5, 0.5) lands in the exact grid middle;
// out-of-bounds neighbors read as zero.

#pragma once

#include <cstddef>
#include <vector>

#include "casp/tensor.hpp"

namespace casp {

enum class Ew { add, sub, mul, div, neg, exp, log, abs, relu, sigmoid };

struct EwPolicy {
  // strict: log of a non-positive value or division by zero is a domain
  // error. Otherwise operands are clamped at eps.
  bool strict = true;
  double eps = 1e-12;
};

template <class T>
TensorT<T> elementwise(Ew kind, const TensorT<T>& a, const TensorT<T>* b = nullptr,
                       EwPolicy policy = {});

template <class T> TensorT<T> add(const TensorT<T>& a, const TensorT<T>& b);
template <class T> TensorT<T> sub(const TensorT<T>& a, const TensorT<T>& b);
template <class T> TensorT<T> mul(const TensorT<T>& a, const TensorT<T>& b);
template <class T> TensorT<T> div(const TensorT<T>& a, const TensorT<T>& b, EwPolicy policy = {});
template <class T> TensorT<T> neg(const TensorT<T>& x);
template <class T> TensorT<T> exp(const TensorT<T>& x);
template <class T> TensorT<T> log(const TensorT<T>& x, EwPolicy policy = {});
template <class T> TensorT<T> abs(const TensorT<T>& x);
template <class T> TensorT<T> relu(const TensorT<T>& x);
template <class T> TensorT<T> sigmoid(const TensorT<T>& x);

template <class T> TensorT<T> tanh(const TensorT<T>& x);
template <class T> TensorT<T> softplus(const TensorT<T>& x);
template <class T> TensorT<T> sqrt(const TensorT<T>& x);
template <class T> TensorT<T> clamp(const TensorT<T>& x, T lo, T hi);
template <class T> TensorT<T> scale(const TensorT<T>& x, T alpha);
template <class T> TensorT<T> add_scalar(const TensorT<T>& x, T c);

// Value passthrough that blocks gradient flow.
template <class T> TensorT<T> stop_gradient(const TensorT<T>& x);

// a[..,m,k] x b[..,k,n] -> [..,m,n]; leading dims broadcast.
template <class T> TensorT<T> matmul(const TensorT<T>& a, const TensorT<T>& b);

// Cross-correlation, odd kernels, H' = floor((H+2p-kh)/s)+1.
template <class T>
TensorT<T> conv2d(const TensorT<T>& x, const TensorT<T>& w, const TensorT<T>* bias,
                  std::size_t stride, std::size_t pad);
template <class T>
TensorT<T> conv2d(const TensorT<T>& x, const TensorT<T>& w, std::size_t stride, std::size_t pad);

// value[B,C,H,W], points[B,P,2] normalized (x,y) -> [B,P,C]. Differentiable
// in both arguments.
template <class T>
TensorT<T> bilinear_sample(const TensorT<T>& value, const TensorT<T>& points);

template <class T> TensorT<T> softmax(const TensorT<T>& x, std::size_t axis);

// gamma/beta are vectors of extent dim(axis); eps under the variance sqrt.
template <class T>
TensorT<T> layernorm(const TensorT<T>& x, const TensorT<T>& gamma, const TensorT<T>& beta,
                     std::size_t axis, double eps = 1e-5);

template <class T> TensorT<T> sum(const TensorT<T>& x);
template <class T>
TensorT<T> sum_axes(const TensorT<T>& x, std::vector<std::size_t> axes, bool keepdim = false);
template <class T> TensorT<T> mean(const TensorT<T>& x);
template <class T>
TensorT<T> mean_axes(const TensorT<T>& x, std::vector<std::size_t> axes, bool keepdim = false);

template <class T> TensorT<T> reshape(const TensorT<T>& x, std::vector<std::size_t> shape);
template <class T> TensorT<T> permute(const TensorT<T>& x, std::vector<std::size_t> perm);
template <class T>
TensorT<T> slice(const TensorT<T>& x, std::size_t axis, std::size_t start, std::size_t len);
template <class T> TensorT<T> concat(const std::vector<TensorT<T>>& xs, std::size_t axis);

// x[B,M,rest...], one index per batch row -> [B,rest...]. The index path is
// not differentiated; gradients scatter back into the picked slices.
template <class T>
TensorT<T> take_per_batch(const TensorT<T>& x, const std::vector<std::size_t>& idx);

// Sums g down to `shape` under the broadcasting rule. Raw helper for backward
// closures; the result is never tracked.
template <class T>
TensorT<T> reduce_to(const TensorT<T>& g, const std::vector<std::size_t>& shape);

}  // namespace casp
