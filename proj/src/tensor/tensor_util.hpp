// Copyright (c) 2026 The casp authors
// SPDX-License-Identifier: Apache-2.0
//
// Shared helpers for the op implementations. Not installed.

#pragma once

#include <algorithm>
#include <cstddef>
#include <vector>

#include "casp/common.hpp"
#include "casp/kernels.hpp"
#include "casp/tensor.hpp"

namespace casp::detail {

using Shape = std::vector<std::size_t>;

inline Shape broadcast_shapes(const Shape& a, const Shape& b) {
  const std::size_t r = std::max(a.size(), b.size());
  Shape out(r);
  for (std::size_t i = 0; i < r; ++i) {
    std::size_t da = i < a.size() ? a[a.size() - 1 - i] : 1;
    std::size_t db = i < b.size() ? b[b.size() - 1 - i] : 1;
    if (da != db && da != 1 && db != 1)
      throw ShapeError("cannot broadcast " + shape_str(a) + " with " + shape_str(b));
    out[r - 1 - i] = std::max(da, db);
  }
  return out;
}

inline std::vector<std::size_t> strides_for(const Shape& shape) {
  std::vector<std::size_t> s(shape.size());
  std::size_t acc = 1;
  for (std::size_t i = shape.size(); i-- > 0;) {
    s[i] = acc;
    acc *= shape[i];
  }
  return s;
}

// Per-output-dim element strides into an input that broadcasts (right
// aligned) to `out`; broadcast dims get stride 0.
inline std::vector<std::size_t> bcast_strides(const Shape& out, const Shape& in) {
  auto in_strides = strides_for(in);
  std::vector<std::size_t> s(out.size(), 0);
  for (std::size_t i = 0; i < in.size(); ++i) {
    std::size_t oi = out.size() - in.size() + i;
    s[oi] = in[i] == 1 ? 0 : in_strides[i];
  }
  return s;
}

template <class T>
void transpose_2d(const T* src, std::size_t rows, std::size_t cols, T* dst) {
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) dst[j * rows + i] = src[i * cols + j];
}

template <class T>
TensorT<T> raw_add_same_shape(const TensorT<T>& a, const TensorT<T>& b) {
  if (a.shape() != b.shape())
    throw ShapeError("gradient shape mismatch: " + shape_str(a.shape()) + " vs " +
                     shape_str(b.shape()));
  TensorT<T> out(a.shape());
  kernels::add(a.data(), b.data(), out.mutable_data(), a.size());
  return out;
}

// Walks every element of `out_shape` in row-major order, handing the two
// input element offsets to fn(out_index, a_off, b_off).
template <class Fn>
void for_each_broadcast(const Shape& out_shape, const Shape& a, const Shape& b, Fn&& fn) {
  const std::size_t n = numel(out_shape);
  const auto sa = bcast_strides(out_shape, a);
  const auto sb = bcast_strides(out_shape, b);
  const std::size_t r = out_shape.size();
  std::vector<std::size_t> coord(r, 0);
  std::size_t offa = 0, offb = 0;
  for (std::size_t i = 0; i < n; ++i) {
    fn(i, offa, offb);
    for (std::size_t d = r; d-- > 0;) {
      ++coord[d];
      offa += sa[d];
      offb += sb[d];
      if (coord[d] < out_shape[d]) break;
      offa -= sa[d] * out_shape[d];
      offb -= sb[d] * out_shape[d];
      coord[d] = 0;
    }
  }
}

}  // namespace casp::detail
