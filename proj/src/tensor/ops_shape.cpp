// Copyright (c) 2026 The casp authors
// SPDX-License-Identifier: Apache-2.0

#include <cstring>
#include <numeric>

#include "casp/ops.hpp"
#include "tensor_util.hpp"

namespace casp {

namespace {

template <class T>
TensorT<T> permute_raw(const TensorT<T>& x, const std::vector<std::size_t>& perm) {
  const std::size_t r = x.rank();
  std::vector<std::size_t> out_shape(r);
  for (std::size_t i = 0; i < r; ++i) out_shape[i] = x.dim(perm[i]);
  TensorT<T> out(out_shape);
  const auto ostrides = detail::strides_for(out_shape);
  std::vector<std::size_t> inv(r);
  for (std::size_t i = 0; i < r; ++i) inv[perm[i]] = i;
  std::vector<std::size_t> factor(r);
  for (std::size_t d = 0; d < r; ++d) factor[d] = ostrides[inv[d]];
  T* o = out.mutable_data();
  const T* p = x.data();
  std::vector<std::size_t> coord(r, 0);
  std::size_t off = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    o[off] = p[i];
    for (std::size_t d = r; d-- > 0;) {
      ++coord[d];
      off += factor[d];
      if (coord[d] < x.dim(d)) break;
      off -= factor[d] * x.dim(d);
      coord[d] = 0;
    }
  }
  return out;
}

}  // namespace

template <class T>
TensorT<T> reshape(const TensorT<T>& x, std::vector<std::size_t> shape) {
  if (numel(shape) != x.size())
    throw ShapeError("reshape " + shape_str(x.shape()) + " to incompatible " + shape_str(shape));
  TensorT<T> out(shape, std::vector<T>(x.data(), x.data() + x.size()));
  if (!x.tracked()) return out;
  const int nx = x.node();
  auto xshape = x.shape();
  return x.tape()->track(std::move(out), [nx, xshape](const TensorT<T>& up, Tape<T>& t) {
    t.accumulate(nx, TensorT<T>(xshape, std::vector<T>(up.data(), up.data() + up.size())));
  });
}

template <class T>
TensorT<T> permute(const TensorT<T>& x, std::vector<std::size_t> perm) {
  if (perm.size() != x.rank()) throw ShapeError("permutation rank mismatch");
  std::vector<bool> seen(perm.size(), false);
  for (std::size_t p : perm) {
    if (p >= perm.size() || seen[p]) throw ShapeError("invalid permutation");
    seen[p] = true;
  }
  TensorT<T> out = permute_raw(x, perm);
  if (!x.tracked()) return out;
  const int nx = x.node();
  std::vector<std::size_t> inv(perm.size());
  for (std::size_t i = 0; i < perm.size(); ++i) inv[perm[i]] = i;
  return x.tape()->track(std::move(out), [nx, inv](const TensorT<T>& up, Tape<T>& t) {
    t.accumulate(nx, permute_raw(up, inv));
  });
}

template <class T>
TensorT<T> slice(const TensorT<T>& x, std::size_t axis, std::size_t start, std::size_t len) {
  if (axis >= x.rank()) throw ShapeError("slice axis out of range for " + shape_str(x.shape()));
  if (start + len > x.dim(axis))
    throw ShapeError("slice [" + std::to_string(start) + "," + std::to_string(start + len) +
                     ") exceeds extent of " + shape_str(x.shape()));
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= x.dim(i);
  for (std::size_t i = axis + 1; i < x.rank(); ++i) inner *= x.dim(i);
  const std::size_t n = x.dim(axis);
  std::vector<std::size_t> out_shape = x.shape();
  out_shape[axis] = len;
  TensorT<T> out(out_shape);
  T* o = out.mutable_data();
  const T* p = x.data();
  for (std::size_t ou = 0; ou < outer; ++ou)
    std::memcpy(o + ou * len * inner, p + (ou * n + start) * inner, len * inner * sizeof(T));
  if (!x.tracked()) return out;
  const int nx = x.node();
  auto xshape = x.shape();
  return x.tape()->track(
      std::move(out), [nx, xshape, axis, start, len, outer, inner, n](const TensorT<T>& up,
                                                                      Tape<T>& t) {
        (void)axis;
        TensorT<T> gx(xshape);
        T* g = gx.mutable_data();
        const T* u = up.data();
        for (std::size_t ou = 0; ou < outer; ++ou)
          std::memcpy(g + (ou * n + start) * inner, u + ou * len * inner,
                      len * inner * sizeof(T));
        t.accumulate(nx, gx);
      });
}

template <class T>
TensorT<T> concat(const std::vector<TensorT<T>>& xs, std::size_t axis) {
  if (xs.empty()) throw UsageError("concat of zero tensors");
  const std::size_t r = xs[0].rank();
  if (axis >= r) throw ShapeError("concat axis out of range");
  std::size_t total = 0;
  for (const auto& x : xs) {
    if (x.rank() != r) throw ShapeError("concat rank mismatch");
    for (std::size_t i = 0; i < r; ++i)
      if (i != axis && x.dim(i) != xs[0].dim(i))
        throw ShapeError("concat extent mismatch off the concat axis");
    total += x.dim(axis);
  }
  std::vector<std::size_t> out_shape = xs[0].shape();
  out_shape[axis] = total;
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= out_shape[i];
  for (std::size_t i = axis + 1; i < r; ++i) inner *= out_shape[i];

  TensorT<T> out(out_shape);
  T* o = out.mutable_data();
  std::size_t at = 0;
  for (const auto& x : xs) {
    const std::size_t n = x.dim(axis);
    const T* p = x.data();
    for (std::size_t ou = 0; ou < outer; ++ou)
      std::memcpy(o + (ou * total + at) * inner, p + ou * n * inner, n * inner * sizeof(T));
    at += n;
  }

  Tape<T>* tape = nullptr;
  for (const auto& x : xs)
    if (x.tracked()) {
      if (tape != nullptr && tape != x.tape())
        throw UsageError("operands live on different tapes");
      tape = x.tape();
    }
  if (tape == nullptr) return out;

  struct Part {
    int node;
    std::size_t start, len;
    std::vector<std::size_t> shape;
  };
  std::vector<Part> parts;
  std::size_t pos = 0;
  for (const auto& x : xs) {
    if (x.tracked()) parts.push_back({x.node(), pos, x.dim(axis), x.shape()});
    pos += x.dim(axis);
  }
  return tape->track(std::move(out),
                     [parts, axis, outer, inner, total](const TensorT<T>& up, Tape<T>& t) {
                       (void)axis;
                       const T* u = up.data();
                       for (const Part& part : parts) {
                         TensorT<T> g(part.shape);
                         T* pg = g.mutable_data();
                         for (std::size_t ou = 0; ou < outer; ++ou)
                           std::memcpy(pg + ou * part.len * inner,
                                       u + (ou * total + part.start) * inner,
                                       part.len * inner * sizeof(T));
                         t.accumulate(part.node, g);
                       }
                     });
}

template <class T>
TensorT<T> take_per_batch(const TensorT<T>& x, const std::vector<std::size_t>& idx) {
  if (x.rank() < 2) throw ShapeError("take_per_batch expects x[B,M,...]");
  const std::size_t B = x.dim(0), M = x.dim(1);
  if (idx.size() != B) throw ShapeError("take_per_batch needs one index per batch row");
  for (std::size_t i : idx)
    if (i >= M) throw ShapeError("take_per_batch index out of range");
  std::size_t rest = 1;
  for (std::size_t i = 2; i < x.rank(); ++i) rest *= x.dim(i);
  std::vector<std::size_t> out_shape;
  out_shape.push_back(B);
  for (std::size_t i = 2; i < x.rank(); ++i) out_shape.push_back(x.dim(i));
  TensorT<T> out(out_shape);
  T* o = out.mutable_data();
  const T* p = x.data();
  for (std::size_t b = 0; b < B; ++b)
    std::memcpy(o + b * rest, p + (b * M + idx[b]) * rest, rest * sizeof(T));
  if (!x.tracked()) return out;
  const int nx = x.node();
  auto xshape = x.shape();
  auto picked = idx;
  return x.tape()->track(std::move(out),
                         [nx, xshape, picked, B, M, rest](const TensorT<T>& up, Tape<T>& t) {
                           TensorT<T> gx(xshape);
                           T* g = gx.mutable_data();
                           const T* u = up.data();
                           for (std::size_t b = 0; b < B; ++b)
                             std::memcpy(g + (b * M + picked[b]) * rest, u + b * rest,
                                         rest * sizeof(T));
                           t.accumulate(nx, gx);
                         });
}

#define CASP_INSTANTIATE_SHAPE(T)                                                          \
  template TensorT<T> reshape<T>(const TensorT<T>&, std::vector<std::size_t>);             \
  template TensorT<T> permute<T>(const TensorT<T>&, std::vector<std::size_t>);             \
  template TensorT<T> slice<T>(const TensorT<T>&, std::size_t, std::size_t, std::size_t);  \
  template TensorT<T> concat<T>(const std::vector<TensorT<T>>&, std::size_t);              \
  template TensorT<T> take_per_batch<T>(const TensorT<T>&, const std::vector<std::size_t>&);

CASP_INSTANTIATE_SHAPE(float)
CASP_INSTANTIATE_SHAPE(double)
#undef CASP_INSTANTIATE_SHAPE

}  // namespace casp
