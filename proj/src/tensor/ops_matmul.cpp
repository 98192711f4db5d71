// Copyright (c) 2026 The casp authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>

#include "casp/ops.hpp"
#include "tensor_util.hpp"

namespace casp {

namespace {

using detail::Shape;

Shape leading(const Shape& s) { return Shape(s.begin(), s.end() - 2); }

// Element offset of batch slice `bi` (row-major index into `batch`) within a
// tensor whose leading dims broadcast to `batch`.
std::size_t slice_offset(std::size_t bi, const Shape& batch,
                         const std::vector<std::size_t>& strides, std::size_t slice_elems) {
  std::size_t off = 0;
  for (std::size_t d = batch.size(); d-- > 0;) {
    off += (bi % batch[d]) * strides[d];
    bi /= batch[d];
  }
  return off * slice_elems;
}

// Per-batch-slice matrix product with optional operand transposes; leading
// dims of a and b broadcast to `batch`. Inner extents are the callers' duty.
template <class T>
TensorT<T> batched_gemm(const TensorT<T>& a, const TensorT<T>& b, const Shape& batch,
                        bool transpose_a, bool transpose_b) {
  const std::size_t am = a.dim(a.rank() - 2), an = a.dim(a.rank() - 1);
  const std::size_t bm = b.dim(b.rank() - 2), bn = b.dim(b.rank() - 1);
  const std::size_t rows = transpose_a ? an : am;
  const std::size_t inner = transpose_a ? am : an;
  const std::size_t cols = transpose_b ? bm : bn;
  Shape out_shape = batch;
  out_shape.push_back(rows);
  out_shape.push_back(cols);
  TensorT<T> out(out_shape);
  const auto stride_a = detail::bcast_strides(batch, leading(a.shape()));
  const auto stride_b = detail::bcast_strides(batch, leading(b.shape()));
  const std::size_t ea = am * an, eb = bm * bn, eo = rows * cols;
  const std::size_t nbatch = numel(batch);
  std::vector<T> sa, sb;
  T* o = out.mutable_data();
  for (std::size_t bi = 0; bi < nbatch; ++bi) {
    const T* pa = a.data() + slice_offset(bi, batch, stride_a, ea);
    const T* pb = b.data() + slice_offset(bi, batch, stride_b, eb);
    if (transpose_a) {
      sa.resize(ea);
      detail::transpose_2d(pa, am, an, sa.data());
      pa = sa.data();
    }
    if (transpose_b) {
      sb.resize(eb);
      detail::transpose_2d(pb, bm, bn, sb.data());
      pb = sb.data();
    }
    kernels::gemm<T>(false, rows, cols, inner, pa, inner, pb, cols, o + bi * eo, cols);
  }
  return out;
}

}  // namespace

template <class T>
TensorT<T> matmul(const TensorT<T>& a, const TensorT<T>& b) {
  if (a.rank() < 2 || b.rank() < 2)
    throw ShapeError("matmul needs rank >= 2, got " + shape_str(a.shape()) + " and " +
                     shape_str(b.shape()));
  const std::size_t k = a.dim(a.rank() - 1);
  if (k != b.dim(b.rank() - 2))
    throw ShapeError("matmul inner extents differ: " + shape_str(a.shape()) + " x " +
                     shape_str(b.shape()));
  const Shape batch = detail::broadcast_shapes(leading(a.shape()), leading(b.shape()));
  TensorT<T> out = batched_gemm(a, b, batch, false, false);

  if (a.tracked() && b.tracked() && a.tape() != b.tape())
    throw UsageError("operands live on different tapes");
  Tape<T>* tape = a.tracked() ? a.tape() : (b.tracked() ? b.tape() : nullptr);
  if (tape == nullptr) return out;

  const int na = a.tracked() ? a.node() : -1;
  const int nb = b.tracked() ? b.node() : -1;
  TensorT<T> ad = a.detached();
  TensorT<T> bd = b.detached();
  return tape->track(std::move(out),
                     [na, nb, ad, bd, batch](const TensorT<T>& up, Tape<T>& t) {
                       if (na >= 0) {
                         TensorT<T> ga = batched_gemm(up, bd, batch, false, true);
                         t.accumulate(na, reduce_to(ga, ad.shape()));
                       }
                       if (nb >= 0) {
                         TensorT<T> gb = batched_gemm(ad, up, batch, true, false);
                         t.accumulate(nb, reduce_to(gb, bd.shape()));
                       }
                     });
}

template TensorT<float> matmul<float>(const TensorT<float>&, const TensorT<float>&);
template TensorT<double> matmul<double>(const TensorT<double>&, const TensorT<double>&);

}  // namespace casp
