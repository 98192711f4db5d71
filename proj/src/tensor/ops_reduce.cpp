// Copyright (c) 2026 The casp authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>

#include "casp/ops.hpp"
#include "tensor_util.hpp"

namespace casp {

namespace {

template <class T>
TensorT<T> broadcast_back(const TensorT<T>& up, const std::vector<std::size_t>& to_shape) {
  TensorT<T> g(to_shape);
  T* o = g.mutable_data();
  const T* u = up.data();
  detail::for_each_broadcast(to_shape, up.shape(), up.shape(),
                             [&](std::size_t i, std::size_t iu, std::size_t) { o[i] = u[iu]; });
  return g;
}

std::vector<std::size_t> reduced_shape(const std::vector<std::size_t>& shape,
                                       const std::vector<std::size_t>& axes, bool keepdim) {
  std::vector<bool> drop(shape.size(), false);
  for (std::size_t a : axes) {
    if (a >= shape.size()) throw ShapeError("reduction axis out of range for " + shape_str(shape));
    drop[a] = true;
  }
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (drop[i]) {
      if (keepdim) out.push_back(1);
    } else {
      out.push_back(shape[i]);
    }
  }
  return out;
}

// Shape with reduced axes pinned to 1 regardless of keepdim; the broadcast
// helpers use it to map full offsets onto the reduced buffer.
std::vector<std::size_t> pinned_shape(const std::vector<std::size_t>& shape,
                                      const std::vector<std::size_t>& axes) {
  std::vector<std::size_t> out = shape;
  for (std::size_t a : axes) out[a] = 1;
  return out;
}

}  // namespace

template <class T>
TensorT<T> reduce_to(const TensorT<T>& g, const std::vector<std::size_t>& shape) {
  if (g.shape() == shape) return g.detached();
  if (detail::broadcast_shapes(shape, g.shape()) != g.shape())
    throw ShapeError("cannot reduce " + shape_str(g.shape()) + " to " + shape_str(shape));
  TensorT<T> out(shape);
  T* o = out.mutable_data();
  const T* p = g.data();
  detail::for_each_broadcast(g.shape(), shape, shape,
                             [&](std::size_t i, std::size_t io, std::size_t) { o[io] += p[i]; });
  return out;
}

template <class T>
TensorT<T> sum(const TensorT<T>& x) {
  TensorT<T> out = TensorT<T>::scalar(kernels::sum(x.data(), x.size()));
  if (!x.tracked()) return out;
  const int nx = x.node();
  auto xshape = x.shape();
  return x.tape()->track(std::move(out), [nx, xshape](const TensorT<T>& up, Tape<T>& t) {
    t.accumulate(nx, TensorT<T>::full(xshape, up.item()));
  });
}

template <class T>
TensorT<T> sum_axes(const TensorT<T>& x, std::vector<std::size_t> axes, bool keepdim) {
  auto out_shape = reduced_shape(x.shape(), axes, keepdim);
  auto pin = pinned_shape(x.shape(), axes);
  TensorT<T> acc(pin);
  T* o = acc.mutable_data();
  const T* p = x.data();
  detail::for_each_broadcast(x.shape(), pin, pin,
                             [&](std::size_t i, std::size_t io, std::size_t) { o[io] += p[i]; });
  TensorT<T> out(out_shape, std::vector<T>(acc.data(), acc.data() + acc.size()));
  if (!x.tracked()) return out;
  const int nx = x.node();
  auto xshape = x.shape();
  return x.tape()->track(std::move(out), [nx, xshape, pin](const TensorT<T>& up, Tape<T>& t) {
    TensorT<T> up_pin(pin, std::vector<T>(up.data(), up.data() + up.size()));
    t.accumulate(nx, broadcast_back(up_pin, xshape));
  });
}

template <class T>
TensorT<T> mean(const TensorT<T>& x) {
  if (x.size() == 0) throw UsageError("mean of an empty tensor");
  TensorT<T> s = sum(x);
  return scale(s, T(1) / static_cast<T>(x.size()));
}

template <class T>
TensorT<T> mean_axes(const TensorT<T>& x, std::vector<std::size_t> axes, bool keepdim) {
  std::size_t count = 1;
  for (std::size_t a : axes) count *= x.dim(a);
  if (count == 0) throw UsageError("mean over empty extent");
  TensorT<T> s = sum_axes(x, std::move(axes), keepdim);
  return scale(s, T(1) / static_cast<T>(count));
}

#define CASP_INSTANTIATE_REDUCE(T)                                                      \
  template TensorT<T> reduce_to<T>(const TensorT<T>&, const std::vector<std::size_t>&); \
  template TensorT<T> sum<T>(const TensorT<T>&);                                        \
  template TensorT<T> sum_axes<T>(const TensorT<T>&, std::vector<std::size_t>, bool);   \
  template TensorT<T> mean<T>(const TensorT<T>&);                                       \
  template TensorT<T> mean_axes<T>(const TensorT<T>&, std::vector<std::size_t>, bool);

CASP_INSTANTIATE_REDUCE(float)
CASP_INSTANTIATE_REDUCE(double)
#undef CASP_INSTANTIATE_REDUCE

}  // namespace casp
