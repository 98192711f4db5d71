// Copyright (c) 2026 The casp authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>

#include "casp/ops.hpp"
#include "tensor_util.hpp"

namespace casp {

namespace {

struct AxisSplit {
  std::size_t outer, n, inner;
};

AxisSplit split_at(const std::vector<std::size_t>& shape, std::size_t axis) {
  if (axis >= shape.size())
    throw ShapeError("axis out of range for " + shape_str(shape));
  AxisSplit s{1, shape[axis], 1};
  for (std::size_t i = 0; i < axis; ++i) s.outer *= shape[i];
  for (std::size_t i = axis + 1; i < shape.size(); ++i) s.inner *= shape[i];
  return s;
}

}  // namespace

template <class T>
TensorT<T> softmax(const TensorT<T>& x, std::size_t axis) {
  const AxisSplit s = split_at(x.shape(), axis);
  TensorT<T> out(x.shape());
  T* o = out.mutable_data();
  const T* p = x.data();
  for (std::size_t ou = 0; ou < s.outer; ++ou)
    for (std::size_t in = 0; in < s.inner; ++in) {
      const std::size_t base = ou * s.n * s.inner + in;
      T m = p[base];
      for (std::size_t j = 1; j < s.n; ++j) m = std::max(m, p[base + j * s.inner]);
      T z = T(0);
      for (std::size_t j = 0; j < s.n; ++j) {
        T e = std::exp(p[base + j * s.inner] - m);
        o[base + j * s.inner] = e;
        z += e;
      }
      for (std::size_t j = 0; j < s.n; ++j) o[base + j * s.inner] /= z;
    }

  if (!x.tracked()) return out;
  const int nx = x.node();
  TensorT<T> yd = out.detached();
  return x.tape()->track(std::move(out), [nx, yd, s](const TensorT<T>& up, Tape<T>& t) {
    TensorT<T> gx(yd.shape());
    T* g = gx.mutable_data();
    const T* y = yd.data();
    const T* u = up.data();
    for (std::size_t ou = 0; ou < s.outer; ++ou)
      for (std::size_t in = 0; in < s.inner; ++in) {
        const std::size_t base = ou * s.n * s.inner + in;
        T dot = T(0);
        for (std::size_t j = 0; j < s.n; ++j)
          dot += u[base + j * s.inner] * y[base + j * s.inner];
        for (std::size_t j = 0; j < s.n; ++j) {
          const std::size_t k = base + j * s.inner;
          g[k] = y[k] * (u[k] - dot);
        }
      }
    t.accumulate(nx, gx);
  });
}

template <class T>
TensorT<T> layernorm(const TensorT<T>& x, const TensorT<T>& gamma, const TensorT<T>& beta,
                     std::size_t axis, double eps) {
  const AxisSplit s = split_at(x.shape(), axis);
  if (gamma.shape() != std::vector<std::size_t>{s.n} ||
      beta.shape() != std::vector<std::size_t>{s.n})
    throw ShapeError("layernorm gamma/beta must be vectors of the axis extent");

  TensorT<T> out(x.shape());
  TensorT<T> xhat(x.shape());
  TensorT<T> inv_sd({s.outer, s.inner});
  T* o = out.mutable_data();
  T* xh = xhat.mutable_data();
  T* iv = inv_sd.mutable_data();
  const T* p = x.data();
  const T* pg = gamma.data();
  const T* pb = beta.data();
  for (std::size_t ou = 0; ou < s.outer; ++ou)
    for (std::size_t in = 0; in < s.inner; ++in) {
      const std::size_t base = ou * s.n * s.inner + in;
      T mu = T(0);
      for (std::size_t j = 0; j < s.n; ++j) mu += p[base + j * s.inner];
      mu /= static_cast<T>(s.n);
      T var = T(0);
      for (std::size_t j = 0; j < s.n; ++j) {
        T dlt = p[base + j * s.inner] - mu;
        var += dlt * dlt;
      }
      var /= static_cast<T>(s.n);
      const T inv = T(1) / std::sqrt(var + static_cast<T>(eps));
      iv[ou * s.inner + in] = inv;
      for (std::size_t j = 0; j < s.n; ++j) {
        const std::size_t k = base + j * s.inner;
        xh[k] = (p[k] - mu) * inv;
        o[k] = xh[k] * pg[j] + pb[j];
      }
    }

  Tape<T>* tape = nullptr;
  for (const TensorT<T>* t : {&x, &gamma, &beta})
    if (t->tracked()) {
      if (tape != nullptr && tape != t->tape())
        throw UsageError("operands live on different tapes");
      tape = t->tape();
    }
  if (tape == nullptr) return out;

  const int nx = x.tracked() ? x.node() : -1;
  const int ng = gamma.tracked() ? gamma.node() : -1;
  const int nb = beta.tracked() ? beta.node() : -1;
  TensorT<T> gd = gamma.detached();
  return tape->track(std::move(out), [nx, ng, nb, xhat, inv_sd, gd, s](const TensorT<T>& up,
                                                                       Tape<T>& t) {
    const T* u = up.data();
    const T* xh = xhat.data();
    const T* iv = inv_sd.data();
    const T* pg = gd.data();
    TensorT<T> gx = nx >= 0 ? TensorT<T>(xhat.shape()) : TensorT<T>();
    TensorT<T> ggamma = ng >= 0 ? TensorT<T>(gd.shape()) : TensorT<T>();
    TensorT<T> gbeta = nb >= 0 ? TensorT<T>(gd.shape()) : TensorT<T>();
    T* pgx = nx >= 0 ? gx.mutable_data() : nullptr;
    T* pgg = ng >= 0 ? ggamma.mutable_data() : nullptr;
    T* pgb = nb >= 0 ? gbeta.mutable_data() : nullptr;
    for (std::size_t ou = 0; ou < s.outer; ++ou)
      for (std::size_t in = 0; in < s.inner; ++in) {
        const std::size_t base = ou * s.n * s.inner + in;
        const T inv = iv[ou * s.inner + in];
        T m1 = T(0), m2 = T(0);
        for (std::size_t j = 0; j < s.n; ++j) {
          const std::size_t k = base + j * s.inner;
          const T g = u[k] * pg[j];
          m1 += g;
          m2 += g * xh[k];
        }
        m1 /= static_cast<T>(s.n);
        m2 /= static_cast<T>(s.n);
        for (std::size_t j = 0; j < s.n; ++j) {
          const std::size_t k = base + j * s.inner;
          if (pgx != nullptr) pgx[k] = inv * (u[k] * pg[j] - m1 - xh[k] * m2);
          if (pgg != nullptr) pgg[j] += u[k] * xh[k];
          if (pgb != nullptr) pgb[j] += u[k];
        }
      }
    if (nx >= 0) t.accumulate(nx, gx);
    if (ng >= 0) t.accumulate(ng, ggamma);
    if (nb >= 0) t.accumulate(nb, gbeta);
  });
}

#define CASP_INSTANTIATE_NORM(T)                                           \
  template TensorT<T> softmax<T>(const TensorT<T>&, std::size_t);          \
  template TensorT<T> layernorm<T>(const TensorT<T>&, const TensorT<T>&,   \
                                   const TensorT<T>&, std::size_t, double);

CASP_INSTANTIATE_NORM(float)
CASP_INSTANTIATE_NORM(double)
#undef CASP_INSTANTIATE_NORM

}  // namespace casp
