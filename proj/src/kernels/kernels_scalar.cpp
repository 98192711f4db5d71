// Copyright (c) 2026 The casp authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>

#include "casp/kernels.hpp"

namespace casp::kernels::scalar {

template <class T>
void add(const T* a, const T* b, T* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] + b[i];
}

template <class T>
void sub(const T* a, const T* b, T* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] - b[i];
}

template <class T>
void mul(const T* a, const T* b, T* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}

template <class T>
void div(const T* a, const T* b, T* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] / b[i];
}

template <class T>
void relu(const T* x, T* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = x[i] > T(0) ? x[i] : T(0);
}

template <class T>
void absval(const T* x, T* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = std::fabs(x[i]);
}

template <class T>
void neg(const T* x, T* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = -x[i];
}

template <class T>
void scale(const T* x, T alpha, T* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = alpha * x[i];
}

template <class T>
void axpy(T alpha, const T* x, T* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

template <class T>
void fill(T* x, T v, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] = v;
}

template <class T>
T sum(const T* x, std::size_t n) {
  T s = T(0);
  for (std::size_t i = 0; i < n; ++i) s += x[i];
  return s;
}

template <class T>
T dot(const T* a, const T* b, std::size_t n) {
  T s = T(0);
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

template <class T>
void gemm(bool acc, std::size_t m, std::size_t n, std::size_t k, const T* a,
          std::size_t lda, const T* b, std::size_t ldb, T* c, std::size_t ldc) {
  for (std::size_t i = 0; i < m; ++i) {
    T* crow = c + i * ldc;
    if (!acc) fill(crow, T(0), n);
    for (std::size_t p = 0; p < k; ++p) {
      const T aip = a[i * lda + p];
      if (aip == T(0)) continue;
      const T* brow = b + p * ldb;
      for (std::size_t j = 0; j < n; ++j) crow[j] += aip * brow[j];
    }
  }
}

template <class T>
void adamw(T* p, T* m, T* v, const T* g, std::size_t n, T lr, T beta1, T beta2,
           T eps, T wd, T c1, T c2) {
  for (std::size_t i = 0; i < n; ++i) {
    m[i] = beta1 * m[i] + (T(1) - beta1) * g[i];
    v[i] = beta2 * v[i] + (T(1) - beta2) * g[i] * g[i];
    const T mhat = m[i] / c1;
    const T vhat = v[i] / c2;
    p[i] -= lr * (mhat / (std::sqrt(vhat) + eps) + wd * p[i]);
  }
}

#define CASP_INSTANTIATE_SCALAR(T)                                            \
  template void add<T>(const T*, const T*, T*, std::size_t);                  \
  template void sub<T>(const T*, const T*, T*, std::size_t);                  \
  template void mul<T>(const T*, const T*, T*, std::size_t);                  \
  template void div<T>(const T*, const T*, T*, std::size_t);                  \
  template void relu<T>(const T*, T*, std::size_t);                           \
  template void absval<T>(const T*, T*, std::size_t);                         \
  template void neg<T>(const T*, T*, std::size_t);                            \
  template void scale<T>(const T*, T, T*, std::size_t);                       \
  template void axpy<T>(T, const T*, T*, std::size_t);                        \
  template void fill<T>(T*, T, std::size_t);                                  \
  template T sum<T>(const T*, std::size_t);                                   \
  template T dot<T>(const T*, const T*, std::size_t);                         \
  template void gemm<T>(bool, std::size_t, std::size_t, std::size_t, const T*, \
                        std::size_t, const T*, std::size_t, T*, std::size_t); \
  template void adamw<T>(T*, T*, T*, const T*, std::size_t, T, T, T, T, T, T, T);

CASP_INSTANTIATE_SCALAR(float)
CASP_INSTANTIATE_SCALAR(double)

}  // namespace casp::kernels::scalar
