// Copyright (c) 2026 The casp authors
// SPDX-License-Identifier: Apache-2.0
//
// Data-parallel inner loops behind the tensor ops. Every kernel exists as a
// scalar reference implementation; on x86 an AVX2/FMA variant is selected at
// runtime (override with CASP_SIMD=scalar|avx2). Pure per-element kernels are
// bit-identical across backends; reduction and FMA kernels may differ in the
// last ulps and are equivalence-tested against the scalar reference.

#pragma once

#include <cstddef>

namespace casp::kernels {

enum class Isa { scalar = 0, avx2 = 1 };

Isa active_isa();
const char* isa_name(Isa isa);

namespace scalar {

template <class T> void add(const T* a, const T* b, T* out, std::size_t n);
template <class T> void sub(const T* a, const T* b, T* out, std::size_t n);
template <class T> void mul(const T* a, const T* b, T* out, std::size_t n);
template <class T> void div(const T* a, const T* b, T* out, std::size_t n);
template <class T> void relu(const T* x, T* out, std::size_t n);
template <class T> void absval(const T* x, T* out, std::size_t n);
template <class T> void neg(const T* x, T* out, std::size_t n);
template <class T> void scale(const T* x, T alpha, T* out, std::size_t n);
template <class T> void axpy(T alpha, const T* x, T* y, std::size_t n);
template <class T> void fill(T* x, T v, std::size_t n);
template <class T> T sum(const T* x, std::size_t n);
template <class T> T dot(const T* a, const T* b, std::size_t n);

// C[m,n] = (acc ? C : 0) + A[m,k] * B[k,n], row-major with leading strides.
template <class T>
void gemm(bool acc, std::size_t m, std::size_t n, std::size_t k, const T* a,
          std::size_t lda, const T* b, std::size_t ldb, T* c, std::size_t ldc);

// Decoupled-weight-decay Adam step. c1 = 1 - beta1^t, c2 = 1 - beta2^t.
template <class T>
void adamw(T* p, T* m, T* v, const T* g, std::size_t n, T lr, T beta1, T beta2,
           T eps, T wd, T c1, T c2);

}  // namespace scalar

#if defined(__x86_64__) || defined(_M_X64) || defined(__i386__)
#define CASP_HAVE_AVX2_BACKEND 1

namespace avx2 {

template <class T> void add(const T* a, const T* b, T* out, std::size_t n);
template <class T> void sub(const T* a, const T* b, T* out, std::size_t n);
template <class T> void mul(const T* a, const T* b, T* out, std::size_t n);
template <class T> void div(const T* a, const T* b, T* out, std::size_t n);
template <class T> void relu(const T* x, T* out, std::size_t n);
template <class T> void absval(const T* x, T* out, std::size_t n);
template <class T> void neg(const T* x, T* out, std::size_t n);
template <class T> void scale(const T* x, T alpha, T* out, std::size_t n);
template <class T> void axpy(T alpha, const T* x, T* y, std::size_t n);
template <class T> void fill(T* x, T v, std::size_t n);
template <class T> T sum(const T* x, std::size_t n);
template <class T> T dot(const T* a, const T* b, std::size_t n);

template <class T>
void gemm(bool acc, std::size_t m, std::size_t n, std::size_t k, const T* a,
          std::size_t lda, const T* b, std::size_t ldb, T* c, std::size_t ldc);

template <class T>
void adamw(T* p, T* m, T* v, const T* g, std::size_t n, T lr, T beta1, T beta2,
           T eps, T wd, T c1, T c2);

#define CASP_DECLARE_AVX2(T)                                                     \
  template <> void add<T>(const T* a, const T* b, T* out, std::size_t n);        \
  template <> void sub<T>(const T* a, const T* b, T* out, std::size_t n);        \
  template <> void mul<T>(const T* a, const T* b, T* out, std::size_t n);        \
  template <> void div<T>(const T* a, const T* b, T* out, std::size_t n);        \
  template <> void relu<T>(const T* x, T* out, std::size_t n);                   \
  template <> void absval<T>(const T* x, T* out, std::size_t n);                 \
  template <> void neg<T>(const T* x, T* out, std::size_t n);                    \
  template <> void scale<T>(const T* x, T alpha, T* out, std::size_t n);         \
  template <> void axpy<T>(T alpha, const T* x, T* y, std::size_t n);            \
  template <> void fill<T>(T* x, T v, std::size_t n);                            \
  template <> T sum<T>(const T* x, std::size_t n);                               \
  template <> T dot<T>(const T* a, const T* b, std::size_t n);                   \
  template <>                                                                    \
  void gemm<T>(bool acc, std::size_t m, std::size_t n, std::size_t k,            \
               const T* a, std::size_t lda, const T* b, std::size_t ldb, T* c,   \
               std::size_t ldc);                                                 \
  template <>                                                                    \
  void adamw<T>(T* p, T* m, T* v, const T* g, std::size_t n, T lr, T beta1,     \
                T beta2, T eps, T wd, T c1, T c2);

CASP_DECLARE_AVX2(float)
CASP_DECLARE_AVX2(double)
#undef CASP_DECLARE_AVX2

}  // namespace avx2
#endif

// Dispatched entry points.
template <class T> void add(const T* a, const T* b, T* out, std::size_t n);
template <class T> void sub(const T* a, const T* b, T* out, std::size_t n);
template <class T> void mul(const T* a, const T* b, T* out, std::size_t n);
template <class T> void div(const T* a, const T* b, T* out, std::size_t n);
template <class T> void relu(const T* x, T* out, std::size_t n);
template <class T> void absval(const T* x, T* out, std::size_t n);
template <class T> void neg(const T* x, T* out, std::size_t n);
template <class T> void scale(const T* x, T alpha, T* out, std::size_t n);
template <class T> void axpy(T alpha, const T* x, T* y, std::size_t n);
template <class T> void fill(T* x, T v, std::size_t n);
template <class T> T sum(const T* x, std::size_t n);
template <class T> T dot(const T* a, const T* b, std::size_t n);

template <class T>
void gemm(bool acc, std::size_t m, std::size_t n, std::size_t k, const T* a,
          std::size_t lda, const T* b, std::size_t ldb, T* c, std::size_t ldc);

template <class T>
void adamw(T* p, T* m, T* v, const T* g, std::size_t n, T lr, T beta1, T beta2,
           T eps, T wd, T c1, T c2);

}  // namespace casp::kernels
