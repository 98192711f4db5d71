// Copyright (c) 2026 The casp authors
// SPDX-License-Identifier: Apache-2.0

#include <cstdlib>
#include <cstring>

#include "casp/common.hpp"
#include "casp/kernels.hpp"

namespace casp::kernels {

namespace {

Isa resolve_isa() {
  bool have_avx2 = false;
#ifdef CASP_HAVE_AVX2_BACKEND
  have_avx2 = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#endif
  const char* env = std::getenv("CASP_SIMD");
  if (env != nullptr && *env != '\0') {
    if (std::strcmp(env, "scalar") == 0) return Isa::scalar;
    if (std::strcmp(env, "avx2") == 0) {
      if (!have_avx2) throw UsageError("CASP_SIMD=avx2 requested but AVX2/FMA is unavailable");
      return Isa::avx2;
    }
    throw UsageError(std::string("unknown CASP_SIMD value: ") + env);
  }
  return have_avx2 ? Isa::avx2 : Isa::scalar;
}

}  // namespace

Isa active_isa() {
  static const Isa isa = resolve_isa();
  return isa;
}

const char* isa_name(Isa isa) {
  switch (isa) {
    case Isa::avx2: return "avx2";
    default: return "scalar";
  }
}

#ifdef CASP_HAVE_AVX2_BACKEND
#define CASP_DISPATCH(fn, ...)                                 \
  if (active_isa() == Isa::avx2) return avx2::fn(__VA_ARGS__); \
  return scalar::fn(__VA_ARGS__)
#else
#define CASP_DISPATCH(fn, ...) return scalar::fn(__VA_ARGS__)
#endif

template <class T>
void add(const T* a, const T* b, T* out, std::size_t n) { CASP_DISPATCH(add, a, b, out, n); }

template <class T>
void sub(const T* a, const T* b, T* out, std::size_t n) { CASP_DISPATCH(sub, a, b, out, n); }

template <class T>
void mul(const T* a, const T* b, T* out, std::size_t n) { CASP_DISPATCH(mul, a, b, out, n); }

template <class T>
void div(const T* a, const T* b, T* out, std::size_t n) { CASP_DISPATCH(div, a, b, out, n); }

template <class T>
void relu(const T* x, T* out, std::size_t n) { CASP_DISPATCH(relu, x, out, n); }

template <class T>
void absval(const T* x, T* out, std::size_t n) { CASP_DISPATCH(absval, x, out, n); }

template <class T>
void neg(const T* x, T* out, std::size_t n) { CASP_DISPATCH(neg, x, out, n); }

template <class T>
void scale(const T* x, T alpha, T* out, std::size_t n) { CASP_DISPATCH(scale, x, alpha, out, n); }

template <class T>
void axpy(T alpha, const T* x, T* y, std::size_t n) { CASP_DISPATCH(axpy, alpha, x, y, n); }

template <class T>
void fill(T* x, T v, std::size_t n) { CASP_DISPATCH(fill, x, v, n); }

template <class T>
T sum(const T* x, std::size_t n) { CASP_DISPATCH(sum, x, n); }

template <class T>
T dot(const T* a, const T* b, std::size_t n) { CASP_DISPATCH(dot, a, b, n); }

template <class T>
void gemm(bool acc, std::size_t m, std::size_t n, std::size_t k, const T* a, std::size_t lda,
          const T* b, std::size_t ldb, T* c, std::size_t ldc) {
  CASP_DISPATCH(gemm, acc, m, n, k, a, lda, b, ldb, c, ldc);
}

template <class T>
void adamw(T* p, T* m, T* v, const T* g, std::size_t n, T lr, T beta1, T beta2, T eps, T wd, T c1,
           T c2) {
  CASP_DISPATCH(adamw, p, m, v, g, n, lr, beta1, beta2, eps, wd, c1, c2);
}

#undef CASP_DISPATCH

#define CASP_INSTANTIATE_DISPATCH(T)                                                           \
  template void add<T>(const T*, const T*, T*, std::size_t);                                   \
  template void sub<T>(const T*, const T*, T*, std::size_t);                                   \
  template void mul<T>(const T*, const T*, T*, std::size_t);                                   \
  template void div<T>(const T*, const T*, T*, std::size_t);                                   \
  template void relu<T>(const T*, T*, std::size_t);                                            \
  template void absval<T>(const T*, T*, std::size_t);                                          \
  template void neg<T>(const T*, T*, std::size_t);                                             \
  template void scale<T>(const T*, T, T*, std::size_t);                                        \
  template void axpy<T>(T, const T*, T*, std::size_t);                                         \
  template void fill<T>(T*, T, std::size_t);                                                   \
  template T sum<T>(const T*, std::size_t);                                                    \
  template T dot<T>(const T*, const T*, std::size_t);                                          \
  template void gemm<T>(bool, std::size_t, std::size_t, std::size_t, const T*, std::size_t,    \
                        const T*, std::size_t, T*, std::size_t);                               \
  template void adamw<T>(T*, T*, T*, const T*, std::size_t, T, T, T, T, T, T, T);

CASP_INSTANTIATE_DISPATCH(float)
CASP_INSTANTIATE_DISPATCH(double)
#undef CASP_INSTANTIATE_DISPATCH

}  // namespace casp::kernels
