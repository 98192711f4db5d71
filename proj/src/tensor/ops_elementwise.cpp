// Copyright (c) 2026 The casp authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>

#include "casp/ops.hpp"
#include "tensor_util.hpp"

namespace casp {

namespace {

template <class T>
Tape<T>* common_tape(const TensorT<T>& a, const TensorT<T>* b) {
  Tape<T>* t = a.tracked() ? a.tape() : nullptr;
  if (b != nullptr && b->tracked()) {
    if (t != nullptr && t != b->tape()) throw UsageError("operands live on different tapes");
    t = b->tape();
  }
  return t;
}

template <class T, class Fn>
TensorT<T> binary_map(const TensorT<T>& a, const TensorT<T>& b, Fn&& fn) {
  if (a.shape() == b.shape()) {
    TensorT<T> out(a.shape());
    T* o = out.mutable_data();
    const T* pa = a.data();
    const T* pb = b.data();
    for (std::size_t i = 0; i < out.size(); ++i) o[i] = fn(pa[i], pb[i]);
    return out;
  }
  auto shape = detail::broadcast_shapes(a.shape(), b.shape());
  TensorT<T> out(shape);
  T* o = out.mutable_data();
  const T* pa = a.data();
  const T* pb = b.data();
  detail::for_each_broadcast(shape, a.shape(), b.shape(),
                             [&](std::size_t i, std::size_t ia, std::size_t ib) {
                               o[i] = fn(pa[ia], pb[ib]);
                             });
  return out;
}

template <class T, class Fn>
TensorT<T> unary_map(const TensorT<T>& x, Fn&& fn) {
  TensorT<T> out(x.shape());
  T* o = out.mutable_data();
  const T* p = x.data();
  for (std::size_t i = 0; i < x.size(); ++i) o[i] = fn(p[i]);
  return out;
}

template <class T>
TensorT<T> binary_tracked(Tape<T>* tape, TensorT<T> out, const TensorT<T>& a, const TensorT<T>& b,
                          TensorT<T> mul_a, TensorT<T> mul_b, bool negate_b) {
  // Backward of the four arithmetic kinds: grad_a = reduce(up * mul_a),
  // grad_b = (+/-) reduce(up * mul_b). An undefined multiplier means 1.
  if (tape == nullptr) return out;
  const int na = a.tracked() ? a.node() : -1;
  const int nb = b.tracked() ? b.node() : -1;
  auto ashape = a.shape();
  auto bshape = b.shape();
  return tape->track(
      std::move(out),
      [na, nb, ashape, bshape, mul_a, mul_b, negate_b](const TensorT<T>& up, Tape<T>& t) {
        if (na >= 0) {
          TensorT<T> g = mul_a.defined() ? mul(up, mul_a) : up.detached();
          t.accumulate(na, reduce_to(g, ashape));
        }
        if (nb >= 0) {
          TensorT<T> g = mul_b.defined() ? mul(up, mul_b) : up.detached();
          if (negate_b) g = neg(g);
          t.accumulate(nb, reduce_to(g, bshape));
        }
      });
}

template <class T>
TensorT<T> unary_tracked(Tape<T>* tape, TensorT<T> out, const TensorT<T>& a, TensorT<T> deriv) {
  if (tape == nullptr) return out;
  const int na = a.node();
  return tape->track(std::move(out), [na, deriv](const TensorT<T>& up, Tape<T>& t) {
    t.accumulate(na, mul(up, deriv));
  });
}

template <class T>
T stable_sigmoid(T v) {
  if (v >= T(0)) return T(1) / (T(1) + std::exp(-v));
  T e = std::exp(v);
  return e / (T(1) + e);
}

}  // namespace

template <class T>
TensorT<T> elementwise(Ew kind, const TensorT<T>& a, const TensorT<T>* b, EwPolicy policy) {
  const bool binary = kind == Ew::add || kind == Ew::sub || kind == Ew::mul || kind == Ew::div;
  if (binary && b == nullptr) throw UsageError("binary elementwise kind needs two operands");
  if (!binary && b != nullptr) throw UsageError("unary elementwise kind takes one operand");
  Tape<T>* tape = common_tape(a, b);
  const T eps = static_cast<T>(policy.eps);

  switch (kind) {
    case Ew::add:
      return binary_tracked(tape, binary_map(a, *b, [](T x, T y) { return x + y; }), a, *b,
                            TensorT<T>(), TensorT<T>(), false);
    case Ew::sub:
      return binary_tracked(tape, binary_map(a, *b, [](T x, T y) { return x - y; }), a, *b,
                            TensorT<T>(), TensorT<T>(), true);
    case Ew::mul:
      return binary_tracked(tape, binary_map(a, *b, [](T x, T y) { return x * y; }), a, *b,
                            b->detached(), a.detached(), false);
    case Ew::div: {
      TensorT<T> be = b->detached();
      if (policy.strict) {
        const T* pb = be.data();
        for (std::size_t i = 0; i < be.size(); ++i)
          if (pb[i] == T(0)) throw DomainError("division by zero");
      } else {
        be = unary_map(*b, [eps](T y) {
          if (y >= T(0)) return y < eps ? eps : y;
          return y > -eps ? -eps : y;
        });
      }
      TensorT<T> out = binary_map(a, be, [](T x, T y) { return x / y; });
      // grad_a = up / be ; grad_b = -up * a / be^2
      TensorT<T> inv_be = unary_map(be, [](T y) { return T(1) / y; });
      TensorT<T> mul_b = binary_map(a, binary_map(inv_be, inv_be, [](T x, T y) { return x * y; }),
                                    [](T x, T y) { return x * y; });
      return binary_tracked(tape, std::move(out), a, *b, inv_be, std::move(mul_b), true);
    }
    case Ew::neg: {
      TensorT<T> out = unary_map(a, [](T x) { return -x; });
      return unary_tracked(tape, std::move(out), a, TensorT<T>::full(a.shape(), T(-1)));
    }
    case Ew::exp: {
      TensorT<T> out = unary_map(a, [](T x) { return std::exp(x); });
      TensorT<T> deriv = out.detached();
      return unary_tracked(tape, std::move(out), a, std::move(deriv));
    }
    case Ew::log: {
      TensorT<T> xe = a.detached();
      if (policy.strict) {
        const T* p = xe.data();
        for (std::size_t i = 0; i < xe.size(); ++i)
          if (p[i] <= T(0)) throw DomainError("log of a non-positive value");
      } else {
        xe = unary_map(a, [eps](T x) { return x < eps ? eps : x; });
      }
      TensorT<T> out = unary_map(xe, [](T x) { return std::log(x); });
      TensorT<T> deriv = unary_map(xe, [](T x) { return T(1) / x; });
      return unary_tracked(tape, std::move(out), a, std::move(deriv));
    }
    case Ew::abs: {
      TensorT<T> out = unary_map(a, [](T x) { return std::fabs(x); });
      TensorT<T> deriv =
          unary_map(a, [](T x) { return x > T(0) ? T(1) : (x < T(0) ? T(-1) : T(0)); });
      return unary_tracked(tape, std::move(out), a, std::move(deriv));
    }
    case Ew::relu: {
      TensorT<T> out = unary_map(a, [](T x) { return x > T(0) ? x : T(0); });
      TensorT<T> deriv = unary_map(a, [](T x) { return x > T(0) ? T(1) : T(0); });
      return unary_tracked(tape, std::move(out), a, std::move(deriv));
    }
    case Ew::sigmoid: {
      TensorT<T> out = unary_map(a, [](T x) { return stable_sigmoid(x); });
      TensorT<T> deriv = unary_map(out, [](T s) { return s * (T(1) - s); });
      return unary_tracked(tape, std::move(out), a, std::move(deriv));
    }
  }
  throw UsageError("unknown elementwise kind");
}

template <class T> TensorT<T> add(const TensorT<T>& a, const TensorT<T>& b) {
  return elementwise(Ew::add, a, &b);
}
template <class T> TensorT<T> sub(const TensorT<T>& a, const TensorT<T>& b) {
  return elementwise(Ew::sub, a, &b);
}
template <class T> TensorT<T> mul(const TensorT<T>& a, const TensorT<T>& b) {
  return elementwise(Ew::mul, a, &b);
}
template <class T> TensorT<T> div(const TensorT<T>& a, const TensorT<T>& b, EwPolicy policy) {
  return elementwise(Ew::div, a, &b, policy);
}
template <class T> TensorT<T> neg(const TensorT<T>& x) { return elementwise(Ew::neg, x); }
template <class T> TensorT<T> exp(const TensorT<T>& x) { return elementwise(Ew::exp, x); }
template <class T> TensorT<T> log(const TensorT<T>& x, EwPolicy policy) {
  return elementwise<T>(Ew::log, x, nullptr, policy);
}
template <class T> TensorT<T> abs(const TensorT<T>& x) { return elementwise(Ew::abs, x); }
template <class T> TensorT<T> relu(const TensorT<T>& x) { return elementwise(Ew::relu, x); }
template <class T> TensorT<T> sigmoid(const TensorT<T>& x) { return elementwise(Ew::sigmoid, x); }

template <class T>
TensorT<T> tanh(const TensorT<T>& x) {
  Tape<T>* tape = common_tape(x, static_cast<const TensorT<T>*>(nullptr));
  TensorT<T> out = unary_map(x, [](T v) { return std::tanh(v); });
  TensorT<T> deriv = unary_map(out, [](T y) { return T(1) - y * y; });
  return unary_tracked(tape, std::move(out), x, std::move(deriv));
}

template <class T>
TensorT<T> softplus(const TensorT<T>& x) {
  Tape<T>* tape = common_tape(x, static_cast<const TensorT<T>*>(nullptr));
  TensorT<T> out = unary_map(x, [](T v) {
    T m = v > T(0) ? v : T(0);
    return std::log1p(std::exp(-std::fabs(v))) + m;
  });
  TensorT<T> deriv = unary_map(x, [](T v) { return stable_sigmoid(v); });
  return unary_tracked(tape, std::move(out), x, std::move(deriv));
}

template <class T>
TensorT<T> sqrt(const TensorT<T>& x) {
  const T* p = x.data();
  for (std::size_t i = 0; i < x.size(); ++i)
    if (p[i] < T(0)) throw DomainError("sqrt of a negative value");
  Tape<T>* tape = common_tape(x, static_cast<const TensorT<T>*>(nullptr));
  TensorT<T> out = unary_map(x, [](T v) { return std::sqrt(v); });
  TensorT<T> deriv = unary_map(out, [](T y) {
    T d = y < T(1e-12) ? T(1e-12) : y;
    return T(1) / (T(2) * d);
  });
  return unary_tracked(tape, std::move(out), x, std::move(deriv));
}

template <class T>
TensorT<T> clamp(const TensorT<T>& x, T lo, T hi) {
  if (lo > hi) throw UsageError("clamp with lo > hi");
  Tape<T>* tape = common_tape(x, static_cast<const TensorT<T>*>(nullptr));
  TensorT<T> out = unary_map(x, [lo, hi](T v) { return v < lo ? lo : (v > hi ? hi : v); });
  TensorT<T> deriv = unary_map(x, [lo, hi](T v) { return v > lo && v < hi ? T(1) : T(0); });
  return unary_tracked(tape, std::move(out), x, std::move(deriv));
}

template <class T>
TensorT<T> scale(const TensorT<T>& x, T alpha) {
  Tape<T>* tape = common_tape(x, static_cast<const TensorT<T>*>(nullptr));
  TensorT<T> out(x.shape());
  kernels::scale(x.data(), alpha, out.mutable_data(), x.size());
  if (tape == nullptr) return out;
  const int nx = x.node();
  return tape->track(std::move(out), [nx, alpha](const TensorT<T>& up, Tape<T>& t) {
    TensorT<T> g(up.shape());
    kernels::scale(up.data(), alpha, g.mutable_data(), up.size());
    t.accumulate(nx, g);
  });
}

template <class T>
TensorT<T> add_scalar(const TensorT<T>& x, T c) {
  Tape<T>* tape = common_tape(x, static_cast<const TensorT<T>*>(nullptr));
  TensorT<T> out = unary_map(x, [c](T v) { return v + c; });
  if (tape == nullptr) return out;
  const int nx = x.node();
  return tape->track(std::move(out), [nx](const TensorT<T>& up, Tape<T>& t) {
    t.accumulate(nx, up);
  });
}

template <class T>
TensorT<T> stop_gradient(const TensorT<T>& x) {
  return x.detached();
}

#define CASP_INSTANTIATE_EW(T)                                                         \
  template TensorT<T> elementwise<T>(Ew, const TensorT<T>&, const TensorT<T>*, EwPolicy); \
  template TensorT<T> add<T>(const TensorT<T>&, const TensorT<T>&);                    \
  template TensorT<T> sub<T>(const TensorT<T>&, const TensorT<T>&);                    \
  template TensorT<T> mul<T>(const TensorT<T>&, const TensorT<T>&);                    \
  template TensorT<T> div<T>(const TensorT<T>&, const TensorT<T>&, EwPolicy);          \
  template TensorT<T> neg<T>(const TensorT<T>&);                                       \
  template TensorT<T> exp<T>(const TensorT<T>&);                                       \
  template TensorT<T> log<T>(const TensorT<T>&, EwPolicy);                             \
  template TensorT<T> abs<T>(const TensorT<T>&);                                       \
  template TensorT<T> relu<T>(const TensorT<T>&);                                      \
  template TensorT<T> sigmoid<T>(const TensorT<T>&);                                   \
  template TensorT<T> tanh<T>(const TensorT<T>&);                                      \
  template TensorT<T> softplus<T>(const TensorT<T>&);                                  \
  template TensorT<T> sqrt<T>(const TensorT<T>&);                                      \
  template TensorT<T> clamp<T>(const TensorT<T>&, T, T);                               \
  template TensorT<T> scale<T>(const TensorT<T>&, T);                                  \
  template TensorT<T> add_scalar<T>(const TensorT<T>&, T);                             \
  template TensorT<T> stop_gradient<T>(const TensorT<T>&);

CASP_INSTANTIATE_EW(float)
CASP_INSTANTIATE_EW(double)
#undef CASP_INSTANTIATE_EW

}  // namespace casp
