// Copyright (c) 2026 The casp authors
// SPDX-License-Identifier: Apache-2.0
//
// Named parameter registry plus the two layer primitives built on it.
// get_or_create draws fresh values when the name is absent and rebinds the
// stored tensor otherwise, so a model constructed over a preloaded store
// (checkpoint restore, gradient checks) picks up the existing buffers.

#pragma once

#include <cstddef>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "casp/common.hpp"
#include "casp/tensor.hpp"

namespace casp {

// Binds a parameter to the tape when one is recording; eval passes nullptr.
template <class T>
inline TensorT<T> track(Tape<T>* tape, const TensorT<T>& p) {
  return tape ? tape->leaf(p) : p;
}

template <class T>
class ParamStoreT {
 public:
  using Tensor = TensorT<T>;

  // Uniform draw in [-bound, bound] per coordinate when the name is new.
  Tensor get_or_create(const std::string& name, const std::vector<std::size_t>& shape,
                       double bound, Rng& rng);
  // Constant fill when the name is new (zero-init heads, biases with a set
  // starting point). No rng draw is consumed.
  Tensor get_or_create_const(const std::string& name, const std::vector<std::size_t>& shape,
                             T value);
  // Explicit per-element starting values; no rng draw is consumed.
  Tensor get_or_create_values(const std::string& name, const std::vector<std::size_t>& shape,
                              const std::vector<T>& values);

  // Registers an existing tensor under a fresh name.
  void put(const std::string& name, const Tensor& value);

  const Tensor& at(const std::string& name) const;
  bool has(const std::string& name) const { return index_.count(name) != 0; }

  const std::vector<std::pair<std::string, Tensor>>& items() const { return items_; }
  std::size_t size() const { return items_.size(); }
  std::size_t scalar_count() const;

 private:
  Tensor reuse(const std::string& name, const std::vector<std::size_t>& shape) const;

  std::vector<std::pair<std::string, Tensor>> items_;
  std::unordered_map<std::string, std::size_t> index_;
};

// 2d convolution layer; weights are [cout, cin, k, k], init U[-1/sqrt(fan_in),
// 1/sqrt(fan_in)] with fan_in = cin*k*k.
template <class T>
struct Conv2dT {
  TensorT<T> w;
  TensorT<T> b;
  std::size_t stride = 1;
  std::size_t pad = 0;

  static Conv2dT make(ParamStoreT<T>& ps, const std::string& name, std::size_t cin,
                      std::size_t cout, std::size_t k, std::size_t stride, std::size_t pad,
                      Rng& rng);
  TensorT<T> forward(Tape<T>* tape, const TensorT<T>& x) const;
};

// Affine layer; w is [in, out] so forward is matmul(x, w) + b over the last
// axis. make_const fixes the weight and bias instead of drawing them.
template <class T>
struct LinearT {
  TensorT<T> w;
  TensorT<T> b;

  static LinearT make(ParamStoreT<T>& ps, const std::string& name, std::size_t in,
                      std::size_t out, Rng& rng);
  static LinearT make_const(ParamStoreT<T>& ps, const std::string& name, std::size_t in,
                            std::size_t out, T w_value, const std::vector<T>& bias);
  TensorT<T> forward(Tape<T>* tape, const TensorT<T>& x) const;
};

using ParamStore = ParamStoreT<float>;
using Conv2d = Conv2dT<float>;
using Linear = LinearT<float>;

}  // namespace casp
