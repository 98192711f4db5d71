// Copyright (c) 2026 The casp authors
// SPDX-License-Identifier: Apache-2.0

#include "casp/params.hpp"

#include <cmath>

#include "casp/ops.hpp"

namespace casp {

template <class T>
TensorT<T> ParamStoreT<T>::reuse(const std::string& name,
                                 const std::vector<std::size_t>& shape) const {
  const Tensor& have = items_[index_.at(name)].second;
  if (have.shape() != shape)
    throw ShapeError("parameter " + name + " reused with a different shape");
  return have;
}

template <class T>
TensorT<T> ParamStoreT<T>::get_or_create(const std::string& name,
                                         const std::vector<std::size_t>& shape, double bound,
                                         Rng& rng) {
  if (has(name)) return reuse(name, shape);
  Tensor t(shape);
  T* p = t.mutable_data();
  for (std::size_t i = 0; i < t.size(); ++i) p[i] = static_cast<T>(rng.uniform(-bound, bound));
  index_.emplace(name, items_.size());
  items_.emplace_back(name, t);
  return t;
}

template <class T>
TensorT<T> ParamStoreT<T>::get_or_create_const(const std::string& name,
                                               const std::vector<std::size_t>& shape, T value) {
  if (has(name)) return reuse(name, shape);
  Tensor t = Tensor::full(shape, value);
  index_.emplace(name, items_.size());
  items_.emplace_back(name, t);
  return t;
}

template <class T>
TensorT<T> ParamStoreT<T>::get_or_create_values(const std::string& name,
                                                const std::vector<std::size_t>& shape,
                                                const std::vector<T>& values) {
  if (has(name)) return reuse(name, shape);
  Tensor t(shape, values);
  index_.emplace(name, items_.size());
  items_.emplace_back(name, t);
  return t;
}

template <class T>
void ParamStoreT<T>::put(const std::string& name, const Tensor& value) {
  if (has(name)) throw UsageError("parameter already registered: " + name);
  if (!value.defined()) throw UsageError("registering an undefined parameter: " + name);
  index_.emplace(name, items_.size());
  items_.emplace_back(name, value);
}

template <class T>
const TensorT<T>& ParamStoreT<T>::at(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw UsageError("unknown parameter: " + name);
  return items_[it->second].second;
}

template <class T>
std::size_t ParamStoreT<T>::scalar_count() const {
  std::size_t n = 0;
  for (const auto& [_, t] : items_) n += t.size();
  return n;
}

template <class T>
Conv2dT<T> Conv2dT<T>::make(ParamStoreT<T>& ps, const std::string& name, std::size_t cin,
                            std::size_t cout, std::size_t k, std::size_t stride, std::size_t pad,
                            Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(cin * k * k));
  Conv2dT layer;
  layer.w = ps.get_or_create(name + ".w", {cout, cin, k, k}, bound, rng);
  layer.b = ps.get_or_create(name + ".b", {cout}, bound, rng);
  layer.stride = stride;
  layer.pad = pad;
  return layer;
}

template <class T>
TensorT<T> Conv2dT<T>::forward(Tape<T>* tape, const TensorT<T>& x) const {
  TensorT<T> tb = track(tape, b);
  return conv2d(x, track(tape, w), &tb, stride, pad);
}

template <class T>
LinearT<T> LinearT<T>::make(ParamStoreT<T>& ps, const std::string& name, std::size_t in,
                            std::size_t out, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  LinearT layer;
  layer.w = ps.get_or_create(name + ".w", {in, out}, bound, rng);
  layer.b = ps.get_or_create(name + ".b", {out}, bound, rng);
  return layer;
}

template <class T>
LinearT<T> LinearT<T>::make_const(ParamStoreT<T>& ps, const std::string& name, std::size_t in,
                                  std::size_t out, T w_value, const std::vector<T>& bias) {
  if (bias.size() != out) throw ShapeError("bias size does not match layer width");
  LinearT layer;
  layer.w = ps.get_or_create_const(name + ".w", {in, out}, w_value);
  layer.b = ps.get_or_create_values(name + ".b", {out}, bias);
  return layer;
}

template <class T>
TensorT<T> LinearT<T>::forward(Tape<T>* tape, const TensorT<T>& x) const {
  return add(matmul(x, track(tape, w)), track(tape, b));
}

template class ParamStoreT<float>;
template class ParamStoreT<double>;
template struct Conv2dT<float>;
template struct Conv2dT<double>;
template struct LinearT<float>;
template struct LinearT<double>;

}  // namespace casp
