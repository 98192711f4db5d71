// Copyright (c) 2026 The casp authors
// SPDX-License-Identifier: Apache-2.0

#include "casp/tensor.hpp"

#include <string>

#include "tensor_util.hpp"

namespace casp {

std::size_t numel(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

std::string shape_str(const std::vector<std::size_t>& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

template <class T>
TensorT<T>::TensorT(std::vector<std::size_t> shape)
    : shape_(std::move(shape)),
      size_(numel(shape_)),
      data_(std::make_shared<std::vector<T>>(size_, T(0))) {}

template <class T>
TensorT<T>::TensorT(std::vector<std::size_t> shape, std::vector<T> values)
    : shape_(std::move(shape)), size_(numel(shape_)) {
  if (values.size() != size_)
    throw ShapeError("value count " + std::to_string(values.size()) + " does not fill " +
                     shape_str(shape_));
  data_ = std::make_shared<std::vector<T>>(std::move(values));
}

template <class T>
TensorT<T> TensorT<T>::full(std::vector<std::size_t> shape, T v) {
  TensorT out(std::move(shape));
  kernels::fill(out.data_->data(), v, out.size_);
  return out;
}

template <class T>
std::size_t TensorT<T>::dim(std::size_t i) const {
  if (i >= shape_.size()) throw ShapeError("dim index out of range for " + shape_str(shape_));
  return shape_[i];
}

template <class T>
const T* TensorT<T>::data() const {
  if (!defined()) throw UsageError("reading an undefined tensor");
  return data_->data();
}

template <class T>
T* TensorT<T>::mutable_data() {
  if (!defined()) throw UsageError("writing an undefined tensor");
  if (tracked()) throw UsageError("mutating a tensor that is on a tape");
  return data_->data();
}

template <class T>
T TensorT<T>::item() const {
  if (size_ != 1) throw UsageError("item() on tensor of shape " + shape_str(shape_));
  return (*data_)[0];
}

template <class T>
std::size_t TensorT<T>::offset_of(std::initializer_list<std::size_t> idx) const {
  if (idx.size() != shape_.size())
    throw ShapeError("index rank mismatch for " + shape_str(shape_));
  std::size_t off = 0, d = 0;
  for (std::size_t i : idx) {
    if (i >= shape_[d]) throw ShapeError("index out of range for " + shape_str(shape_));
    off = off * shape_[d] + i;
    ++d;
  }
  return off;
}

template <class T>
T TensorT<T>::at(std::initializer_list<std::size_t> idx) const {
  return (*data_)[offset_of(idx)];
}

template <class T>
void TensorT<T>::set(std::initializer_list<std::size_t> idx, T v) {
  std::size_t off = offset_of(idx);
  if (tracked()) throw UsageError("mutating a tensor that is on a tape");
  (*data_)[off] = v;
}

template <class T>
TensorT<T> TensorT<T>::detached() const {
  TensorT out;
  out.shape_ = shape_;
  out.size_ = size_;
  out.data_ = data_;
  return out;
}

template <class T>
TensorT<T> TensorT<T>::clone() const {
  TensorT out;
  out.shape_ = shape_;
  out.size_ = size_;
  out.data_ = std::make_shared<std::vector<T>>(*data_);
  return out;
}

template <class T>
TensorT<T> Tape<T>::leaf(const TensorT<T>& value) {
  if (!value.defined()) throw UsageError("binding an undefined tensor as a leaf");
  if (value.tracked()) {
    if (value.tape() != this) throw UsageError("tensor already bound to another tape");
    return value;
  }
  const void* key = value.data_.get();
  auto it = leaf_index_.find(key);
  if (it != leaf_index_.end()) {
    if (nodes_[it->second].shape != value.shape())
      throw UsageError("buffer already bound as a leaf with a different shape");
    TensorT<T> bound = value;
    bound.tape_ = this;
    bound.node_ = it->second;
    return bound;
  }
  int id = static_cast<int>(nodes_.size());
  nodes_.push_back(Node{nullptr, value.shape(), true});
  leaf_index_.emplace(key, id);
  TensorT<T> bound = value;
  bound.tape_ = this;
  bound.node_ = id;
  return bound;
}

template <class T>
TensorT<T> Tape<T>::track(TensorT<T> value, BackwardFn fn) {
  if (value.tracked()) throw UsageError("tracking a tensor that is already on a tape");
  int id = static_cast<int>(nodes_.size());
  nodes_.push_back(Node{std::move(fn), value.shape(), false});
  value.tape_ = this;
  value.node_ = id;
  return value;
}

template <class T>
void Tape<T>::accumulate(int node, const TensorT<T>& g) {
  if (node < 0 || node >= static_cast<int>(nodes_.size()))
    throw UsageError("accumulate on unknown node");
  if (g.shape() != nodes_[node].shape)
    throw ShapeError("gradient shape " + shape_str(g.shape()) + " does not match node shape " +
                     shape_str(nodes_[node].shape));
  auto& slot = grads_[node];
  if (!slot.defined())
    slot = g.detached();
  else
    slot = detail::raw_add_same_shape(slot, g);
}

template <class T>
Gradients<T> Tape<T>::backward(const TensorT<T>& loss) {
  if (!loss.tracked() || loss.tape() != this)
    throw UsageError("backward on a tensor that is not on this tape");
  if (loss.size() != 1) throw UsageError("backward requires a scalar loss");
  grads_.assign(nodes_.size(), TensorT<T>());
  grads_[loss.node()] = TensorT<T>::full(loss.shape(), T(1));
  for (int i = loss.node(); i >= 0; --i) {
    if (!grads_[i].defined()) continue;
    if (nodes_[i].fn) nodes_[i].fn(grads_[i], *this);
  }
  Gradients<T> out;
  for (const auto& [buf, id] : leaf_index_) {
    (void)buf;
    if (grads_[id].defined())
      out.by_node_.emplace(id, grads_[id]);
    else
      out.by_node_.emplace(id, TensorT<T>(nodes_[id].shape));
  }
  grads_.clear();
  return out;
}

template <class T>
const TensorT<T>& Gradients<T>::grad(const TensorT<T>& leaf) const {
  if (!leaf.tracked()) throw UsageError("grad() on an untracked tensor");
  auto it = by_node_.find(leaf.node());
  if (it == by_node_.end()) throw UsageError("grad() on a non-leaf tensor");
  return it->second;
}

template <class T>
bool Gradients<T>::has(const TensorT<T>& leaf) const {
  return leaf.tracked() && by_node_.count(leaf.node()) > 0;
}

template class TensorT<float>;
template class TensorT<double>;
template class Tape<float>;
template class Tape<double>;
template class Gradients<float>;
template class Gradients<double>;

}  // namespace casp
