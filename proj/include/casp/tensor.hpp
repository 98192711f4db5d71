// Copyright (c) 2026 The casp authors
// SPDX-License-Identifier: Apache-2.0
//
// Dense n-D tensors with reverse-mode autodiff. A TensorT is a shape plus a
// shared contiguous buffer; copies are shallow. Ops record backward closures
// on a single-owner Tape; backward replays them in reverse execution order
// and accumulates leaf gradients by summation.

#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <unordered_map>
#include <vector>

#include "casp/common.hpp"

namespace casp {

template <class T> class Tape;
template <class T> class Gradients;

std::size_t numel(const std::vector<std::size_t>& shape);
std::string shape_str(const std::vector<std::size_t>& shape);

template <class T>
class TensorT {
 public:
  TensorT() = default;
  explicit TensorT(std::vector<std::size_t> shape);
  TensorT(std::vector<std::size_t> shape, std::vector<T> values);

  static TensorT scalar(T v) { return TensorT({}, {v}); }
  static TensorT full(std::vector<std::size_t> shape, T v);

  bool defined() const { return data_ != nullptr; }
  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return size_; }
  std::size_t dim(std::size_t i) const;

  const T* data() const;
  // Writable view of the buffer; refused once the tensor is on a tape, since
  // recorded closures may have saved it.
  T* mutable_data();
  T item() const;
  T at(std::initializer_list<std::size_t> idx) const;
  void set(std::initializer_list<std::size_t> idx, T v);

  bool tracked() const { return tape_ != nullptr; }
  Tape<T>* tape() const { return tape_; }
  int node() const { return node_; }

  // Same buffer, off the tape.
  TensorT detached() const;
  // Fresh buffer, off the tape.
  TensorT clone() const;

 private:
  std::size_t offset_of(std::initializer_list<std::size_t> idx) const;

  std::vector<std::size_t> shape_;
  std::size_t size_ = 0;
  std::shared_ptr<std::vector<T>> data_;
  Tape<T>* tape_ = nullptr;
  int node_ = -1;

  friend class Tape<T>;
};

template <class T>
class Gradients {
 public:
  const TensorT<T>& grad(const TensorT<T>& leaf) const;
  bool has(const TensorT<T>& leaf) const;

 private:
  friend class Tape<T>;
  std::unordered_map<int, TensorT<T>> by_node_;
};

template <class T>
class Tape {
 public:
  using BackwardFn = std::function<void(const TensorT<T>& upstream, Tape<T>& tape)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Binds a value as a differentiated leaf. Binding the same buffer twice
  // returns the same node, so a parameter used in several places accumulates
  // into one gradient.
  TensorT<T> leaf(const TensorT<T>& value);

  // Registers an op output. fn propagates the upstream gradient to the op's
  // inputs via accumulate(); it must only capture detached tensors.
  TensorT<T> track(TensorT<T> value, BackwardFn fn);

  void accumulate(int node, const TensorT<T>& g);

  // Seeds d(loss)/d(loss)=1 and replays the record backwards. Returns a map
  // holding a gradient for every leaf (zeros if the loss never touched it).
  Gradients<T> backward(const TensorT<T>& loss);

  std::size_t node_count() const { return nodes_.size(); }

 private:
  struct Node {
    BackwardFn fn;
    std::vector<std::size_t> shape;
    bool is_leaf = false;
  };

  std::vector<Node> nodes_;
  std::vector<TensorT<T>> grads_;
  std::unordered_map<const void*, int> leaf_index_;
};

using Tensor = TensorT<float>;
using Tensor64 = TensorT<double>;

}  // namespace casp
