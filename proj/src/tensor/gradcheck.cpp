// Copyright (c) 2026 The casp authors
// SPDX-License-Identifier: Apache-2.0

#include "casp/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "casp/common.hpp"

namespace casp {

namespace {

std::vector<std::size_t> pick_coords(std::size_t size, long max_coords, std::uint64_t seed) {
  std::vector<std::size_t> coords;
  if (max_coords < 0 || static_cast<std::size_t>(max_coords) >= size) {
    coords.resize(size);
    for (std::size_t i = 0; i < size; ++i) coords[i] = i;
    return coords;
  }
  Rng rng(hash_mix(seed, 0x636f6f7264u));
  std::unordered_set<std::size_t> seen;
  while (coords.size() < static_cast<std::size_t>(max_coords)) {
    std::size_t c = rng.uniform_int(size);
    if (seen.insert(c).second) coords.push_back(c);
  }
  return coords;
}

template <class T>
double eval_scalar(const GradFn<T>& f, const std::vector<TensorT<T>>& inputs) {
  Tape<T> tape;
  std::vector<TensorT<T>> bound;
  bound.reserve(inputs.size());
  for (const auto& x : inputs) bound.push_back(tape.leaf(x));
  TensorT<T> out = f(tape, bound);
  if (out.size() != 1) throw UsageError("grad_check needs a scalar-valued function");
  return static_cast<double>(out.item());
}

}  // namespace

template <class T>
double grad_check(const GradFn<T>& f, const std::vector<TensorT<T>>& inputs, double eps,
                  long max_coords_per_input, std::uint64_t coord_seed) {
  Tape<T> tape;
  std::vector<TensorT<T>> bound;
  bound.reserve(inputs.size());
  for (const auto& x : inputs) bound.push_back(tape.leaf(x));
  TensorT<T> out = f(tape, bound);
  if (out.size() != 1) throw UsageError("grad_check needs a scalar-valued function");
  Gradients<T> grads = tape.backward(out);

  double worst = 0.0;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const TensorT<T>& analytic = grads.grad(bound[i]);
    const auto coords =
        pick_coords(inputs[i].size(), max_coords_per_input, hash_mix(coord_seed, i));
    for (std::size_t c : coords) {
      const double base = static_cast<double>(inputs[i].data()[c]);
      const double h = eps * std::max(1.0, std::fabs(base));

      std::vector<TensorT<T>> probe = inputs;
      probe[i] = inputs[i].clone();
      probe[i].mutable_data()[c] = static_cast<T>(base + h);
      const double fp = eval_scalar(f, probe);
      probe[i] = inputs[i].clone();
      probe[i].mutable_data()[c] = static_cast<T>(base - h);
      const double fm = eval_scalar(f, probe);

      const double numeric = (fp - fm) / (2.0 * h);
      const double a = static_cast<double>(analytic.data()[c]);
      const double rel =
          std::fabs(a - numeric) / std::max({1.0, std::fabs(a), std::fabs(numeric)});
      worst = std::max(worst, rel);
    }
  }
  return worst;
}

template double grad_check<float>(const GradFn<float>&, const std::vector<TensorT<float>>&,
                                  double, long, std::uint64_t);
template double grad_check<double>(const GradFn<double>&, const std::vector<TensorT<double>>&,
                                   double, long, std::uint64_t);

}  // namespace casp
