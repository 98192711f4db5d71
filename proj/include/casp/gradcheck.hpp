// Copyright (c) 2026 The casp authors
// SPDX-License-Identifier: Apache-2.0
//
// Central-difference gradient checking. f builds a scalar loss from leaves it
// receives already bound to the given tape; grad_check compares the taped
// gradient of every input coordinate against (f(x+h)-f(x-h))/2h with
// h = eps*max(1,|x|), and returns the worst
// |analytic - numeric| / max(1, |analytic|, |numeric|).
//
// Run it on TensorT<double>; 32-bit arithmetic drowns the FD signal.

#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "casp/tensor.hpp"

namespace casp {

template <class T>
using GradFn = std::function<TensorT<T>(Tape<T>&, const std::vector<TensorT<T>>&)>;

// max_coords_per_input < 0 checks every coordinate; otherwise that many are
// drawn per input from coord_seed (for big models, spot checks).
template <class T>
double grad_check(const GradFn<T>& f, const std::vector<TensorT<T>>& inputs, double eps = 1e-4,
                  long max_coords_per_input = -1, std::uint64_t coord_seed = 0);

}  // namespace casp
