// Copyright (c) 2026 The casp authors
// SPDX-License-Identifier: Apache-2.0
//
// Training objective and evaluation metrics. The regression term is a
// per-coordinate Laplace negative log-likelihood on the single best mode
// (hard assignment, gradient-blocked); the classification term is a soft
// cross-entropy whose targets are the modes' final-step Laplace likelihoods
// of the ground truth, treated as constants. Metrics follow the usual
// forecasting definitions over the top-k modes ranked by probability, in
// meters (grid cells times resolution).

#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "casp/decoder.hpp"
#include "casp/tensor.hpp"

namespace casp {

// log(pi) clamps at 1e-12 when a zero-probability mode carries target weight;
// each clamped entry counts here.
std::atomic<std::uint64_t>& cls_clamp_warnings();

// Index of the mode with the lowest mean-over-time l2 to the ground truth,
// per batch row; ties take the lowest index. mu [B,M,T,2], gt [B,T,2].
template <class T>
std::vector<std::size_t> best_mode(const TensorT<T>& mu, const TensorT<T>& gt);

// Mean over batch and time of sum_xy(log(2b) + |P - mu| / b) for the already
// selected mode. mu_best/b_best/gt are [B,T,2]; b must be positive.
template <class T>
TensorT<T> regression_loss(const TensorT<T>& mu_best, const TensorT<T>& b_best,
                           const TensorT<T>& gt);

// -(1/M) sum_k log(pi_k) * w_k averaged over the batch, where w_k is the
// final-step Laplace likelihood of the ground truth under mode k (computed
// from raw values; no gradient reaches mu or b). normalized rescales w to sum
// 1 per sample (all-zero weights stay zero).
template <class T>
TensorT<T> classification_loss(const TensorT<T>& pi, const TensorT<T>& mu, const TensorT<T>& b,
                               const TensorT<T>& gt, bool normalized = true);

// regression_loss on the best mode plus classification_loss.
template <class T>
TensorT<T> total_loss(const TrajectoryPredictionT<T>& pred, const TensorT<T>& gt,
                      bool normalized = true);

// Metrics. mu [B,M,T,2] and gt [B,T,2] in grid cells; pi [B,M] ranks modes;
// resolution converts cells to meters. k must be in [1, M].
template <class T>
double min_ade_k(const TensorT<T>& mu, const TensorT<T>& pi, const TensorT<T>& gt, std::size_t k,
                 double resolution);
template <class T>
double min_fde_k(const TensorT<T>& mu, const TensorT<T>& pi, const TensorT<T>& gt, std::size_t k,
                 double resolution);
// A sample misses when every top-k mode strays more than threshold meters
// from the ground truth at some time step.
template <class T>
double miss_rate_k(const TensorT<T>& mu, const TensorT<T>& pi, const TensorT<T>& gt,
                   std::size_t k, double resolution, double threshold = 2.0);
// Fraction of the B*M trajectories with any waypoint whose nearest cell falls
// outside the drivable mask [B,H,W] (out-of-grid waypoints clamp to the edge
// cell).
template <class T>
double offroad_rate(const TensorT<T>& mu, const TensorT<T>& drivable);

struct MetricRecord {
  std::string metric;
  std::size_t k = 0;
  double value = 0.0;
  std::size_t n_samples = 0;
  std::string config_hash;
};

std::string format_metric_record(const MetricRecord& r);

}  // namespace casp
