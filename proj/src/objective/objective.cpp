// Copyright (c) 2026 The casp authors
// SPDX-License-Identifier: Apache-2.0

#include "casp/objective.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "casp/ops.hpp"

namespace casp {

std::atomic<std::uint64_t>& cls_clamp_warnings() {
  static std::atomic<std::uint64_t> count{0};
  return count;
}

namespace {

template <class T>
void check_pred_shapes(const TensorT<T>& mu, const TensorT<T>& gt) {
  if (mu.rank() != 4 || mu.dim(3) != 2)
    throw ShapeError("trajectories must be [B, M, T, 2], got " + shape_str(mu.shape()));
  if (gt.rank() != 3 || gt.dim(0) != mu.dim(0) || gt.dim(1) != mu.dim(2) || gt.dim(2) != 2)
    throw ShapeError("ground truth must be [B, T, 2] matching the prediction, got " +
                     shape_str(gt.shape()));
}

// Top-k mode indices by descending probability, ties by lower index.
template <class T>
std::vector<std::size_t> top_k_modes(const T* pi, std::size_t modes, std::size_t k) {
  std::vector<std::size_t> order(modes);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return pi[a] > pi[b]; });
  order.resize(k);
  return order;
}

enum class Reduce { mean_t, final_t, max_t };

// min over top-k modes of a per-mode distance reduction, averaged over the
// batch; MR instead averages the all-modes-miss indicator.
template <class T>
double ranked_metric(const TensorT<T>& mu, const TensorT<T>& pi, const TensorT<T>& gt,
                     std::size_t k, double resolution, Reduce reduce, double miss_threshold) {
  check_pred_shapes(mu, gt);
  const std::size_t batch = mu.dim(0), modes = mu.dim(1), steps = mu.dim(2);
  if (pi.rank() != 2 || pi.dim(0) != batch || pi.dim(1) != modes)
    throw ShapeError("mode probabilities must be [B, M], got " + shape_str(pi.shape()));
  if (k == 0 || k > modes)
    throw UsageError("k = " + std::to_string(k) + " outside [1, " + std::to_string(modes) + "]");
  if (batch == 0) throw UsageError("metric over an empty batch");

  const T* mp = mu.data();
  const T* gp = gt.data();
  double acc = 0;
  for (std::size_t b = 0; b < batch; ++b) {
    auto picks = top_k_modes(pi.data() + b * modes, modes, k);
    double best = 0;
    bool first = true;
    for (std::size_t m : picks) {
      double mode_val = 0;
      for (std::size_t t = 0; t < steps; ++t) {
        const T* p = mp + ((b * modes + m) * steps + t) * 2;
        const T* q = gp + (b * steps + t) * 2;
        const double dx = (double)p[0] - q[0], dy = (double)p[1] - q[1];
        const double dist = std::sqrt(dx * dx + dy * dy) * resolution;
        switch (reduce) {
          case Reduce::mean_t: mode_val += dist / steps; break;
          case Reduce::final_t: mode_val = dist; break;
          case Reduce::max_t: mode_val = std::max(mode_val, dist); break;
        }
      }
      if (first || mode_val < best) best = mode_val;
      first = false;
    }
    if (reduce == Reduce::max_t)
      acc += best > miss_threshold ? 1.0 : 0.0;
    else
      acc += best;
  }
  return acc / batch;
}

}  // namespace

template <class T>
std::vector<std::size_t> best_mode(const TensorT<T>& mu, const TensorT<T>& gt) {
  check_pred_shapes(mu, gt);
  const std::size_t batch = mu.dim(0), modes = mu.dim(1), steps = mu.dim(2);
  const T* mp = mu.data();
  const T* gp = gt.data();
  std::vector<std::size_t> out(batch);
  for (std::size_t b = 0; b < batch; ++b) {
    double best = 0;
    std::size_t best_k = 0;
    for (std::size_t m = 0; m < modes; ++m) {
      double score = 0;
      for (std::size_t t = 0; t < steps; ++t) {
        const T* p = mp + ((b * modes + m) * steps + t) * 2;
        const T* q = gp + (b * steps + t) * 2;
        const double dx = (double)p[0] - q[0], dy = (double)p[1] - q[1];
        score += std::sqrt(dx * dx + dy * dy);
      }
      if (m == 0 || score < best) {
        best = score;
        best_k = m;
      }
    }
    out[b] = best_k;
  }
  return out;
}

template <class T>
TensorT<T> regression_loss(const TensorT<T>& mu_best, const TensorT<T>& b_best,
                           const TensorT<T>& gt) {
  if (mu_best.rank() != 3 || mu_best.dim(2) != 2)
    throw ShapeError("selected mode must be [B, T, 2], got " + shape_str(mu_best.shape()));
  if (b_best.shape() != mu_best.shape() || gt.shape() != mu_best.shape())
    throw ShapeError("regression loss needs matching [B, T, 2] tensors");
  const T* bp = b_best.data();
  for (std::size_t i = 0; i < b_best.size(); ++i)
    if (!(bp[i] > T(0))) throw DomainError("Laplace scale must be positive");
  TensorT<T> nll = add(log(scale(b_best, T(2))), div(abs(sub(gt, mu_best)), b_best));
  return mean(sum_axes(nll, {2}));
}

template <class T>
TensorT<T> classification_loss(const TensorT<T>& pi, const TensorT<T>& mu, const TensorT<T>& b,
                               const TensorT<T>& gt, bool normalized) {
  check_pred_shapes(mu, gt);
  if (b.shape() != mu.shape()) throw ShapeError("scales must match the trajectory shape");
  const std::size_t batch = mu.dim(0), modes = mu.dim(1), steps = mu.dim(2);
  if (pi.rank() != 2 || pi.dim(0) != batch || pi.dim(1) != modes)
    throw ShapeError("mode probabilities must be [B, M], got " + shape_str(pi.shape()));

  // Final-step likelihood targets, computed from raw values so mu and b stay
  // out of the gradient.
  TensorT<T> w({batch, modes});
  T* wp = w.mutable_data();
  const T* mp = mu.data();
  const T* bp = b.data();
  const T* gp = gt.data();
  for (std::size_t bi = 0; bi < batch; ++bi) {
    double sum = 0;
    for (std::size_t m = 0; m < modes; ++m) {
      const std::size_t at = ((bi * modes + m) * steps + (steps - 1)) * 2;
      const double bx = bp[at], by = bp[at + 1];
      if (!(bx > 0) || !(by > 0)) throw DomainError("Laplace scale must be positive");
      const double dx = std::abs((double)gp[(bi * steps + steps - 1) * 2] - mp[at]);
      const double dy = std::abs((double)gp[(bi * steps + steps - 1) * 2 + 1] - mp[at + 1]);
      const double lk = std::exp(-dx / bx - dy / by) / (4.0 * bx * by);
      wp[bi * modes + m] = static_cast<T>(lk);
      sum += lk;
    }
    if (normalized && sum > 0)
      for (std::size_t m = 0; m < modes; ++m)
        wp[bi * modes + m] = static_cast<T>(wp[bi * modes + m] / sum);
  }

  const T* pp = pi.data();
  std::uint64_t clamped = 0;
  for (std::size_t i = 0; i < batch * modes; ++i)
    if (pp[i] < T(1e-12) && wp[i] > T(0)) ++clamped;
  if (clamped > 0) cls_clamp_warnings() += clamped;

  TensorT<T> log_pi = log(clamp(pi, T(1e-12), T(1)));
  TensorT<T> per = scale(sum_axes(mul(log_pi, w), {1}), T(-1.0 / modes));
  return mean(per);
}

template <class T>
TensorT<T> total_loss(const TrajectoryPredictionT<T>& pred, const TensorT<T>& gt,
                      bool normalized) {
  auto idx = best_mode(pred.mu, gt);
  TensorT<T> reg =
      regression_loss(take_per_batch(pred.mu, idx), take_per_batch(pred.b, idx), gt);
  TensorT<T> cls = classification_loss(pred.pi, pred.mu, pred.b, gt, normalized);
  return add(reg, cls);
}

template <class T>
double min_ade_k(const TensorT<T>& mu, const TensorT<T>& pi, const TensorT<T>& gt, std::size_t k,
                 double resolution) {
  return ranked_metric(mu, pi, gt, k, resolution, Reduce::mean_t, 0);
}

template <class T>
double min_fde_k(const TensorT<T>& mu, const TensorT<T>& pi, const TensorT<T>& gt, std::size_t k,
                 double resolution) {
  return ranked_metric(mu, pi, gt, k, resolution, Reduce::final_t, 0);
}

template <class T>
double miss_rate_k(const TensorT<T>& mu, const TensorT<T>& pi, const TensorT<T>& gt,
                   std::size_t k, double resolution, double threshold) {
  return ranked_metric(mu, pi, gt, k, resolution, Reduce::max_t, threshold);
}

template <class T>
double offroad_rate(const TensorT<T>& mu, const TensorT<T>& drivable) {
  if (mu.rank() != 4 || mu.dim(3) != 2)
    throw ShapeError("trajectories must be [B, M, T, 2], got " + shape_str(mu.shape()));
  if (drivable.rank() != 3 || drivable.dim(0) != mu.dim(0))
    throw ShapeError("drivable mask must be [B, H, W], got " + shape_str(drivable.shape()));
  const std::size_t batch = mu.dim(0), modes = mu.dim(1), steps = mu.dim(2);
  const std::size_t h = drivable.dim(1), w = drivable.dim(2);
  if (batch == 0 || modes == 0) throw UsageError("off-road rate over an empty batch");
  const T* mp = mu.data();
  const T* dp = drivable.data();
  std::size_t off = 0;
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t m = 0; m < modes; ++m) {
      bool outside = false;
      for (std::size_t t = 0; t < steps && !outside; ++t) {
        const T* p = mp + ((b * modes + m) * steps + t) * 2;
        const long col = std::clamp<long>((long)std::floor((double)p[0]), 0, (long)w - 1);
        const long row = std::clamp<long>((long)std::floor((double)p[1]), 0, (long)h - 1);
        outside = dp[(b * h + (std::size_t)row) * w + (std::size_t)col] < T(0.5);
      }
      off += outside ? 1 : 0;
    }
  return static_cast<double>(off) / static_cast<double>(batch * modes);
}

std::string format_metric_record(const MetricRecord& r) {
  std::ostringstream os;
  os << "metric=" << r.metric << " k=" << r.k << " value=" << r.value
     << " n_samples=" << r.n_samples << " config_hash=" << r.config_hash;
  return os.str();
}

#define CASP_OBJECTIVE_INSTANTIATE(T)                                                            \
  template std::vector<std::size_t> best_mode<T>(const TensorT<T>&, const TensorT<T>&);         \
  template TensorT<T> regression_loss<T>(const TensorT<T>&, const TensorT<T>&,                  \
                                         const TensorT<T>&);                                    \
  template TensorT<T> classification_loss<T>(const TensorT<T>&, const TensorT<T>&,              \
                                             const TensorT<T>&, const TensorT<T>&, bool);       \
  template TensorT<T> total_loss<T>(const TrajectoryPredictionT<T>&, const TensorT<T>&, bool);  \
  template double min_ade_k<T>(const TensorT<T>&, const TensorT<T>&, const TensorT<T>&,         \
                               std::size_t, double);                                            \
  template double min_fde_k<T>(const TensorT<T>&, const TensorT<T>&, const TensorT<T>&,         \
                               std::size_t, double);                                            \
  template double miss_rate_k<T>(const TensorT<T>&, const TensorT<T>&, const TensorT<T>&,       \
                                 std::size_t, double, double);                                  \
  template double offroad_rate<T>(const TensorT<T>&, const TensorT<T>&);

CASP_OBJECTIVE_INSTANTIATE(float)
CASP_OBJECTIVE_INSTANTIATE(double)
#undef CASP_OBJECTIVE_INSTANTIATE

}  // namespace casp
