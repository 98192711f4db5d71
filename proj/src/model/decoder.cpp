// Copyright (c) 2026 The casp authors
// SPDX-License-Identifier: Apache-2.0

#include "casp/decoder.hpp"

#include <cmath>
#include <string>

#include "casp/ops.hpp"

namespace casp {

template <class T>
DecoderT<T>::DecoderT(const DecoderConfig& cfg, const DeformAttnConfig& attn,
                      const GridConfig& grid, const ModelFlags& flags, ParamStoreT<T>& ps,
                      Rng& rng)
    : cfg_(cfg), grid_(grid), flags_(flags) {
  if (cfg.modes == 0) throw ConfigError("decoder needs at least one mode");
  if (cfg.r_steps == 0 || cfg.t_out == 0 || cfg.t_out % cfg.r_steps != 0)
    throw ConfigError("recurrent steps must tile the output horizon: " +
                      std::to_string(cfg.r_steps) + " steps over " + std::to_string(cfg.t_out) +
                      " waypoints");
  if (cfg.d != attn.d) throw ConfigError("decoder width does not match the attention width");
  if (grid.ego_row < 0 || grid.ego_row > grid.h || grid.ego_col < 0 || grid.ego_col > grid.w)
    throw UsageError("ego anchor lies outside the grid");
  if (!flags.ego_ref && !flags.mode_queries)
    throw ConfigError("learned reference points need mode queries");
  t_chunk_ = cfg.t_out / cfg.r_steps;

  const double bound = 1.0 / std::sqrt(static_cast<double>(cfg.d));
  temporal_init_ = ps.get_or_create("decoder.temporal_init", {cfg.d}, bound, rng);
  if (flags.mode_queries)
    mode_q_ = ps.get_or_create("decoder.mode_q", {cfg.modes, cfg.d}, bound, rng);
  if (!flags.ego_ref) ref_head_ = LinearT<T>::make(ps, "decoder.ref_init", cfg.d, 2, rng);
  stack_ = CrossAttentionStackT<T>::make(ps, "decoder.cross", attn, rng);
  head1_ = LinearT<T>::make(ps, "decoder.head1", cfg.d, cfg.d, rng);
  head2_ = LinearT<T>::make(ps, "decoder.head2", cfg.d, t_chunk_ * 4, rng);
  pi_ = LinearT<T>::make(ps, "decoder.pi", cfg.d, 1, rng);
}

template <class T>
QueryStateT<T> DecoderT<T>::init_state(Tape<T>* tape, std::size_t batch) const {
  if (batch == 0) throw UsageError("decoder batch must be non-empty");
  QueryStateT<T> state;
  Tensor zeros_q({batch, cfg_.modes, cfg_.d});
  state.temporal_q = add(zeros_q, track(tape, temporal_init_));
  Tensor zeros_ref({batch, cfg_.modes, 2});
  if (flags_.ego_ref) {
    Tensor anchor({2}, {static_cast<T>(static_cast<double>(grid_.ego_col) / grid_.w),
                        static_cast<T>(static_cast<double>(grid_.ego_row) / grid_.h)});
    state.ref = add(zeros_ref, anchor);
  } else {
    Tensor learned = clamp(ref_head_.forward(tape, track(tape, mode_q_)), T(0), T(1));
    state.ref = add(zeros_ref, learned);
  }
  return state;
}

template <class T>
typename DecoderT<T>::Step DecoderT<T>::decode_step(Tape<T>* tape, const QueryStateT<T>& state,
                                                    const std::vector<Tensor>& pyramid,
                                                    const PosEmbeddingT<T>& pos) const {
  const std::size_t batch = state.temporal_q.dim(0);
  TensorT<T> mode_bound;
  const TensorT<T>* mode_arg = nullptr;
  if (flags_.mode_queries) {
    mode_bound = track(tape, mode_q_);
    mode_arg = &mode_bound;
  }
  Tensor out_q = stack_.forward(tape, state.temporal_q, mode_arg, state.ref, pyramid, pos);

  Tensor raw = head2_.forward(tape, relu(head1_.forward(tape, out_q)));
  raw = reshape(raw, {batch, cfg_.modes, t_chunk_, 4});
  Tensor d_off = slice(raw, 3, 0, 2);
  Tensor raw_b = slice(raw, 3, 2, 2);

  Tensor wh({2}, {static_cast<T>(grid_.w), static_cast<T>(grid_.h)});
  Tensor cursor = reshape(mul(state.ref, wh), {batch, cfg_.modes, 1, 2});
  std::vector<Tensor> waypoints;
  for (std::size_t t = 0; t < t_chunk_; ++t) {
    cursor = add(cursor, slice(d_off, 2, t, 1));
    waypoints.push_back(cursor);
  }

  Step step;
  step.mu = concat<T>(waypoints, 2);
  step.b = add_scalar(softplus(raw_b), static_cast<T>(1e-3));
  step.next.temporal_q = out_q;
  Tensor inv_wh({2}, {static_cast<T>(1.0 / grid_.w), static_cast<T>(1.0 / grid_.h)});
  step.next.ref = clamp(mul(reshape(waypoints.back(), {batch, cfg_.modes, 2}), inv_wh),
                        T(0), T(1));
  return step;
}

template <class T>
TrajectoryPredictionT<T> DecoderT<T>::recurrent_decode(Tape<T>* tape, QueryStateT<T> state,
                                                       const std::vector<Tensor>& pyramid,
                                                       const PosEmbeddingT<T>& pos) const {
  std::vector<Tensor> mu_chunks, b_chunks;
  for (std::size_t r = 0; r < cfg_.r_steps; ++r) {
    Step step = decode_step(tape, state, pyramid, pos);
    mu_chunks.push_back(step.mu);
    b_chunks.push_back(step.b);
    state = step.next;
  }
  TrajectoryPredictionT<T> out;
  out.mu = concat<T>(mu_chunks, 2);
  out.b = concat<T>(b_chunks, 2);
  Tensor logits = pi_.forward(tape, state.temporal_q);
  out.pi = softmax(reshape(logits, {state.temporal_q.dim(0), cfg_.modes}), 1);
  return out;
}

template class DecoderT<float>;
template class DecoderT<double>;

}  // namespace casp
