// Copyright (c) 2026 The casp authors
// SPDX-License-Identifier: Apache-2.0
//
// Recurrent trajectory decoder. Mode-aware queries attend into the fused
// pyramid; a two-layer perceptron head turns each mode's output query into a
// chunk of waypoint offsets accumulated from the current reference point.
// Both feedback loops close per chunk: temporal queries become the output
// queries, the reference point moves to the chunk's final position. Mode
// probabilities come from a linear head on the final queries.

#pragma once

#include <cstddef>
#include <vector>

#include "casp/attention.hpp"
#include "casp/params.hpp"
#include "casp/scene.hpp"
#include "casp/tensor.hpp"

namespace casp {

// One toggle per ablation axis; everything true is the baseline model.
struct ModelFlags {
  bool mode_queries = true;
  bool self_attention = true;
  bool recurrence = true;
  bool ego_ref = true;
};

struct DecoderConfig {
  std::size_t modes = 5;
  std::size_t t_out = 12;
  std::size_t r_steps = 3;
  std::size_t d = 64;
};

template <class T>
struct QueryStateT {
  TensorT<T> temporal_q;  // [B, M, d]
  TensorT<T> ref;         // [B, M, 2] normalized (x, y)
};

template <class T>
struct TrajectoryPredictionT {
  TensorT<T> mu;  // [B, M, T_o, 2] grid-frame positions (x = col, y = row)
  TensorT<T> b;   // [B, M, T_o, 2] positive scales, grid cells
  TensorT<T> pi;  // [B, M], sums to 1 over modes
};

template <class T>
class DecoderT {
 public:
  using Tensor = TensorT<T>;

  DecoderT(const DecoderConfig& cfg, const DeformAttnConfig& attn, const GridConfig& grid,
           const ModelFlags& flags, ParamStoreT<T>& ps, Rng& rng);

  // Reference points start at the ego anchor (or, for the learned-reference
  // variant, at a linear map of the mode embeddings, clamped to [0,1]^2).
  QueryStateT<T> init_state(Tape<T>* tape, std::size_t batch) const;

  struct Step {
    Tensor mu;  // [B, M, t_chunk, 2] grid cells
    Tensor b;   // [B, M, t_chunk, 2]
    QueryStateT<T> next;
  };
  Step decode_step(Tape<T>* tape, const QueryStateT<T>& state,
                   const std::vector<Tensor>& pyramid, const PosEmbeddingT<T>& pos) const;

  TrajectoryPredictionT<T> recurrent_decode(Tape<T>* tape, QueryStateT<T> state,
                                            const std::vector<Tensor>& pyramid,
                                            const PosEmbeddingT<T>& pos) const;

  std::size_t t_chunk() const { return t_chunk_; }
  std::size_t r_steps() const { return cfg_.r_steps; }

 private:
  DecoderConfig cfg_;
  GridConfig grid_;
  ModelFlags flags_;
  std::size_t t_chunk_ = 0;
  CrossAttentionStackT<T> stack_;
  TensorT<T> temporal_init_;  // [d]
  TensorT<T> mode_q_;         // [M, d] unless the ablation removes it
  LinearT<T> ref_head_;       // learned initial references (no-ego variant)
  LinearT<T> head1_, head2_, pi_;
};

using Decoder = DecoderT<float>;
using QueryState = QueryStateT<float>;
using TrajectoryPrediction = TrajectoryPredictionT<float>;

}  // namespace casp
