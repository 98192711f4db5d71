// Copyright (c) 2026 The casp authors
// SPDX-License-Identifier: Apache-2.0
//
// Multi-scale deformable attention over a feature pyramid, plus the two
// blocks built from it: a self-attention fusion encoder whose queries are
// every pyramid cell, and the cross-attention stack that turns mode-aware
// trajectory queries into output queries. Queries carry normalized [0,1]^2
// reference points; each head samples K offset locations per pyramid level
// with bilinear interpolation and mixes them with softmax weights normalized
// over the combined level-point axis.

#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "casp/params.hpp"
#include "casp/tensor.hpp"

namespace casp {

struct DeformAttnConfig {
  std::size_t heads = 8;
  std::size_t points = 4;  // sample points per level per head
  std::size_t levels = 4;
  std::size_t d = 64;
  std::size_t layers = 4;
};

// Reference points handed to ms_deform_attn outside [0,1]^2 are clamped and
// counted here (one count per offending query).
std::atomic<std::uint64_t>& deform_clamp_warnings();

// Non-learnable sinusoidal position code per level. maps[l] is [d, H_l, W_l];
// flat[l] is the same data as [H_l*W_l, d]; centers[l] holds each cell's
// normalized (x, y) center as [H_l*W_l, 2]. Half the channels encode the row,
// half the column, as interleaved (sin, cos) pairs over geometric
// frequencies scaled by the level extent, so the same cell index embeds
// differently on levels of different shape.
template <class T>
struct PosEmbeddingT {
  std::vector<TensorT<T>> maps;
  std::vector<TensorT<T>> flat;
  std::vector<TensorT<T>> centers;
};

template <class T>
PosEmbeddingT<T> positional_embedding(const std::vector<std::pair<std::size_t, std::size_t>>& level_shapes,
                                      std::size_t d);

template <class T>
struct MsDeformAttnT {
  std::size_t heads = 0, points = 0, levels = 0, d = 0;
  LinearT<T> value_proj, offset_head, logit_head, output_proj;

  static MsDeformAttnT make(ParamStoreT<T>& ps, const std::string& name,
                            const DeformAttnConfig& cfg, Rng& rng);

  // queries [B,Q,d], ref [B,Q,2] normalized, pyramid coarse to fine. When pos
  // is given, its per-level map is added to the features before the value
  // projection.
  TensorT<T> forward(Tape<T>* tape, const TensorT<T>& queries, const TensorT<T>& ref,
                     const std::vector<TensorT<T>>& pyramid, const PosEmbeddingT<T>* pos) const;

  // Softmaxed sample weights [B,Q,heads,levels*points]; the normalization
  // surface checked by tests.
  TensorT<T> weights(Tape<T>* tape, const TensorT<T>& queries) const;
};

// One attention layer with its post block: residual + layernorm around the
// attention, then a two-layer feed-forward with residual + layernorm.
template <class T>
struct AttnLayerT {
  MsDeformAttnT<T> attn;
  LinearT<T> ff1, ff2;
  TensorT<T> ln1_g, ln1_b, ln2_g, ln2_b;

  static AttnLayerT make(ParamStoreT<T>& ps, const std::string& name, const DeformAttnConfig& cfg,
                         Rng& rng);
  // x is the residual stream [B,Q,d]; q_extra (nullable) is added to x to
  // form the attention query only.
  TensorT<T> forward(Tape<T>* tape, const TensorT<T>& x, const TensorT<T>* q_extra,
                     const TensorT<T>& ref, const std::vector<TensorT<T>>& pyramid,
                     const PosEmbeddingT<T>* pos) const;
};

// Every pyramid cell queries the pyramid; query = feature + position code,
// reference point = the cell's own normalized center. N layers, shapes
// preserved.
template <class T>
struct SelfAttentionFuseT {
  std::size_t layers_n = 0;
  std::vector<AttnLayerT<T>> layers;

  static SelfAttentionFuseT make(ParamStoreT<T>& ps, const std::string& name,
                                 const DeformAttnConfig& cfg, Rng& rng);
  std::vector<TensorT<T>> forward(Tape<T>* tape, const std::vector<TensorT<T>>& pyramid,
                                  const PosEmbeddingT<T>& pos) const;
};

// N layers of cross attention for M mode queries. mode_q (nullable for the
// no-mode-query ablation) is added to the residual stream before every
// layer's attention; the position code is added to the sampled features.
template <class T>
struct CrossAttentionStackT {
  std::size_t layers_n = 0;
  std::vector<AttnLayerT<T>> layers;

  static CrossAttentionStackT make(ParamStoreT<T>& ps, const std::string& name,
                                   const DeformAttnConfig& cfg, Rng& rng);
  TensorT<T> forward(Tape<T>* tape, const TensorT<T>& temporal_q, const TensorT<T>* mode_q,
                     const TensorT<T>& ref, const std::vector<TensorT<T>>& pyramid,
                     const PosEmbeddingT<T>& pos) const;
};

using PosEmbedding = PosEmbeddingT<float>;
using MsDeformAttn = MsDeformAttnT<float>;
using SelfAttentionFuse = SelfAttentionFuseT<float>;
using CrossAttentionStack = CrossAttentionStackT<float>;

}  // namespace casp
