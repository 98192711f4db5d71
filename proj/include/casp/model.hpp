// Copyright (c) 2026 The casp authors
// SPDX-License-Identifier: Apache-2.0
//
// The composed predictor: backbone pyramid -> (optional) self-attention
// fusion -> recurrent cross-attention decoder. Ablation variants toggle one
// axis each; "baseline" keeps everything on.

#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "casp/attention.hpp"
#include "casp/backbone.hpp"
#include "casp/decoder.hpp"
#include "casp/params.hpp"
#include "casp/scene.hpp"
#include "casp/tensor.hpp"

namespace casp {

struct ModelConfig {
  GridConfig grid;
  std::size_t d = 64;
  std::size_t levels = 4;
  std::size_t heads = 8;
  std::size_t points = 4;
  std::size_t attn_layers = 4;
  std::size_t modes = 5;
  std::size_t r_steps = 3;
  ModelFlags flags;
};

// Maps a variant name to its flag set. Knows "baseline", "no-mode-queries",
// "no-self-attention", "no-recurrence", "no-ego-position".
ModelFlags ablation_variant(const std::string& name);
const std::vector<std::string>& ablation_names();

template <class T>
class ModelT {
 public:
  using Tensor = TensorT<T>;

  ModelT(const ModelConfig& cfg, ParamStoreT<T>& ps, Rng& rng);

  // statics [B, F_s, H, W], dynamics [B, T_i, F_d, H, W] -> trajectories.
  TrajectoryPredictionT<T> forward(Tape<T>* tape, const Tensor& statics,
                                   const Tensor& dynamics) const;

  const ModelConfig& config() const { return cfg_; }
  const PosEmbeddingT<T>& pos() const { return pos_; }
  const DecoderT<T>& decoder() const { return decoder_; }

 private:
  ModelConfig cfg_;
  BackboneT<T> backbone_;
  PosEmbeddingT<T> pos_;
  std::optional<SelfAttentionFuseT<T>> fuse_;
  DecoderT<T> decoder_;
};

using Model = ModelT<float>;

}  // namespace casp
