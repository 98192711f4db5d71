// Copyright (c) 2026 The casp authors
// SPDX-License-Identifier: Apache-2.0

#include "casp/model.hpp"

namespace casp {

namespace {

BackboneConfig backbone_config(const ModelConfig& cfg) {
  BackboneConfig b;
  b.d = cfg.d;
  b.levels = cfg.levels;
  return b;
}

DeformAttnConfig attn_config(const ModelConfig& cfg) {
  DeformAttnConfig a;
  a.heads = cfg.heads;
  a.points = cfg.points;
  a.levels = cfg.levels;
  a.d = cfg.d;
  a.layers = cfg.attn_layers;
  return a;
}

DecoderConfig decoder_config(const ModelConfig& cfg) {
  DecoderConfig d;
  d.modes = cfg.modes;
  d.t_out = static_cast<std::size_t>(cfg.grid.t_out);
  d.r_steps = cfg.flags.recurrence ? cfg.r_steps : 1;
  d.d = cfg.d;
  return d;
}

}  // namespace

ModelFlags ablation_variant(const std::string& name) {
  ModelFlags f;
  if (name == "baseline") return f;
  if (name == "no-mode-queries") {
    f.mode_queries = false;
    return f;
  }
  if (name == "no-self-attention") {
    f.self_attention = false;
    return f;
  }
  if (name == "no-recurrence") {
    f.recurrence = false;
    return f;
  }
  if (name == "no-ego-position") {
    f.ego_ref = false;
    return f;
  }
  throw ConfigError("unknown ablation variant: " + name);
}

const std::vector<std::string>& ablation_names() {
  static const std::vector<std::string> names{"baseline", "no-mode-queries", "no-self-attention",
                                              "no-recurrence", "no-ego-position"};
  return names;
}

template <class T>
ModelT<T>::ModelT(const ModelConfig& cfg, ParamStoreT<T>& ps, Rng& rng)
    : cfg_(cfg),
      backbone_(backbone_config(cfg), ps, rng),
      pos_(positional_embedding<T>(
          pyramid_shapes(static_cast<std::size_t>(cfg.grid.h), static_cast<std::size_t>(cfg.grid.w),
                         cfg.levels),
          cfg.d)),
      fuse_(cfg.flags.self_attention
                ? std::optional<SelfAttentionFuseT<T>>(
                      SelfAttentionFuseT<T>::make(ps, "fuse", attn_config(cfg), rng))
                : std::nullopt),
      decoder_(decoder_config(cfg), attn_config(cfg), cfg.grid, cfg.flags, ps, rng) {}

template <class T>
TrajectoryPredictionT<T> ModelT<T>::forward(Tape<T>* tape, const Tensor& statics,
                                            const Tensor& dynamics) const {
  auto pyramid = backbone_.forward(tape, statics, dynamics);
  if (fuse_) pyramid = fuse_->forward(tape, pyramid, pos_);
  auto state = decoder_.init_state(tape, statics.dim(0));
  return decoder_.recurrent_decode(tape, state, pyramid, pos_);
}

template class ModelT<float>;
template class ModelT<double>;

}  // namespace casp
