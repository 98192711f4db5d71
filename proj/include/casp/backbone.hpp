// Copyright (c) 2026 The casp authors
// SPDX-License-Identifier: Apache-2.0
//
// Rasterized-context encoder. Static channels run through a stride-4 conv
// stem and a chain of stride-2 stages; dynamic channels are embedded per time
// step and folded in time order by a convolutional GRU whose final hidden
// state is downsampled to every stage. Both paths meet in a per-level
// channel concat + 1x1 conv back to width d. Pyramids are lists of
// [B, d, H_l, W_l] tensors ordered coarse to fine, so levels[l+1] has twice
// (up to rounding) the resolution of levels[l].

#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "casp/params.hpp"
#include "casp/scene.hpp"
#include "casp/tensor.hpp"

namespace casp {

struct BackboneConfig {
  std::size_t d = 64;
  std::size_t levels = 4;
  std::size_t static_channels = kStaticChannels;
  std::size_t dynamic_channels = kDynamicChannels;
};

// Level shapes coarse to fine. The finest level is (h/4, w/4); h and w must
// be divisible by 4. Deeper levels halve with ceil rounding, matching the
// stride-2 3x3 pad-1 convolutions that produce them.
std::vector<std::pair<std::size_t, std::size_t>> pyramid_shapes(std::size_t h, std::size_t w,
                                                                std::size_t levels);

template <class T>
class BackboneT {
 public:
  using Tensor = TensorT<T>;

  BackboneT(const BackboneConfig& cfg, ParamStoreT<T>& ps, Rng& rng);

  // x is [B, static_channels, H, W]; returns one tensor per level, coarse to
  // fine.
  std::vector<Tensor> encode_static(Tape<T>* tape, const Tensor& x) const;
  // x is [B, T, dynamic_channels, H, W] with steps ordered oldest first.
  std::vector<Tensor> encode_dynamic(Tape<T>* tape, const Tensor& x) const;
  // Per-level concat + 1x1 conv; both pyramids must be coarse to fine.
  std::vector<Tensor> fuse(Tape<T>* tape, const std::vector<Tensor>& st,
                           const std::vector<Tensor>& dy) const;
  std::vector<Tensor> forward(Tape<T>* tape, const Tensor& statics, const Tensor& dynamics) const;

  const BackboneConfig& config() const { return cfg_; }

 private:
  void check_grid(std::size_t h, std::size_t w) const;
  Tensor gru_step(Tape<T>* tape, const Tensor& x, const Tensor& h) const;

  BackboneConfig cfg_;
  Conv2dT<T> stem1_, stem2_;
  struct Block {
    Conv2dT<T> c1, c2;
  };
  std::vector<Block> blocks_;          // fine to coarse
  std::vector<Conv2dT<T>> downs_;      // between consecutive static stages
  Conv2dT<T> demb1_, demb2_;
  Conv2dT<T> gz_, gr_, gn_;
  std::vector<Conv2dT<T>> dyn_downs_;  // between consecutive dynamic stages
  std::vector<Conv2dT<T>> fuse_;       // fine to coarse
};

using Backbone = BackboneT<float>;

}  // namespace casp
