// Copyright (c) 2026 The casp authors
// SPDX-License-Identifier: Apache-2.0

#include "casp/backbone.hpp"

#include <algorithm>
#include <string>

#include "casp/ops.hpp"

namespace casp {

std::vector<std::pair<std::size_t, std::size_t>> pyramid_shapes(std::size_t h, std::size_t w,
                                                                std::size_t levels) {
  if (levels == 0) throw ConfigError("pyramid needs at least one level");
  if (h == 0 || w == 0 || h % 4 != 0 || w % 4 != 0)
    throw ShapeError("grid " + std::to_string(h) + "x" + std::to_string(w) +
                     " is not divisible by the stride-4 stem");
  std::vector<std::pair<std::size_t, std::size_t>> fine_up{{h / 4, w / 4}};
  for (std::size_t l = 1; l < levels; ++l) {
    auto [ph, pw] = fine_up.back();
    fine_up.emplace_back((ph + 1) / 2, (pw + 1) / 2);
  }
  return {fine_up.rbegin(), fine_up.rend()};
}

template <class T>
BackboneT<T>::BackboneT(const BackboneConfig& cfg, ParamStoreT<T>& ps, Rng& rng) : cfg_(cfg) {
  if (cfg.d == 0) throw ConfigError("backbone width must be positive");
  if (cfg.levels == 0) throw ConfigError("backbone needs at least one level");
  if (cfg.static_channels == 0 || cfg.dynamic_channels == 0)
    throw ConfigError("backbone channel counts must be positive");
  const std::size_t d = cfg.d;
  stem1_ = Conv2dT<T>::make(ps, "backbone.stem1", cfg.static_channels, d, 3, 2, 1, rng);
  stem2_ = Conv2dT<T>::make(ps, "backbone.stem2", d, d, 3, 2, 1, rng);
  for (std::size_t l = 0; l < cfg.levels; ++l) {
    const std::string stage = "backbone.s" + std::to_string(4u << l);
    if (l > 0) downs_.push_back(Conv2dT<T>::make(ps, stage + ".down", d, d, 3, 2, 1, rng));
    Block b;
    b.c1 = Conv2dT<T>::make(ps, stage + ".c1", d, d, 3, 1, 1, rng);
    b.c2 = Conv2dT<T>::make(ps, stage + ".c2", d, d, 3, 1, 1, rng);
    blocks_.push_back(b);
  }
  demb1_ = Conv2dT<T>::make(ps, "backbone.dyn.emb1", cfg.dynamic_channels, d, 3, 2, 1, rng);
  demb2_ = Conv2dT<T>::make(ps, "backbone.dyn.emb2", d, d, 3, 2, 1, rng);
  gz_ = Conv2dT<T>::make(ps, "backbone.gru.z", 2 * d, d, 3, 1, 1, rng);
  gr_ = Conv2dT<T>::make(ps, "backbone.gru.r", 2 * d, d, 3, 1, 1, rng);
  gn_ = Conv2dT<T>::make(ps, "backbone.gru.n", 2 * d, d, 3, 1, 1, rng);
  for (std::size_t l = 1; l < cfg.levels; ++l) {
    const std::string stage = "backbone.dyn.s" + std::to_string(4u << l);
    dyn_downs_.push_back(Conv2dT<T>::make(ps, stage + ".down", d, d, 3, 2, 1, rng));
  }
  for (std::size_t l = 0; l < cfg.levels; ++l) {
    const std::string stage = "backbone.fuse.s" + std::to_string(4u << l);
    fuse_.push_back(Conv2dT<T>::make(ps, stage, 2 * d, d, 1, 1, 0, rng));
  }
}

template <class T>
void BackboneT<T>::check_grid(std::size_t h, std::size_t w) const {
  pyramid_shapes(h, w, cfg_.levels);
}

template <class T>
std::vector<TensorT<T>> BackboneT<T>::encode_static(Tape<T>* tape, const Tensor& x) const {
  if (x.rank() != 4 || x.dim(1) != cfg_.static_channels)
    throw ShapeError("static input must be [B, " + std::to_string(cfg_.static_channels) +
                     ", H, W], got " + shape_str(x.shape()));
  check_grid(x.dim(2), x.dim(3));
  Tensor h = relu(stem1_.forward(tape, x));
  h = relu(stem2_.forward(tape, h));
  std::vector<Tensor> fine_up;
  for (std::size_t l = 0; l < cfg_.levels; ++l) {
    if (l > 0) h = relu(downs_[l - 1].forward(tape, h));
    h = relu(blocks_[l].c1.forward(tape, h));
    h = relu(blocks_[l].c2.forward(tape, h));
    fine_up.push_back(h);
  }
  return {fine_up.rbegin(), fine_up.rend()};
}

template <class T>
std::vector<TensorT<T>> BackboneT<T>::encode_dynamic(Tape<T>* tape, const Tensor& x) const {
  if (x.rank() != 5 || x.dim(2) != cfg_.dynamic_channels)
    throw ShapeError("dynamic input must be [B, T, " + std::to_string(cfg_.dynamic_channels) +
                     ", H, W], got " + shape_str(x.shape()));
  const std::size_t steps = x.dim(1);
  if (steps == 0) throw ConfigError("dynamic input needs at least one time step");
  check_grid(x.dim(3), x.dim(4));
  const std::size_t batch = x.dim(0);
  Tensor h({batch, cfg_.d, x.dim(3) / 4, x.dim(4) / 4});
  for (std::size_t t = 0; t < steps; ++t) {
    Tensor xt = reshape(slice(x, 1, t, 1), {batch, cfg_.dynamic_channels, x.dim(3), x.dim(4)});
    Tensor e = relu(demb2_.forward(tape, relu(demb1_.forward(tape, xt))));
    h = gru_step(tape, e, h);
  }
  std::vector<Tensor> fine_up{h};
  for (std::size_t l = 1; l < cfg_.levels; ++l) {
    h = relu(dyn_downs_[l - 1].forward(tape, h));
    fine_up.push_back(h);
  }
  return {fine_up.rbegin(), fine_up.rend()};
}

template <class T>
TensorT<T> BackboneT<T>::gru_step(Tape<T>* tape, const Tensor& x, const Tensor& h) const {
  Tensor xh = concat<T>({x, h}, 1);
  Tensor z = sigmoid(gz_.forward(tape, xh));
  Tensor r = sigmoid(gr_.forward(tape, xh));
  Tensor n = tanh(gn_.forward(tape, concat<T>({x, mul(r, h)}, 1)));
  return add(h, mul(z, sub(n, h)));
}

template <class T>
std::vector<TensorT<T>> BackboneT<T>::fuse(Tape<T>* tape, const std::vector<Tensor>& st,
                                           const std::vector<Tensor>& dy) const {
  if (st.size() != cfg_.levels || dy.size() != cfg_.levels)
    throw ShapeError("fuse expects " + std::to_string(cfg_.levels) + " levels per pyramid");
  std::vector<Tensor> out;
  for (std::size_t l = 0; l < cfg_.levels; ++l) {
    if (st[l].shape() != dy[l].shape())
      throw ShapeError("pyramid level " + std::to_string(l) + " shape mismatch: " +
                       shape_str(st[l].shape()) + " vs " + shape_str(dy[l].shape()));
    out.push_back(fuse_[cfg_.levels - 1 - l].forward(tape, concat<T>({st[l], dy[l]}, 1)));
  }
  return out;
}

template <class T>
std::vector<TensorT<T>> BackboneT<T>::forward(Tape<T>* tape, const Tensor& statics,
                                              const Tensor& dynamics) const {
  return fuse(tape, encode_static(tape, statics), encode_dynamic(tape, dynamics));
}

template class BackboneT<float>;
template class BackboneT<double>;

}  // namespace casp
