// Copyright (c) 2026 The casp authors
// SPDX-License-Identifier: Apache-2.0

#include "casp/attention.hpp"

#include <cmath>
#include <cstring>
#include <string>

#include "casp/ops.hpp"

namespace casp {

std::atomic<std::uint64_t>& deform_clamp_warnings() {
  static std::atomic<std::uint64_t> count{0};
  return count;
}

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

// Geometric frequency ladder from one cycle per map up to the Nyquist rate of
// the level extent.
double pair_freq(std::size_t i, std::size_t pairs, std::size_t extent) {
  const double fmax = std::max(1.0, static_cast<double>(extent) / 2.0);
  if (pairs == 1) return 1.0;
  return std::pow(fmax, static_cast<double>(i) / static_cast<double>(pairs - 1));
}

}  // namespace

template <class T>
PosEmbeddingT<T> positional_embedding(
    const std::vector<std::pair<std::size_t, std::size_t>>& level_shapes, std::size_t d) {
  if (d == 0 || d % 4 != 0)
    throw ConfigError("position code width must be a positive multiple of 4");
  const std::size_t pairs = d / 4;
  PosEmbeddingT<T> out;
  for (auto [h, w] : level_shapes) {
    if (h == 0 || w == 0) throw ShapeError("position code level has an empty shape");
    TensorT<T> map({d, h, w});
    TensorT<T> flat({h * w, d});
    TensorT<T> ctr({h * w, 2});
    T* mp = map.mutable_data();
    T* fp = flat.mutable_data();
    T* cp = ctr.mutable_data();
    for (std::size_t r = 0; r < h; ++r) {
      for (std::size_t c = 0; c < w; ++c) {
        const std::size_t cell = r * w + c;
        cp[cell * 2 + 0] = static_cast<T>((c + 0.5) / w);
        cp[cell * 2 + 1] = static_cast<T>((r + 0.5) / h);
        auto put = [&](std::size_t ch, double v) {
          mp[ch * h * w + cell] = static_cast<T>(v);
          fp[cell * d + ch] = static_cast<T>(v);
        };
        for (std::size_t i = 0; i < pairs; ++i) {
          const double ar = kTwoPi * pair_freq(i, pairs, h) * r / h;
          put(2 * i, std::sin(ar));
          put(2 * i + 1, std::cos(ar));
          const double ac = kTwoPi * pair_freq(i, pairs, w) * c / w;
          put(d / 2 + 2 * i, std::sin(ac));
          put(d / 2 + 2 * i + 1, std::cos(ac));
        }
      }
    }
    out.maps.push_back(map);
    out.flat.push_back(flat);
    out.centers.push_back(ctr);
  }
  return out;
}

template <class T>
MsDeformAttnT<T> MsDeformAttnT<T>::make(ParamStoreT<T>& ps, const std::string& name,
                                        const DeformAttnConfig& cfg, Rng& rng) {
  if (cfg.heads == 0 || cfg.points == 0 || cfg.levels == 0 || cfg.d == 0)
    throw ConfigError("attention sizes must be positive");
  if (cfg.d % cfg.heads != 0) throw ConfigError("width must be divisible by the head count");
  MsDeformAttnT a;
  a.heads = cfg.heads;
  a.points = cfg.points;
  a.levels = cfg.levels;
  a.d = cfg.d;
  a.value_proj = LinearT<T>::make(ps, name + ".value", cfg.d, cfg.d, rng);
  // Offset and logit weights start small around zero; the offset bias fans
  // the K points out over distinct per-head rays. The rays carry a fixed
  // phase so the initial samples sit away from the interpolation lattice.
  std::vector<T> off_bias(cfg.heads * cfg.levels * cfg.points * 2);
  for (std::size_t h = 0; h < cfg.heads; ++h) {
    const double angle = kTwoPi * h / cfg.heads + 0.5;
    for (std::size_t l = 0; l < cfg.levels; ++l) {
      for (std::size_t k = 0; k < cfg.points; ++k) {
        const std::size_t at = ((h * cfg.levels + l) * cfg.points + k) * 2;
        off_bias[at + 0] = static_cast<T>(std::cos(angle) * (k + 1));
        off_bias[at + 1] = static_cast<T>(std::sin(angle) * (k + 1));
      }
    }
  }
  const std::size_t n_off = cfg.heads * cfg.levels * cfg.points * 2;
  a.offset_head.w = ps.get_or_create(name + ".offset.w", {cfg.d, n_off}, 0.02, rng);
  a.offset_head.b = ps.get_or_create_values(name + ".offset.b", {n_off}, off_bias);
  const std::size_t n_log = cfg.heads * cfg.levels * cfg.points;
  a.logit_head.w = ps.get_or_create(name + ".logit.w", {cfg.d, n_log}, 0.02, rng);
  a.logit_head.b = ps.get_or_create_const(name + ".logit.b", {n_log}, T(0));
  a.output_proj = LinearT<T>::make(ps, name + ".out", cfg.d, cfg.d, rng);
  return a;
}

template <class T>
TensorT<T> MsDeformAttnT<T>::weights(Tape<T>* tape, const TensorT<T>& queries) const {
  if (queries.rank() != 3 || queries.dim(2) != d)
    throw ShapeError("queries must be [B, Q, " + std::to_string(d) + "], got " +
                     shape_str(queries.shape()));
  TensorT<T> logits = logit_head.forward(tape, queries);
  logits = reshape(logits, {queries.dim(0), queries.dim(1), heads, levels * points});
  return softmax(logits, 3);
}

template <class T>
TensorT<T> MsDeformAttnT<T>::forward(Tape<T>* tape, const TensorT<T>& queries,
                                     const TensorT<T>& ref,
                                     const std::vector<TensorT<T>>& pyramid,
                                     const PosEmbeddingT<T>* pos) const {
  if (queries.rank() != 3 || queries.dim(2) != d)
    throw ShapeError("queries must be [B, Q, " + std::to_string(d) + "], got " +
                     shape_str(queries.shape()));
  const std::size_t batch = queries.dim(0);
  const std::size_t q_n = queries.dim(1);
  if (ref.rank() != 3 || ref.dim(0) != batch || ref.dim(1) != q_n || ref.dim(2) != 2)
    throw ShapeError("reference points must be [B, Q, 2], got " + shape_str(ref.shape()));
  if (pyramid.size() != levels)
    throw ShapeError("pyramid has " + std::to_string(pyramid.size()) + " levels, expected " +
                     std::to_string(levels));
  if (pos && pos->maps.size() != levels)
    throw ShapeError("position code level count does not match the pyramid");
  for (const auto& lv : pyramid)
    if (lv.rank() != 4 || lv.dim(0) != batch || lv.dim(1) != d)
      throw ShapeError("pyramid level must be [B, d, H, W], got " + shape_str(lv.shape()));

  const T* rp = ref.data();
  std::uint64_t oob = 0;
  for (std::size_t i = 0; i < batch * q_n; ++i)
    if (rp[2 * i] < T(0) || rp[2 * i] > T(1) || rp[2 * i + 1] < T(0) || rp[2 * i + 1] > T(1))
      ++oob;
  if (oob > 0) deform_clamp_warnings() += oob;
  TensorT<T> refc = clamp(ref, T(0), T(1));

  TensorT<T> w5 = reshape(weights(tape, queries), {batch, q_n, heads, levels, points});
  TensorT<T> off = reshape(offset_head.forward(tape, queries),
                           {batch, q_n, heads, levels, points, 2});
  TensorT<T> ref_b = reshape(refc, {batch, q_n, 1, 1, 1, 2});

  const std::size_t dh = d / heads;
  std::vector<TensorT<T>> head_acc(heads);
  for (std::size_t l = 0; l < levels; ++l) {
    const std::size_t lh = pyramid[l].dim(2), lw = pyramid[l].dim(3);
    TensorT<T> feat = pyramid[l];
    if (pos) {
      if (pos->maps[l].shape() != std::vector<std::size_t>{d, lh, lw})
        throw ShapeError("position code shape does not match pyramid level " + std::to_string(l));
      feat = add(feat, pos->maps[l]);
    }
    TensorT<T> v = permute(feat, {0, 2, 3, 1});
    v = value_proj.forward(tape, v);
    v = permute(v, {0, 3, 1, 2});
    TensorT<T> scale({2}, {static_cast<T>(1.0 / lw), static_cast<T>(1.0 / lh)});
    TensorT<T> pts_l = add(mul(slice(off, 3, l, 1), scale), ref_b);
    for (std::size_t h = 0; h < heads; ++h) {
      TensorT<T> pts = reshape(slice(pts_l, 2, h, 1), {batch, q_n * points, 2});
      TensorT<T> samp = reshape(bilinear_sample(slice(v, 1, h * dh, dh), pts),
                                {batch, q_n, points, dh});
      TensorT<T> w_hl = reshape(slice(slice(w5, 2, h, 1), 3, l, 1), {batch, q_n, points, 1});
      TensorT<T> mixed = sum_axes(mul(samp, w_hl), {2}, false);
      head_acc[h] = head_acc[h].defined() ? add(head_acc[h], mixed) : mixed;
    }
  }
  TensorT<T> out = concat<T>(head_acc, 2);
  return output_proj.forward(tape, out);
}

template <class T>
AttnLayerT<T> AttnLayerT<T>::make(ParamStoreT<T>& ps, const std::string& name,
                                  const DeformAttnConfig& cfg, Rng& rng) {
  AttnLayerT layer;
  layer.attn = MsDeformAttnT<T>::make(ps, name + ".attn", cfg, rng);
  layer.ff1 = LinearT<T>::make(ps, name + ".ff1", cfg.d, 2 * cfg.d, rng);
  layer.ff2 = LinearT<T>::make(ps, name + ".ff2", 2 * cfg.d, cfg.d, rng);
  layer.ln1_g = ps.get_or_create_const(name + ".ln1.g", {cfg.d}, T(1));
  layer.ln1_b = ps.get_or_create_const(name + ".ln1.b", {cfg.d}, T(0));
  layer.ln2_g = ps.get_or_create_const(name + ".ln2.g", {cfg.d}, T(1));
  layer.ln2_b = ps.get_or_create_const(name + ".ln2.b", {cfg.d}, T(0));
  return layer;
}

template <class T>
TensorT<T> AttnLayerT<T>::forward(Tape<T>* tape, const TensorT<T>& x, const TensorT<T>* q_extra,
                                  const TensorT<T>& ref, const std::vector<TensorT<T>>& pyramid,
                                  const PosEmbeddingT<T>* pos) const {
  TensorT<T> q = q_extra ? add(x, *q_extra) : x;
  TensorT<T> a = attn.forward(tape, q, ref, pyramid, pos);
  TensorT<T> h = layernorm(add(x, a), track(tape, ln1_g), track(tape, ln1_b), 2);
  TensorT<T> f = ff2.forward(tape, relu(ff1.forward(tape, h)));
  return layernorm(add(h, f), track(tape, ln2_g), track(tape, ln2_b), 2);
}

template <class T>
SelfAttentionFuseT<T> SelfAttentionFuseT<T>::make(ParamStoreT<T>& ps, const std::string& name,
                                                  const DeformAttnConfig& cfg, Rng& rng) {
  if (cfg.layers == 0) throw ConfigError("fusion needs at least one layer");
  SelfAttentionFuseT fuse;
  fuse.layers_n = cfg.layers;
  for (std::size_t i = 0; i < cfg.layers; ++i)
    fuse.layers.push_back(AttnLayerT<T>::make(ps, name + ".l" + std::to_string(i), cfg, rng));
  return fuse;
}

template <class T>
std::vector<TensorT<T>> SelfAttentionFuseT<T>::forward(Tape<T>* tape,
                                                       const std::vector<TensorT<T>>& pyramid,
                                                       const PosEmbeddingT<T>& pos) const {
  const std::size_t n_levels = layers[0].attn.levels;
  const std::size_t d = layers[0].attn.d;
  if (pyramid.size() != n_levels || pos.flat.size() != n_levels)
    throw ShapeError("fusion expects " + std::to_string(n_levels) + " pyramid levels");
  const std::size_t batch = pyramid[0].dim(0);

  std::vector<std::size_t> hw(n_levels);
  std::size_t q_all = 0;
  for (std::size_t l = 0; l < n_levels; ++l) {
    hw[l] = pyramid[l].dim(2) * pyramid[l].dim(3);
    if (pos.flat[l].dim(0) != hw[l])
      throw ShapeError("position code does not match pyramid level " + std::to_string(l));
    q_all += hw[l];
  }

  TensorT<T> posq = concat<T>(pos.flat, 0);
  TensorT<T> ref({batch, q_all, 2});
  {
    TensorT<T> ctr = concat<T>(pos.centers, 0);
    T* out = ref.mutable_data();
    for (std::size_t b = 0; b < batch; ++b)
      std::memcpy(out + b * q_all * 2, ctr.data(), q_all * 2 * sizeof(T));
  }

  std::vector<TensorT<T>> maps = pyramid;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    std::vector<TensorT<T>> flat;
    for (std::size_t l = 0; l < n_levels; ++l)
      flat.push_back(reshape(permute(maps[l], {0, 2, 3, 1}),
                             {batch, hw[l], d}));
    TensorT<T> x = concat<T>(flat, 1);
    x = layers[i].forward(tape, x, &posq, ref, maps, nullptr);
    std::size_t at = 0;
    for (std::size_t l = 0; l < n_levels; ++l) {
      TensorT<T> part = slice(x, 1, at, hw[l]);
      at += hw[l];
      part = reshape(part, {batch, maps[l].dim(2), maps[l].dim(3), d});
      maps[l] = permute(part, {0, 3, 1, 2});
    }
  }
  return maps;
}

template <class T>
CrossAttentionStackT<T> CrossAttentionStackT<T>::make(ParamStoreT<T>& ps, const std::string& name,
                                                      const DeformAttnConfig& cfg, Rng& rng) {
  if (cfg.layers == 0) throw ConfigError("cross attention needs at least one layer");
  CrossAttentionStackT stack;
  stack.layers_n = cfg.layers;
  for (std::size_t i = 0; i < cfg.layers; ++i)
    stack.layers.push_back(AttnLayerT<T>::make(ps, name + ".l" + std::to_string(i), cfg, rng));
  return stack;
}

template <class T>
TensorT<T> CrossAttentionStackT<T>::forward(Tape<T>* tape, const TensorT<T>& temporal_q,
                                            const TensorT<T>* mode_q, const TensorT<T>& ref,
                                            const std::vector<TensorT<T>>& pyramid,
                                            const PosEmbeddingT<T>& pos) const {
  if (temporal_q.rank() != 3) throw ShapeError("temporal queries must be [B, M, d]");
  if (mode_q && (mode_q->rank() != 2 || mode_q->dim(0) != temporal_q.dim(1) ||
                 mode_q->dim(1) != temporal_q.dim(2)))
    throw ShapeError("mode queries must be [M, d] matching the temporal queries");
  TensorT<T> x = temporal_q;
  for (const auto& layer : layers) x = layer.forward(tape, x, mode_q, ref, pyramid, &pos);
  return x;
}

template PosEmbeddingT<float> positional_embedding<float>(
    const std::vector<std::pair<std::size_t, std::size_t>>&, std::size_t);
template PosEmbeddingT<double> positional_embedding<double>(
    const std::vector<std::pair<std::size_t, std::size_t>>&, std::size_t);
template struct MsDeformAttnT<float>;
template struct MsDeformAttnT<double>;
template struct AttnLayerT<float>;
template struct AttnLayerT<double>;
template struct SelfAttentionFuseT<float>;
template struct SelfAttentionFuseT<double>;
template struct CrossAttentionStackT<float>;
template struct CrossAttentionStackT<double>;

}  // namespace casp
