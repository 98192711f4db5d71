// Copyright (c) 2026 The casp authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>

#include "casp/common.hpp"
#include "casp/scene.hpp"

namespace casp {
namespace {

constexpr float kPi = 3.14159265358979323846f;

// Bilinear tap on the cell-center lattice: grid point p samples pixel
// coordinates (p - 0.5) with zero padding outside.
float sample_bilinear(const float* ch, int h, int w, Vec2 p) {
  float xp = p.x - 0.5f;
  float yp = p.y - 0.5f;
  int x0 = static_cast<int>(std::floor(xp));
  int y0 = static_cast<int>(std::floor(yp));
  float fx = xp - x0;
  float fy = yp - y0;
  auto tap = [&](int yy, int xx) {
    return (yy >= 0 && yy < h && xx >= 0 && xx < w) ? ch[yy * w + xx] : 0.0f;
  };
  return tap(y0, x0) * (1.0f - fx) * (1.0f - fy) + tap(y0, x0 + 1) * fx * (1.0f - fy) +
         tap(y0 + 1, x0) * (1.0f - fx) * fy + tap(y0 + 1, x0 + 1) * fx * fy;
}

}  // namespace

RasterSample apply_rigid(const RasterSample& in, float theta, float dx, float dy) {
  const GridConfig& g = in.grid;
  const int h = g.h, w = g.w;
  const int hw = h * w;
  const float c = std::cos(theta);
  const float s = std::sin(theta);
  const Vec2 a = in.anchor;
  const Vec2 t = {dx, dy};

  // Grid-frame rotation matrix for a world rotation by theta is
  // [[c, s], [-s, c]] because the row axis points against world y.
  auto fwd = [&](Vec2 p) {
    Vec2 d = p - a;
    return Vec2{c * d.x + s * d.y, -s * d.x + c * d.y} + a + t;
  };
  auto inv = [&](Vec2 p) {
    Vec2 d = p - a - t;
    return Vec2{c * d.x - s * d.y, s * d.x + c * d.y} + a;
  };

  RasterSample out;
  out.grid = g;
  out.kind = in.kind;
  out.statics = Tensor({static_cast<size_t>(kStaticChannels), static_cast<size_t>(h),
                        static_cast<size_t>(w)});
  out.dynamics = Tensor({static_cast<size_t>(g.t_in), static_cast<size_t>(kDynamicChannels),
                         static_cast<size_t>(h), static_cast<size_t>(w)});
  out.drivable = Tensor({static_cast<size_t>(h), static_cast<size_t>(w)});

  std::vector<Vec2> src_pts(static_cast<size_t>(hw));
  for (int r = 0; r < h; ++r)
    for (int cc = 0; cc < w; ++cc) src_pts[r * w + cc] = inv({cc + 0.5f, r + 0.5f});

  auto nearest = [&](const float* src, float* dst) {
    for (int i = 0; i < hw; ++i) {
      Vec2 p = src_pts[i];
      int ri = static_cast<int>(std::floor(p.y));
      int ci = static_cast<int>(std::floor(p.x));
      dst[i] = (ri >= 0 && ri < h && ci >= 0 && ci < w) ? src[ri * w + ci] : 0.0f;
    }
  };
  for (int ch = 0; ch < kStaticChannels; ++ch)
    nearest(in.statics.data() + ch * hw, out.statics.mutable_data() + ch * hw);
  nearest(in.drivable.data(), out.drivable.mutable_data());

  float* dd = out.dynamics.mutable_data();
  const float* sd = in.dynamics.data();
  for (int ti = 0; ti < g.t_in; ++ti)
    for (int ch = 0; ch < kDynamicChannels; ++ch) {
      const float* src = sd + (ti * kDynamicChannels + ch) * hw;
      float* dst = dd + (ti * kDynamicChannels + ch) * hw;
      for (int i = 0; i < hw; ++i) dst[i] = sample_bilinear(src, h, w, src_pts[i]);
    }

  // Rotate vector channels and shift headings wherever the resampled cells
  // are occupied (nonzero footprint width).
  for (int ti = 0; ti < g.t_in; ++ti) {
    float* base = dd + ti * kDynamicChannels * hw;
    for (int i = 0; i < hw; ++i) {
      if (std::abs(base[kChExtentSide * hw + i]) <= 1e-4f) continue;
      for (int pair : {kChVelX, kChAccX, kChOffX}) {
        float x = base[pair * hw + i];
        float y = base[(pair + 1) * hw + i];
        base[pair * hw + i] = c * x - s * y;
        base[(pair + 1) * hw + i] = s * x + c * y;
      }
      base[kChHeading * hw + i] = wrap_angle(base[kChHeading * hw + i] + theta);
    }
  }

  out.gt.reserve(in.gt.size());
  for (const Vec2& p : in.gt) out.gt.push_back(fwd(p));
  out.anchor = a + t;
  out.corridors.reserve(in.corridors.size());
  for (const Polygon& poly : in.corridors) {
    Polygon tp(poly.size());
    for (size_t i = 0; i < poly.size(); ++i) tp[i] = fwd(poly[i]);
    out.corridors.push_back(std::move(tp));
  }
  return out;
}

RasterSample augment(const RasterSample& sample, Rng& rng) {
  if (rng.uniform() >= 0.75) return sample;
  float theta = static_cast<float>(rng.uniform(-kPi / 3.0, kPi / 3.0));
  float dx = static_cast<float>(rng.uniform(-3.0, 3.0));
  float dy = static_cast<float>(rng.uniform(-3.0, 3.0));
  return apply_rigid(sample, theta, dx, dy);
}

}  // namespace casp
