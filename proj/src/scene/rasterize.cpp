// Copyright (c) 2026 The casp authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <cstring>

#include "casp/common.hpp"
#include "casp/scene.hpp"

namespace casp {
namespace {

void fill_polygon(float* ch, const Polygon& world_poly, const GridConfig& g) {
  if (world_poly.size() < 3) return;
  Polygon poly(world_poly.size());
  float lo_r = 1e30f, hi_r = -1e30f, lo_c = 1e30f, hi_c = -1e30f;
  for (size_t i = 0; i < world_poly.size(); ++i) {
    poly[i] = world_to_grid(world_poly[i], g);
    lo_c = std::min(lo_c, poly[i].x);
    hi_c = std::max(hi_c, poly[i].x);
    lo_r = std::min(lo_r, poly[i].y);
    hi_r = std::max(hi_r, poly[i].y);
  }
  int r0 = std::max(0, static_cast<int>(std::floor(lo_r)));
  int r1 = std::min(g.h - 1, static_cast<int>(std::ceil(hi_r)));
  int c0 = std::max(0, static_cast<int>(std::floor(lo_c)));
  int c1 = std::min(g.w - 1, static_cast<int>(std::ceil(hi_c)));
  for (int r = r0; r <= r1; ++r)
    for (int c = c0; c <= c1; ++c)
      if (point_in_polygon(poly, {c + 0.5f, r + 0.5f})) ch[r * g.w + c] = 1.0f;
}

void draw_polyline(float* ch, const Polyline& world_pts, const GridConfig& g) {
  for (size_t i = 0; i + 1 < world_pts.size(); ++i) {
    Vec2 a = world_to_grid(world_pts[i], g);
    Vec2 b = world_to_grid(world_pts[i + 1], g);
    float len = norm(b - a);
    int steps = std::max(1, static_cast<int>(std::ceil(len / 0.25f)));
    for (int k = 0; k <= steps; ++k) {
      Vec2 p = a + (static_cast<float>(k) / steps) * (b - a);
      int r = static_cast<int>(std::floor(p.y));
      int c = static_cast<int>(std::floor(p.x));
      if (r >= 0 && r < g.h && c >= 0 && c < g.w) ch[r * g.w + c] = 1.0f;
    }
  }
}

void stamp_agent(float* dyn, const Agent& agent, const GridConfig& g) {
  if (static_cast<int>(agent.past.size()) != g.t_in)
    throw ShapeError("agent past must have t_in states");
  const int hw_stride = g.h * g.w;
  float half_f = agent.extent_fwd * 0.5f;
  float half_s = agent.extent_side * 0.5f;
  float rad = std::sqrt(half_f * half_f + half_s * half_s) / g.resolution + 1.0f;
  for (int ti = 0; ti < g.t_in; ++ti) {
    const AgentState& st = agent.past[ti];
    Vec2 pos = {st.x, st.y};
    Vec2 fwd = {std::cos(st.heading), std::sin(st.heading)};
    Vec2 side = {-fwd.y, fwd.x};
    Vec2 gp = world_to_grid(pos, g);
    int r0 = std::max(0, static_cast<int>(std::floor(gp.y - rad)));
    int r1 = std::min(g.h - 1, static_cast<int>(std::ceil(gp.y + rad)));
    int c0 = std::max(0, static_cast<int>(std::floor(gp.x - rad)));
    int c1 = std::min(g.w - 1, static_cast<int>(std::ceil(gp.x + rad)));
    int covered = 0;
    for (int r = r0; r <= r1; ++r) {
      for (int c = c0; c <= c1; ++c) {
        Vec2 cc = grid_to_world({c + 0.5f, r + 0.5f}, g);
        Vec2 d = cc - pos;
        if (std::abs(dot(d, fwd)) > half_f || std::abs(dot(d, side)) > half_s) continue;
        float* base = dyn + ti * kDynamicChannels * hw_stride + r * g.w + c;
        base[kChVelX * hw_stride] = st.vx;
        base[kChVelY * hw_stride] = st.vy;
        base[kChAccX * hw_stride] = st.ax;
        base[kChAccY * hw_stride] = st.ay;
        base[kChOffX * hw_stride] = pos.x - cc.x;
        base[kChOffY * hw_stride] = pos.y - cc.y;
        base[kChExtentFwd * hw_stride] = agent.extent_fwd;
        base[kChExtentSide * hw_stride] = agent.extent_side;
        base[kChHeading * hw_stride] = wrap_angle(st.heading);
        ++covered;
      }
    }
    if (covered == 0) log_debug("agent footprint outside grid, clipped");
  }
}

}  // namespace

RasterSample rasterize(const SceneSpec& scene, const GridConfig& grid) {
  if (static_cast<int>(scene.gt.size()) != grid.t_out)
    throw ShapeError("scene gt must have t_out waypoints");
  const size_t h = grid.h, w = grid.w;
  RasterSample out;
  out.grid = grid;
  out.kind = scene.kind;
  out.statics = Tensor({static_cast<size_t>(kStaticChannels), h, w});
  out.dynamics = Tensor({static_cast<size_t>(grid.t_in),
                         static_cast<size_t>(kDynamicChannels), h, w});
  out.drivable = Tensor({h, w});

  float* st = out.statics.mutable_data();
  for (const auto& poly : scene.drivable) fill_polygon(st + kChDrivable * h * w, poly, grid);
  for (const auto& poly : scene.crossings) fill_polygon(st + kChCrossing * h * w, poly, grid);
  for (const auto& pl : scene.center_lines) draw_polyline(st + kChCenterLine * h * w, pl, grid);
  for (const auto& pl : scene.lanes) draw_polyline(st + kChLane * h * w, pl, grid);
  for (const auto& pl : scene.boundaries) draw_polyline(st + kChBoundary * h * w, pl, grid);

  float* dyn = out.dynamics.mutable_data();
  for (const Agent& agent : scene.agents) stamp_agent(dyn, agent, grid);

  std::memcpy(out.drivable.mutable_data(), st + kChDrivable * h * w, h * w * sizeof(float));

  for (const Vec2& p : scene.gt) out.gt.push_back(world_to_grid(p, grid));
  out.anchor = {static_cast<float>(grid.ego_col), static_cast<float>(grid.ego_row)};
  for (const Polygon& poly : scene.corridor_polys) {
    Polygon gp(poly.size());
    for (size_t i = 0; i < poly.size(); ++i) gp[i] = world_to_grid(poly[i], grid);
    out.corridors.push_back(std::move(gp));
  }
  return out;
}

}  // namespace casp
