// Copyright (c) 2026 The casp authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>

#include "casp/scene.hpp"

namespace casp {

GridConfig paper_grid() { return GridConfig{}; }

GridConfig desk_grid() {
  GridConfig g;
  g.h = 76;
  g.w = 48;
  g.ego_row = 61;
  g.ego_col = 24;
  return g;
}

const char* kind_name(SceneKind kind) {
  switch (kind) {
    case SceneKind::straight: return "straight";
    case SceneKind::curve: return "curve";
    case SceneKind::t_junction: return "t_junction";
    case SceneKind::fork: return "fork";
  }
  throw ConfigError("unknown scene kind value");
}

SceneKind kind_from_name(const std::string& name) {
  if (name == "straight") return SceneKind::straight;
  if (name == "curve") return SceneKind::curve;
  if (name == "t_junction") return SceneKind::t_junction;
  if (name == "fork") return SceneKind::fork;
  throw ConfigError("unknown scene kind: " + name);
}

float wrap_angle(float a) {
  float r = std::remainder(a, 2.0f * 3.14159265358979323846f);
  if (r <= -3.14159265358979323846f) r += 2.0f * 3.14159265358979323846f;
  return r;
}

float polyline_length(const Polyline& pts) {
  float len = 0.0f;
  for (size_t i = 1; i < pts.size(); ++i) len += norm(pts[i] - pts[i - 1]);
  return len;
}

Vec2 polyline_point_at(const Polyline& pts, float s) {
  if (pts.empty()) throw UsageError("polyline_point_at: empty polyline");
  if (s <= 0.0f) return pts.front();
  float acc = 0.0f;
  for (size_t i = 1; i < pts.size(); ++i) {
    float seg = norm(pts[i] - pts[i - 1]);
    if (seg <= 0.0f) continue;
    if (s <= acc + seg) {
      float u = (s - acc) / seg;
      return pts[i - 1] + u * (pts[i] - pts[i - 1]);
    }
    acc += seg;
  }
  return pts.back();
}

Vec2 polyline_tangent_at(const Polyline& pts, float s) {
  if (pts.size() < 2) throw UsageError("polyline_tangent_at: need two points");
  float acc = 0.0f;
  for (size_t i = 1; i < pts.size(); ++i) {
    float seg = norm(pts[i] - pts[i - 1]);
    if (seg <= 0.0f) continue;
    if (s <= acc + seg) return (1.0f / seg) * (pts[i] - pts[i - 1]);
    acc += seg;
  }
  for (size_t i = pts.size(); i-- > 1;) {
    float seg = norm(pts[i] - pts[i - 1]);
    if (seg > 0.0f) return (1.0f / seg) * (pts[i] - pts[i - 1]);
  }
  throw UsageError("polyline_tangent_at: degenerate polyline");
}

bool point_in_polygon(const Polygon& poly, Vec2 p) {
  size_t n = poly.size();
  if (n < 3) return false;
  bool inside = false;
  for (size_t i = 0, j = n - 1; i < n; j = i++) {
    if ((poly[i].y > p.y) == (poly[j].y > p.y)) continue;
    float t = (p.y - poly[i].y) / (poly[j].y - poly[i].y);
    float xint = poly[i].x + t * (poly[j].x - poly[i].x);
    if (p.x < xint) inside = !inside;
  }
  return inside;
}

int corridor_of(const RasterSample& sample, Vec2 grid_pt) {
  for (size_t i = 0; i < sample.corridors.size(); ++i)
    if (point_in_polygon(sample.corridors[i], grid_pt)) return static_cast<int>(i);
  return -1;
}

Vec2 world_to_grid(Vec2 w, const GridConfig& g) {
  return {g.ego_col + w.x / g.resolution, g.ego_row - w.y / g.resolution};
}

Vec2 grid_to_world(Vec2 p, const GridConfig& g) {
  return {(p.x - g.ego_col) * g.resolution, (g.ego_row - p.y) * g.resolution};
}

}  // namespace casp
