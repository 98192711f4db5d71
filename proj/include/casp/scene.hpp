// Copyright (c) 2026 The casp authors
// SPDX-License-Identifier: Apache-2.0
//
// Synthetic driving scenes: parametric generators (straight roads, curves,
// T-junctions, forks), BEV rasterization, and train-time rigid augmentation.
//
// Coordinate conventions, used everywhere downstream:
//   World frame: meters; the ego sits at the origin facing +y at the current
//   step, so "ahead" is +y and "right" is +x.
//   Grid frame: row 0 is the far edge ahead of the ego. A world point (x, y)
//   maps to continuous grid coordinates
//     col = ego_col + x / resolution
//     row = ego_row - y / resolution
//   Cell (r, c) covers [r, r+1) x [c, c+1); its center is (r+0.5, c+0.5).
//   The ego anchor therefore sits on the lattice corner (ego_row, ego_col),
//   and normalized coordinates are (col / W, row / H).
//   Grid-frame points are stored as Vec2 with x = column, y = row.
#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "casp/common.hpp"
#include "casp/tensor.hpp"

namespace casp {

struct Vec2 {
  float x = 0.0f;
  float y = 0.0f;
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(float s, Vec2 v) { return {s * v.x, s * v.y}; }
inline float dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline float norm(Vec2 v) { return std::sqrt(dot(v, v)); }
inline Vec2 rotated(Vec2 v, float angle) {
  float c = std::cos(angle);
  float s = std::sin(angle);
  return {c * v.x - s * v.y, s * v.x + c * v.y};
}

using Polyline = std::vector<Vec2>;
using Polygon = std::vector<Vec2>;

// Seconds between consecutive raster steps and trajectory waypoints.
inline constexpr float kStepSeconds = 0.5f;

struct GridConfig {
  int h = 152;
  int w = 96;
  float resolution = 1.0f;  // meters per cell
  int ego_row = 122;
  int ego_col = 48;
  int t_in = 3;
  int t_out = 12;
};

GridConfig paper_grid();
GridConfig desk_grid();

enum class SceneKind : uint8_t { straight = 0, curve = 1, t_junction = 2, fork = 3 };

const char* kind_name(SceneKind kind);
SceneKind kind_from_name(const std::string& name);

// Static channel order (frozen): drivable area, road center lines, driving
// lane center lines, road boundaries, pedestrian crossings.
inline constexpr int kStaticChannels = 5;
enum : int {
  kChDrivable = 0,
  kChCenterLine = 1,
  kChLane = 2,
  kChBoundary = 3,
  kChCrossing = 4,
};

// Dynamic channel order (frozen): velocity xy, acceleration xy, offset of the
// agent position from the covered cell's center xy (world meters), footprint
// extent along the heading, footprint extent across it, heading angle.
inline constexpr int kDynamicChannels = 9;
enum : int {
  kChVelX = 0,
  kChVelY = 1,
  kChAccX = 2,
  kChAccY = 3,
  kChOffX = 4,
  kChOffY = 5,
  kChExtentFwd = 6,
  kChExtentSide = 7,
  kChHeading = 8,
};

struct AgentState {
  float x = 0.0f;
  float y = 0.0f;
  float heading = 0.0f;  // radians, 0 = +x, counterclockwise
  float vx = 0.0f;
  float vy = 0.0f;
  float ax = 0.0f;
  float ay = 0.0f;
};

struct Agent {
  std::vector<AgentState> past;  // t_in states, oldest first; back() = current
  float extent_fwd = 4.5f;       // meters along the heading
  float extent_side = 2.0f;      // meters across the heading
};

struct SceneSpec {
  SceneKind kind = SceneKind::straight;
  std::vector<Polyline> center_lines;
  std::vector<Polyline> lanes;
  std::vector<Polyline> boundaries;
  std::vector<Polygon> drivable;
  std::vector<Polygon> crossings;
  std::vector<Agent> agents;  // the ego is listed last and stamped last
  int ego_index = 0;
  std::vector<Vec2> gt;  // t_out future waypoints, world meters

  // Every kinematically feasible future path, each starting at the shared
  // stem behind the ego; the ego travels corridor_paths[gt_corridor].
  std::vector<Polyline> corridor_paths;
  std::vector<Polygon> corridor_polys;  // coverage region per corridor
  int gt_corridor = 0;
  float ego_speed = 0.0f;  // m/s at the current step
  float ego_accel = 0.0f;  // along-track m/s^2
  float ego_s0 = 0.0f;     // ego arclength along each corridor path
};

// Test/benchmark hooks; the training pipeline never sets these.
struct GenOverrides {
  std::optional<float> speed;
  std::optional<int> corridor;
  std::optional<int> agent_count;  // non-ego agents
};

struct RasterSample {
  GridConfig grid;
  SceneKind kind = SceneKind::straight;
  Tensor statics;   // [5, H, W], values in {0, 1}
  Tensor dynamics;  // [t_in, 9, H, W], step 0 oldest
  Tensor drivable;  // [H, W], copy of the drivable channel
  std::vector<Vec2> gt;             // grid frame
  Vec2 anchor;                      // ego anchor, grid frame
  std::vector<Polygon> corridors;   // grid frame
};

SceneSpec generate_scene(uint64_t seed, SceneKind kind, const GridConfig& grid,
                         const GenOverrides* overrides = nullptr);

RasterSample rasterize(const SceneSpec& scene, const GridConfig& grid);

// Rigid transform in grid coordinates: rotate the scene content by `theta`
// (the world-frame angle; headings gain exactly theta) about the ego anchor,
// then translate by (dx, dy) cells. Binary channels resample nearest
// neighbor, real channels bilinearly; both in one pass.
RasterSample apply_rigid(const RasterSample& sample, float theta, float dx, float dy);

// With probability 0.75 applies one rigid transform with theta ~ U[-60, 60]
// degrees and dx, dy ~ U[-3, 3] cells; otherwise returns the input unchanged
// having consumed exactly one draw.
RasterSample augment(const RasterSample& sample, Rng& rng);

float polyline_length(const Polyline& pts);
Vec2 polyline_point_at(const Polyline& pts, float s);
Vec2 polyline_tangent_at(const Polyline& pts, float s);

bool point_in_polygon(const Polygon& poly, Vec2 p);

// Lowest corridor index whose polygon contains the grid-frame point, or -1.
int corridor_of(const RasterSample& sample, Vec2 grid_pt);

Vec2 world_to_grid(Vec2 w, const GridConfig& g);
Vec2 grid_to_world(Vec2 p, const GridConfig& g);

// Wraps to (-pi, pi].
float wrap_angle(float a);

}  // namespace casp
