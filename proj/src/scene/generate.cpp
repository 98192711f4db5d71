// Copyright (c) 2026 The casp authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "casp/common.hpp"
#include "casp/scene.hpp"

namespace casp {
namespace {

constexpr float kPi = 3.14159265358979323846f;
constexpr float kBack = 30.0f;  // corridor paths start this far behind the ego

struct Road {
  Polyline center;
  float width = 10.0f;
};

struct Geometry {
  std::vector<Road> roads;
  std::vector<Polyline> corridors;  // lane-center future paths from y = -kBack
  std::vector<Polygon> corridor_polys;
  std::vector<Polygon> crossings;
  std::vector<Polygon> extra_drivable;  // turn fillets not covered by any road
  float stem_top = 0.0f;  // y up to which the approach stem runs straight
};

Vec2 left_normal(Vec2 d) { return {-d.y, d.x}; }

Vec2 unit(Vec2 v) {
  float l = norm(v);
  return l > 1e-9f ? (1.0f / l) * v : Vec2{0.0f, 1.0f};
}

Polyline arc_points(Vec2 center, float radius, float a0, float a1) {
  float sweep = a1 - a0;
  int steps = std::max(2, static_cast<int>(std::ceil(std::abs(sweep) * radius / 0.5f)));
  Polyline out;
  out.reserve(steps + 1);
  for (int i = 0; i <= steps; ++i) {
    float a = a0 + sweep * (static_cast<float>(i) / steps);
    out.push_back(center + radius * Vec2{std::cos(a), std::sin(a)});
  }
  return out;
}

void append(Polyline& dst, const Polyline& src) {
  for (const Vec2& p : src) {
    if (!dst.empty() && norm(p - dst.back()) < 1e-5f) continue;
    dst.push_back(p);
  }
}

Polyline offset_polyline(const Polyline& pts, float off) {
  size_t n = pts.size();
  if (n < 2) throw UsageError("offset_polyline: need two points");
  Polyline out(n);
  for (size_t i = 0; i < n; ++i) {
    Vec2 d0 = i > 0 ? pts[i] - pts[i - 1] : pts[1] - pts[0];
    Vec2 d1 = i + 1 < n ? pts[i + 1] - pts[i] : pts[n - 1] - pts[n - 2];
    Vec2 nrm = unit(left_normal(unit(d0)) + left_normal(unit(d1)));
    out[i] = pts[i] + off * nrm;
  }
  return out;
}

Polygon road_polygon(const Polyline& center, float width) {
  Polyline left = offset_polyline(center, width * 0.5f);
  Polyline right = offset_polyline(center, -width * 0.5f);
  Polygon poly = left;
  poly.insert(poly.end(), right.rbegin(), right.rend());
  return poly;
}

Polygon rect(float x0, float x1, float y0, float y1) {
  return {{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}};
}

Polyline trim_front(const Polyline& pts, float s) {
  Polyline out;
  out.push_back(polyline_point_at(pts, s));
  float acc = 0.0f;
  for (size_t i = 1; i < pts.size(); ++i) {
    acc += norm(pts[i] - pts[i - 1]);
    if (acc > s) out.push_back(pts[i]);
  }
  if (out.size() < 2) out.push_back(pts.back());
  return out;
}

void translate(Polyline& pts, Vec2 d) {
  for (auto& p : pts) p = p + d;
}

void translate_all(std::vector<Polyline>& v, Vec2 d) {
  for (auto& pts : v) translate(pts, d);
}

Geometry build_straight(Rng& rng, float ahead) {
  Geometry geo;
  float w = static_cast<float>(rng.uniform(8.0, 12.0));
  float len = ahead + 40.0f;
  Road road{{{0.0f, -kBack - 10.0f}, {0.0f, len}}, w};
  geo.roads.push_back(road);
  geo.corridors.push_back({{w * 0.25f, -kBack}, {w * 0.25f, len}});
  geo.corridor_polys.push_back(road_polygon(road.center, w));
  geo.stem_top = ahead;
  if (rng.uniform() < 0.5) {
    float yc = static_cast<float>(rng.uniform(6.0, 20.0));
    geo.crossings.push_back(rect(-w * 0.5f, w * 0.5f, yc, yc + 2.0f));
  }
  return geo;
}

Geometry build_curve(Rng& rng, float ahead) {
  Geometry geo;
  float w = static_cast<float>(rng.uniform(8.0, 12.0));
  float ys = static_cast<float>(rng.uniform(4.0, 12.0));
  float radius = static_cast<float>(rng.uniform(15.0, 40.0));
  bool left = rng.uniform() < 0.5;
  float sweep = std::min(1.9f, std::max(0.6f, (ahead + 20.0f - ys) / radius));

  auto curve_center = [&](float y_from) {
    Polyline c = {{0.0f, y_from}, {0.0f, ys}};
    if (left)
      append(c, arc_points({-radius, ys}, radius, 0.0f, sweep));
    else
      append(c, arc_points({radius, ys}, radius, kPi, kPi - sweep));
    return c;
  };
  Road road{curve_center(-kBack - 10.0f), w};
  geo.roads.push_back(road);
  geo.corridors.push_back(offset_polyline(curve_center(-kBack), -w * 0.25f));
  geo.corridor_polys.push_back(road_polygon(road.center, w));
  geo.stem_top = ys;
  if (ys >= 8.0f && rng.uniform() < 0.4) {
    float yc = static_cast<float>(rng.uniform(4.0, ys - 3.0));
    geo.crossings.push_back(rect(-w * 0.5f, w * 0.5f, yc, yc + 2.0f));
  }
  return geo;
}

Geometry build_fork(Rng& rng, float ahead) {
  Geometry geo;
  float w = static_cast<float>(rng.uniform(7.0, 9.0));
  float split = static_cast<float>(rng.uniform(4.0, 6.0));
  float phi_l = static_cast<float>(rng.uniform(0.56, 0.77));  // 32..44 degrees
  float phi_r = static_cast<float>(rng.uniform(0.56, 0.77));
  float rt = 6.0f;
  float len_b = ahead + 20.0f;

  Road stem{{{0.0f, -kBack - 10.0f}, {0.0f, split}}, w};

  auto branch = [&](bool to_left, float phi) {
    Polyline b;
    if (to_left) {
      b = arc_points({-rt, split}, rt, 0.0f, phi);
    } else {
      b = arc_points({rt, split}, rt, kPi, kPi - phi);
    }
    float h = to_left ? kPi * 0.5f + phi : kPi * 0.5f - phi;
    float run = len_b - rt * phi;
    b.push_back(b.back() + run * Vec2{std::cos(h), std::sin(h)});
    return b;
  };
  Polyline bl = branch(true, phi_l);
  Polyline br = branch(false, phi_r);
  geo.roads.push_back(stem);
  geo.roads.push_back({bl, w});
  geo.roads.push_back({br, w});

  for (const Polyline* b : {&bl, &br}) {
    Polyline path = {{0.0f, -kBack}, {0.0f, split}};
    append(path, *b);
    geo.corridors.push_back(offset_polyline(path, -w * 0.25f));
    geo.corridor_polys.push_back(road_polygon(trim_front(*b, 3.0f), w));
  }
  geo.stem_top = split;
  return geo;
}

Geometry build_t_junction(Rng& rng, float ahead, float half_w_world) {
  (void)ahead;
  Geometry geo;
  float wa = static_cast<float>(rng.uniform(8.0, 11.0));
  float wc = static_cast<float>(rng.uniform(8.0, 11.0));
  float d = static_cast<float>(rng.uniform(8.0, 14.0));
  float yc = d + wc * 0.5f;
  float x_end = half_w_world + 20.0f;

  geo.roads.push_back({{{0.0f, -kBack - 10.0f}, {0.0f, yc}}, wa});
  geo.roads.push_back({{{0.0f, yc}, {-x_end, yc}}, wc});
  geo.roads.push_back({{{0.0f, yc}, {x_end, yc}}, wc});

  float r1 = static_cast<float>(rng.uniform(4.0, 6.0));
  float lane = wa * 0.25f;
  {
    float y_lane = yc - wc * 0.25f;  // rightward arm, driving +x
    Polyline path = {{lane, -kBack}, {lane, y_lane - r1}};
    append(path, arc_points({lane + r1, y_lane - r1}, r1, kPi, kPi * 0.5f));
    path.push_back({x_end - 5.0f, y_lane});
    geo.corridors.push_back(path);
  }
  {
    float r2 = r1 + wc * 0.5f;
    float y_lane = yc + wc * 0.25f;  // leftward arm, driving -x
    Polyline path = {{lane, -kBack}, {lane, y_lane - r2}};
    append(path, arc_points({lane - r2, y_lane - r2}, r2, 0.0f, kPi * 0.5f));
    path.push_back({-x_end + 5.0f, y_lane});
    geo.corridors.push_back(path);
  }
  geo.corridor_polys.push_back(rect(wa * 0.5f + 1.0f, x_end, yc - wc * 0.5f, yc + wc * 0.5f));
  geo.corridor_polys.push_back(rect(-x_end, -wa * 0.5f - 1.0f, yc - wc * 0.5f, yc + wc * 0.5f));
  float wt = std::min(wa, wc);
  for (const Polyline& path : geo.corridors)
    geo.extra_drivable.push_back(road_polygon(path, wt));
  geo.crossings.push_back(rect(-wa * 0.5f, wa * 0.5f, d - 4.5f, d - 2.5f));
  geo.stem_top = d;
  return geo;
}

// Arclength along `path` from s0 until the point leaves the grid interior
// (two-cell margin).
float grid_arclength(const Polyline& path, float s0, const GridConfig& g) {
  float total = polyline_length(path);
  float margin = 2.0f;
  for (float s = s0; s <= total; s += 0.5f) {
    Vec2 p = world_to_grid(polyline_point_at(path, s), g);
    if (p.x < margin || p.x > g.w - margin || p.y < margin || p.y > g.h - margin)
      return s - s0;
  }
  return total - s0;
}

AgentState state_on_path(const Polyline& path, float s0, float v, float a, float t) {
  float s = s0 + v * t + 0.5f * a * t * t;
  Vec2 p = polyline_point_at(path, s);
  Vec2 tan = polyline_tangent_at(path, s);
  AgentState st;
  st.x = p.x;
  st.y = p.y;
  st.heading = std::atan2(tan.y, tan.x);
  float vt = v + a * t;
  st.vx = vt * tan.x;
  st.vy = vt * tan.y;
  st.ax = a * tan.x;
  st.ay = a * tan.y;
  return st;
}

Agent path_agent(const Polyline& path, float s0, float v, float a, int t_in, Rng& rng) {
  Agent agent;
  agent.extent_fwd = static_cast<float>(rng.uniform(4.2, 5.0));
  agent.extent_side = static_cast<float>(rng.uniform(1.8, 2.1));
  for (int i = 0; i < t_in; ++i) {
    float t = -(t_in - 1 - i) * kStepSeconds;
    agent.past.push_back(state_on_path(path, s0, v, a, t));
  }
  return agent;
}

Agent line_agent(Vec2 pos, Vec2 dir, float v, int t_in, Rng& rng) {
  Agent agent;
  agent.extent_fwd = static_cast<float>(rng.uniform(4.2, 5.0));
  agent.extent_side = static_cast<float>(rng.uniform(1.8, 2.1));
  float heading = std::atan2(dir.y, dir.x);
  for (int i = 0; i < t_in; ++i) {
    float t = -(t_in - 1 - i) * kStepSeconds;
    AgentState st;
    Vec2 p = pos + (v * t) * dir;
    st.x = p.x;
    st.y = p.y;
    st.heading = heading;
    st.vx = v * dir.x;
    st.vy = v * dir.y;
    agent.past.push_back(st);
  }
  return agent;
}

}  // namespace

SceneSpec generate_scene(uint64_t seed, SceneKind kind, const GridConfig& grid,
                         const GenOverrides* overrides) {
  Rng rng(hash_mix(seed, 0x7363656eull + static_cast<uint64_t>(kind)));
  float ahead = grid.ego_row * grid.resolution;
  float half_w_world = 0.5f * grid.w * grid.resolution;

  Geometry geo;
  switch (kind) {
    case SceneKind::straight: geo = build_straight(rng, ahead); break;
    case SceneKind::curve: geo = build_curve(rng, ahead); break;
    case SceneKind::t_junction: geo = build_t_junction(rng, ahead, half_w_world); break;
    case SceneKind::fork: geo = build_fork(rng, ahead); break;
  }

  int pick = 0;
  if (geo.corridors.size() > 1)
    pick = static_cast<int>(rng.uniform_int(geo.corridors.size()));
  if (overrides && overrides->corridor) pick = *overrides->corridor;
  if (pick < 0 || pick >= static_cast<int>(geo.corridors.size()))
    throw ConfigError("corridor override out of range");

  float lat = static_cast<float>(rng.uniform(-1.0, 1.0));
  Polyline ego_path = offset_polyline(geo.corridors[pick], lat);
  Vec2 p0 = polyline_point_at(ego_path, kBack);
  Vec2 shift = {-p0.x, -p0.y};
  translate(ego_path, shift);
  for (auto& r : geo.roads) translate(r.center, shift);
  translate_all(geo.corridors, shift);
  translate_all(geo.corridor_polys, shift);
  translate_all(geo.crossings, shift);
  translate_all(geo.extra_drivable, shift);

  float th = grid.t_out * kStepSeconds;
  float accel = static_cast<float>(kind == SceneKind::fork ? rng.uniform(-0.1, 0.4)
                                                           : rng.uniform(-0.4, 0.4));
  float s_avail = grid_arclength(ego_path, kBack, grid) - 2.0f;
  float v_cap = std::min(15.0f, (s_avail - 0.5f * std::max(accel, 0.0f) * th * th) / th);
  float v_lo = kind == SceneKind::fork ? 3.5f : 3.0f;
  float v;
  if (v_cap <= v_lo) {
    v = std::max(0.5f, 0.8f * v_cap);
    accel = std::min(accel, 0.0f);
  } else {
    v = static_cast<float>(rng.uniform(v_lo, v_cap));
  }
  if (overrides && overrides->speed) {
    v = *overrides->speed;
    accel = 0.0f;
  } else {
    accel = std::max(accel, (0.3f - v) / th);
  }

  SceneSpec scene;
  scene.kind = kind;
  scene.gt_corridor = pick;
  scene.ego_speed = v;
  scene.ego_accel = accel;
  scene.ego_s0 = kBack;
  for (int i = 1; i <= grid.t_out; ++i) {
    float t = i * kStepSeconds;
    float s = kBack + v * t + 0.5f * accel * t * t;
    scene.gt.push_back(polyline_point_at(ego_path, s));
  }

  // Non-ego agents first; the ego stamps last and wins raster overlaps.
  bool want_lead = rng.uniform() < 0.6;
  float lead_gap = static_cast<float>(rng.uniform(8.0, 18.0));
  float lead_v = static_cast<float>(rng.uniform(2.0, 9.0));
  bool want_oncoming = rng.uniform() < 0.5 && geo.stem_top >= 8.0f;
  float on_y = static_cast<float>(
      rng.uniform(4.0, std::max(5.0f, std::min(25.0f, geo.stem_top - 2.0f))));
  float on_v = static_cast<float>(rng.uniform(3.0, 8.0));
  int allowed = overrides && overrides->agent_count ? *overrides->agent_count : 2;

  if (want_lead && allowed-- > 0)
    scene.agents.push_back(
        path_agent(geo.corridors[pick], kBack + lead_gap, lead_v, 0.0f, grid.t_in, rng));
  if (want_oncoming && allowed-- > 0) {
    float on_x = geo.roads[0].center.front().x + geo.roads[0].width * 0.25f;
    scene.agents.push_back(line_agent({on_x, on_y}, {0.0f, -1.0f}, on_v, grid.t_in, rng));
  }
  scene.agents.push_back(path_agent(ego_path, kBack, v, accel, grid.t_in, rng));
  scene.ego_index = static_cast<int>(scene.agents.size()) - 1;

  for (const Road& r : geo.roads) {
    scene.center_lines.push_back(r.center);
    scene.lanes.push_back(offset_polyline(r.center, r.width * 0.25f));
    scene.lanes.push_back(offset_polyline(r.center, -r.width * 0.25f));
    scene.boundaries.push_back(offset_polyline(r.center, r.width * 0.5f));
    scene.boundaries.push_back(offset_polyline(r.center, -r.width * 0.5f));
    scene.drivable.push_back(road_polygon(r.center, r.width));
  }
  for (Polygon& poly : geo.extra_drivable) scene.drivable.push_back(std::move(poly));
  scene.crossings = geo.crossings;
  scene.corridor_paths = geo.corridors;
  scene.corridor_polys = geo.corridor_polys;
  return scene;
}

}  // namespace casp
