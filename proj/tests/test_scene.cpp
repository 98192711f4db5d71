// Copyright (c) 2026 The casp authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "casp/raster_io.hpp"
#include "casp/scene.hpp"
#include "doctest.h"

using namespace casp;

namespace {

constexpr float kPi = 3.14159265358979323846f;

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

bool tensors_equal(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) return false;
  for (size_t i = 0; i < a.size(); ++i)
    if (a.data()[i] != b.data()[i]) return false;
  return true;
}

SceneSpec translated_scene(SceneSpec sc, Vec2 d) {
  auto shift_lines = [&](std::vector<Polyline>& v) {
    for (auto& pl : v)
      for (auto& p : pl) p = p + d;
  };
  shift_lines(sc.center_lines);
  shift_lines(sc.lanes);
  shift_lines(sc.boundaries);
  shift_lines(sc.drivable);
  shift_lines(sc.crossings);
  shift_lines(sc.corridor_paths);
  shift_lines(sc.corridor_polys);
  for (auto& p : sc.gt) p = p + d;
  for (auto& ag : sc.agents)
    for (auto& st : ag.past) {
      st.x += d.x;
      st.y += d.y;
    }
  return sc;
}

// Minimal scene with one stationary square agent at the origin.
SceneSpec square_agent_scene(const GridConfig& g, float heading, float vx, float vy) {
  SceneSpec sc;
  Agent ag;
  ag.extent_fwd = 6.0f;
  ag.extent_side = 6.0f;
  for (int i = 0; i < g.t_in; ++i) {
    AgentState st;
    st.heading = heading;
    st.vx = vx;
    st.vy = vy;
    ag.past.push_back(st);
  }
  sc.agents.push_back(ag);
  sc.ego_index = 0;
  sc.gt.assign(g.t_out, Vec2{0.0f, 0.0f});
  return sc;
}

}  // namespace

TEST_CASE("grid presets and coordinate transforms") {
  GridConfig p = paper_grid();
  CHECK(p.h == 152);
  CHECK(p.w == 96);
  CHECK(p.ego_row == 122);
  CHECK(p.ego_col == 48);
  GridConfig d = desk_grid();
  CHECK(d.h == 76);
  CHECK(d.w == 48);
  CHECK(d.ego_row == 61);
  CHECK(d.ego_col == 24);

  Vec2 origin = world_to_grid({0.0f, 0.0f}, p);
  CHECK(origin.x == 48.0f);
  CHECK(origin.y == 122.0f);
  Vec2 ahead = world_to_grid({2.0f, 10.0f}, p);
  CHECK(ahead.x == 50.0f);
  CHECK(ahead.y == 112.0f);
  Vec2 back = grid_to_world(ahead, p);
  CHECK(back.x == doctest::Approx(2.0f));
  CHECK(back.y == doctest::Approx(10.0f));

  CHECK(kind_from_name("fork") == SceneKind::fork);
  CHECK(std::string(kind_name(SceneKind::t_junction)) == "t_junction");
  CHECK_THROWS_AS(kind_from_name("roundabout"), ConfigError);
}

TEST_CASE("generation is deterministic in seed and kind") {
  GridConfig g = desk_grid();
  for (SceneKind kind : {SceneKind::straight, SceneKind::curve, SceneKind::t_junction,
                         SceneKind::fork}) {
    SceneSpec a = generate_scene(1234, kind, g);
    SceneSpec b = generate_scene(1234, kind, g);
    REQUIRE(a.gt.size() == b.gt.size());
    for (size_t i = 0; i < a.gt.size(); ++i) {
      CHECK(a.gt[i].x == b.gt[i].x);
      CHECK(a.gt[i].y == b.gt[i].y);
    }
    REQUIRE(a.agents.size() == b.agents.size());
    for (size_t i = 0; i < a.agents.size(); ++i)
      for (int t = 0; t < g.t_in; ++t) {
        CHECK(a.agents[i].past[t].x == b.agents[i].past[t].x);
        CHECK(a.agents[i].past[t].heading == b.agents[i].past[t].heading);
      }
    CHECK(a.ego_speed == b.ego_speed);
    SceneSpec c = generate_scene(1235, kind, g);
    CHECK((a.ego_speed != c.ego_speed || a.gt.back().y != c.gt.back().y));
  }
}

TEST_CASE("scene structure invariants") {
  GridConfig g = desk_grid();
  for (uint64_t seed = 0; seed < 8; ++seed) {
    for (SceneKind kind : {SceneKind::straight, SceneKind::curve, SceneKind::t_junction,
                           SceneKind::fork}) {
      SceneSpec sc = generate_scene(seed, kind, g);
      CHECK(static_cast<int>(sc.gt.size()) == g.t_out);
      REQUIRE(!sc.agents.empty());
      CHECK(sc.ego_index == static_cast<int>(sc.agents.size()) - 1);
      for (const Agent& ag : sc.agents)
        CHECK(static_cast<int>(ag.past.size()) == g.t_in);
      CHECK(sc.ego_speed >= 0.0f);
      CHECK(sc.ego_speed <= 15.0f);
      // the current ego state sits at the world origin facing +y
      const AgentState& cur = sc.agents[sc.ego_index].past.back();
      CHECK(std::abs(cur.x) < 1e-4f);
      CHECK(std::abs(cur.y) < 1e-4f);
      CHECK(cur.heading == doctest::Approx(kPi / 2).epsilon(1e-4));
      if (kind == SceneKind::fork || kind == SceneKind::t_junction)
        CHECK(sc.corridor_paths.size() == 2);
    }
  }
}

TEST_CASE("fork corridors separate by more than ten meters at the horizon") {
  GridConfig g = desk_grid();
  for (uint64_t seed = 0; seed < 12; ++seed) {
    SceneSpec sc = generate_scene(seed, SceneKind::fork, g);
    REQUIRE(sc.corridor_paths.size() == 2);
    float horizon = g.t_out * kStepSeconds;
    float s_end = sc.ego_s0 + sc.ego_speed * horizon;
    Vec2 e0 = polyline_point_at(sc.corridor_paths[0], s_end);
    Vec2 e1 = polyline_point_at(sc.corridor_paths[1], s_end);
    CHECK(norm(e0 - e1) > 10.0f);
  }
}

TEST_CASE("zero-speed straight scene has a static future") {
  GridConfig g = desk_grid();
  GenOverrides ov;
  ov.speed = 0.0f;
  SceneSpec sc = generate_scene(5, SceneKind::straight, g, &ov);
  const AgentState& cur = sc.agents[sc.ego_index].past.back();
  for (const Vec2& p : sc.gt) {
    CHECK(p.x == cur.x);
    CHECK(p.y == cur.y);
  }
  RasterSample s = rasterize(sc, g);
  for (const Vec2& p : s.gt) {
    CHECK(p.x == doctest::Approx(s.anchor.x).epsilon(1e-4));
    CHECK(p.y == doctest::Approx(s.anchor.y).epsilon(1e-4));
  }
}

TEST_CASE("ground truth stays on the drivable mask") {
  for (SceneKind kind : {SceneKind::straight, SceneKind::curve, SceneKind::t_junction,
                         SceneKind::fork}) {
    for (uint64_t seed = 20; seed < 25; ++seed) {
      GridConfig g = seed % 2 ? desk_grid() : paper_grid();
      SceneSpec sc = generate_scene(seed, kind, g);
      RasterSample s = rasterize(sc, g);
      for (const Vec2& p : s.gt) {
        int r = static_cast<int>(std::floor(p.y));
        int c = static_cast<int>(std::floor(p.x));
        REQUIRE(r >= 0);
        REQUIRE(r < g.h);
        REQUIRE(c >= 0);
        REQUIRE(c < g.w);
        CHECK(s.drivable.at({static_cast<size_t>(r), static_cast<size_t>(c)}) == 1.0f);
      }
    }
  }
}

TEST_CASE("gt endpoint lands in the generated corridor") {
  GridConfig g = desk_grid();
  for (uint64_t seed = 0; seed < 10; ++seed) {
    SceneSpec sc = generate_scene(seed, SceneKind::fork, g);
    RasterSample s = rasterize(sc, g);
    CHECK(corridor_of(s, s.gt.back()) == sc.gt_corridor);
  }
}

TEST_CASE("rasterizing an empty scene yields zeros") {
  GridConfig g = desk_grid();
  SceneSpec sc;
  sc.agents.push_back(Agent{});
  sc.agents[0].past.resize(g.t_in);
  sc.agents[0].extent_fwd = 0.0f;  // degenerate footprint covers nothing
  sc.agents[0].extent_side = 0.0f;
  sc.gt.assign(g.t_out, Vec2{0.0f, 0.0f});
  RasterSample s = rasterize(sc, g);
  double sum = 0.0;
  for (size_t i = 0; i < s.statics.size(); ++i) sum += std::abs(s.statics.data()[i]);
  for (size_t i = 0; i < s.dynamics.size(); ++i) sum += std::abs(s.dynamics.data()[i]);
  CHECK(sum == 0.0);
}

TEST_CASE("drivable fill matches the corridor area") {
  GridConfig g = paper_grid();
  SceneSpec sc;
  sc.drivable.push_back({{-5.0f, -30.0f}, {5.0f, -30.0f}, {5.0f, 120.0f}, {-5.0f, 120.0f}});
  sc.gt.assign(g.t_out, Vec2{0.0f, 0.0f});
  sc.agents.push_back(Agent{});
  sc.agents[0].past.resize(g.t_in);
  RasterSample s = rasterize(sc, g);
  double sum = 0.0;
  for (size_t i = 0; i < s.statics.size(); ++i) sum += s.statics.data()[i];
  CHECK(sum == 1500.0);  // 10 columns x 150 rows
}

TEST_CASE("ego stamps its features at the anchor cell") {
  GridConfig g = paper_grid();
  size_t r = 122, c = 48;

  // a stationary ego covers the anchor cell at every past step
  GenOverrides ov;
  ov.speed = 0.0f;
  SceneSpec stat = generate_scene(77, SceneKind::straight, g, &ov);
  RasterSample s0 = rasterize(stat, g);
  for (size_t ti = 0; ti < static_cast<size_t>(g.t_in); ++ti) {
    CHECK(s0.dynamics.at({ti, kChHeading, r, c}) == doctest::Approx(kPi / 2).epsilon(1e-4));
    CHECK(s0.dynamics.at({ti, kChVelX, r, c}) == 0.0f);
    CHECK(s0.dynamics.at({ti, kChVelY, r, c}) == doctest::Approx(0.0f).scale(1.0));
    CHECK(s0.dynamics.at({ti, kChExtentFwd, r, c}) == stat.agents[stat.ego_index].extent_fwd);
    CHECK(s0.dynamics.at({ti, kChExtentSide, r, c}) == stat.agents[stat.ego_index].extent_side);
  }
  // the ego sits on the cell's upper-left corner, half a cell from its center
  CHECK(s0.dynamics.at({2, kChOffX, r, c}) == doctest::Approx(-0.5f).epsilon(1e-3));
  CHECK(s0.dynamics.at({2, kChOffY, r, c}) == doctest::Approx(0.5f).epsilon(1e-3));

  // a moving ego covers it at the current (last) step
  SceneSpec sc = generate_scene(77, SceneKind::straight, g);
  RasterSample s = rasterize(sc, g);
  size_t last = static_cast<size_t>(g.t_in) - 1;
  CHECK(s.dynamics.at({last, kChHeading, r, c}) == doctest::Approx(kPi / 2).epsilon(1e-4));
  CHECK(s.dynamics.at({last, kChVelY, r, c}) == doctest::Approx(sc.ego_speed));
}

TEST_CASE("rasterization is deterministic") {
  GridConfig g = desk_grid();
  SceneSpec sc = generate_scene(3, SceneKind::t_junction, g);
  RasterSample a = rasterize(sc, g);
  RasterSample b = rasterize(sc, g);
  CHECK(std::memcmp(a.statics.data(), b.statics.data(), a.statics.size() * 4) == 0);
  CHECK(std::memcmp(a.dynamics.data(), b.dynamics.data(), a.dynamics.size() * 4) == 0);
}

TEST_CASE("rasterization is translation covariant") {
  GridConfig g = paper_grid();
  SceneSpec sc = generate_scene(9, SceneKind::curve, g);
  // 3 cells right, 2 cells down in grid terms
  SceneSpec shifted = translated_scene(sc, {3.0f, -2.0f});
  RasterSample a = rasterize(sc, g);
  RasterSample b = rasterize(shifted, g);
  for (int ch = 0; ch < kStaticChannels; ++ch)
    for (int r = 8; r < g.h - 8; ++r)
      for (int c = 8; c < g.w - 8; ++c) {
        size_t chs = static_cast<size_t>(ch);
        CHECK(b.statics.at({chs, static_cast<size_t>(r), static_cast<size_t>(c)}) ==
              a.statics.at({chs, static_cast<size_t>(r - 2), static_cast<size_t>(c - 3)}));
      }
  // real channels match to float rounding of the shifted world coordinates
  for (int t = 0; t < g.t_in; ++t)
    for (int ch = 0; ch < kDynamicChannels; ++ch)
      for (int r = 8; r < g.h - 8; ++r)
        for (int c = 8; c < g.w - 8; ++c) {
          size_t ts = static_cast<size_t>(t), chs = static_cast<size_t>(ch);
          float vb = b.dynamics.at({ts, chs, static_cast<size_t>(r), static_cast<size_t>(c)});
          float va = a.dynamics.at({ts, chs, static_cast<size_t>(r - 2),
                                    static_cast<size_t>(c - 3)});
          CHECK(std::abs(vb - va) < 1e-5f);
        }
}

TEST_CASE("identity augmentation returns the sample unchanged") {
  GridConfig g = desk_grid();
  RasterSample s = rasterize(generate_scene(11, SceneKind::fork, g), g);
  RasterSample t = apply_rigid(s, 0.0f, 0.0f, 0.0f);
  CHECK(tensors_equal(s.statics, t.statics));
  CHECK(tensors_equal(s.dynamics, t.dynamics));
  CHECK(tensors_equal(s.drivable, t.drivable));
  REQUIRE(t.gt.size() == s.gt.size());
  for (size_t i = 0; i < s.gt.size(); ++i) {
    CHECK(t.gt[i].x == s.gt[i].x);
    CHECK(t.gt[i].y == s.gt[i].y);
  }
  CHECK(t.anchor.x == s.anchor.x);
  CHECK(t.anchor.y == s.anchor.y);
}

TEST_CASE("whole-cell translation shifts raster and gt exactly") {
  GridConfig g = desk_grid();
  RasterSample s = rasterize(generate_scene(13, SceneKind::straight, g), g);
  RasterSample t = apply_rigid(s, 0.0f, 3.0f, 0.0f);
  for (size_t i = 0; i < s.gt.size(); ++i) {
    CHECK(t.gt[i].x == s.gt[i].x + 3.0f);
    CHECK(t.gt[i].y == s.gt[i].y);
  }
  CHECK(t.anchor.x == s.anchor.x + 3.0f);
  for (int ch = 0; ch < kStaticChannels; ++ch)
    for (int r = 0; r < g.h; ++r)
      for (int c = 3; c < g.w; ++c) {
        size_t chs = static_cast<size_t>(ch);
        CHECK(t.statics.at({chs, static_cast<size_t>(r), static_cast<size_t>(c)}) ==
              s.statics.at({chs, static_cast<size_t>(r), static_cast<size_t>(c - 3)}));
      }
  for (int t_i = 0; t_i < g.t_in; ++t_i)
    for (int ch = 0; ch < kDynamicChannels; ++ch)
      for (int r = 0; r < g.h; ++r)
        for (int c = 3; c < g.w; ++c) {
          size_t ts = static_cast<size_t>(t_i), chs = static_cast<size_t>(ch);
          CHECK(t.dynamics.at({ts, chs, static_cast<size_t>(r), static_cast<size_t>(c)}) ==
                s.dynamics.at({ts, chs, static_cast<size_t>(r), static_cast<size_t>(c - 3)}));
        }
}

TEST_CASE("rotation adds theta to headings and rotates vectors") {
  GridConfig g = desk_grid();
  float heading = 0.3f;
  RasterSample s = rasterize(square_agent_scene(g, heading, 2.0f, 1.0f), g);
  float theta = kPi / 3.0f;
  RasterSample t = apply_rigid(s, theta, 0.0f, 0.0f);
  size_t r = static_cast<size_t>(g.ego_row), c = static_cast<size_t>(g.ego_col);
  for (size_t ti = 0; ti < static_cast<size_t>(g.t_in); ++ti) {
    CHECK(t.dynamics.at({ti, kChHeading, r, c}) ==
          doctest::Approx(wrap_angle(heading + theta)).epsilon(1e-5));
    float cs = std::cos(theta), sn = std::sin(theta);
    CHECK(t.dynamics.at({ti, kChVelX, r, c}) == doctest::Approx(cs * 2.0f - sn * 1.0f));
    CHECK(t.dynamics.at({ti, kChVelY, r, c}) == doctest::Approx(sn * 2.0f + cs * 1.0f));
  }
  // a large rotation wraps around instead of leaving the principal range
  RasterSample u = apply_rigid(apply_rigid(s, 3.0f, 0.0f, 0.0f), 3.0f, 0.0f, 0.0f);
  float wrapped = u.dynamics.at({0, kChHeading, r, c});
  CHECK(wrapped == doctest::Approx(wrap_angle(heading + 6.0f)).epsilon(1e-4));
  CHECK(std::abs(wrapped) <= kPi + 1e-5f);
}

TEST_CASE("random augmentation preserves shapes and binary channels") {
  GridConfig g = desk_grid();
  RasterSample s = rasterize(generate_scene(21, SceneKind::t_junction, g), g);
  Rng rng(99);
  int applied = 0, skipped = 0;
  for (int i = 0; i < 24; ++i) {
    RasterSample t = augment(s, rng);
    CHECK(t.statics.shape() == s.statics.shape());
    CHECK(t.dynamics.shape() == s.dynamics.shape());
    for (size_t k = 0; k < t.statics.size(); ++k) {
      float v = t.statics.data()[k];
      CHECK((v == 0.0f || v == 1.0f));
    }
    if (tensors_equal(t.statics, s.statics) && t.anchor.x == s.anchor.x)
      ++skipped;
    else
      ++applied;
  }
  CHECK(applied > 0);
  CHECK(skipped > 0);
}

TEST_CASE("sample container round trips bitwise") {
  GridConfig g = desk_grid();
  RasterSample s = rasterize(generate_scene(31, SceneKind::fork, g), g);
  std::string path = temp_path("casp_roundtrip.casp");
  write_sample(s, path);
  RasterSample t = read_sample(path);
  CHECK(std::memcmp(s.statics.data(), t.statics.data(), s.statics.size() * 4) == 0);
  CHECK(std::memcmp(s.dynamics.data(), t.dynamics.data(), s.dynamics.size() * 4) == 0);
  CHECK(std::memcmp(s.drivable.data(), t.drivable.data(), s.drivable.size() * 4) == 0);
  REQUIRE(t.gt.size() == s.gt.size());
  for (size_t i = 0; i < s.gt.size(); ++i) {
    CHECK(t.gt[i].x == s.gt[i].x);
    CHECK(t.gt[i].y == s.gt[i].y);
  }
  CHECK(t.anchor.x == s.anchor.x);
  CHECK(t.kind == s.kind);
  CHECK(t.grid.h == s.grid.h);
  CHECK(t.grid.t_out == s.grid.t_out);
  REQUIRE(t.corridors.size() == s.corridors.size());
  for (size_t i = 0; i < s.corridors.size(); ++i) {
    REQUIRE(t.corridors[i].size() == s.corridors[i].size());
    for (size_t j = 0; j < s.corridors[i].size(); ++j)
      CHECK(t.corridors[i][j].x == s.corridors[i][j].x);
  }
  // write -> read -> write emits identical bytes
  std::string path2 = temp_path("casp_roundtrip2.casp");
  write_sample(t, path2);
  std::ifstream f1(path, std::ios::binary), f2(path2, std::ios::binary);
  std::string b1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
  std::string b2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
  CHECK(b1 == b2);
  std::filesystem::remove(path);
  std::filesystem::remove(path2);
}

TEST_CASE("corrupted containers are rejected with distinct errors") {
  GridConfig g = desk_grid();
  RasterSample s = rasterize(generate_scene(33, SceneKind::curve, g), g);
  std::string path = temp_path("casp_corrupt.casp");
  write_sample(s, path);
  std::ifstream f(path, std::ios::binary);
  std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  f.close();

  auto rewrite = [&](const std::string& b) {
    std::ofstream o(path, std::ios::binary | std::ios::trunc);
    o.write(b.data(), static_cast<std::streamsize>(b.size()));
  };

  std::string bad = bytes;
  bad[0] = 'X';
  rewrite(bad);
  CHECK_THROWS_WITH_AS(read_sample(path), doctest::Contains("magic"), IoError);

  bad = bytes;
  bad[4] = 9;
  rewrite(bad);
  CHECK_THROWS_WITH_AS(read_sample(path), doctest::Contains("version"), IoError);

  bad = bytes;
  bad[200] = static_cast<char>(bad[200] + 1);
  rewrite(bad);
  CHECK_THROWS_WITH_AS(read_sample(path), doctest::Contains("checksum"), IoError);

  rewrite(bytes.substr(0, 20));
  CHECK_THROWS_WITH_AS(read_sample(path), doctest::Contains("truncated"), IoError);

  CHECK_THROWS_WITH_AS(read_sample(temp_path("casp_does_not_exist.casp")),
                       doctest::Contains("open"), IoError);
  std::filesystem::remove(path);
}

TEST_CASE("golden v1 container stays readable") {
  RasterSample s = read_sample(std::string(CASP_TEST_DATA_DIR) + "/golden_v1.casp");
  CHECK(s.grid.h == 76);
  CHECK(s.grid.w == 48);
  CHECK(s.grid.t_in == 3);
  CHECK(s.grid.t_out == 12);
  CHECK(s.kind == SceneKind::fork);
  CHECK(s.anchor.x == 24.0f);
  CHECK(s.anchor.y == 61.0f);
  double ssum = 0.0, dsum = 0.0;
  for (size_t i = 0; i < s.statics.size(); ++i) ssum += s.statics.data()[i];
  for (size_t i = 0; i < s.dynamics.size(); ++i) dsum += s.dynamics.data()[i];
  CHECK(ssum == 1393.0);
  CHECK(dsum == doctest::Approx(767.222706).epsilon(1e-6));
  CHECK(s.gt[0].x == doctest::Approx(23.9999657f).epsilon(1e-6));
  CHECK(s.gt[0].y == doctest::Approx(58.8137398f).epsilon(1e-6));
  CHECK(s.gt.back().x == doctest::Approx(38.1841469f).epsilon(1e-6));
  CHECK(s.gt.back().y == doctest::Approx(35.8838692f).epsilon(1e-6));
  REQUIRE(s.corridors.size() == 2);
  CHECK(s.corridors[0].size() == 10);
  CHECK(corridor_of(s, s.gt.back()) == 1);
}

TEST_CASE("manifest round trips and rejects malformed lines") {
  std::vector<ManifestEntry> entries = {
      {"samples/a.casp", SceneKind::straight, 1},
      {"samples/b.casp", SceneKind::fork, 18446744073709551615ull},
      {"c.casp", SceneKind::t_junction, 42},
  };
  std::string path = temp_path("casp_manifest.tsv");
  write_manifest(path, entries);
  std::vector<ManifestEntry> back = read_manifest(path);
  REQUIRE(back.size() == entries.size());
  for (size_t i = 0; i < entries.size(); ++i) {
    CHECK(back[i].path == entries[i].path);
    CHECK(back[i].kind == entries[i].kind);
    CHECK(back[i].seed == entries[i].seed);
  }
  {
    std::ofstream o(path, std::ios::trunc);
    o << "only_one_field\n";
  }
  CHECK_THROWS_AS(read_manifest(path), IoError);
  {
    std::ofstream o(path, std::ios::trunc);
    o << "a.casp\tfork\tnot_a_number\n";
  }
  CHECK_THROWS_AS(read_manifest(path), IoError);
  std::filesystem::remove(path);

  CHECK(parent_dir("/tmp/x/y.casp") == "/tmp/x");
  CHECK(parent_dir("y.casp") == ".");
  CHECK(parent_dir("/y.casp") == "/");
}
