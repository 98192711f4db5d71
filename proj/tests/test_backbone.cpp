// Copyright (c) 2026 The casp authors
// SPDX-License-Identifier: Apache-2.0
//
// Feature-pyramid encoder: level-shape arithmetic on both grid presets,
// bitwise reproducibility from a seed, time-order sensitivity of the
// recurrent dynamic path, full finite-difference agreement at 64 bit, and
// gradient liveness of every parameter.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstring>
#include <string>
#include <vector>

#include "casp/backbone.hpp"
#include "casp/common.hpp"
#include "casp/gradcheck.hpp"
#include "casp/ops.hpp"
#include "casp/params.hpp"
#include "casp/tensor.hpp"
#include "doctest.h"

using namespace casp;

namespace {

template <class T>
TensorT<T> rand_t(Rng& rng, std::vector<std::size_t> shape, double lo = -1.0, double hi = 1.0) {
  TensorT<T> t(std::move(shape));
  T* p = t.mutable_data();
  for (std::size_t i = 0; i < t.size(); ++i) p[i] = static_cast<T>(rng.uniform(lo, hi));
  return t;
}

bool same_bits(const Tensor& a, const Tensor& b) {
  return a.shape() == b.shape() &&
         std::memcmp(a.data(), b.data(), a.size() * sizeof(float)) == 0;
}

}  // namespace

TEST_CASE("pyramid shapes follow the stride schedule") {
  auto paper = pyramid_shapes(152, 96, 4);
  REQUIRE(paper.size() == 4);
  CHECK(paper[0] == std::pair<std::size_t, std::size_t>{5, 3});
  CHECK(paper[1] == std::pair<std::size_t, std::size_t>{10, 6});
  CHECK(paper[2] == std::pair<std::size_t, std::size_t>{19, 12});
  CHECK(paper[3] == std::pair<std::size_t, std::size_t>{38, 24});

  auto desk = pyramid_shapes(76, 48, 4);
  REQUIRE(desk.size() == 4);
  CHECK(desk[0] == std::pair<std::size_t, std::size_t>{3, 2});
  CHECK(desk[1] == std::pair<std::size_t, std::size_t>{5, 3});
  CHECK(desk[2] == std::pair<std::size_t, std::size_t>{10, 6});
  CHECK(desk[3] == std::pair<std::size_t, std::size_t>{19, 12});

  for (std::size_t l = 0; l + 1 < desk.size(); ++l) {
    CHECK(desk[l + 1].first == (2 * desk[l].first) - (desk[l + 1].first % 2 == 0 ? 0 : 1));
    CHECK(desk[l + 1].first <= 2 * desk[l].first);
    CHECK(desk[l + 1].first >= 2 * desk[l].first - 1);
  }

  CHECK_THROWS_AS(pyramid_shapes(150, 96, 4), ShapeError);
  CHECK_THROWS_AS(pyramid_shapes(76, 46, 4), ShapeError);
  CHECK_THROWS_AS(pyramid_shapes(0, 48, 4), ShapeError);
  CHECK_THROWS_AS(pyramid_shapes(76, 48, 0), ConfigError);
}

TEST_CASE("forward produces the documented level shapes on both presets") {
  for (const GridConfig& g : {desk_grid(), paper_grid()}) {
    BackboneConfig cfg;
    cfg.d = 16;
    Rng rng(11);
    ParamStore ps;
    Backbone net(cfg, ps, rng);

    const std::size_t batch = 2;
    const auto h = (std::size_t)g.h, w = (std::size_t)g.w;
    Rng drng(5);
    Tensor statics = rand_t<float>(drng, {batch, kStaticChannels, h, w}, 0.0, 1.0);
    Tensor dynamics = rand_t<float>(drng, {batch, (std::size_t)g.t_in, kDynamicChannels, h, w});

    auto st = net.encode_static(nullptr, statics);
    auto dy = net.encode_dynamic(nullptr, dynamics);
    auto fused = net.fuse(nullptr, st, dy);
    auto shapes = pyramid_shapes(h, w, cfg.levels);
    REQUIRE(fused.size() == shapes.size());
    for (std::size_t l = 0; l < fused.size(); ++l) {
      for (const auto* pyr : {&st, &dy, &fused}) {
        CHECK((*pyr)[l].dim(0) == batch);
        CHECK((*pyr)[l].dim(1) == cfg.d);
        CHECK((*pyr)[l].dim(2) == shapes[l].first);
        CHECK((*pyr)[l].dim(3) == shapes[l].second);
      }
    }
    // Coarse to fine: resolution grows down the list.
    for (std::size_t l = 0; l + 1 < fused.size(); ++l)
      CHECK(fused[l].dim(2) < fused[l + 1].dim(2));
  }
}

TEST_CASE("same seed reproduces parameters and forward bitwise") {
  BackboneConfig cfg;
  cfg.d = 12;
  ParamStore ps1, ps2;
  Rng r1(77), r2(77);
  Backbone net1(cfg, ps1, r1);
  Backbone net2(cfg, ps2, r2);

  REQUIRE(ps1.size() == ps2.size());
  CHECK(ps1.scalar_count() == ps2.scalar_count());
  for (std::size_t i = 0; i < ps1.size(); ++i) {
    CHECK(ps1.items()[i].first == ps2.items()[i].first);
    CHECK(same_bits(ps1.items()[i].second, ps2.items()[i].second));
  }

  Rng drng(3);
  Tensor statics = rand_t<float>(drng, {1, kStaticChannels, 24, 16}, 0.0, 1.0);
  Tensor dynamics = rand_t<float>(drng, {1, 3, kDynamicChannels, 24, 16});
  auto a = net1.forward(nullptr, statics, dynamics);
  auto b = net2.forward(nullptr, statics, dynamics);
  REQUIRE(a.size() == b.size());
  for (std::size_t l = 0; l < a.size(); ++l) CHECK(same_bits(a[l], b[l]));

  ParamStore ps3;
  Rng r3(78);
  Backbone net3(cfg, ps3, r3);
  bool all_equal = true;
  for (std::size_t i = 0; i < ps1.size(); ++i)
    all_equal = all_equal && same_bits(ps1.items()[i].second, ps3.items()[i].second);
  CHECK_FALSE(all_equal);
}

TEST_CASE("dynamic encoding is sensitive to time order") {
  BackboneConfig cfg;
  cfg.d = 12;
  ParamStore ps;
  Rng rng(21);
  Backbone net(cfg, ps, rng);

  Rng drng(9);
  Tensor dynamics = rand_t<float>(drng, {1, 3, kDynamicChannels, 24, 16});
  Tensor reversed(dynamics.shape());
  const std::size_t step = dynamics.size() / 3;
  for (std::size_t t = 0; t < 3; ++t)
    std::memcpy(reversed.mutable_data() + (2 - t) * step, dynamics.data() + t * step,
                step * sizeof(float));

  auto fwd = net.encode_dynamic(nullptr, dynamics);
  auto rev = net.encode_dynamic(nullptr, reversed);
  double max_diff = 0;
  const Tensor& a = fwd.back();
  const Tensor& b = rev.back();
  for (std::size_t i = 0; i < a.size(); ++i)
    max_diff = std::max(max_diff, (double)std::abs(a.data()[i] - b.data()[i]));
  CHECK(max_diff > 1e-4);
}

TEST_CASE("single-step dynamic input works and zero steps are rejected") {
  BackboneConfig cfg;
  cfg.d = 8;
  cfg.levels = 3;
  ParamStore ps;
  Rng rng(4);
  Backbone net(cfg, ps, rng);

  Rng drng(2);
  Tensor one_step = rand_t<float>(drng, {2, 1, kDynamicChannels, 16, 12});
  auto dy = net.encode_dynamic(nullptr, one_step);
  CHECK(dy.back().dim(2) == 4);
  CHECK(dy.back().dim(3) == 3);

  Tensor empty({2, 0, kDynamicChannels, 16, 12});
  CHECK_THROWS_AS(net.encode_dynamic(nullptr, empty), ConfigError);
  Tensor bad_channels({2, 2, kDynamicChannels + 1, 16, 12});
  CHECK_THROWS_AS(net.encode_dynamic(nullptr, bad_channels), ShapeError);
  Tensor bad_static({2, kStaticChannels + 1, 16, 12});
  CHECK_THROWS_AS(net.encode_static(nullptr, bad_static), ShapeError);
  Tensor bad_grid({2, kStaticChannels, 18, 12});
  CHECK_THROWS_AS(net.encode_static(nullptr, bad_grid), ShapeError);
}

TEST_CASE("fuse validates level counts and shapes") {
  BackboneConfig cfg;
  cfg.d = 8;
  cfg.levels = 2;
  ParamStore ps;
  Rng rng(4);
  Backbone net(cfg, ps, rng);
  Rng drng(6);
  Tensor statics = rand_t<float>(drng, {1, kStaticChannels, 16, 16}, 0.0, 1.0);
  Tensor dynamics = rand_t<float>(drng, {1, 2, kDynamicChannels, 16, 16});
  auto st = net.encode_static(nullptr, statics);
  auto dy = net.encode_dynamic(nullptr, dynamics);
  auto short_dy = dy;
  short_dy.pop_back();
  CHECK_THROWS_AS(net.fuse(nullptr, st, short_dy), ShapeError);
  auto swapped = dy;
  std::swap(swapped[0], swapped[1]);
  CHECK_THROWS_AS(net.fuse(nullptr, st, swapped), ShapeError);
  CHECK(net.fuse(nullptr, st, dy).size() == 2);
}

TEST_CASE("full backbone agrees with finite differences at 64 bit") {
  BackboneConfig cfg;
  cfg.d = 8;
  cfg.levels = 3;
  ParamStoreT<double> ps;
  Rng prng(17);
  BackboneT<double> proto(cfg, ps, prng);

  Rng drng(31);
  Tensor64 statics = rand_t<double>(drng, {1, kStaticChannels, 16, 12}, 0.0, 1.0);
  Tensor64 dynamics = rand_t<double>(drng, {1, 2, kDynamicChannels, 16, 12});

  std::vector<std::string> names;
  std::vector<Tensor64> inputs;
  for (const auto& [n, t] : ps.items()) {
    names.push_back(n);
    inputs.push_back(t);
  }
  inputs.push_back(statics);
  inputs.push_back(dynamics);

  auto fn = [&](Tape<double>& tape, const std::vector<Tensor64>& in) {
    ParamStoreT<double> bound;
    for (std::size_t i = 0; i < names.size(); ++i) bound.put(names[i], in[i]);
    Rng unused(0);
    BackboneT<double> net(cfg, bound, unused);
    auto pyr = net.forward(&tape, in[names.size()], in[names.size() + 1]);
    Tensor64 loss;
    for (const auto& level : pyr) {
      Tensor64 term = sum(mul(level, level));
      loss = loss.defined() ? add(loss, term) : term;
    }
    return loss;
  };
  double err = grad_check<double>(fn, inputs, 1e-4, 2, 123);
  CHECK(err < 1e-3);
}

TEST_CASE("every parameter receives gradient on random batches") {
  BackboneConfig cfg;
  cfg.d = 12;
  ParamStore ps;
  Rng rng(55);
  Backbone net(cfg, ps, rng);

  std::vector<bool> alive(ps.size(), false);
  Rng drng(8);
  for (int batch = 0; batch < 3; ++batch) {
    Tape<float> tape;
    Tensor statics = rand_t<float>(drng, {2, kStaticChannels, 24, 16}, 0.0, 1.0);
    Tensor dynamics = rand_t<float>(drng, {2, 3, kDynamicChannels, 24, 16});
    auto pyr = net.forward(&tape, statics, dynamics);
    Tensor loss;
    for (const auto& level : pyr) {
      Tensor term = sum(mul(level, level));
      loss = loss.defined() ? add(loss, term) : term;
    }
    auto grads = tape.backward(loss);
    for (std::size_t i = 0; i < ps.size(); ++i) {
      Tensor bound = tape.leaf(ps.items()[i].second);
      if (!grads.has(bound)) continue;
      const Tensor& g = grads.grad(bound);
      for (std::size_t j = 0; j < g.size(); ++j)
        if (g.data()[j] != 0.0f) {
          alive[i] = true;
          break;
        }
    }
  }
  for (std::size_t i = 0; i < ps.size(); ++i) {
    INFO("parameter ", ps.items()[i].first);
    CHECK(alive[i]);
  }
}
