// Copyright (c) 2026 The casp authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstring>
#include <vector>

#include "casp/ops.hpp"
#include "casp/tensor.hpp"
#include "doctest.h"

using namespace casp;

TEST_CASE("construction and accessors") {
  Tensor t({2, 3});
  CHECK(t.rank() == 2);
  CHECK(t.size() == 6);
  CHECK(t.at({1, 2}) == 0.f);
  t.set({1, 2}, 5.f);
  CHECK(t.at({1, 2}) == 5.f);

  Tensor s = Tensor::scalar(3.f);
  CHECK(s.rank() == 0);
  CHECK(s.size() == 1);
  CHECK(s.item() == 3.f);

  CHECK_THROWS_AS(Tensor({2, 2}, {1.f, 2.f, 3.f}), ShapeError);
  CHECK_THROWS_AS(t.item(), UsageError);
  CHECK_THROWS_AS(t.at({2, 0}), ShapeError);

  Tensor shallow = t;
  shallow.mutable_data()[0] = 9.f;
  CHECK(t.at({0, 0}) == 9.f);
  Tensor deep = t.clone();
  deep.mutable_data()[0] = 1.f;
  CHECK(t.at({0, 0}) == 9.f);
}

TEST_CASE("elementwise basics") {
  Tensor a({2}, {1.f, 2.f});
  Tensor b({2}, {3.f, 4.f});
  Tensor c = add(a, b);
  CHECK(c.at({0}) == 4.f);
  CHECK(c.at({1}) == 6.f);

  Tensor r = relu(Tensor({3}, {-1.f, 0.f, 2.f}));
  CHECK(r.at({0}) == 0.f);
  CHECK(r.at({1}) == 0.f);
  CHECK(r.at({2}) == 2.f);

  CHECK(abs(Tensor({1}, {-2.5f})).at({0}) == 2.5f);
  CHECK(neg(Tensor({1}, {2.f})).at({0}) == -2.f);
  CHECK(sigmoid(Tensor({1}, {0.f})).at({0}) == doctest::Approx(0.5));
  CHECK(casp::exp(Tensor({1}, {0.f})).at({0}) == 1.f);
  CHECK(casp::log(Tensor({1}, {1.f})).at({0}) == 0.f);
}

TEST_CASE("elementwise usage and domain errors") {
  Tensor a({2}, {1.f, 2.f});
  Tensor b({2}, {0.f, 1.f});
  CHECK_THROWS_AS(elementwise(Ew::neg, a, &b), UsageError);
  CHECK_THROWS_AS(elementwise<float>(Ew::add, a, nullptr), UsageError);
  CHECK_THROWS_AS(div(a, b), DomainError);
  CHECK_THROWS_AS(casp::log(Tensor({1}, {-1.f})), DomainError);
  CHECK_THROWS_AS(casp::log(Tensor({1}, {0.f})), DomainError);

  EwPolicy relaxed{false, 1e-6};
  Tensor q = div(a, b, relaxed);
  CHECK(q.at({0}) == doctest::Approx(1e6));
  Tensor lg = casp::log(Tensor({1}, {0.f}), relaxed);
  CHECK(lg.at({0}) == doctest::Approx(std::log(1e-6)));
  CHECK_THROWS_AS(casp::sqrt(Tensor({1}, {-1.f})), DomainError);
}

TEST_CASE("broadcasting table") {
  auto shp = [](const Tensor& t) { return t.shape(); };
  using S = std::vector<std::size_t>;

  CHECK(shp(add(Tensor::scalar(1.f), Tensor({2}, {1.f, 2.f}))) == S{2});
  CHECK(shp(mul(Tensor({3, 1}), Tensor({1, 4}))) == S{3, 4});
  CHECK(shp(add(Tensor({2, 3}), Tensor({3}))) == S{2, 3});
  CHECK(shp(mul(Tensor({2, 1, 3}), Tensor({4, 1}))) == S{2, 4, 3});
  CHECK(shp(add(Tensor({1}), Tensor({5, 1}))) == S{5, 1});
  CHECK(shp(sub(Tensor({4, 1, 2}), Tensor({1, 3, 1}))) == S{4, 3, 2});
  CHECK_THROWS_AS(add(Tensor({2, 3}), Tensor({4})), ShapeError);
  CHECK_THROWS_AS(add(Tensor({2, 3}), Tensor({2, 4})), ShapeError);

  Tensor row = add(Tensor({2, 3}, {0, 0, 0, 10, 10, 10}), Tensor({3}, {1, 2, 3}));
  CHECK(row.at({0, 2}) == 3.f);
  CHECK(row.at({1, 0}) == 11.f);

  Tensor col = mul(Tensor({2, 1}, {2, 3}), Tensor({1, 2}, {5, 7}));
  CHECK(col.at({0, 0}) == 10.f);
  CHECK(col.at({1, 1}) == 21.f);
}

TEST_CASE("matmul values") {
  Tensor eye({2, 2}, {1, 0, 0, 1});
  Tensor v({2, 1}, {5, 7});
  Tensor r = matmul(eye, v);
  CHECK(r.at({0, 0}) == 5.f);
  CHECK(r.at({1, 0}) == 7.f);

  Tensor a({2, 2}, {1, 2, 3, 4});
  Tensor ones({2, 1}, {1, 1});
  Tensor s = matmul(a, ones);
  CHECK(s.at({0, 0}) == 3.f);
  CHECK(s.at({1, 0}) == 7.f);

  CHECK_THROWS_AS(matmul(Tensor({2, 3}), Tensor({2, 3})), ShapeError);
  CHECK_THROWS_AS(matmul(Tensor({3}), Tensor({3, 2})), ShapeError);

  // batched with broadcast leading dim
  Tensor ab({2, 2, 2}, {1, 0, 0, 1, 2, 0, 0, 2});
  Tensor bb({2, 1}, {1, 3});
  Tensor rr = matmul(ab, bb);
  CHECK(rr.shape() == std::vector<std::size_t>{2, 2, 1});
  CHECK(rr.at({0, 0, 0}) == 1.f);
  CHECK(rr.at({1, 1, 0}) == 6.f);
}

TEST_CASE("conv2d values") {
  // 1x1 kernel of value 1 is the identity map
  Tensor x({1, 1, 3, 3}, {1, 2, 3, 4, 5, 6, 7, 8, 9});
  Tensor w1({1, 1, 1, 1}, {1});
  Tensor y = conv2d(x, w1, 1, 0);
  CHECK(y.shape() == std::vector<std::size_t>{1, 1, 3, 3});
  CHECK(std::memcmp(y.data(), x.data(), 9 * sizeof(float)) == 0);

  // 3x3 all-ones kernel on 3x3 all-ones input, pad 0 -> [[9]]
  Tensor xo = Tensor::full({1, 1, 3, 3}, 1.f);
  Tensor wo = Tensor::full({1, 1, 3, 3}, 1.f);
  Tensor yo = conv2d(xo, wo, 1, 0);
  CHECK(yo.shape() == std::vector<std::size_t>{1, 1, 1, 1});
  CHECK(yo.item() == 9.f);

  // stride-2 pad-1 halving: 4x4 -> ceil(4/2)=2... H'=(4+2-3)/2+1=2
  Tensor h = conv2d(Tensor({1, 1, 4, 4}), Tensor({1, 1, 3, 3}), 2, 1);
  CHECK(h.shape() == std::vector<std::size_t>{1, 1, 2, 2});
  // odd input: H'=(5+2-3)/2+1=3
  Tensor h2 = conv2d(Tensor({1, 1, 5, 5}), Tensor({1, 1, 3, 3}), 2, 1);
  CHECK(h2.shape() == std::vector<std::size_t>{1, 1, 3, 3});

  Tensor bias({1}, {10.f});
  Tensor yb = conv2d(xo, wo, &bias, 1, 0);
  CHECK(yb.item() == 19.f);

  CHECK_THROWS_AS(conv2d(x, Tensor({1, 1, 2, 2}), 1, 0), ShapeError);
  CHECK_THROWS_AS(conv2d(Tensor({1, 1, 2, 2}), Tensor({1, 1, 5, 5}), 1, 0), ShapeError);
  CHECK_THROWS_AS(conv2d(x, Tensor({1, 2, 1, 1}), 1, 0), ShapeError);
}

TEST_CASE("bilinear sample values") {
  Tensor v({1, 1, 4, 4});
  for (std::size_t i = 0; i < 16; ++i) v.mutable_data()[i] = static_cast<float>(i);

  // point at the center of pixel (row 1, col 2)
  Tensor pt({1, 1, 2}, {2.5f / 4.f, 1.5f / 4.f});
  Tensor out = bilinear_sample(v, pt);
  CHECK(out.shape() == std::vector<std::size_t>{1, 1, 1});
  CHECK(out.item() == doctest::Approx(6.0));

  // midpoint of 4 pixels valued 0,0,4,4 -> 2
  Tensor v2({1, 1, 2, 2}, {0, 0, 4, 4});
  Tensor mid({1, 1, 2}, {0.5f, 0.5f});
  CHECK(bilinear_sample(v2, mid).item() == doctest::Approx(2.0));

  // out-of-bounds neighbors read zero: sample far outside
  Tensor far({1, 1, 2}, {-2.f, -2.f});
  CHECK(bilinear_sample(v2, far).item() == 0.f);
  // grid corner (0,0): only pixel (0,0) is in range, at weight 1/4
  Tensor v3({1, 1, 2, 2}, {8, 0, 4, 4});
  Tensor corner({1, 1, 2}, {0.f, 0.f});
  CHECK(bilinear_sample(v3, corner).item() == doctest::Approx(2.0));
}

TEST_CASE("softmax") {
  Tensor u = softmax(Tensor({3}, {0, 0, 0}), 0);
  for (std::size_t i = 0; i < 3; ++i) CHECK(u.at({i}) == doctest::Approx(1.0 / 3));

  Tensor st = softmax(Tensor({2}, {1000.f, 0.f}), 0);
  CHECK(st.at({0}) == doctest::Approx(1.0));
  CHECK(st.at({1}) == doctest::Approx(0.0));
  CHECK(std::isfinite(st.at({0})));

  Tensor m({2, 3}, {1, 2, 3, 3, 2, 1});
  Tensor sm = softmax(m, 1);
  for (std::size_t r = 0; r < 2; ++r) {
    float tot = 0;
    for (std::size_t c = 0; c < 3; ++c) tot += sm.at({r, c});
    CHECK(tot == doctest::Approx(1.0).epsilon(1e-6));
  }
  Tensor sm0 = softmax(m, 0);
  CHECK(sm0.at({0, 0}) + sm0.at({1, 0}) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("layernorm") {
  Tensor x({2, 4}, {1, 2, 3, 4, -1, 0, 5, 2});
  Tensor gamma = Tensor::full({4}, 1.f);
  Tensor beta({4});
  Tensor y = layernorm(x, gamma, beta, 1);
  for (std::size_t r = 0; r < 2; ++r) {
    double m = 0, var = 0;
    for (std::size_t c = 0; c < 4; ++c) m += y.at({r, c});
    m /= 4;
    CHECK(m == doctest::Approx(0.0).epsilon(1e-6));
    for (std::size_t c = 0; c < 4; ++c) var += y.at({r, c}) * y.at({r, c});
    CHECK(var / 4 == doctest::Approx(1.0).epsilon(1e-3));
  }
  Tensor gamma2 = Tensor::full({4}, 2.f);
  Tensor beta2 = Tensor::full({4}, 1.f);
  Tensor y2 = layernorm(x, gamma2, beta2, 1);
  CHECK(y2.at({0, 0}) == doctest::Approx(2.0 * y.at({0, 0}) + 1.0));
  CHECK_THROWS_AS(layernorm(x, Tensor({3}), beta, 1), ShapeError);
}

TEST_CASE("reductions") {
  Tensor x({2, 3}, {1, 2, 3, 4, 5, 6});
  CHECK(sum(x).item() == 21.f);
  CHECK(mean(x).item() == doctest::Approx(3.5));

  Tensor s0 = sum_axes(x, {0});
  CHECK(s0.shape() == std::vector<std::size_t>{3});
  CHECK(s0.at({0}) == 5.f);
  CHECK(s0.at({2}) == 9.f);

  Tensor s1 = sum_axes(x, {1}, true);
  CHECK(s1.shape() == std::vector<std::size_t>{2, 1});
  CHECK(s1.at({0, 0}) == 6.f);
  CHECK(s1.at({1, 0}) == 15.f);

  Tensor m1 = mean_axes(x, {1});
  CHECK(m1.at({1}) == doctest::Approx(5.0));

  Tensor all = sum_axes(x, {0, 1});
  CHECK(all.rank() == 0);
  CHECK(all.item() == 21.f);
  CHECK_THROWS_AS(sum_axes(x, {2}), ShapeError);
}

TEST_CASE("shape ops") {
  Tensor x({2, 3}, {1, 2, 3, 4, 5, 6});
  Tensor r = reshape(x, {3, 2});
  CHECK(r.at({2, 1}) == 6.f);
  CHECK_THROWS_AS(reshape(x, {4, 2}), ShapeError);

  Tensor p = permute(x, {1, 0});
  CHECK(p.shape() == std::vector<std::size_t>{3, 2});
  CHECK(p.at({0, 1}) == 4.f);
  CHECK(p.at({2, 0}) == 3.f);
  CHECK_THROWS_AS(permute(x, {0, 0}), ShapeError);

  Tensor x3({2, 2, 2}, {0, 1, 2, 3, 4, 5, 6, 7});
  Tensor p3 = permute(x3, {2, 0, 1});
  CHECK(p3.at({1, 1, 0}) == 5.f);

  Tensor sl = slice(x, 1, 1, 2);
  CHECK(sl.shape() == std::vector<std::size_t>{2, 2});
  CHECK(sl.at({0, 0}) == 2.f);
  CHECK(sl.at({1, 1}) == 6.f);
  CHECK_THROWS_AS(slice(x, 1, 2, 2), ShapeError);

  Tensor c = concat<float>({x, x}, 0);
  CHECK(c.shape() == std::vector<std::size_t>{4, 3});
  CHECK(c.at({3, 2}) == 6.f);
  Tensor c1 = concat<float>({x, sl}, 1);
  CHECK(c1.shape() == std::vector<std::size_t>{2, 5});
  CHECK(c1.at({0, 4}) == 3.f);
  CHECK_THROWS_AS(concat<float>({x, Tensor({3, 4})}, 0), ShapeError);

  Tensor tb({2, 2, 2}, {0, 1, 2, 3, 4, 5, 6, 7});
  Tensor picked = take_per_batch(tb, {1, 0});
  CHECK(picked.shape() == std::vector<std::size_t>{2, 2});
  CHECK(picked.at({0, 0}) == 2.f);
  CHECK(picked.at({1, 1}) == 5.f);
  CHECK_THROWS_AS(take_per_batch(tb, {2, 0}), ShapeError);
}

TEST_CASE("forward determinism") {
  auto run = [] {
    Tensor x({4, 4});
    for (std::size_t i = 0; i < 16; ++i)
      x.mutable_data()[i] = std::sin(static_cast<float>(i) * 0.7f);
    Tensor w({4, 4});
    for (std::size_t i = 0; i < 16; ++i)
      w.mutable_data()[i] = std::cos(static_cast<float>(i) * 1.3f);
    Tensor y = softmax(matmul(relu(x), w), 1);
    return sum(mul(y, y)).item();
  };
  float a = run();
  float b = run();
  CHECK(std::memcmp(&a, &b, sizeof(float)) == 0);
}
