// Copyright 2026 The MST Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "mst/error.hpp"
#include "mst/optimizers.hpp"

using namespace mst;

TEST_CASE("momentum examples") {
  MomentumState plain(2, 0.0);
  CHECK(momentum_update(plain, Direction::kIncrease, std::vector<double>{2.0, -1.0}, 0.1) ==
        std::vector<double>{0.2, -0.1});

  MomentumState inertia(1, 0.9);
  inertia.prev_update = {0.5};
  const auto d = momentum_update(inertia, Direction::kDecrease, std::vector<double>{0.0}, 0.1);
  CHECK(d[0] == doctest::Approx(0.45));

  MomentumState s(1, 0.9);
  s.prev_update = {0.01};
  const auto d2 = momentum_update(s, Direction::kIncrease, std::vector<double>{2.0}, 0.001);
  CHECK(d2[0] == doctest::Approx(0.011).epsilon(1e-12));
  CHECK(s.prev_update[0] == d2[0]);
}

TEST_CASE("momentum is linear in gradient and previous update") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<double> g1(5), g2(5), p1(5), p2(5);
  for (auto* v : {&g1, &g2, &p1, &p2})
    for (double& x : *v) x = n(rng);
  auto run = [](std::vector<double> prev, const std::vector<double>& g) {
    MomentumState s(prev.size(), 0.7);
    s.prev_update = std::move(prev);
    return momentum_update(s, Direction::kIncrease, g, 0.01);
  };
  std::vector<double> gs(5), ps(5);
  for (int i = 0; i < 5; ++i) gs[i] = 2 * g1[i] - 3 * g2[i], ps[i] = 2 * p1[i] - 3 * p2[i];
  const auto a = run(p1, g1), b = run(p2, g2), c = run(ps, gs);
  for (int i = 0; i < 5; ++i) CHECK(c[i] == doctest::Approx(2 * a[i] - 3 * b[i]).epsilon(1e-12));
}

TEST_CASE("rmsprop examples") {
  RmsState s(1, 0.9, 1e-8);
  const double lr = 0.001;
  const auto d = rmsprop_update(s, Direction::kIncrease, std::vector<double>{2.0}, lr);
  CHECK(s.v[0] == doctest::Approx(0.4));
  CHECK(d[0] == doctest::Approx(lr * 2.0 / std::sqrt(0.4 + 1e-8)));
  CHECK(d[0] / lr == doctest::Approx(3.1623).epsilon(1e-4));

  RmsState z(2, 0.9, 1e-8);
  z.v = {0.5, 0.5};
  const auto dz = rmsprop_update(z, Direction::kDecrease, std::vector<double>{0.0, 1.0}, lr);
  CHECK(dz[0] == 0.0);
  CHECK(z.v[0] == doctest::Approx(0.45));
  CHECK(dz[1] < 0.0);
}

TEST_CASE("rmsprop accumulator reaches its fixed point") {
  for (double g : {0.01, 1.0, 40.0}) {
    RmsState s(1, 0.9, 1e-8);
    std::vector<double> d;
    for (int i = 0; i < 200; ++i) d = rmsprop_update(s, Direction::kIncrease, std::vector<double>{g}, 0.001);
    CHECK(s.v[0] == doctest::Approx(g * g).epsilon(0.01));
    CHECK(d[0] == doctest::Approx(0.001 / std::sqrt(1 + 1e-8 / (g * g))).epsilon(0.01));
  }
}

TEST_CASE("rmsprop deltas are invariant to gradient scale") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<std::vector<double>> grads(50, std::vector<double>(4));
  for (auto& g : grads)
    for (double& x : g) x = n(rng);
  for (double c : {0.1, 7.0, 1e3}) {
    RmsState a(4, 0.9, 1e-12), b(4, 0.9, 1e-12);
    for (const auto& g : grads) {
      std::vector<double> cg(g);
      for (double& x : cg) x *= c;
      const auto da = rmsprop_update(a, Direction::kIncrease, g, 0.01);
      const auto db = rmsprop_update(b, Direction::kIncrease, cg, 0.01);
      for (int i = 0; i < 4; ++i) CHECK(db[i] == doctest::Approx(da[i]).epsilon(1e-6));
      for (double v : b.v) CHECK(v >= 0.0);
    }
  }
}

TEST_CASE("optimizer input checks") {
  MomentumState m(2);
  RmsState r(2);
  const std::vector<double> three{1, 2, 3};
  CHECK_THROWS_AS(momentum_update(m, Direction::kIncrease, three, 0.1), InvalidArgument);
  CHECK_THROWS_AS(rmsprop_update(r, Direction::kIncrease, three, 0.1), InvalidArgument);
  const std::vector<double> bad{1.0, std::numeric_limits<double>::quiet_NaN()};
  CHECK_THROWS_AS(momentum_update(m, Direction::kIncrease, bad, 0.1), InvalidArgument);
  CHECK_THROWS_AS(rmsprop_update(r, Direction::kIncrease, bad, 0.1), InvalidArgument);
  CHECK_THROWS_AS(parse_optimizer_kind("adam"), ConfigError);
  CHECK(parse_optimizer_kind("rmsprop") == OptimizerKind::kAdaptive);
  CHECK(to_string(parse_optimizer_kind("momentum")) == "momentum");
}

TEST_CASE("Optimizer applies signed updates in place") {
  Optimizer opt({.kind = OptimizerKind::kMomentum, .lr = 0.1, .alpha = 0.5}, 2);
  std::vector<double> w{1.0, 1.0};
  const std::vector<double> g{1.0, -2.0};
  opt.apply(w, Direction::kIncrease, g);
  CHECK(w[0] == doctest::Approx(1.1));
  CHECK(w[1] == doctest::Approx(0.8));
  opt.apply(w, Direction::kNone, g);
  CHECK(w[0] == doctest::Approx(1.1));
  opt.apply(w, Direction::kDecrease, g);
  CHECK(w[0] == doctest::Approx(1.1 + 0.05 - 0.1));

  Optimizer rms({.kind = OptimizerKind::kAdaptive, .lr = 0.01}, 2);
  std::vector<double> w2{0.0, 0.0};
  rms.apply(w2, Direction::kIncrease, g);
  CHECK(w2[0] == doctest::Approx(0.01 / std::sqrt(0.1)).epsilon(1e-6));
  CHECK(w2[1] == doctest::Approx(-0.01 / std::sqrt(0.1)).epsilon(1e-6));
  std::vector<double> w3(3, 0.0);
  CHECK_THROWS_AS(rms.apply(w3, Direction::kIncrease, g), InvalidArgument);
}
