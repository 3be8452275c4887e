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
#include <vector>

#include "mst/error.hpp"
#include "mst/neuron.hpp"
#include "oracles.hpp"

using namespace mst;

TEST_CASE("kernel is causal and starts at zero") {
  const NeuronParams p;
  CHECK(kernel_value(-0.001, p) == 0.0);
  CHECK(kernel_value(0.0, p) == 0.0);
  CHECK(kernel_slope(-0.001, p) == 0.0);
}

TEST_CASE("kernel peak is one at the closed-form delay") {
  const NeuronParams p;
  const double delay = p.peak_delay();
  CHECK(delay == doctest::Approx(0.008240).epsilon(1e-4));
  CHECK(std::abs(kernel_value(delay, p) - 1.0) < 1e-12);
  // Fine-grid scan, independent of the closed form.
  double best = 0.0, best_t = 0.0;
  for (int i = 0; i <= 2000000; ++i) {
    const double t = i * 2.5e-8;
    const double v = oracle::kernel(t, p.tau_m, p.tau_s);
    if (v > best) best = v, best_t = t;
  }
  CHECK(std::abs(best - 1.0) < 1e-9);
  CHECK(std::abs(best_t - delay) < 1e-6);
}

TEST_CASE("kernel is nonnegative and unimodal") {
  const NeuronParams p;
  double prev = 0.0;
  bool falling = false;
  for (int i = 1; i < 20000; ++i) {
    const double v = kernel_value(i * 1e-5, p);
    CHECK(v >= 0.0);
    if (v < prev) falling = true;
    if (falling) CHECK(v <= prev);
    prev = v;
  }
  CHECK(falling);
}

TEST_CASE("v_norm follows the kernel ratio") {
  NeuronParams p;
  p.tau_m = 0.02;
  p.tau_s = 0.004;
  const double eta = 5.0;
  CHECK(p.v_norm() == doctest::Approx(std::pow(eta, eta / (eta - 1.0)) / (eta - 1.0)));
  CHECK(kernel_value(p.peak_delay(), p) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("parameter and pattern validation") {
  NeuronParams p;
  p.tau_s = p.tau_m;
  CHECK_THROWS_AS(p.validate(), InvalidArgument);
  p = {};
  p.dt = 0.01;
  CHECK_THROWS_AS(p.validate(), InvalidArgument);

  SpikePattern bad(1, 1.0);
  bad.spikes[0] = {0.5, 0.2};
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
  bad.spikes[0] = {1.0};
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
  bad.spikes[0] = {0.7, 0.2, 0.7, 3.0};
  bad.canonicalize();
  CHECK(bad.spikes[0] == std::vector<double>{0.2, 0.7});
}

TEST_CASE("zero weights give a flat trace and no spikes") {
  const NeuronParams p;
  const auto pattern = oracle::poisson_pattern(20, 1.0, 5.0, 1);
  const std::vector<double> w(20, 0.0);
  const auto r = simulate(pattern, w, 1.0, p, {.record_trace = true});
  CHECK(r.count() == 0);
  for (double v : r.voltage_trace) CHECK(v == p.v_rest);
  CHECK(count_spikes(pattern, w, 1.0, p) == 0);
}

TEST_CASE("single input spike below threshold") {
  const NeuronParams p;
  SpikePattern pattern(1, 0.5);
  pattern.spikes[0] = {0.1};
  const std::vector<double> w{0.9};
  const auto r = simulate(pattern, w, 1.0, p);
  CHECK(r.count() == 0);
  CHECK(r.v_max_unreset <= 0.9);
  CHECK(r.v_max_unreset > 0.89);
  CHECK(count_spikes(pattern, w, 1e9, p) == 0);
  CHECK(count_spikes(pattern, w, r.v_max_unreset * (1 - 1e-6), p) == 1);
}

TEST_CASE("simulator matches brute-force integration") {
  const NeuronParams p;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto pattern = oracle::poisson_pattern(50, 1.0, 5.0, seed);
    const auto w = oracle::gaussian_weights(50, 0.1, seed, 0.05);
    const EventTrain train(pattern, p);
    for (double theta : {0.3, 0.6, 1.0}) {
      const auto brute = oracle::brute_simulate(pattern, w, theta, p);
      // Only thresholds whose count is stable under a 1e-3 relative shift.
      const auto lo = oracle::brute_simulate(pattern, w, theta * (1 - 1e-3), p).spikes.size();
      const auto hi = oracle::brute_simulate(pattern, w, theta * (1 + 1e-3), p).spikes.size();
      const auto r = simulate(train, w, theta, {.record_trace = true});
      REQUIRE(r.voltage_trace.size() == brute.trace.size());
      if (lo == hi) {
        CHECK(r.count() == brute.spikes.size());
        CHECK(r.output_spikes == brute.spikes);
      }
      if (r.output_spikes == brute.spikes)
        for (std::size_t n = 0; n < brute.trace.size(); ++n)
          CHECK(std::abs(r.voltage_trace[n] - brute.trace[n]) < 1e-9);
    }
  }
}

TEST_CASE("grid trace agrees with a dt/10 re-integration at the common points") {
  const NeuronParams p;
  const auto pattern = oracle::poisson_pattern(50, 1.0, 5.0, 77);
  const auto w = oracle::gaussian_weights(50, 0.1, 77);
  const double no_spikes = std::numeric_limits<double>::max();
  const auto fine = oracle::brute_simulate(pattern, w, no_spikes, p, 10);
  const auto r = simulate(pattern, w, no_spikes, p, {.record_trace = true});
  double fine_max = -1e300;
  for (std::size_t n = 0; n < r.voltage_trace.size(); ++n) {
    CHECK(std::abs(r.voltage_trace[n] - fine.trace[10 * n]) < 1e-9);
    fine_max = std::max(fine_max, fine.trace[10 * n]);
  }
  CHECK(r.v_max_unreset == doctest::Approx(fine_max).epsilon(1e-12));
}

TEST_CASE("soft reset subtracts the threshold at the spike") {
  const NeuronParams p;
  SpikePattern pattern(1, 0.2);
  pattern.spikes[0] = {0.05};
  const std::vector<double> w{3.0};
  const double theta = 1.0;
  const auto free_run =
      simulate(pattern, w, std::numeric_limits<double>::max(), p, {.record_trace = true});
  const auto r = simulate(pattern, w, theta, p, {.record_trace = true});
  REQUIRE(r.count() >= 1);
  const std::size_t n0 = r.output_steps[0];
  CHECK(r.voltage_trace[n0] == doctest::Approx(free_run.voltage_trace[n0]));
  // One step later only the first reset has acted, decayed by one step.
  if (r.count() == 1 || r.output_steps[1] > n0 + 1) {
    CHECK(r.voltage_trace[n0 + 1] ==
          doctest::Approx(free_run.voltage_trace[n0 + 1] - theta * std::exp(-p.dt / p.tau_m)));
  }
  for (std::size_t j = 1; j < r.count(); ++j) CHECK(r.output_spikes[j] > r.output_spikes[j - 1]);
  for (std::size_t n : r.output_steps) CHECK(r.voltage_trace[n] >= theta);
}

TEST_CASE("spike count is non-increasing along a descending threshold sweep") {
  const NeuronParams p;
  std::size_t violations = 0, checked = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto pattern = oracle::poisson_pattern(30, 0.5, 5.0, seed);
    const auto w = oracle::gaussian_weights(30, 0.05, seed, 0.02);
    const EventTrain train(pattern, p);
    const double top = simulate(train, w, 1e300).v_max_unreset;
    if (top <= 0.0) continue;
    std::size_t prev = 0;
    for (int i = 1; i <= 400; ++i) {
      const double theta = top * (1.0 - i / 400.0 * 0.9);
      const auto c = count_spikes(train, w, theta);
      if (c < prev) ++violations;
      prev = c;
      ++checked;
    }
  }
  CHECK(checked > 0);
  CHECK(violations == 0);
}

TEST_CASE("scale homogeneity of the membrane equation") {
  const NeuronParams p;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto pattern = oracle::poisson_pattern(40, 1.0, 5.0, seed);
    const auto w = oracle::gaussian_weights(40, 0.1, seed, 0.05);
    const EventTrain train(pattern, p);
    const auto base = simulate(train, w, 0.5);
    for (double c : {0.5, 2.0, 0.25}) {
      std::vector<double> cw(w);
      for (double& x : cw) x *= c;
      CHECK(simulate(train, cw, 0.5 * c).output_spikes == base.output_spikes);
    }
  }
}

TEST_CASE("simulation is deterministic and checks its inputs") {
  const NeuronParams p;
  const auto pattern = oracle::poisson_pattern(10, 1.0, 5.0, 5);
  auto w = oracle::gaussian_weights(10, 0.3, 5);
  const auto a = simulate(pattern, w, 0.5, p, {.record_trace = true});
  const auto b = simulate(pattern, w, 0.5, p, {.record_trace = true});
  CHECK(a.output_spikes == b.output_spikes);
  CHECK(a.voltage_trace == b.voltage_trace);
  CHECK(a.v_max_unreset == b.v_max_unreset);

  std::vector<double> short_w(9, 0.1);
  CHECK_THROWS_AS(simulate(pattern, short_w, 1.0, p), InvalidArgument);
  w[3] = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(simulate(pattern, w, 1.0, p), InvalidArgument);
}

TEST_CASE("events are assigned to the first grid point at or after the spike") {
  const NeuronParams p;
  SpikePattern pattern(2, 0.01);
  pattern.spikes[0] = {0.0, 0.0025, 0.003};
  pattern.spikes[1] = {0.0009999, 0.0095};
  const EventTrain train(pattern, p);
  CHECK(train.n_steps() == 10);
  std::vector<std::pair<std::size_t, std::size_t>> seen;
  std::size_t prev_step = 0;
  for (const auto& e : train.events()) {
    CHECK(e.step >= prev_step);
    prev_step = e.step;
    CHECK(train.step_time(e.step) >= e.time);
    CHECK(train.step_time(e.step) - e.time < p.dt);
    seen.emplace_back(e.afferent, e.step);
  }
  CHECK(seen.size() == 4);  // the spike at 0.0095 has no grid point left
  CHECK(afferent_drive(pattern, 0, 0.0025 + p.peak_delay(), p) > 1.0);
}
