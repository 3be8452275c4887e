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

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <set>
#include <vector>

#include "mst/error.hpp"
#include "mst/spikegen.hpp"

using namespace mst;

namespace {

PatternLibrary library(int order, std::size_t n = 50, std::uint64_t seed = 1) {
  return make_pattern_library({order, 0.89}, n, kDefaultRewards, seed);
}

}  // namespace

TEST_CASE("derived seeds are distinct and reproducible") {
  std::set<std::uint64_t> seen;
  for (std::uint64_t m = 0; m < 20; ++m)
    for (std::uint64_t i = 0; i < 50; ++i) seen.insert(derive_seed(m, i));
  CHECK(seen.size() == 1000);
  CHECK(derive_seed(5, 7) == derive_seed(5, 7));
}

TEST_CASE("gamma renewal ISI coefficient of variation") {
  for (int k : {1, 5, 15}) {
    // ~1.1e5 intervals at 0.89 Hz.
    const auto p = gen_gamma_renewal({k, 0.89}, 1250.0, 100, 100 + k);
    const auto st = isi_statistics(p, 0.05, 10.0);
    REQUIRE(st.isis.size() >= 100000);
    CHECK(std::abs(st.cv - 1.0 / std::sqrt(static_cast<double>(k))) < 0.02);
    CHECK(st.mean == doctest::Approx(1.0 / 0.89).epsilon(0.02));
  }
}

TEST_CASE("renewal rate identity") {
  for (int k : {1, 5, 15}) {
    const auto p = gen_gamma_renewal({k, 0.89}, 10.0, 10000, 3);
    const double mean = static_cast<double>(p.total_spikes()) / 10000.0;
    CHECK(mean == doctest::Approx(8.9).epsilon(0.02));
  }
  const auto p = gen_gamma_renewal({1, 0.89}, 10.0, 100, 3);
  for (const auto& t : p.spikes)
    for (double s : t) CHECK((s >= 0.0 && s < 10.0));
}

TEST_CASE("renewal generator is deterministic and validates input") {
  CHECK(gen_gamma_renewal({15, 2.0}, 3.0, 20, 9) == gen_gamma_renewal({15, 2.0}, 3.0, 20, 9));
  CHECK_FALSE(gen_gamma_renewal({15, 2.0}, 3.0, 20, 9) == gen_gamma_renewal({15, 2.0}, 3.0, 20, 10));
  CHECK_THROWS_AS(gen_gamma_renewal({0, 1.0}, 1.0, 1, 1), InvalidArgument);
  CHECK_THROWS_AS(gen_gamma_renewal({1, 0.0}, 1.0, 1, 1), InvalidArgument);
  CHECK_THROWS_AS(gen_gamma_renewal({1, 1.0}, 0.0, 1, 1), InvalidArgument);
}

TEST_CASE("pattern library shape and reward checks") {
  const auto lib = library(5);
  CHECK(lib.patterns.size() == 9);
  for (const auto& p : lib.patterns) {
    CHECK(p.duration == 1.0);
    CHECK(p.n_afferents() == 50);
  }
  CHECK(std::count(lib.rewards.begin(), lib.rewards.end(), 0) == 4);
  CHECK(library(5).patterns == lib.patterns);
  CHECK_FALSE(library(5, 50, 2).patterns == lib.patterns);

  const std::vector<int> too_many_zero{1, 0, 0, 0, 0, 0, 2, 3, 4};
  CHECK_THROWS_AS(make_pattern_library({1, 0.89}, 5, too_many_zero, 1), InvalidArgument);
  const std::vector<int> out_of_range{10, 1, 1, 1, 1, 0, 0, 0, 0};
  CHECK_THROWS_AS(make_pattern_library({1, 0.89}, 5, out_of_range, 1), InvalidArgument);
  const std::vector<int> short_list{1, 1, 0};
  CHECK_THROWS_AS(make_pattern_library({1, 0.89}, 5, short_list, 1), InvalidArgument);

  const std::vector<int> zeros(9, 0);
  const auto silent = make_pattern_library({1, 0.89}, 5, zeros, 1);
  for (std::uint64_t s = 0; s < 20; ++s) CHECK(assemble_trial(silent, {}, s).target == 0);
}

TEST_CASE("trials: non-overlapping placements and summed targets in every regime") {
  const auto lib = library(1, 20);
  for (auto regime : {NoiseRegime::kPatternsOnly, NoiseRegime::kJitter,
                      NoiseRegime::kHomogeneousBackground, NoiseRegime::kInhomogeneousBackground}) {
    NoiseConfig noise;
    noise.regime = regime;
    for (std::uint64_t s = 0; s < 200; ++s) {
      const auto t = assemble_trial(lib, noise, s);
      std::size_t target = 0;
      for (std::size_t i = 0; i < t.placements.size(); ++i) {
        const auto& pl = t.placements[i];
        target += static_cast<std::size_t>(lib.rewards[pl.pattern_index]);
        CHECK(pl.onset >= 0.0);
        CHECK(pl.onset + 1.0 <= 10.0 + 1e-12);
        if (i > 0) CHECK(t.placements[i - 1].onset + 1.0 <= pl.onset + 1e-12);
      }
      CHECK(t.target == target);
      CHECK(t.pattern.duration == 10.0);
      t.pattern.validate();
      CHECK(assemble_trial(lib, noise, s).pattern == t.pattern);
      if (regime == NoiseRegime::kPatternsOnly) CHECK(t.pattern == t.embedded);
    }
  }
}

TEST_CASE("pattern count follows the Poisson mean") {
  const auto lib = library(1, 5);
  double total = 0.0;
  std::size_t empty = 0;
  for (std::uint64_t s = 0; s < 4000; ++s) {
    const auto t = assemble_trial(lib, {}, s);
    total += static_cast<double>(t.placements.size());
    if (t.placements.empty()) {
      ++empty;
      CHECK(t.target == 0);
      CHECK(t.pattern.total_spikes() == 0);
    }
  }
  CHECK(total / 4000.0 == doctest::Approx(5.0).epsilon(0.03));
  CHECK(empty > 0);
}

TEST_CASE("placed pattern spikes are shifted library spikes") {
  const auto lib = library(5, 10);
  const auto t = assemble_trial(lib, {}, 42);
  REQUIRE_FALSE(t.placements.empty());
  std::size_t expected = 0;
  for (const auto& pl : t.placements) expected += lib.patterns[pl.pattern_index].total_spikes();
  CHECK(t.pattern.total_spikes() == expected);
  const auto& pl = t.placements.front();
  for (std::size_t a = 0; a < 10; ++a)
    for (double s : lib.patterns[pl.pattern_index].spikes[a]) {
      const auto& train = t.pattern.spikes[a];
      CHECK(std::any_of(train.begin(), train.end(),
                        [&](double x) { return std::abs(x - (pl.onset + s)) < 1e-12; }));
    }
}

TEST_CASE("reward arithmetic of a five-pattern trial") {
  const auto lib = library(1, 5);
  // {1, 2, 4} plus two distractors.
  const std::size_t picks[] = {0, 1, 2, 5, 6};
  std::size_t target = 0;
  for (auto i : picks) target += static_cast<std::size_t>(lib.rewards[i]);
  CHECK(target == 7);
}

TEST_CASE("jitter") {
  const auto p = gen_gamma_renewal({1, 5.0}, 10.0, 200, 4);
  CHECK(jitter_spikes(p, 0.0, 1) == p);
  const auto j = jitter_spikes(p, 1e-3, 1);
  CHECK(j.total_spikes() <= p.total_spikes());
  CHECK(j.total_spikes() + 10 >= p.total_spikes());
  // Mean displacement: compare sorted per-afferent trains where counts match.
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t a = 0; a < p.n_afferents(); ++a) {
    if (p.spikes[a].size() != j.spikes[a].size()) continue;
    for (std::size_t i = 0; i < p.spikes[a].size(); ++i, ++n) sum += j.spikes[a][i] - p.spikes[a][i];
  }
  REQUIRE(n > 5000);
  CHECK(std::abs(sum / static_cast<double>(n)) < 5e-5);
  CHECK_THROWS_AS(jitter_spikes(p, -1.0, 1), InvalidArgument);
}

TEST_CASE("inhomogeneous Poisson by thinning") {
  const Modulation flat{};
  const auto h = gen_inhomogeneous_poisson(4.0, {&flat, 1}, 10.0, 2000, 8);
  CHECK(static_cast<double>(h.total_spikes()) / 2000.0 == doctest::Approx(40.0).epsilon(0.02));

  // Full-depth modulation, one cycle over the duration.
  const Modulation deep{4.0, 0.1, 0.0};
  const auto m = gen_inhomogeneous_poisson(4.0, {&deep, 1}, 10.0, 5000, 9);
  const int bins = 20;
  std::vector<double> counts(bins, 0.0), expected(bins, 0.0);
  for (const auto& train : m.spikes)
    for (double t : train) counts[static_cast<std::size_t>(t / 10.0 * bins)] += 1.0;
  double max_rate = 0.0;
  for (int b = 0; b < bins; ++b) {
    const double mid = (b + 0.5) * 10.0 / bins;
    expected[b] = 4.0 + 4.0 * std::sin(2 * std::numbers::pi * 0.1 * mid);
    max_rate = std::max(max_rate, counts[b] / 5000.0 / (10.0 / bins));
  }
  const double mc = std::accumulate(counts.begin(), counts.end(), 0.0) / bins;
  const double me = std::accumulate(expected.begin(), expected.end(), 0.0) / bins;
  double sxy = 0, sxx = 0, syy = 0;
  for (int b = 0; b < bins; ++b) {
    sxy += (counts[b] - mc) * (expected[b] - me);
    sxx += (counts[b] - mc) * (counts[b] - mc);
    syy += (expected[b] - me) * (expected[b] - me);
  }
  CHECK(sxy / std::sqrt(sxx * syy) > 0.9);
  CHECK(max_rate < 8.0 * 1.05);

  const Modulation too_deep{5.0, 1.0, 0.0};
  CHECK_THROWS_AS(gen_inhomogeneous_poisson(4.0, {&too_deep, 1}, 1.0, 1, 1), InvalidArgument);
  const std::vector<Modulation> two(2);
  CHECK_THROWS_AS(gen_inhomogeneous_poisson(4.0, two, 1.0, 3, 1), InvalidArgument);
}

TEST_CASE("ISI statistics") {
  SpikePattern p(2, 1.0);
  p.spikes[0] = {0.1, 0.3, 0.6};
  p.spikes[1] = {0.5};
  const auto st = isi_statistics(p);
  REQUIRE(st.isis.size() == 2);
  CHECK(st.isis[0] == doctest::Approx(0.2));
  CHECK(st.isis[1] == doctest::Approx(0.3));
  CHECK(st.mean == doctest::Approx(0.25));
  CHECK(std::accumulate(st.histogram.counts.begin(), st.histogram.counts.end(), std::size_t{0}) == 2);
  CHECK(st.histogram.overflow == 0);
  CHECK(st.histogram.counts[5] == 1);

  const TimeWindow w{0.0, 0.35};
  const auto inside = isi_statistics(p, {&w, 1});
  REQUIRE(inside.isis.size() == 1);
  CHECK(inside.isis[0] == doctest::Approx(0.2));

  SpikePattern sparse(3, 1.0);
  sparse.spikes[1] = {0.3};
  CHECK_THROWS_AS(isi_statistics(sparse), InvalidArgument);
}

TEST_CASE("gamma5 pattern CV and Poisson CV from library patterns") {
  const auto g5 = make_pattern_library({5, 0.89}, 20000, kDefaultRewards, 3, 10.0);
  CHECK(isi_statistics(g5.patterns[0]).cv == doctest::Approx(1 / std::sqrt(5.0)).epsilon(0.05));
  const auto g1 = make_pattern_library({1, 0.89}, 20000, kDefaultRewards, 3, 10.0);
  CHECK(isi_statistics(g1.patterns[0]).cv == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("pattern windows mark the placements") {
  const auto lib = library(15, 10);
  const auto t = assemble_trial(lib, {}, 7);
  const auto w = placement_windows(t, lib);
  REQUIRE(w.size() == t.placements.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    CHECK(w[i].begin == t.placements[i].onset);
    CHECK(w[i].end == doctest::Approx(t.placements[i].onset + 1.0));
  }
}
