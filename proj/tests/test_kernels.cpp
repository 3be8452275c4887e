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

#include <random>
#include <vector>

#include "mst/encoders.hpp"
#include "mst/kernels.hpp"
#include "oracles.hpp"

using namespace mst;

TEST_CASE("overlap tables: serial and parallel agree bitwise") {
  const auto cfg = DogBankConfig::defaults();
  for (const auto& a : cfg.layers)
    for (const auto& b : cfg.layers) {
      const auto ka = make_dog_kernel(a, cfg.support_sds);
      const auto kb = make_dog_kernel(b, cfg.support_sds);
      CHECK(kernels::overlap_table_serial(ka, kb) == kernels::overlap_table_omp(ka, kb));
    }
}

TEST_CASE("DoG coefficients: serial and parallel agree bitwise") {
  const auto bank = build_dog_bank(DogBankConfig::defaults());
  GrayImage img(100, 100);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (double& p : img.pixels) p = u(rng) < 0.2 ? u(rng) : 0.0;
  CHECK(kernels::dog_coefficients_serial(img, bank) == kernels::dog_coefficients_omp(img, bank));
}

TEST_CASE("spike counts: serial and parallel agree") {
  NeuronParams p;
  std::vector<EventTrain> trains;
  for (std::uint64_t s = 0; s < 64; ++s)
    trains.emplace_back(oracle::poisson_pattern(100, 2.0, 5.0, s), p);
  const auto w = oracle::gaussian_weights(100, 0.1, 9, 0.02);
  for (double theta : {0.5, 1.0, 2.0}) {
    const auto a = kernels::count_spikes_serial(trains, w, theta);
    const auto b = kernels::count_spikes_omp(trains, w, theta);
    CHECK(a == b);
    for (std::size_t i = 0; i < trains.size(); ++i) CHECK(a[i] == count_spikes(trains[i], w, theta));
  }
  CHECK(kernels::count_spikes_omp({}, w, 1.0).empty());
}
