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

// Serial reference vs OpenMP kernels.

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "mst/encoders.hpp"
#include "mst/kernels.hpp"
#include "mst/spikegen.hpp"

using namespace mst;

namespace {

const DogFilterBank& bank() {
  static const DogFilterBank b = build_dog_bank(DogBankConfig::defaults());
  return b;
}

GrayImage noise_image() {
  GrayImage img(kEncodedImageSize, kEncodedImageSize);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (double& p : img.pixels) p = u(rng) < 0.2 ? u(rng) : 0.0;
  return img;
}

struct Trains {
  std::vector<EventTrain> trains;
  std::vector<double> weights;
};

const Trains& trains() {
  static const Trains t = [] {
    Trains t;
    const NeuronParams p;
    for (std::uint64_t s = 0; s < 200; ++s)
      t.trains.emplace_back(gen_gamma_renewal({1, 0.89}, 10.0, 500, s), p);
    std::mt19937_64 rng(2);
    std::normal_distribution<double> n(0.01, 0.05);
    for (int i = 0; i < 500; ++i) t.weights.push_back(n(rng));
    return t;
  }();
  return t;
}

template <auto Fn>
void BM_overlap(benchmark::State& state) {
  const auto& b = bank();
  for (auto _ : state) benchmark::DoNotOptimize(Fn(b.kernel(3), b.kernel(3)));
}

template <auto Fn>
void BM_dog(benchmark::State& state) {
  const auto img = noise_image();
  for (auto _ : state) benchmark::DoNotOptimize(Fn(img, bank()));
}

template <auto Fn>
void BM_count(benchmark::State& state) {
  const auto& t = trains();
  for (auto _ : state) benchmark::DoNotOptimize(Fn(t.trains, t.weights, 0.2));
}

}  // namespace

BENCHMARK(BM_overlap<kernels::overlap_table_serial>)->Name("overlap_table/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_overlap<kernels::overlap_table_omp>)->Name("overlap_table/omp")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_dog<kernels::dog_coefficients_serial>)->Name("dog_coefficients/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_dog<kernels::dog_coefficients_omp>)->Name("dog_coefficients/omp")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_count<kernels::count_spikes_serial>)->Name("count_spikes/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_count<kernels::count_spikes_omp>)->Name("count_spikes/omp")->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
