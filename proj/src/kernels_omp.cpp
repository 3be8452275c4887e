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

#include <omp.h>

#include <cmath>
#include <cstdint>

#include "mst/error.hpp"
#include "mst/kernels.hpp"

namespace mst::kernels {

std::vector<double> overlap_table_omp(const DogKernel& a, const DogKernel& b) {
  const int R = a.radius + b.radius;
  const int side = 2 * R + 1;
  std::vector<double> table(static_cast<std::size_t>(side * side), 0.0);
#pragma omp parallel for schedule(dynamic)
  for (int oy = -R; oy <= R; ++oy) {
    for (int ox = -R; ox <= R; ++ox) {
      double acc = 0.0;
      for (int dy = -a.radius; dy <= a.radius; ++dy) {
        const int by = dy - oy;
        if (by < -b.radius || by > b.radius) continue;
        for (int dx = -a.radius; dx <= a.radius; ++dx) {
          const int bx = dx - ox;
          if (bx < -b.radius || bx > b.radius) continue;
          acc += a.at(dx, dy) * b.at(bx, by);
        }
      }
      table[static_cast<std::size_t>((oy + R) * side + (ox + R))] = acc;
    }
  }
  return table;
}

std::vector<double> dog_coefficients_omp(const GrayImage& image, const DogFilterBank& bank) {
  const auto n = static_cast<std::int64_t>(bank.n_units());
  std::vector<double> coeffs(bank.n_units(), 0.0);
#pragma omp parallel for schedule(static)
  for (std::int64_t u = 0; u < n; ++u) {
    const DogUnit& unit = bank.unit(static_cast<std::size_t>(u));
    const DogKernel& k = bank.kernel(unit.layer);
    double acc = 0.0;
    for (int dy = -k.radius; dy <= k.radius; ++dy)
      for (int dx = -k.radius; dx <= k.radius; ++dx)
        acc += k.at(dx, dy) * image.clamped(unit.cx + dx, unit.cy + dy);
    coeffs[static_cast<std::size_t>(u)] = acc;
  }
  return coeffs;
}

std::vector<std::size_t> count_spikes_omp(std::span<const EventTrain> trains,
                                          std::span<const double> weights, double threshold) {
  // Exceptions cannot leave the parallel region; validate shapes up front.
  for (const auto& train : trains)
    if (train.n_afferents() != weights.size())
      throw InvalidArgument("count_spikes_omp: weight/afferent count mismatch");
  for (double w : weights)
    if (!std::isfinite(w)) throw InvalidArgument("count_spikes_omp: non-finite weight");
  const auto n = static_cast<std::int64_t>(trains.size());
  std::vector<std::size_t> counts(trains.size());
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t i = 0; i < n; ++i)
    counts[static_cast<std::size_t>(i)] =
        count_spikes(trains[static_cast<std::size_t>(i)], weights, threshold);
  return counts;
}

}  // namespace mst::kernels
