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

#include "mst/kernels.hpp"

namespace mst::kernels {

std::vector<double> overlap_table_serial(const DogKernel& a, const DogKernel& b) {
  const int R = a.radius + b.radius;
  const int side = 2 * R + 1;
  std::vector<double> table(static_cast<std::size_t>(side * side), 0.0);
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

std::vector<double> dog_coefficients_serial(const GrayImage& image, const DogFilterBank& bank) {
  std::vector<double> coeffs(bank.n_units(), 0.0);
  for (std::size_t u = 0; u < bank.n_units(); ++u) {
    const DogUnit& unit = bank.unit(u);
    const DogKernel& k = bank.kernel(unit.layer);
    double acc = 0.0;
    for (int dy = -k.radius; dy <= k.radius; ++dy)
      for (int dx = -k.radius; dx <= k.radius; ++dx)
        acc += k.at(dx, dy) * image.clamped(unit.cx + dx, unit.cy + dy);
    coeffs[u] = acc;
  }
  return coeffs;
}

std::vector<std::size_t> count_spikes_serial(std::span<const EventTrain> trains,
                                             std::span<const double> weights, double threshold) {
  std::vector<std::size_t> counts(trains.size());
  for (std::size_t i = 0; i < trains.size(); ++i)
    counts[i] = count_spikes(trains[i], weights, threshold);
  return counts;
}

}  // namespace mst::kernels
