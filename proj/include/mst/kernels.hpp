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

#ifndef MST_KERNELS_HPP_
#define MST_KERNELS_HPP_

// Data-parallel inner loops. Each kernel has an OpenMP implementation used by
// the library and a plain serial reference kept for tests and benchmarks;
// both produce bit-identical results.

#include <cstddef>
#include <span>
#include <vector>

#include "mst/encoders.hpp"
#include "mst/neuron.hpp"

namespace mst::kernels {

// Correlation of two DoG kernels over all center offsets within
// ra + rb, row-major in (oy, ox) with side 2 (ra + rb) + 1.
std::vector<double> overlap_table_serial(const DogKernel& a, const DogKernel& b);
std::vector<double> overlap_table_omp(const DogKernel& a, const DogKernel& b);

// One coefficient per bank unit.
std::vector<double> dog_coefficients_serial(const GrayImage& image, const DogFilterBank& bank);
std::vector<double> dog_coefficients_omp(const GrayImage& image, const DogFilterBank& bank);

// Output spike counts of one weight vector over many inputs.
std::vector<std::size_t> count_spikes_serial(std::span<const EventTrain> trains,
                                             std::span<const double> weights, double threshold);
std::vector<std::size_t> count_spikes_omp(std::span<const EventTrain> trains,
                                          std::span<const double> weights, double threshold);

}  // namespace mst::kernels

#endif  // MST_KERNELS_HPP_
