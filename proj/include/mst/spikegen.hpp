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

#ifndef MST_SPIKEGEN_HPP_
#define MST_SPIKEGEN_HPP_

#include <array>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "mst/neuron.hpp"

namespace mst {

using Rng = std::mt19937_64;

// Mixes a master seed and an index into an independent stream seed
// (splitmix64 finaliser).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

// Renewal process with gamma(k) inter-spike intervals of mean 1/rate.
// k = 1 is Poisson; the ISI coefficient of variation is 1/sqrt(k).
struct RenewalSpec {
  int gamma_order = 1;
  double rate = 0.89;  // events per second per afferent
};

// The process runs from -kRenewalBurnIn / rate so that the kept window
// [0, duration) sees the stationary process. One independent stream per
// afferent (afferent a uses derive_seed(seed, a)).
inline constexpr double kRenewalBurnIn = 50.0;  // mean intervals

// One stationary train on [0, duration).
std::vector<double> renewal_train(Rng& rng, int gamma_order, double rate, double duration);

SpikePattern gen_gamma_renewal(const RenewalSpec& spec, double duration, std::size_t n_afferents,
                               std::uint64_t seed);

// Nine frozen patterns: five task-related with positive reward and four
// zero-reward distractors.
struct PatternLibrary {
  std::vector<SpikePattern> patterns;
  std::vector<int> rewards;
  RenewalSpec spec;
  std::uint64_t seed = 0;
};

inline constexpr std::size_t kLibrarySize = 9;
inline constexpr std::array<int, kLibrarySize> kDefaultRewards = {1, 2, 4, 1, 2, 0, 0, 0, 0};

PatternLibrary make_pattern_library(const RenewalSpec& spec, std::size_t n_afferents,
                                    std::span<const int> rewards, std::uint64_t seed,
                                    double pattern_duration = 1.0);

enum class NoiseRegime {
  kPatternsOnly,
  kJitter,
  kHomogeneousBackground,
  kInhomogeneousBackground,
};

NoiseRegime parse_noise_regime(std::string_view name);
std::string_view to_string(NoiseRegime regime);

// Sinusoidal rate modulation: rate(t) = base + amplitude * sin(2 pi f t + phase).
struct Modulation {
  double amplitude = 0.0;
  double frequency = 1.0;
  double phase = 0.0;
};

struct NoiseConfig {
  NoiseRegime regime = NoiseRegime::kPatternsOnly;
  double jitter_sd = 1e-3;           // [s]
  double bg_rate = 0.89;             // background events/s per afferent
  double modulation_fraction = 0.5;  // amplitude = fraction * bg_rate
  double modulation_frequency = 1.0; // [Hz]; phases are random per afferent
};

struct Placement {
  std::size_t pattern_index = 0;
  double onset = 0.0;
};

struct Trial {
  SpikePattern pattern;     // everything the neuron sees
  SpikePattern embedded;    // pattern spikes only (after jitter, before background)
  std::size_t target = 0;   // sum of placement rewards
  std::vector<Placement> placements;  // sorted by onset, non-overlapping
  std::uint64_t seed = 0;
};

struct TrialOptions {
  double duration = 10.0;
  double mean_patterns = 5.0;
  int max_count_redraws = 1000;
};

// Poisson(mean_patterns) placements, patterns chosen uniformly with
// replacement and positioned uniformly at random without overlap, plus the
// configured noise.
Trial assemble_trial(const PatternLibrary& library, const NoiseConfig& noise, std::uint64_t seed,
                     const TrialOptions& options = {});

// Adds N(0, sd) to every spike, drops spikes leaving [0, duration).
SpikePattern jitter_spikes(const SpikePattern& pattern, double sd, std::uint64_t seed);

// Thinning of a homogeneous process at base + |amplitude|. `modulation`
// holds one entry per afferent, or a single entry shared by all of them.
SpikePattern gen_inhomogeneous_poisson(double base_rate, std::span<const Modulation> modulation,
                                       double duration, std::size_t n_afferents,
                                       std::uint64_t seed);

// Merges b into a (same afferent count); the result is canonical.
SpikePattern merge_patterns(const SpikePattern& a, const SpikePattern& b);

struct Histogram {
  double bin_width = 0.0;
  std::vector<std::size_t> counts;
  std::size_t overflow = 0;
};

struct IsiStatistics {
  std::vector<double> isis;
  Histogram histogram;
  double mean = 0.0;
  double variance = 0.0;
  double cv = 0.0;
};

struct TimeWindow {
  double begin = 0.0;
  double end = 0.0;
};

// Pooled ISIs over all afferents. Throws InvalidArgument when no afferent
// has two spikes.
IsiStatistics isi_statistics(const SpikePattern& pattern, double bin_width = 0.05,
                             double max_isi = 5.0);
// Only intervals whose two spikes fall in the same window.
IsiStatistics isi_statistics(const SpikePattern& pattern, std::span<const TimeWindow> windows,
                             double bin_width = 0.05, double max_isi = 5.0);

std::vector<TimeWindow> placement_windows(const Trial& trial, const PatternLibrary& library);

}  // namespace mst

#endif  // MST_SPIKEGEN_HPP_
