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

#include "mst/spikegen.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "mst/error.hpp"

namespace mst {

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::vector<double> renewal_train(Rng& rng, int gamma_order, double rate, double duration) {
  const double k = gamma_order;
  std::gamma_distribution<double> isi(k, 1.0 / (k * rate));
  std::vector<double> train;
  double t = -kRenewalBurnIn / rate + isi(rng);
  while (t < 0.0) t += isi(rng);
  for (; t < duration; t += isi(rng)) train.push_back(t);
  return train;
}

SpikePattern gen_gamma_renewal(const RenewalSpec& spec, double duration, std::size_t n_afferents,
                               std::uint64_t seed) {
  if (!(duration > 0.0)) throw InvalidArgument("gen_gamma_renewal: duration must be positive");
  if (spec.gamma_order < 1) throw InvalidArgument("gen_gamma_renewal: gamma order must be >= 1");
  if (!(spec.rate > 0.0)) throw InvalidArgument("gen_gamma_renewal: rate must be positive");

  SpikePattern pattern(n_afferents, duration);
  for (std::size_t a = 0; a < n_afferents; ++a) {
    Rng rng(derive_seed(seed, a));
    pattern.spikes[a] = renewal_train(rng, spec.gamma_order, spec.rate, duration);
  }
  pattern.canonicalize();
  return pattern;
}

PatternLibrary make_pattern_library(const RenewalSpec& spec, std::size_t n_afferents,
                                    std::span<const int> rewards, std::uint64_t seed,
                                    double pattern_duration) {
  if (rewards.size() != kLibrarySize)
    throw InvalidArgument("make_pattern_library: need " + std::to_string(kLibrarySize) +
                          " rewards");
  std::size_t zeros = 0;
  for (int r : rewards) {
    if (r < 0 || r > 9) throw InvalidArgument("make_pattern_library: reward outside [0, 9]");
    if (r == 0) ++zeros;
  }
  // The all-zero library is allowed as a degenerate control.
  if (zeros != 4 && zeros != kLibrarySize)
    throw InvalidArgument("make_pattern_library: need exactly 4 zero-reward distractors");

  PatternLibrary lib;
  lib.spec = spec;
  lib.seed = seed;
  lib.rewards.assign(rewards.begin(), rewards.end());
  for (std::size_t i = 0; i < kLibrarySize; ++i)
    lib.patterns.push_back(
        gen_gamma_renewal(spec, pattern_duration, n_afferents, derive_seed(seed, i)));
  return lib;
}

NoiseRegime parse_noise_regime(std::string_view name) {
  if (name == "patterns_only") return NoiseRegime::kPatternsOnly;
  if (name == "jitter") return NoiseRegime::kJitter;
  if (name == "homogeneous_background") return NoiseRegime::kHomogeneousBackground;
  if (name == "inhomogeneous_background") return NoiseRegime::kInhomogeneousBackground;
  throw InvalidArgument("unknown noise regime '" + std::string(name) + "'");
}

std::string_view to_string(NoiseRegime regime) {
  switch (regime) {
    case NoiseRegime::kPatternsOnly: return "patterns_only";
    case NoiseRegime::kJitter: return "jitter";
    case NoiseRegime::kHomogeneousBackground: return "homogeneous_background";
    case NoiseRegime::kInhomogeneousBackground: return "inhomogeneous_background";
  }
  return "?";
}

SpikePattern merge_patterns(const SpikePattern& a, const SpikePattern& b) {
  if (a.n_afferents() != b.n_afferents())
    throw InvalidArgument("merge_patterns: afferent count mismatch");
  SpikePattern out = a;
  out.duration = std::max(a.duration, b.duration);
  for (std::size_t i = 0; i < b.n_afferents(); ++i)
    out.spikes[i].insert(out.spikes[i].end(), b.spikes[i].begin(), b.spikes[i].end());
  out.canonicalize();
  return out;
}

SpikePattern jitter_spikes(const SpikePattern& pattern, double sd, std::uint64_t seed) {
  if (!(sd >= 0.0)) throw InvalidArgument("jitter_spikes: sd must be >= 0");
  if (sd == 0.0) return pattern;
  SpikePattern out = pattern;
  Rng rng(seed);
  std::normal_distribution<double> noise(0.0, sd);
  for (auto& train : out.spikes)
    for (double& t : train) t += noise(rng);
  out.canonicalize();
  return out;
}

SpikePattern gen_inhomogeneous_poisson(double base_rate, std::span<const Modulation> modulation,
                                       double duration, std::size_t n_afferents,
                                       std::uint64_t seed) {
  if (!(duration > 0.0))
    throw InvalidArgument("gen_inhomogeneous_poisson: duration must be positive");
  if (modulation.size() != 1 && modulation.size() != n_afferents)
    throw InvalidArgument("gen_inhomogeneous_poisson: need one modulation or one per afferent");
  for (const auto& m : modulation)
    if (base_rate - std::abs(m.amplitude) < 0.0 || base_rate < 0.0)
      throw InvalidArgument("gen_inhomogeneous_poisson: negative instantaneous rate");

  SpikePattern pattern(n_afferents, duration);
  for (std::size_t a = 0; a < n_afferents; ++a) {
    const Modulation& m = modulation.size() == 1 ? modulation[0] : modulation[a];
    const double rate_max = base_rate + std::abs(m.amplitude);
    if (rate_max <= 0.0) continue;
    Rng rng(derive_seed(seed, a));
    std::exponential_distribution<double> gap(rate_max);
    std::uniform_real_distribution<double> accept(0.0, 1.0);
    for (double t = gap(rng); t < duration; t += gap(rng)) {
      const double rate =
          base_rate + m.amplitude * std::sin(2.0 * std::numbers::pi * m.frequency * t + m.phase);
      if (accept(rng) * rate_max < rate) pattern.spikes[a].push_back(t);
    }
  }
  pattern.canonicalize();
  return pattern;
}

Trial assemble_trial(const PatternLibrary& library, const NoiseConfig& noise, std::uint64_t seed,
                     const TrialOptions& options) {
  if (library.patterns.empty()) throw InvalidArgument("assemble_trial: empty library");
  const std::size_t n_afferents = library.patterns.front().n_afferents();
  const double pattern_len = library.patterns.front().duration;

  Trial trial;
  trial.seed = seed;
  Rng rng(derive_seed(seed, 0));
  std::poisson_distribution<int> count_dist(options.mean_patterns);
  std::uniform_int_distribution<std::size_t> pick(0, library.patterns.size() - 1);

  int count = -1;
  for (int attempt = 0; attempt < options.max_count_redraws; ++attempt) {
    const int c = count_dist(rng);
    if (c * pattern_len <= options.duration) {
      count = c;
      break;
    }
  }
  if (count < 0) throw InvalidArgument("assemble_trial: placement infeasible after retry cap");

  // Uniform over non-overlapping configurations: sorted free offsets plus the
  // lengths of the patterns placed before each one.
  const double free_len = options.duration - count * pattern_len;
  std::uniform_real_distribution<double> offset(0.0, free_len);
  std::vector<double> offsets(static_cast<std::size_t>(count));
  for (double& o : offsets) o = offset(rng);
  std::sort(offsets.begin(), offsets.end());
  for (std::size_t i = 0; i < offsets.size(); ++i) {
    const std::size_t idx = pick(rng);
    trial.placements.push_back({idx, offsets[i] + static_cast<double>(i) * pattern_len});
    trial.target += static_cast<std::size_t>(library.rewards[idx]);
  }

  trial.embedded = SpikePattern(n_afferents, options.duration);
  for (const auto& pl : trial.placements) {
    const auto& src = library.patterns[pl.pattern_index];
    for (std::size_t a = 0; a < n_afferents; ++a)
      for (double t : src.spikes[a]) trial.embedded.spikes[a].push_back(pl.onset + t);
  }
  trial.embedded.canonicalize();

  switch (noise.regime) {
    case NoiseRegime::kPatternsOnly:
      trial.pattern = trial.embedded;
      break;
    case NoiseRegime::kJitter:
      trial.embedded = jitter_spikes(trial.embedded, noise.jitter_sd, derive_seed(seed, 1));
      trial.pattern = trial.embedded;
      break;
    case NoiseRegime::kHomogeneousBackground: {
      const Modulation flat{};
      trial.pattern = merge_patterns(
          trial.embedded, gen_inhomogeneous_poisson(noise.bg_rate, {&flat, 1}, options.duration,
                                                    n_afferents, derive_seed(seed, 2)));
      break;
    }
    case NoiseRegime::kInhomogeneousBackground: {
      Rng phase_rng(derive_seed(seed, 3));
      std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
      std::vector<Modulation> mods(n_afferents);
      for (auto& m : mods)
        m = {noise.modulation_fraction * noise.bg_rate, noise.modulation_frequency, phase(phase_rng)};
      trial.pattern = merge_patterns(
          trial.embedded, gen_inhomogeneous_poisson(noise.bg_rate, mods, options.duration,
                                                    n_afferents, derive_seed(seed, 2)));
      break;
    }
  }
  return trial;
}

namespace {

IsiStatistics summarize(std::vector<double> isis, double bin_width, double max_isi) {
  if (isis.empty()) throw InvalidArgument("isi_statistics: insufficient spikes");
  if (!(bin_width > 0.0) || !(max_isi > bin_width))
    throw InvalidArgument("isi_statistics: bad histogram range");
  IsiStatistics st;
  double sum = 0.0;
  for (double d : isis) sum += d;
  st.mean = sum / static_cast<double>(isis.size());
  double ss = 0.0;
  for (double d : isis) ss += (d - st.mean) * (d - st.mean);
  st.variance = ss / static_cast<double>(isis.size());
  st.cv = std::sqrt(st.variance) / st.mean;
  st.histogram.bin_width = bin_width;
  st.histogram.counts.assign(static_cast<std::size_t>(std::ceil(max_isi / bin_width)), 0);
  for (double d : isis) {
    const auto bin = static_cast<std::size_t>(d / bin_width);
    if (bin < st.histogram.counts.size())
      ++st.histogram.counts[bin];
    else
      ++st.histogram.overflow;
  }
  st.isis = std::move(isis);
  return st;
}

}  // namespace

IsiStatistics isi_statistics(const SpikePattern& pattern, double bin_width, double max_isi) {
  std::vector<double> isis;
  for (const auto& train : pattern.spikes)
    for (std::size_t j = 1; j < train.size(); ++j) isis.push_back(train[j] - train[j - 1]);
  return summarize(std::move(isis), bin_width, max_isi);
}

IsiStatistics isi_statistics(const SpikePattern& pattern, std::span<const TimeWindow> windows,
                             double bin_width, double max_isi) {
  std::vector<double> isis;
  for (const auto& train : pattern.spikes) {
    for (const auto& w : windows) {
      auto first = std::lower_bound(train.begin(), train.end(), w.begin);
      auto last = std::lower_bound(train.begin(), train.end(), w.end);
      for (auto it = first; it != last && std::next(it) != last; ++it)
        isis.push_back(*std::next(it) - *it);
    }
  }
  return summarize(std::move(isis), bin_width, max_isi);
}

std::vector<TimeWindow> placement_windows(const Trial& trial, const PatternLibrary& library) {
  std::vector<TimeWindow> windows;
  for (const auto& pl : trial.placements)
    windows.push_back({pl.onset, pl.onset + library.patterns[pl.pattern_index].duration});
  return windows;
}

}  // namespace mst
