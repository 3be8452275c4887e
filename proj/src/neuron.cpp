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

#include "mst/neuron.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "mst/error.hpp"

namespace mst {

double NeuronParams::v_norm() const {
  const double eta = kernel_ratio();
  return std::pow(eta, eta / (eta - 1.0)) / (eta - 1.0);
}

double NeuronParams::peak_delay() const {
  return tau_m * tau_s / (tau_m - tau_s) * std::log(tau_m / tau_s);
}

void NeuronParams::validate() const {
  if (!(tau_s > 0.0) || !(tau_m > tau_s))
    throw InvalidArgument("NeuronParams: need tau_m > tau_s > 0");
  if (!(dt > 0.0) || !(dt < tau_s))
    throw InvalidArgument("NeuronParams: need 0 < dt < tau_s");
  if (!std::isfinite(v_thresh) || !std::isfinite(v_rest))
    throw InvalidArgument("NeuronParams: non-finite voltage");
}

std::size_t SpikePattern::total_spikes() const {
  return std::accumulate(spikes.begin(), spikes.end(), std::size_t{0},
                         [](std::size_t acc, const auto& s) { return acc + s.size(); });
}

void SpikePattern::canonicalize() {
  for (auto& train : spikes) {
    std::erase_if(train, [this](double t) { return !(t >= 0.0 && t < duration); });
    std::sort(train.begin(), train.end());
    train.erase(std::unique(train.begin(), train.end()), train.end());
  }
}

void SpikePattern::validate() const {
  if (!(duration > 0.0) || !std::isfinite(duration))
    throw InvalidArgument("SpikePattern: duration must be positive");
  for (std::size_t i = 0; i < spikes.size(); ++i) {
    const auto& train = spikes[i];
    for (std::size_t j = 0; j < train.size(); ++j) {
      if (!(train[j] >= 0.0 && train[j] < duration))
        throw InvalidArgument("SpikePattern: spike outside [0, duration) on afferent " +
                              std::to_string(i));
      if (j > 0 && !(train[j] > train[j - 1]))
        throw InvalidArgument("SpikePattern: spikes not strictly increasing on afferent " +
                              std::to_string(i));
    }
  }
}

double kernel_value(double delta, const NeuronParams& params) {
  if (delta < 0.0) return 0.0;
  return params.v_norm() * (std::exp(-delta / params.tau_m) - std::exp(-delta / params.tau_s));
}

double kernel_slope(double delta, const NeuronParams& params) {
  if (delta < 0.0) return 0.0;
  return params.v_norm() * (std::exp(-delta / params.tau_s) / params.tau_s -
                            std::exp(-delta / params.tau_m) / params.tau_m);
}

EventTrain::EventTrain(const SpikePattern& pattern, const NeuronParams& params)
    : params_(params), pattern_(pattern) {
  params_.validate();
  pattern_.validate();
  n_steps_ = static_cast<std::size_t>(std::ceil(pattern_.duration / params_.dt - 1e-9));
  events_.reserve(pattern_.total_spikes());
  for (std::size_t a = 0; a < pattern_.n_afferents(); ++a) {
    for (double t : pattern_.spikes[a]) {
      auto n = static_cast<std::int64_t>(std::ceil(t / params_.dt));
      if (static_cast<double>(n) * params_.dt < t) ++n;
      if (n > 0 && static_cast<double>(n - 1) * params_.dt >= t) --n;
      if (n >= static_cast<std::int64_t>(n_steps_)) continue;
      const double lag = static_cast<double>(n) * params_.dt - t;
      events_.push_back({static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(n), t,
                         std::exp(-lag / params_.tau_m), std::exp(-lag / params_.tau_s)});
    }
  }
  std::stable_sort(events_.begin(), events_.end(),
                   [](const Event& x, const Event& y) { return x.step < y.step; });
}

namespace {

void check_weights(const EventTrain& train, std::span<const double> weights) {
  if (weights.size() != train.n_afferents())
    throw InvalidArgument("simulate: " + std::to_string(weights.size()) + " weights for " +
                          std::to_string(train.n_afferents()) + " afferents");
  for (double w : weights)
    if (!std::isfinite(w)) throw InvalidArgument("simulate: non-finite weight");
}

}  // namespace

SimulationResult simulate(const EventTrain& train, std::span<const double> weights,
                          double threshold, const SimulationOptions& options) {
  check_weights(train, weights);
  if (std::isnan(threshold)) throw InvalidArgument("simulate: NaN threshold");

  const NeuronParams& p = train.params();
  const double decay_m = std::exp(-p.dt / p.tau_m);
  const double decay_s = std::exp(-p.dt / p.tau_s);
  const double v_norm = p.v_norm();
  const auto events = train.events();

  SimulationResult result;
  result.v_max_unreset = -std::numeric_limits<double>::infinity();
  if (options.record_trace) result.voltage_trace.reserve(train.n_steps());

  // Running sums of the tau_m and tau_s exponentials and of the resets.
  double sum_m = 0.0, sum_s = 0.0, resets = 0.0;
  std::size_t next = 0;
  for (std::size_t n = 0; n < train.n_steps(); ++n) {
    sum_m *= decay_m;
    sum_s *= decay_s;
    resets *= decay_m;
    for (; next < events.size() && events[next].step == n; ++next) {
      const double w = weights[events[next].afferent];
      sum_m += w * events[next].decay_m;
      sum_s += w * events[next].decay_s;
    }
    const double unreset = p.v_rest + v_norm * (sum_m - sum_s);
    result.v_max_unreset = std::max(result.v_max_unreset, unreset);
    const double v = unreset - threshold * resets;
    if (options.record_trace) result.voltage_trace.push_back(v);
    if (v >= threshold) {
      result.output_spikes.push_back(train.step_time(n));
      result.output_steps.push_back(n);
      resets += 1.0;
      if (options.stop_after != 0 && result.count() >= options.stop_after) break;
    }
  }
  if (train.n_steps() == 0) result.v_max_unreset = p.v_rest;
  return result;
}

SimulationResult simulate(const SpikePattern& pattern, std::span<const double> weights,
                          double threshold, const NeuronParams& params,
                          const SimulationOptions& options) {
  return simulate(EventTrain(pattern, params), weights, threshold, options);
}

std::size_t count_spikes(const EventTrain& train, std::span<const double> weights,
                         double threshold) {
  return simulate(train, weights, threshold).count();
}

std::size_t count_spikes(const SpikePattern& pattern, std::span<const double> weights,
                         double threshold, const NeuronParams& params) {
  return simulate(pattern, weights, threshold, params).count();
}

double afferent_drive(const SpikePattern& pattern, std::size_t afferent, double t,
                      const NeuronParams& params) {
  double drive = 0.0;
  for (double s : pattern.spikes[afferent]) {
    if (s > t) break;
    drive += kernel_value(t - s, params);
  }
  return drive;
}

}  // namespace mst
