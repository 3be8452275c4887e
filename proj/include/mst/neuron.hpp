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

#ifndef MST_NEURON_HPP_
#define MST_NEURON_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace mst {

// Biophysical constants of the current-based leaky integrate-and-fire neuron.
// Defaults are the fixed parameter set used by every experiment.
struct NeuronParams {
  double tau_m = 0.015;  // membrane time constant [s]
  double tau_s = 0.005;  // synaptic decay time constant [s]
  double v_thresh = 1.0;
  double v_rest = 0.0;
  double dt = 1e-3;  // integration step [s]

  // tau_m / tau_s.
  double kernel_ratio() const { return tau_m / tau_s; }
  // Normalisation that puts the kernel peak at exactly 1.
  double v_norm() const;
  // Delay after an input spike at which the kernel peaks.
  double peak_delay() const;

  // Throws InvalidArgument unless tau_m > tau_s > dt > 0.
  void validate() const;
};

// Spike times per afferent, in seconds. After canonicalize() every list is
// strictly increasing and inside [0, duration).
struct SpikePattern {
  std::vector<std::vector<double>> spikes;
  double duration = 0.0;

  SpikePattern() = default;
  SpikePattern(std::size_t n_afferents, double duration_s)
      : spikes(n_afferents), duration(duration_s) {}

  std::size_t n_afferents() const { return spikes.size(); }
  std::size_t total_spikes() const;

  // Sorts each afferent, drops duplicates and out-of-range times.
  void canonicalize();
  // Throws InvalidArgument if the invariants above do not hold.
  void validate() const;

  friend bool operator==(const SpikePattern&, const SpikePattern&) = default;
};

// Per-afferent synaptic weights.
using Weights = std::vector<double>;

// V_norm * (exp(-delta/tau_m) - exp(-delta/tau_s)) for delta >= 0, else 0.
double kernel_value(double delta, const NeuronParams& params);
// d/d(delta) of kernel_value; 0 for delta < 0.
double kernel_slope(double delta, const NeuronParams& params);

// A spike pattern pre-binned onto the integration grid. Building one costs a
// sort; simulating it is O(n_steps + n_events). Holds its own copy of the
// neuron parameters, so the binning can never go stale.
class EventTrain {
 public:
  struct Event {
    std::uint32_t afferent;
    std::uint32_t step;  // first grid index with t_step >= time
    double time;
    double decay_m;  // exp(-(t_step - time) / tau_m)
    double decay_s;  // exp(-(t_step - time) / tau_s)
  };

  EventTrain(const SpikePattern& pattern, const NeuronParams& params);

  const NeuronParams& params() const { return params_; }
  const SpikePattern& pattern() const { return pattern_; }
  std::size_t n_afferents() const { return pattern_.n_afferents(); }
  std::size_t n_steps() const { return n_steps_; }
  double step_time(std::size_t n) const { return static_cast<double>(n) * params_.dt; }
  std::span<const Event> events() const { return events_; }
  // True if the afferent has at least one spike.
  bool active(std::size_t afferent) const { return !pattern_.spikes[afferent].empty(); }

 private:
  NeuronParams params_;
  SpikePattern pattern_;
  std::size_t n_steps_ = 0;
  std::vector<Event> events_;
};

struct SimulationOptions {
  bool record_trace = false;
  // Stop once this many output spikes were emitted (0 = run to the end).
  // v_max_unreset then covers only the simulated prefix.
  std::size_t stop_after = 0;
};

struct SimulationResult {
  std::vector<double> output_spikes;
  std::vector<std::size_t> output_steps;
  // Maximum over the grid of the trace without any resets.
  double v_max_unreset = 0.0;
  // V(t_n) before the reset of step n, if requested.
  std::vector<double> voltage_trace;

  std::size_t count() const { return output_spikes.size(); }
};

// Discrete-time integration on the grid t_n = n * dt. An output spike is
// emitted at the first grid point with V >= threshold, after which
// threshold * exp(-(t - t_spike)/tau_m) is subtracted.
SimulationResult simulate(const EventTrain& train, std::span<const double> weights,
                          double threshold, const SimulationOptions& options = {});
SimulationResult simulate(const SpikePattern& pattern, std::span<const double> weights,
                          double threshold, const NeuronParams& params,
                          const SimulationOptions& options = {});

std::size_t count_spikes(const EventTrain& train, std::span<const double> weights,
                         double threshold);
std::size_t count_spikes(const SpikePattern& pattern, std::span<const double> weights,
                         double threshold, const NeuronParams& params);

// Sum over the afferent's spikes s <= t of kernel_value(t - s), i.e. dV/dw_i.
double afferent_drive(const SpikePattern& pattern, std::size_t afferent, double t,
                      const NeuronParams& params);

}  // namespace mst

#endif  // MST_NEURON_HPP_
