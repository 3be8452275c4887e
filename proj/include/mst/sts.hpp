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

#ifndef MST_STS_HPP_
#define MST_STS_HPP_

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "mst/neuron.hpp"

namespace mst {

// A transition point of the spike-threshold surface: the neuron emits at
// least k spikes for thresholds just below theta_star and fewer than k just
// above it.
struct CriticalThreshold {
  std::size_t k = 0;
  double theta_star = 0.0;  // bisection midpoint
  // Grid time of the spike that appears when the threshold drops through
  // theta_star. Almost always the k-th spike; on non-monotone stretches of the
  // surface it can be an earlier one (see critical_index).
  double t_star = 0.0;
  // Output spikes simulated at the lower bracket end.
  std::vector<double> spike_times_at_criticality;
  std::size_t critical_index = 0;  // position of t_star in the list above
  // Threshold at which V(t_star) equals the threshold given the spike history
  // before t_star, solved in closed form. Lies inside [lo, hi] up to rounding.
  double theta_exact = 0.0;
  double lo = 0.0, hi = 0.0;
  int iterations = 0;
};

struct CriticalOptions {
  double tol = 1e-9;  // absolute, on the threshold
  int max_iterations = 60;
};

// Thresholds with a known spike count, used to shortcut the bracket search.
// lo must give >= k spikes, hi must give < k.
struct BracketHint {
  std::optional<double> lo;
  std::optional<double> hi;
};

// Bisection for theta*_k. Throws UnreachableError if no positive threshold
// gives k spikes, ConvergenceError if the iteration cap is hit.
CriticalThreshold critical_threshold(const EventTrain& train, std::span<const double> weights,
                                     std::size_t k, const CriticalOptions& options = {},
                                     const BracketHint& hint = {});

// How output spike times respond to weight changes when differentiating.
enum class SpikeTimeModel {
  // Spike times are pinned to the integration grid, so they do not move
  // under small weight changes. Exact derivative of the discrete simulator.
  kGridLocked,
  // Spike times are refined to the continuous crossings of V(t) and the
  // threshold crossing at t_star is taken as a tangency; every earlier spike
  // time contributes through its reset term.
  kContinuous,
};

// d theta*_k / d w via the implicit function theorem at criticality. Spike
// j satisfies V(t_j) = theta*, and the critical spike V(t*) = theta*. Writing
// dt_j = a_j . dw + b_j dtheta*, in spike order,
//   a_j = (-K(t_j) + theta*/tau_m sum_{l<j} E_jl a_l) / Vdot(t_j)
//   b_j = (1 + sum_{l<j} E_jl + theta*/tau_m sum_{l<j} E_jl b_l) / Vdot(t_j)
// with E_jl = exp(-(t_j - t_l)/tau_m) and K the per-afferent kernel sums, and
// finally
//   dtheta*/dw = (K(t*) - theta*/tau_m sum_l E_*l a_l)
//              / (1 + sum_l E_*l + theta*/tau_m sum_l E_*l b_l).
// Under kGridLocked all a_j, b_j vanish. Throws DegenerateCrossing when a
// crossing slope |Vdot(t_j)| < 1e-12 or the refinement cannot bracket a
// crossing (kContinuous only).
std::vector<double> sts_gradient_analytic(const EventTrain& train,
                                          std::span<const double> weights,
                                          const CriticalThreshold& crit,
                                          SpikeTimeModel model = SpikeTimeModel::kGridLocked);

// Continuous-time critical point refined from a grid critical threshold; the
// quantities the kContinuous gradient is evaluated at.
struct ContinuousCriticalPoint {
  double theta = 0.0;
  std::vector<double> spike_times;  // refined crossings before t_star
  double t_star = 0.0;              // local maximum touching theta
};
ContinuousCriticalPoint refine_critical_point(const EventTrain& train,
                                              std::span<const double> weights,
                                              const CriticalThreshold& crit);

// Central finite differences of critical_threshold, one coordinate at a time.
struct FdGradient {
  std::vector<double> central;
  std::vector<double> forward;
  std::vector<double> backward;
  // Coordinates whose perturbation moved the critical event (different
  // t_star or spike history) or lost the bracket; central is 0 there.
  std::vector<bool> flagged;
  std::size_t n_flagged = 0;
};
FdGradient sts_gradient_fd(const EventTrain& train, std::span<const double> weights,
                           std::size_t k, double step = 1e-6,
                           const CriticalOptions& options = {});

enum class Direction { kNone = 0, kIncrease = 1, kDecrease = -1 };

inline int sign(Direction d) { return static_cast<int>(d); }

struct TrainingSignal {
  std::size_t target_spikes = 0;
  std::size_t actual_spikes = 0;
  Direction direction = Direction::kNone;
};

struct LabelStep {
  TrainingSignal signal;
  std::size_t k = 0;  // which theta*_k the gradient belongs to (0 if none)
  std::optional<std::vector<double>> gradient;
  // kContinuous hit a degenerate crossing and the grid-locked gradient was
  // used instead.
  bool fell_back = false;
};

// One aggregate-label learning step: compare the spike count at the neuron's
// threshold against the target and return the gradient of theta*_{actual+1}
// (too few spikes) or theta*_{actual} (too many). The weight update is
// sign(direction) * scale * gradient; scaling is left to the optimizer.
// Propagates UnreachableError when the needed theta*_k does not exist.
LabelStep aggregate_label_step(const EventTrain& train, std::span<const double> weights,
                               std::size_t target_spikes,
                               SpikeTimeModel model = SpikeTimeModel::kGridLocked,
                               const CriticalOptions& options = {});

}  // namespace mst

#endif  // MST_STS_HPP_
