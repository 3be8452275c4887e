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

#include "mst/sts.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "mst/error.hpp"

namespace mst {
namespace {

// Kernel contributions older than this many tau_m are below 1e-17 and are
// skipped when summing over input events.
constexpr double kWindowTaus = 40.0;
constexpr double kMinSlope = 1e-12;

// Direct (non-recursive) evaluation of the weighted input drive at arbitrary
// times. Used at the handful of spike times the gradient needs.
class Drive {
 public:
  Drive(const EventTrain& train, std::span<const double> weights)
      : train_(train), weights_(weights), p_(train.params()), v_norm_(p_.v_norm()) {}

  // v_rest + sum_i w_i K_i(t).
  double value(double t) const {
    double v = p_.v_rest;
    for_each_event(t, [&](const EventTrain::Event& e, double lag) {
      v += weights_[e.afferent] * v_norm_ *
           (std::exp(-lag / p_.tau_m) - std::exp(-lag / p_.tau_s));
    });
    return v;
  }

  // d/dt of value(t) from the input side. Events exactly at t do not
  // contribute (left derivative).
  double slope(double t) const {
    double s = 0.0;
    for_each_event(t, [&](const EventTrain::Event& e, double lag) {
      if (lag > 0.0)
        s += weights_[e.afferent] * v_norm_ *
             (std::exp(-lag / p_.tau_s) / p_.tau_s - std::exp(-lag / p_.tau_m) / p_.tau_m);
    });
    return s;
  }

  // K_i(t) for every afferent.
  std::vector<double> per_afferent(double t) const {
    std::vector<double> k(train_.n_afferents(), 0.0);
    for_each_event(t, [&](const EventTrain::Event& e, double lag) {
      k[e.afferent] += v_norm_ * (std::exp(-lag / p_.tau_m) - std::exp(-lag / p_.tau_s));
    });
    return k;
  }

 private:
  template <typename F>
  void for_each_event(double t, F&& f) const {
    const auto events = train_.events();
    const double t0 = t - kWindowTaus * p_.tau_m;
    const auto first_step = static_cast<std::uint32_t>(std::max(0.0, std::floor(t0 / p_.dt)));
    auto it = std::lower_bound(events.begin(), events.end(), first_step,
                               [](const EventTrain::Event& e, std::uint32_t s) { return e.step < s; });
    const double last_step = std::ceil(t / p_.dt) + 1.0;
    for (; it != events.end() && it->step <= last_step; ++it) {
      const double lag = t - it->time;
      if (lag >= 0.0 && it->time >= t0) f(*it, lag);
    }
  }

  const EventTrain& train_;
  std::span<const double> weights_;
  NeuronParams p_;
  double v_norm_;
};

// sum over history times t_l < t of exp(-(t - t_l)/tau_m).
double reset_sum(std::span<const double> history, double t, double tau_m) {
  double r = 0.0;
  for (double tl : history)
    if (tl < t) r += std::exp(-(t - tl) / tau_m);
  return r;
}

std::size_t count_at_least(const EventTrain& train, std::span<const double> weights,
                           double threshold, std::size_t k) {
  return simulate(train, weights, threshold, {.record_trace = false, .stop_after = k}).count();
}

}  // namespace

CriticalThreshold critical_threshold(const EventTrain& train, std::span<const double> weights,
                                     std::size_t k, const CriticalOptions& options,
                                     const BracketHint& hint) {
  if (k == 0) throw InvalidArgument("critical_threshold: k must be positive");
  if (!(options.tol > 0.0)) throw InvalidArgument("critical_threshold: tol must be positive");

  const double v_max =
      simulate(train, weights, std::numeric_limits<double>::max()).v_max_unreset;
  if (!(v_max > 0.0))
    throw UnreachableError("critical_threshold: no positive drive, k=" + std::to_string(k) +
                           " unreachable");

  // count(hi) < k, count(lo) >= k throughout.
  double hi = std::nextafter(v_max, std::numeric_limits<double>::infinity());
  if (hint.hi && *hint.hi > 0.0 && *hint.hi < hi) hi = *hint.hi;
  double lo = 0.0;
  bool have_lo = false;
  if (hint.lo && *hint.lo > 0.0 && *hint.lo < hi &&
      count_at_least(train, weights, *hint.lo, k) >= k) {
    lo = *hint.lo;
    have_lo = true;
  }
  for (int halvings = 0; !have_lo && halvings < 64; ++halvings) {
    const double probe = 0.5 * hi;
    if (count_at_least(train, weights, probe, k) >= k) {
      lo = probe;
      have_lo = true;
    } else {
      hi = probe;
    }
  }
  if (!have_lo)
    throw UnreachableError("critical_threshold: k=" + std::to_string(k) +
                           " spikes unreachable at any positive threshold");

  int iterations = 0;
  while (hi - lo >= options.tol) {
    if (++iterations > options.max_iterations)
      throw ConvergenceError("critical_threshold: bisection did not converge");
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;  // bracket at floating-point resolution
    if (count_at_least(train, weights, mid, k) >= k)
      lo = mid;
    else
      hi = mid;
  }

  const auto at_lo = simulate(train, weights, lo);
  const auto at_hi = simulate(train, weights, hi);
  std::size_t j = 0;
  while (j < at_hi.count() && j < at_lo.count() && at_hi.output_steps[j] == at_lo.output_steps[j])
    ++j;
  if (j >= at_lo.count())
    throw ConvergenceError("critical_threshold: bracket ends do not differ in spikes");

  CriticalThreshold crit;
  crit.k = k;
  crit.theta_star = 0.5 * (lo + hi);
  crit.spike_times_at_criticality = at_lo.output_spikes;
  crit.critical_index = j;
  crit.t_star = at_lo.output_spikes[j];
  crit.lo = lo;
  crit.hi = hi;
  crit.iterations = iterations;

  const Drive drive(train, weights);
  const std::span<const double> history(crit.spike_times_at_criticality.data(), j);
  crit.theta_exact =
      drive.value(crit.t_star) / (1.0 + reset_sum(history, crit.t_star, train.params().tau_m));
  return crit;
}

ContinuousCriticalPoint refine_critical_point(const EventTrain& train,
                                              std::span<const double> weights,
                                              const CriticalThreshold& crit) {
  const NeuronParams& p = train.params();
  const Drive drive(train, weights);
  const std::size_t m = crit.critical_index;
  const auto& grid = crit.spike_times_at_criticality;

  std::vector<double> times(m);
  double theta = crit.theta_exact;

  auto excess = [&](double t, std::size_t j) {
    return drive.value(t) - theta * (1.0 + reset_sum({times.data(), j}, t, p.tau_m));
  };
  auto vdot = [&](double t, std::size_t j) {
    return drive.slope(t) + theta / p.tau_m * reset_sum({times.data(), j}, t, p.tau_m);
  };

  auto refine_spikes = [&] {
    for (std::size_t j = 0; j < m; ++j) {
      const double floor_t = j > 0 ? times[j - 1] : -std::numeric_limits<double>::infinity();
      // Intervals to try, nearest to the grid spike first.
      bool found = false;
      for (int shift : {0, -1, -2, 1}) {
        double b = grid[j] + shift * p.dt;
        double a = std::max(b - p.dt, floor_t + 1e-15);
        if (!(b > a)) continue;
        if (!(excess(a, j) < 0.0 && excess(b, j) >= 0.0)) continue;
        for (int it = 0; it < 64 && b - a > 1e-15; ++it) {
          const double mid = 0.5 * (a + b);
          (excess(mid, j) < 0.0 ? a : b) = mid;
        }
        times[j] = b;
        found = true;
        break;
      }
      if (!found)
        throw DegenerateCrossing("refine_critical_point: cannot bracket spike " +
                                 std::to_string(j));
    }
  };

  auto locate_peak = [&] {
    const double floor_t = m > 0 ? times[m - 1] + 1e-15 : 0.0;
    double a = std::max(crit.t_star - p.dt, floor_t);
    double b = crit.t_star + p.dt;
    for (int ext = 0; ext < 4 && vdot(b, m) >= 0.0; ++ext) b += p.dt;
    for (int ext = 0; ext < 4 && vdot(a, m) <= 0.0 && a - p.dt > floor_t; ++ext) a -= p.dt;
    if (!(vdot(a, m) > 0.0 && vdot(b, m) < 0.0))
      throw DegenerateCrossing("refine_critical_point: transition is not a tangency");
    for (int it = 0; it < 64 && b - a > 1e-15; ++it) {
      const double mid = 0.5 * (a + b);
      (vdot(mid, m) > 0.0 ? a : b) = mid;
    }
    return 0.5 * (a + b);
  };

  double t_star = crit.t_star;
  bool converged = false;
  for (int iter = 0; iter < 40 && !converged; ++iter) {
    refine_spikes();
    t_star = locate_peak();
    const double next =
        drive.value(t_star) / (1.0 + reset_sum(times, t_star, p.tau_m));
    converged = std::abs(next - theta) <= 1e-14 * std::max(1.0, std::abs(theta));
    theta = next;
  }
  if (!converged)
    throw DegenerateCrossing("refine_critical_point: threshold fixed point did not settle");
  refine_spikes();
  t_star = locate_peak();
  return {theta, times, t_star};
}

std::vector<double> sts_gradient_analytic(const EventTrain& train,
                                          std::span<const double> weights,
                                          const CriticalThreshold& crit,
                                          SpikeTimeModel model) {
  if (weights.size() != train.n_afferents())
    throw InvalidArgument("sts_gradient_analytic: weight/afferent count mismatch");
  const NeuronParams& p = train.params();
  const Drive drive(train, weights);
  const std::size_t n = train.n_afferents();

  double theta = crit.theta_exact;
  std::vector<double> times(crit.spike_times_at_criticality.begin(),
                            crit.spike_times_at_criticality.begin() +
                                static_cast<std::ptrdiff_t>(crit.critical_index));
  double t_star = crit.t_star;
  if (model == SpikeTimeModel::kContinuous) {
    auto point = refine_critical_point(train, weights, crit);
    theta = point.theta;
    times = std::move(point.spike_times);
    t_star = point.t_star;
  }
  const std::size_t m = times.size();
  const double c = theta / p.tau_m;

  // Sensitivities dt_j = a[j] . dw + b[j] dtheta; all zero when spikes are
  // locked to the grid.
  std::vector<std::vector<double>> a;
  std::vector<double> b;
  if (model == SpikeTimeModel::kContinuous) {
    a.reserve(m);
    b.reserve(m);
    for (std::size_t j = 0; j < m; ++j) {
      double slope = drive.slope(times[j]);
      for (std::size_t l = 0; l < j; ++l) slope += c * std::exp(-(times[j] - times[l]) / p.tau_m);
      if (!(std::abs(slope) >= kMinSlope))
        throw DegenerateCrossing("sts_gradient_analytic: tangential crossing at spike " +
                                 std::to_string(j));
      std::vector<double> aj = drive.per_afferent(times[j]);
      for (double& v : aj) v = -v;
      double bj = 1.0;
      for (std::size_t l = 0; l < j; ++l) {
        const double e = std::exp(-(times[j] - times[l]) / p.tau_m);
        bj += e + c * e * b[l];
        for (std::size_t i = 0; i < n; ++i) aj[i] += c * e * a[l][i];
      }
      for (double& v : aj) v /= slope;
      a.push_back(std::move(aj));
      b.push_back(bj / slope);
    }
  }

  std::vector<double> grad = drive.per_afferent(t_star);
  double denom = 1.0;
  for (std::size_t l = 0; l < m; ++l) {
    const double e = std::exp(-(t_star - times[l]) / p.tau_m);
    denom += e;
    if (!a.empty()) {
      denom += c * e * b[l];
      for (std::size_t i = 0; i < n; ++i) grad[i] -= c * e * a[l][i];
    }
  }
  if (!(std::abs(denom) >= kMinSlope))
    throw DegenerateCrossing("sts_gradient_analytic: singular critical relation");
  for (double& g : grad) g /= denom;
  return grad;
}

FdGradient sts_gradient_fd(const EventTrain& train, std::span<const double> weights,
                           std::size_t k, double step, const CriticalOptions& options) {
  if (!(step > 0.0)) throw InvalidArgument("sts_gradient_fd: step must be positive");
  const std::size_t n = train.n_afferents();
  const auto base = critical_threshold(train, weights, k, options);
  auto same_event = [&](const CriticalThreshold& other) {
    if (other.critical_index != base.critical_index || other.t_star != base.t_star) return false;
    for (std::size_t j = 0; j < base.critical_index; ++j)
      if (other.spike_times_at_criticality[j] != base.spike_times_at_criticality[j]) return false;
    return true;
  };

  FdGradient fd;
  fd.central.assign(n, 0.0);
  fd.forward.assign(n, 0.0);
  fd.backward.assign(n, 0.0);
  fd.flagged.assign(n, false);
  std::vector<double> w(weights.begin(), weights.end());
  for (std::size_t i = 0; i < n; ++i) {
    const double w0 = w[i];
    try {
      w[i] = w0 + step;
      const auto plus = critical_threshold(train, w, k, options);
      w[i] = w0 - step;
      const auto minus = critical_threshold(train, w, k, options);
      w[i] = w0;
      if (!same_event(plus) || !same_event(minus)) {
        fd.flagged[i] = true;
      } else {
        fd.forward[i] = (plus.theta_star - base.theta_star) / step;
        fd.backward[i] = (base.theta_star - minus.theta_star) / step;
        fd.central[i] = (plus.theta_star - minus.theta_star) / (2.0 * step);
      }
    } catch (const UnreachableError&) {
      w[i] = w0;
      fd.flagged[i] = true;
    }
    if (fd.flagged[i]) ++fd.n_flagged;
  }
  return fd;
}

LabelStep aggregate_label_step(const EventTrain& train, std::span<const double> weights,
                               std::size_t target_spikes, SpikeTimeModel model,
                               const CriticalOptions& options) {
  const double theta = train.params().v_thresh;
  LabelStep step;
  step.signal.target_spikes = target_spikes;
  step.signal.actual_spikes = count_spikes(train, weights, theta);
  const std::size_t actual = step.signal.actual_spikes;
  if (actual == target_spikes) return step;

  BracketHint hint;
  if (actual < target_spikes) {
    step.signal.direction = Direction::kIncrease;
    step.k = actual + 1;
    hint.hi = theta;
  } else {
    step.signal.direction = Direction::kDecrease;
    step.k = actual;
    hint.lo = theta;
  }
  const auto crit = critical_threshold(train, weights, step.k, options, hint);
  try {
    step.gradient = sts_gradient_analytic(train, weights, crit, model);
  } catch (const DegenerateCrossing&) {
    if (model == SpikeTimeModel::kGridLocked) throw;
    step.gradient = sts_gradient_analytic(train, weights, crit, SpikeTimeModel::kGridLocked);
    step.fell_back = true;
  }
  return step;
}

}  // namespace mst
