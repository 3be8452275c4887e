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

// Independent reference computations for the tests. Nothing here calls the
// recursive simulator or the gradient code under test.

#ifndef MST_TESTS_ORACLES_HPP_
#define MST_TESTS_ORACLES_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "mst/neuron.hpp"

namespace oracle {

inline double kernel(double delta, double tau_m, double tau_s) {
  if (delta < 0.0) return 0.0;
  const double eta = tau_m / tau_s;
  const double v_norm = std::pow(eta, eta / (eta - 1.0)) / (eta - 1.0);
  return v_norm * (std::exp(-delta / tau_m) - std::exp(-delta / tau_s));
}

struct BruteResult {
  std::vector<double> spikes;
  std::vector<double> trace;  // V before reset at each evaluation point
};

// Eq. (1) evaluated from scratch at t = n * dt / substeps; a spike is
// emitted at the first evaluation point with V >= threshold.
inline BruteResult brute_simulate(const mst::SpikePattern& pattern, const std::vector<double>& w,
                                  double threshold, const mst::NeuronParams& p,
                                  int substeps = 1) {
  BruteResult r;
  const double h = p.dt / substeps;
  const auto n_points = static_cast<std::size_t>(std::ceil(pattern.duration / p.dt - 1e-9)) *
                        static_cast<std::size_t>(substeps);
  for (std::size_t n = 0; n < n_points; ++n) {
    const double t = static_cast<double>(n) * h;
    double v = p.v_rest;
    for (std::size_t i = 0; i < pattern.n_afferents(); ++i)
      for (double s : pattern.spikes[i])
        if (s <= t) v += w[i] * kernel(t - s, p.tau_m, p.tau_s);
    for (double ts : r.spikes) v -= threshold * std::exp(-(t - ts) / p.tau_m);
    r.trace.push_back(v);
    if (v >= threshold) r.spikes.push_back(t);
  }
  return r;
}

// Homogeneous Poisson input built directly from exponential gaps.
inline mst::SpikePattern poisson_pattern(std::size_t n, double duration, double rate,
                                         std::uint64_t seed) {
  std::mt19937_64 rng(seed * 7919 + 17);
  std::exponential_distribution<double> gap(rate);
  mst::SpikePattern p(n, duration);
  for (auto& train : p.spikes)
    for (double t = gap(rng); t < duration; t += gap(rng)) train.push_back(t);
  return p;
}

inline std::vector<double> gaussian_weights(std::size_t n, double sd, std::uint64_t seed,
                                            double mean = 0.0) {
  std::mt19937_64 rng(seed * 104729 + 3);
  std::normal_distribution<double> normal(mean, sd);
  std::vector<double> w(n);
  for (double& x : w) x = normal(rng);
  return w;
}

// Continuous-time neuron: exact V(t) between input events, crossings found
// by scanning a fine grid for sign changes of V - theta and for interior
// maxima (sign change of dV/dt), each refined by bisection.
class ContinuousNeuron {
 public:
  ContinuousNeuron(const mst::SpikePattern& pattern, std::vector<double> w,
                   const mst::NeuronParams& p, double scan_step = 1e-4)
      : p_(p), w_(std::move(w)), duration_(pattern.duration), h_(scan_step) {
    for (std::size_t i = 0; i < pattern.n_afferents(); ++i)
      for (double s : pattern.spikes[i]) events_.push_back({s, i});
    std::sort(events_.begin(), events_.end());
    const double eta = p.tau_m / p.tau_s;
    v_norm_ = std::pow(eta, eta / (eta - 1.0)) / (eta - 1.0);
  }

  void set_weight(std::size_t i, double v) { w_[i] = v; }
  double weight(std::size_t i) const { return w_[i]; }

  double drive(double t) const {
    double v = p_.v_rest;
    for (const auto& [s, i] : events_) {
      if (s > t) break;
      v += w_[i] * v_norm_ * (std::exp(-(t - s) / p_.tau_m) - std::exp(-(t - s) / p_.tau_s));
    }
    return v;
  }
  double drive_slope(double t) const {
    double v = 0.0;
    for (const auto& [s, i] : events_) {
      if (s >= t) break;
      v += w_[i] * v_norm_ *
           (std::exp(-(t - s) / p_.tau_s) / p_.tau_s - std::exp(-(t - s) / p_.tau_m) / p_.tau_m);
    }
    return v;
  }

  // Output spike times at threshold theta, stopping after `cap` spikes.
  std::vector<double> spikes(double theta, std::size_t cap) const {
    std::vector<double> out;
    auto v = [&](double t) {
      double x = drive(t);
      for (double ts : out) x -= theta * std::exp(-(t - ts) / p_.tau_m);
      return x - theta;
    };
    auto vdot = [&](double t) {
      double x = drive_slope(t);
      for (double ts : out) x += theta / p_.tau_m * std::exp(-(t - ts) / p_.tau_m);
      return x;
    };
    double a = 0.0;
    // Input events are the only places where dV/dt jumps; scan cells never
    // straddle one.
    std::vector<double> cuts;
    for (const auto& e : events_) cuts.push_back(e.first);
    std::size_t next_cut = 0;
    while (a < duration_ && out.size() < cap) {
      while (next_cut < cuts.size() && cuts[next_cut] <= a) ++next_cut;
      double b = std::min(a + h_, duration_);
      if (next_cut < cuts.size() && cuts[next_cut] < b) b = cuts[next_cut];
      double root = std::numeric_limits<double>::quiet_NaN();
      const double va = v(a), vb = v(b);
      if (va < 0.0 && vb >= 0.0) {
        root = bisect(v, a, b);
      } else if (va < 0.0 && vb < 0.0 && vdot(a + 1e-15) > 0.0 && vdot(b) < 0.0) {
        // Interior maximum; does it reach threshold?
        const double m = bisect([&](double t) { return -vdot(t); }, a, b);
        if (v(m) >= 0.0) root = bisect(v, a, m);
      }
      if (!std::isnan(root)) {
        out.push_back(root);
        a = root;
      } else {
        a = b;
      }
    }
    return out;
  }

  // sup{theta : at least k spikes}, by bisection on the continuous count.
  double critical(std::size_t k, double tol = 1e-13) const {
    double hi = 0.0;
    for (double t = 0.0; t < duration_; t += h_) hi = std::max(hi, drive(t));
    hi = hi * 1.01 + 1e-12;
    double lo = hi;
    while (spikes(lo, k).size() < k) {
      lo *= 0.5;
      if (lo < 1e-12) return std::numeric_limits<double>::quiet_NaN();
    }
    hi = std::max(hi, lo);
    while (hi - lo > tol) {
      const double mid = 0.5 * (lo + hi);
      (spikes(mid, k).size() >= k ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
  }

 private:
  template <typename F>
  static double bisect(F&& f, double a, double b) {
    // f(a) < 0 <= f(b)
    for (int it = 0; it < 200 && b - a > 1e-16; ++it) {
      const double mid = 0.5 * (a + b);
      (f(mid) < 0.0 ? a : b) = mid;
    }
    return b;
  }

  mst::NeuronParams p_;
  std::vector<double> w_;
  double duration_;
  double h_;
  double v_norm_ = 1.0;
  std::vector<std::pair<double, std::size_t>> events_;
};

}  // namespace oracle

#endif  // MST_TESTS_ORACLES_HPP_
