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

#ifndef MST_OPTIMIZERS_HPP_
#define MST_OPTIMIZERS_HPP_

#include <cstddef>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include "mst/sts.hpp"

namespace mst {

// Heavy-ball update: delta = alpha * prev + direction * lr * grad.
struct MomentumState {
  std::vector<double> prev_update;
  double alpha = 0.9;

  explicit MomentumState(std::size_t n, double alpha_ = 0.9) : prev_update(n, 0.0), alpha(alpha_) {}
};

// Per-synapse adaptive step: v <- gamma v + (1 - gamma) g^2,
// delta = direction * lr * g / sqrt(v + epsilon).
struct RmsState {
  std::vector<double> v;
  double gamma = 0.9;
  double epsilon = 1e-8;

  explicit RmsState(std::size_t n, double gamma_ = 0.9, double epsilon_ = 1e-8)
      : v(n, 0.0), gamma(gamma_), epsilon(epsilon_) {}
};

std::vector<double> momentum_update(MomentumState& state, Direction direction,
                                    std::span<const double> grad, double lr);
std::vector<double> rmsprop_update(RmsState& state, Direction direction,
                                   std::span<const double> grad, double lr);

enum class OptimizerKind { kMomentum, kAdaptive };

OptimizerKind parse_optimizer_kind(std::string_view name);
std::string_view to_string(OptimizerKind kind);

struct OptimizerSettings {
  OptimizerKind kind = OptimizerKind::kAdaptive;
  double lr = 0.001;
  double alpha = 0.9;
  double gamma = 0.9;
  double epsilon = 1e-8;
};

// Owns one of the two states and applies updates to a weight vector.
class Optimizer {
 public:
  Optimizer(const OptimizerSettings& settings, std::size_t n_weights);

  // weights += update(direction, grad). No-op for Direction::kNone.
  void apply(std::span<double> weights, Direction direction, std::span<const double> grad);

  const OptimizerSettings& settings() const { return settings_; }

 private:
  OptimizerSettings settings_;
  std::variant<MomentumState, RmsState> state_;
};

}  // namespace mst

#endif  // MST_OPTIMIZERS_HPP_
