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

#include "mst/optimizers.hpp"

#include <cmath>
#include <string>

#include "mst/error.hpp"

namespace mst {
namespace {

void check_inputs(std::size_t state_size, std::span<const double> grad, double lr) {
  if (grad.size() != state_size)
    throw InvalidArgument("optimizer: gradient has " + std::to_string(grad.size()) +
                          " entries, state has " + std::to_string(state_size));
  if (!std::isfinite(lr)) throw InvalidArgument("optimizer: non-finite learning rate");
  for (double g : grad)
    if (!std::isfinite(g)) throw InvalidArgument("optimizer: non-finite gradient");
}

}  // namespace

std::vector<double> momentum_update(MomentumState& state, Direction direction,
                                    std::span<const double> grad, double lr) {
  check_inputs(state.prev_update.size(), grad, lr);
  const double scale = sign(direction) * lr;
  std::vector<double> delta(grad.size());
  for (std::size_t i = 0; i < grad.size(); ++i)
    delta[i] = state.alpha * state.prev_update[i] + scale * grad[i];
  state.prev_update = delta;
  return delta;
}

std::vector<double> rmsprop_update(RmsState& state, Direction direction,
                                   std::span<const double> grad, double lr) {
  check_inputs(state.v.size(), grad, lr);
  const double scale = sign(direction) * lr;
  std::vector<double> delta(grad.size());
  for (std::size_t i = 0; i < grad.size(); ++i) {
    state.v[i] = state.gamma * state.v[i] + (1.0 - state.gamma) * grad[i] * grad[i];
    delta[i] = scale * grad[i] / std::sqrt(state.v[i] + state.epsilon);
  }
  return delta;
}

OptimizerKind parse_optimizer_kind(std::string_view name) {
  if (name == "momentum") return OptimizerKind::kMomentum;
  if (name == "adaptive" || name == "rmsprop") return OptimizerKind::kAdaptive;
  throw ConfigError("unknown optimizer '" + std::string(name) + "'");
}

std::string_view to_string(OptimizerKind kind) {
  return kind == OptimizerKind::kMomentum ? "momentum" : "adaptive";
}

Optimizer::Optimizer(const OptimizerSettings& settings, std::size_t n_weights)
    : settings_(settings),
      state_(settings.kind == OptimizerKind::kMomentum
                 ? std::variant<MomentumState, RmsState>(MomentumState(n_weights, settings.alpha))
                 : std::variant<MomentumState, RmsState>(
                       RmsState(n_weights, settings.gamma, settings.epsilon))) {}

void Optimizer::apply(std::span<double> weights, Direction direction,
                      std::span<const double> grad) {
  if (direction == Direction::kNone) return;
  if (weights.size() != grad.size())
    throw InvalidArgument("optimizer: weight and gradient sizes differ");
  const auto delta = std::visit(
      [&](auto& s) {
        if constexpr (std::is_same_v<std::decay_t<decltype(s)>, MomentumState>)
          return momentum_update(s, direction, grad, settings_.lr);
        else
          return rmsprop_update(s, direction, grad, settings_.lr);
      },
      state_);
  for (std::size_t i = 0; i < weights.size(); ++i) weights[i] += delta[i];
}

}  // namespace mst
