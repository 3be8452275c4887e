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

#ifndef MST_HARNESS_HPP_
#define MST_HARNESS_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "mst/counting_mnist.hpp"
#include "mst/encoders.hpp"
#include "mst/neuron.hpp"
#include "mst/optimizers.hpp"
#include "mst/spikegen.hpp"
#include "mst/sts.hpp"

namespace mst {

enum class Task { kSynthetic, kCountingMnist };
Task parse_task(std::string_view name);
std::string_view to_string(Task task);

// Everything a run depends on. Serialised as sectioned "key = value" text.
struct ExperimentConfig {
  Task task = Task::kSynthetic;
  std::uint64_t seed = 1;
  std::filesystem::path output_dir;  // empty: nothing is written

  NeuronParams neuron;

  // Synthetic task.
  int gamma_order = 1;  // statistics: 1, 5 or 15
  std::size_t n_afferents = 500;
  double rate = 0.89;
  double trial_duration = 10.0;
  double pattern_duration = 1.0;
  double mean_patterns = 5.0;
  std::vector<int> rewards{kDefaultRewards.begin(), kDefaultRewards.end()};
  NoiseConfig noise;

  // Counting-MNIST task.
  std::filesystem::path data_dir;     // holds mnist/; empty: default data dir
  std::filesystem::path dataset_dir;  // pre-built dataset; empty: build in-run
  Encoding encoding = Encoding::kFocal;
  std::size_t n_digits = 5;

  // Both tasks.
  std::size_t n_train = 100;
  std::size_t n_validation = 100;

  // Training.
  std::size_t epochs = 30;
  OptimizerSettings optimizer;
  double init_sd = 0.01;
  SpikeTimeModel gradient_model = SpikeTimeModel::kGridLocked;
  CriticalOptions critical;

  // Throws ConfigError.
  void validate() const;
};

ExperimentConfig parse_config(std::istream& in);
ExperimentConfig load_config(const std::filesystem::path& path);
void write_config(std::ostream& out, const ExperimentConfig& config);
void save_config(const std::filesystem::path& path, const ExperimentConfig& config);

// MST_DATA_DIR if set, else the build-time default.
std::filesystem::path default_data_dir();
std::filesystem::path resolve_data_dir(const ExperimentConfig& config);

// Inputs and integer targets of one split.
struct LabeledSet {
  std::vector<std::size_t> ids;
  std::vector<EventTrain> trains;
  std::vector<std::size_t> targets;

  std::size_t size() const { return trains.size(); }
};

struct TaskData {
  LabeledSet train;
  LabeledSet validation;
  std::size_t n_afferents = 0;
};

// Synthetic trials for one split. Trial i of split s has seed
// derive_seed(derive_seed(config.seed, 2 + s), i); the pattern library is
// shared and drawn from derive_seed(config.seed, 1).
PatternLibrary synthetic_library(const ExperimentConfig& config);
std::vector<Trial> synthetic_trials(const ExperimentConfig& config, const PatternLibrary& library,
                                    bool validation);

// Builds or loads the datasets the config refers to.
TaskData make_task_data(const ExperimentConfig& config);

// Synthetic trial files: one pattern file per trial plus a JSON manifest.
void write_synthetic_dataset(const std::filesystem::path& dir, const ExperimentConfig& config);
LabeledSet load_synthetic_split(const std::filesystem::path& manifest_path,
                                const NeuronParams& params);

// Counting-MNIST on disk: PNGs and train.json / test.json manifests.
void write_mnist_dataset(const std::filesystem::path& dir, const ExperimentConfig& config);
// Encodes every PNG listed in the manifest, writes one pattern file per
// sample and records the encoder provenance in the manifest.
void encode_mnist_split(const std::filesystem::path& manifest_path, Encoding encoding,
                        std::uint64_t seed);
LabeledSet load_mnist_split(const std::filesystem::path& manifest_path,
                            const NeuronParams& params);

Weights initial_weights(const ExperimentConfig& config, std::size_t n_afferents);

// Checkpoint: "# mst-weights v1", the count, one value per line.
void save_weights(const std::filesystem::path& path, std::span<const double> weights);
Weights load_weights(const std::filesystem::path& path);

struct Evaluation {
  std::vector<int> predictions;
  double error = 0.0;  // mean |count - target| (synthetic) or RMSE (counting-MNIST)
};

// Spike counts at the neuron's threshold, computed in parallel.
Evaluation evaluate(std::span<const double> weights, const LabeledSet& set, Task task);
// "sample_id,prediction,label".
void write_predictions(const std::filesystem::path& path, const LabeledSet& set,
                       std::span<const int> predictions);

struct EpochMetrics {
  std::size_t epoch = 0;
  double train_err = 0.0;
  double val_err = 0.0;
};

struct RunDiagnostics {
  std::size_t steps = 0;             // trials with a weight update
  std::size_t converged = 0;         // trials already at their target
  std::size_t unreachable = 0;       // nudges for a missing theta*_k
  std::size_t fallbacks = 0;         // continuous gradient replaced by grid-locked
  std::size_t skipped = 0;           // gradients dropped (degenerate or non-finite)
};

struct RunMetrics {
  EpochMetrics initial;              // epoch 0, before any update
  std::vector<EpochMetrics> epochs;  // one row per configured epoch
  RunDiagnostics diagnostics;
  double wall_seconds = 0.0;
};

struct RunResult {
  RunMetrics metrics;
  Weights weights;
};

// Online training: every epoch visits the training set in a fresh seeded
// permutation, then both splits are evaluated with the resulting weights.
RunResult train(const ExperimentConfig& config, const TaskData& data);
// Writes metrics.csv, diagnostics.json, config.ini, weights.txt and the
// final predictions to config.output_dir.
void write_run_outputs(const ExperimentConfig& config, const TaskData& data,
                       const RunResult& result);
void write_metrics_csv(const std::filesystem::path& path, const RunMetrics& metrics);

struct VarianceRow {
  NoiseRegime regime = NoiseRegime::kPatternsOnly;
  int gamma_order = 1;
  OptimizerKind optimizer = OptimizerKind::kMomentum;
  std::vector<std::uint64_t> seeds;
  std::vector<double> val_errors;  // at the report epoch, one per seed
  double mean = 0.0;
  double variance = 0.0;  // unbiased
};

struct VarianceOptions {
  std::vector<NoiseRegime> regimes{NoiseRegime::kPatternsOnly};
  std::vector<int> gamma_orders{1, 5, 15};
  std::vector<OptimizerKind> optimizers{OptimizerKind::kMomentum, OptimizerKind::kAdaptive};
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  std::size_t epoch = 10;
};

// One independent training per (regime, statistic, optimizer, seed); the
// seed sets data, initial weights and trial order. Runs in parallel.
std::vector<VarianceRow> variance_report(const ExperimentConfig& base,
                                         const VarianceOptions& options = {});
void write_variance_csv(const std::filesystem::path& path, std::span<const VarianceRow> rows);

struct GradcheckOptions {
  std::size_t n_instances = 100;
  std::size_t n_afferents = 30;
  double duration = 0.5;
  double input_rate = 5.0;
  double weight_sd = 0.05;
  std::size_t max_k = 3;
  double fd_step = 1e-6;
  double bisection_tol = 1e-10;
  double tolerance = 1e-3;  // relative L-infinity
  std::uint64_t seed = 1;
  SpikeTimeModel model = SpikeTimeModel::kGridLocked;
  bool include_single_spike = true;
};

struct GradcheckInstance {
  std::size_t index = 0;
  std::size_t k = 0;
  std::vector<double> analytic;
  std::vector<double> fd;
  double rel_error = 0.0;
  bool degenerate = false;  // flagged coordinates, unreachable k or degenerate crossing
  std::string note;
};

struct GradcheckReport {
  std::vector<GradcheckInstance> instances;
  std::size_t n_degenerate = 0;
  double max_rel_error = 0.0;  // over non-degenerate instances
  bool passed = false;         // max_rel_error <= tolerance
};

// Instance 0 is a single afferent with one grid-aligned input spike when
// include_single_spike is set; the rest are random Poisson instances.
GradcheckReport gradcheck(const NeuronParams& params, const GradcheckOptions& options = {});
// "instance,k,afferent,analytic,fd,degenerate".
void write_gradcheck_csv(const std::filesystem::path& path, const GradcheckReport& report);

// Relative L-infinity distance max|a - b| / max|b| (max|a - b| if b == 0).
double relative_linf(std::span<const double> a, std::span<const double> b);

}  // namespace mst

#endif  // MST_HARNESS_HPP_
