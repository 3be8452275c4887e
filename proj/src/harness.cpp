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

#include "mst/harness.hpp"

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <iomanip>
#include <map>
#include <mutex>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <json.hpp>

#include "mst/error.hpp"
#include "mst/kernels.hpp"
#include "mst/spike_io.hpp"

#ifndef MST_DEFAULT_DATA_DIR
#define MST_DEFAULT_DATA_DIR "data"
#endif

namespace mst {
namespace {

using nlohmann::json;
namespace pt = boost::property_tree;

// Sub-stream indices under the master seed.
enum SeedStream : std::uint64_t {
  kLibraryStream = 1,
  kTrainStream = 2,
  kValidationStream = 3,
  kInitStream = 4,
  kOrderStream = 5,
  kEncoderStream = 6,
};

std::uint64_t stream_seed(std::uint64_t master, SeedStream s) { return derive_seed(master, s); }

// Runs body(i) for i in [0, n) across threads; rethrows the first exception.
template <typename Body>
void parallel_for(std::size_t n, Body&& body) {
  std::exception_ptr error;
  std::mutex mu;
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < n; ++i) {
    try {
      body(i);
    } catch (...) {
      std::lock_guard<std::mutex> lock(mu);
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
}

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string spike_time_model_name(SpikeTimeModel m) {
  return m == SpikeTimeModel::kGridLocked ? "grid" : "continuous";
}

SpikeTimeModel parse_spike_time_model(const std::string& s) {
  if (s == "grid") return SpikeTimeModel::kGridLocked;
  if (s == "continuous") return SpikeTimeModel::kContinuous;
  throw ConfigError("unknown gradient_model '" + s + "' (grid, continuous)");
}

int parse_statistics(const std::string& s) {
  if (s == "gamma1") return 1;
  if (s == "gamma5") return 5;
  if (s == "gamma15") return 15;
  throw ConfigError("unknown statistics '" + s + "' (gamma1, gamma5, gamma15)");
}

std::vector<int> parse_int_list(const std::string& s) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stoi(item, &used));
      if (item.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError("bad integer list '" + s + "'");
    }
  }
  return out;
}

std::string join(std::span<const int> v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i]);
  return out;
}

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path.string());
  return out;
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot read " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

std::string numbered(const std::string& prefix, std::size_t id, const std::string& ext) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%05zu", id);
  return prefix + buf + ext;
}

LabeledSet trials_to_set(const std::vector<Trial>& trials, std::size_t first_id,
                         const NeuronParams& params) {
  LabeledSet set;
  for (std::size_t i = 0; i < trials.size(); ++i) {
    set.ids.push_back(first_id + i);
    set.trains.emplace_back(trials[i].pattern, params);
    set.targets.push_back(trials[i].target);
  }
  return set;
}

std::vector<SpikePattern> encode_images(const std::vector<CompositeSample>& samples,
                                        std::span<const std::size_t> ids, Encoding encoding,
                                        std::uint64_t seed, const DogFilterBank* bank) {
  std::vector<SpikePattern> out(samples.size());
  parallel_for(samples.size(), [&](std::size_t i) {
    out[i] = encoding == Encoding::kFocal
                 ? focal_encode(samples[i].image, *bank).pattern
                 : encode_naive(samples[i].image, derive_seed(seed, ids[i])).pattern;
  });
  return out;
}

LabeledSet mnist_set(const Dataset& ds, const ExperimentConfig& config, const DogFilterBank* bank) {
  LabeledSet set;
  for (const auto& r : ds.manifest.samples) set.ids.push_back(r.id);
  const auto patterns = encode_images(ds.samples, set.ids, config.encoding,
                                      stream_seed(config.seed, kEncoderStream), bank);
  for (std::size_t i = 0; i < patterns.size(); ++i) {
    set.trains.emplace_back(patterns[i], config.neuron);
    set.targets.push_back(static_cast<std::size_t>(ds.samples[i].label));
  }
  return set;
}

std::pair<Dataset, Dataset> build_mnist(const ExperimentConfig& config) {
  const auto store = load_mnist_dir(resolve_data_dir(config) / "mnist");
  CompositeOptions opts;
  opts.n_digits = config.n_digits;
  return build_dataset(store, config.n_train, config.n_validation,
                       stream_seed(config.seed, kTrainStream), opts);
}

}  // namespace

Task parse_task(std::string_view name) {
  if (name == "synthetic") return Task::kSynthetic;
  if (name == "counting_mnist") return Task::kCountingMnist;
  throw ConfigError("unknown task '" + std::string(name) + "' (synthetic, counting_mnist)");
}

std::string_view to_string(Task task) {
  return task == Task::kSynthetic ? "synthetic" : "counting_mnist";
}

void ExperimentConfig::validate() const {
  try {
    neuron.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
  if (gamma_order < 1) throw ConfigError("gamma order must be positive");
  if (n_afferents == 0) throw ConfigError("n_afferents must be positive");
  if (!(rate > 0.0)) throw ConfigError("rate must be positive");
  if (!(pattern_duration > 0.0) || !(trial_duration > 0.0))
    throw ConfigError("durations must be positive");
  if (!(mean_patterns >= 0.0)) throw ConfigError("mean_patterns must be non-negative");
  if (rewards.size() != kLibrarySize) throw ConfigError("rewards needs 9 entries");
  if (!(noise.jitter_sd >= 0.0) || !(noise.bg_rate >= 0.0))
    throw ConfigError("noise parameters must be non-negative");
  if (!(noise.modulation_fraction >= 0.0 && noise.modulation_fraction <= 1.0))
    throw ConfigError("modulation_fraction must lie in [0, 1]");
  if (n_digits == 0) throw ConfigError("n_digits must be positive");
  if (n_train == 0) throw ConfigError("n_train must be positive");
  if (!(optimizer.lr > 0.0)) throw ConfigError("lr must be positive");
  if (!(optimizer.alpha >= 0.0 && optimizer.alpha < 1.0)) throw ConfigError("alpha must lie in [0, 1)");
  if (!(optimizer.gamma > 0.0 && optimizer.gamma < 1.0)) throw ConfigError("gamma must lie in (0, 1)");
  if (!(optimizer.epsilon > 0.0)) throw ConfigError("epsilon must be positive");
  if (!(init_sd >= 0.0)) throw ConfigError("init_sd must be non-negative");
  if (!(critical.tol > 0.0) || critical.max_iterations < 1)
    throw ConfigError("bisection settings must be positive");
}

ExperimentConfig parse_config(std::istream& in) {
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(e.what());
  }
  static const std::map<std::string, std::set<std::string>> known = {
      {"run", {"task", "seed", "output_dir"}},
      {"neuron", {"tau_m", "tau_s", "threshold", "v_rest", "dt"}},
      {"synthetic",
       {"statistics", "n_afferents", "rate", "trial_duration", "pattern_duration", "mean_patterns",
        "rewards"}},
      {"noise", {"regime", "jitter_sd", "bg_rate", "modulation_fraction", "modulation_frequency"}},
      {"mnist", {"data_dir", "dataset_dir", "encoding", "n_digits"}},
      {"data", {"n_train", "n_validation"}},
      {"training",
       {"epochs", "optimizer", "lr", "alpha", "gamma", "epsilon", "init_sd", "gradient_model",
        "bisection_tol", "max_iterations"}},
  };
  for (const auto& [section, body] : tree) {
    auto it = known.find(section);
    if (it == known.end()) throw ConfigError("unknown section [" + section + "]");
    for (const auto& [key, value] : body)
      if (!it->second.count(key)) throw ConfigError("unknown key " + section + "." + key);
  }

  ExperimentConfig c;
  auto get = [&](const char* path, auto& field) {
    using T = std::decay_t<decltype(field)>;
    auto node = tree.get_optional<std::string>(path);
    if (!node) return;
    try {
      field = tree.get<T>(path);
    } catch (const pt::ptree_error&) {
      throw ConfigError(std::string("bad value for ") + path + ": '" + *node + "'");
    }
  };
  auto get_str = [&](const char* path) { return tree.get_optional<std::string>(path); };

  if (auto s = get_str("run.task")) c.task = parse_task(*s);
  get("run.seed", c.seed);
  if (auto s = get_str("run.output_dir")) c.output_dir = *s;
  get("neuron.tau_m", c.neuron.tau_m);
  get("neuron.tau_s", c.neuron.tau_s);
  get("neuron.threshold", c.neuron.v_thresh);
  get("neuron.v_rest", c.neuron.v_rest);
  get("neuron.dt", c.neuron.dt);
  if (auto s = get_str("synthetic.statistics")) c.gamma_order = parse_statistics(*s);
  get("synthetic.n_afferents", c.n_afferents);
  get("synthetic.rate", c.rate);
  get("synthetic.trial_duration", c.trial_duration);
  get("synthetic.pattern_duration", c.pattern_duration);
  get("synthetic.mean_patterns", c.mean_patterns);
  if (auto s = get_str("synthetic.rewards")) c.rewards = parse_int_list(*s);
  try {
    if (auto s = get_str("noise.regime")) c.noise.regime = parse_noise_regime(*s);
    if (auto s = get_str("mnist.encoding")) c.encoding = parse_encoding(*s);
    if (auto s = get_str("training.optimizer")) c.optimizer.kind = parse_optimizer_kind(*s);
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
  get("noise.jitter_sd", c.noise.jitter_sd);
  get("noise.bg_rate", c.noise.bg_rate);
  get("noise.modulation_fraction", c.noise.modulation_fraction);
  get("noise.modulation_frequency", c.noise.modulation_frequency);
  if (auto s = get_str("mnist.data_dir")) c.data_dir = *s;
  if (auto s = get_str("mnist.dataset_dir")) c.dataset_dir = *s;
  get("mnist.n_digits", c.n_digits);
  get("data.n_train", c.n_train);
  get("data.n_validation", c.n_validation);
  get("training.epochs", c.epochs);
  get("training.lr", c.optimizer.lr);
  get("training.alpha", c.optimizer.alpha);
  get("training.gamma", c.optimizer.gamma);
  get("training.epsilon", c.optimizer.epsilon);
  get("training.init_sd", c.init_sd);
  if (auto s = get_str("training.gradient_model")) c.gradient_model = parse_spike_time_model(*s);
  get("training.bisection_tol", c.critical.tol);
  get("training.max_iterations", c.critical.max_iterations);
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  return parse_config(in);
}

void write_config(std::ostream& out, const ExperimentConfig& c) {
  out << "[run]\n"
      << "task = " << to_string(c.task) << "\n"
      << "seed = " << c.seed << "\n";
  if (!c.output_dir.empty()) out << "output_dir = " << c.output_dir.string() << "\n";
  out << "\n[neuron]\n"
      << "tau_m = " << fmt_double(c.neuron.tau_m) << "\n"
      << "tau_s = " << fmt_double(c.neuron.tau_s) << "\n"
      << "threshold = " << fmt_double(c.neuron.v_thresh) << "\n"
      << "v_rest = " << fmt_double(c.neuron.v_rest) << "\n"
      << "dt = " << fmt_double(c.neuron.dt) << "\n"
      << "\n[synthetic]\n"
      << "statistics = gamma" << c.gamma_order << "\n"
      << "n_afferents = " << c.n_afferents << "\n"
      << "rate = " << fmt_double(c.rate) << "\n"
      << "trial_duration = " << fmt_double(c.trial_duration) << "\n"
      << "pattern_duration = " << fmt_double(c.pattern_duration) << "\n"
      << "mean_patterns = " << fmt_double(c.mean_patterns) << "\n"
      << "rewards = " << join(c.rewards) << "\n"
      << "\n[noise]\n"
      << "regime = " << to_string(c.noise.regime) << "\n"
      << "jitter_sd = " << fmt_double(c.noise.jitter_sd) << "\n"
      << "bg_rate = " << fmt_double(c.noise.bg_rate) << "\n"
      << "modulation_fraction = " << fmt_double(c.noise.modulation_fraction) << "\n"
      << "modulation_frequency = " << fmt_double(c.noise.modulation_frequency) << "\n"
      << "\n[mnist]\n";
  if (!c.data_dir.empty()) out << "data_dir = " << c.data_dir.string() << "\n";
  if (!c.dataset_dir.empty()) out << "dataset_dir = " << c.dataset_dir.string() << "\n";
  out << "encoding = " << to_string(c.encoding) << "\n"
      << "n_digits = " << c.n_digits << "\n"
      << "\n[data]\n"
      << "n_train = " << c.n_train << "\n"
      << "n_validation = " << c.n_validation << "\n"
      << "\n[training]\n"
      << "epochs = " << c.epochs << "\n"
      << "optimizer = " << to_string(c.optimizer.kind) << "\n"
      << "lr = " << fmt_double(c.optimizer.lr) << "\n"
      << "alpha = " << fmt_double(c.optimizer.alpha) << "\n"
      << "gamma = " << fmt_double(c.optimizer.gamma) << "\n"
      << "epsilon = " << fmt_double(c.optimizer.epsilon) << "\n"
      << "init_sd = " << fmt_double(c.init_sd) << "\n"
      << "gradient_model = " << spike_time_model_name(c.gradient_model) << "\n"
      << "bisection_tol = " << fmt_double(c.critical.tol) << "\n"
      << "max_iterations = " << c.critical.max_iterations << "\n";
}

void save_config(const std::filesystem::path& path, const ExperimentConfig& config) {
  auto out = open_out(path);
  write_config(out, config);
}

std::filesystem::path default_data_dir() {
  if (const char* env = std::getenv("MST_DATA_DIR"); env && *env) return env;
  return MST_DEFAULT_DATA_DIR;
}

std::filesystem::path resolve_data_dir(const ExperimentConfig& config) {
  return config.data_dir.empty() ? default_data_dir() : config.data_dir;
}

PatternLibrary synthetic_library(const ExperimentConfig& config) {
  try {
    return make_pattern_library({config.gamma_order, config.rate}, config.n_afferents,
                                config.rewards, stream_seed(config.seed, kLibraryStream),
                                config.pattern_duration);
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
}

std::vector<Trial> synthetic_trials(const ExperimentConfig& config, const PatternLibrary& library,
                                    bool validation) {
  const std::size_t n = validation ? config.n_validation : config.n_train;
  const std::uint64_t split_seed =
      stream_seed(config.seed, validation ? kValidationStream : kTrainStream);
  TrialOptions opts;
  opts.duration = config.trial_duration;
  opts.mean_patterns = config.mean_patterns;
  std::vector<Trial> trials(n);
  parallel_for(n, [&](std::size_t i) {
    trials[i] = assemble_trial(library, config.noise, derive_seed(split_seed, i), opts);
  });
  return trials;
}

TaskData make_task_data(const ExperimentConfig& config) {
  config.validate();
  TaskData data;
  if (config.task == Task::kSynthetic) {
    if (!config.dataset_dir.empty()) {
      data.train = load_synthetic_split(config.dataset_dir / "train.json", config.neuron);
      data.validation = load_synthetic_split(config.dataset_dir / "validation.json", config.neuron);
    } else {
      const auto library = synthetic_library(config);
      data.train = trials_to_set(synthetic_trials(config, library, false), 0, config.neuron);
      data.validation =
          trials_to_set(synthetic_trials(config, library, true), config.n_train, config.neuron);
    }
  } else if (!config.dataset_dir.empty()) {
    data.train = load_mnist_split(config.dataset_dir / "train.json", config.neuron);
    data.validation = load_mnist_split(config.dataset_dir / "test.json", config.neuron);
  } else {
    const auto [train_ds, test_ds] = build_mnist(config);
    std::optional<DogFilterBank> bank;
    if (config.encoding == Encoding::kFocal) bank.emplace(DogBankConfig::defaults());
    const DogFilterBank* b = bank ? &*bank : nullptr;
    data.train = mnist_set(train_ds, config, b);
    data.validation = mnist_set(test_ds, config, b);
  }
  if (data.train.size() == 0) throw ConfigError("training set is empty");
  data.n_afferents = data.train.trains.front().n_afferents();
  for (const auto* set : {&data.train, &data.validation})
    for (const auto& t : set->trains)
      if (t.n_afferents() != data.n_afferents) throw FormatError("afferent counts differ across trials");
  return data;
}

void write_synthetic_dataset(const std::filesystem::path& dir, const ExperimentConfig& config) {
  config.validate();
  const auto library = synthetic_library(config);
  for (const char* sub : {"library", "train", "validation"})
    std::filesystem::create_directories(dir / sub);
  for (std::size_t p = 0; p < library.patterns.size(); ++p)
    save_spike_pattern(dir / "library" / numbered("pattern_", p, ".txt"), library.patterns[p]);
  for (bool validation : {false, true}) {
    const auto trials = synthetic_trials(config, library, validation);
    const std::string split = validation ? "validation" : "train";
    const std::size_t first_id = validation ? config.n_train : 0;
    json m;
    m["format"] = "mst-synthetic-manifest";
    m["version"] = 1;
    m["split"] = split;
    m["master_seed"] = config.seed;
    m["statistics"] = "gamma" + std::to_string(config.gamma_order);
    m["regime"] = std::string(to_string(config.noise.regime));
    m["n_afferents"] = config.n_afferents;
    m["duration"] = config.trial_duration;
    m["rewards"] = library.rewards;
    json list = json::array();
    for (std::size_t i = 0; i < trials.size(); ++i) {
      const auto file = split + "/" + numbered("trial_", first_id + i, ".txt");
      save_spike_pattern(dir / file, trials[i].pattern);
      json pl = json::array();
      for (const auto& p : trials[i].placements)
        pl.push_back({{"pattern", p.pattern_index}, {"onset", p.onset}});
      list.push_back({{"id", first_id + i},
                      {"seed", trials[i].seed},
                      {"target", trials[i].target},
                      {"file", file},
                      {"placements", pl}});
    }
    m["trials"] = std::move(list);
    auto out = open_out(dir / (split + ".json"));
    out << m.dump(1) << '\n';
  }
}

LabeledSet load_synthetic_split(const std::filesystem::path& manifest_path,
                                const NeuronParams& params) {
  const json m = read_json(manifest_path);
  const auto dir = manifest_path.parent_path();
  LabeledSet set;
  try {
    if (m.at("format") != "mst-synthetic-manifest")
      throw FormatError(manifest_path.string() + ": unexpected format tag");
    for (const auto& t : m.at("trials")) {
      set.ids.push_back(t.at("id").get<std::size_t>());
      set.targets.push_back(t.at("target").get<std::size_t>());
      set.trains.emplace_back(load_spike_pattern(dir / t.at("file").get<std::string>()), params);
    }
  } catch (const json::exception& e) {
    throw FormatError(manifest_path.string() + ": " + e.what());
  }
  return set;
}

void write_mnist_dataset(const std::filesystem::path& dir, const ExperimentConfig& config) {
  config.validate();
  auto [train_ds, test_ds] = build_mnist(config);
  for (auto* ds : {&train_ds, &test_ds}) {
    for (std::size_t i = 0; i < ds->samples.size(); ++i) {
      auto& rec = ds->manifest.samples[i];
      rec.image_file = "images/" + numbered(ds->manifest.split + "_", rec.id, ".png");
      std::filesystem::create_directories(dir / "images");
      write_png(dir / rec.image_file, ds->samples[i].image);
    }
    save_manifest(dir / (ds->manifest.split + ".json"), ds->manifest);
  }
}

void encode_mnist_split(const std::filesystem::path& manifest_path, Encoding encoding,
                        std::uint64_t seed) {
  auto manifest = load_manifest(manifest_path);
  const auto dir = manifest_path.parent_path();
  std::optional<DogFilterBank> bank;
  if (encoding == Encoding::kFocal) {
    bank.emplace(DogBankConfig::defaults());
    bank->write_unit_table(dir / "focal_units.csv");
  }
  std::filesystem::create_directories(dir / "patterns");
  parallel_for(manifest.samples.size(), [&](std::size_t i) {
    auto& rec = manifest.samples[i];
    if (rec.image_file.empty()) throw FormatError("sample " + std::to_string(rec.id) + " has no image");
    const auto image = read_png(dir / rec.image_file);
    const auto pattern = encoding == Encoding::kFocal
                             ? focal_encode(image, *bank).pattern
                             : encode_naive(image, derive_seed(seed, rec.id)).pattern;
    rec.pattern_file = "patterns/" + numbered(std::string(to_string(encoding)) + "_", rec.id, ".txt");
    save_spike_pattern(dir / rec.pattern_file, pattern);
  });
  manifest.encoder = EncoderProvenance{encoding, bank ? bank->config().hash() : "", seed};
  save_manifest(manifest_path, manifest);
}

LabeledSet load_mnist_split(const std::filesystem::path& manifest_path,
                            const NeuronParams& params) {
  const auto manifest = load_manifest(manifest_path);
  const auto dir = manifest_path.parent_path();
  LabeledSet set;
  for (const auto& rec : manifest.samples) {
    if (rec.pattern_file.empty())
      throw FormatError(manifest_path.string() + ": sample " + std::to_string(rec.id) +
                        " is not encoded");
    set.ids.push_back(rec.id);
    set.targets.push_back(static_cast<std::size_t>(rec.label));
    set.trains.emplace_back(load_spike_pattern(dir / rec.pattern_file), params);
  }
  return set;
}

Weights initial_weights(const ExperimentConfig& config, std::size_t n_afferents) {
  Rng rng(stream_seed(config.seed, kInitStream));
  std::normal_distribution<double> normal(0.0, config.init_sd);
  Weights w(n_afferents);
  for (double& x : w) x = config.init_sd > 0.0 ? normal(rng) : 0.0;
  return w;
}

void save_weights(const std::filesystem::path& path, std::span<const double> weights) {
  auto out = open_out(path);
  out << "# mst-weights v1\n" << weights.size() << '\n';
  for (double w : weights) out << fmt_double(w) << '\n';
}

Weights load_weights(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot read " + path.string());
  std::string header;
  std::getline(in, header);
  if (header != "# mst-weights v1") throw FormatError(path.string() + ": not a weight checkpoint");
  std::size_t n = 0;
  if (!(in >> n)) throw FormatError(path.string() + ": missing count");
  Weights w(n);
  for (auto& x : w)
    if (!(in >> x)) throw FormatError(path.string() + ": truncated");
  return w;
}

Evaluation evaluate(std::span<const double> weights, const LabeledSet& set, Task task) {
  Evaluation ev;
  if (set.size() == 0) {
    ev.error = std::nan("");
    return ev;
  }
  const double theta = set.trains.front().params().v_thresh;
  const auto counts = kernels::count_spikes_omp(set.trains, weights, theta);
  ev.predictions.assign(counts.begin(), counts.end());
  if (task == Task::kCountingMnist) {
    std::vector<int> labels(set.targets.begin(), set.targets.end());
    ev.error = rmse_eval(ev.predictions, labels);
  } else {
    double sum = 0.0;
    for (std::size_t i = 0; i < counts.size(); ++i)
      sum += std::abs(static_cast<double>(counts[i]) - static_cast<double>(set.targets[i]));
    ev.error = sum / static_cast<double>(counts.size());
  }
  return ev;
}

void write_predictions(const std::filesystem::path& path, const LabeledSet& set,
                       std::span<const int> predictions) {
  if (predictions.size() != set.size())
    throw InvalidArgument("write_predictions: length mismatch");
  auto out = open_out(path);
  out << "sample_id,prediction,label\n";
  for (std::size_t i = 0; i < set.size(); ++i)
    out << set.ids[i] << ',' << predictions[i] << ',' << set.targets[i] << '\n';
}

RunResult train(const ExperimentConfig& config, const TaskData& data) {
  config.validate();
  const auto start = std::chrono::steady_clock::now();
  const std::size_t n = data.n_afferents;
  RunResult result;
  result.weights = initial_weights(config, n);
  auto& w = result.weights;
  auto& diag = result.metrics.diagnostics;
  Optimizer optimizer(config.optimizer, n);

  auto measure = [&](std::size_t epoch) {
    return EpochMetrics{epoch, evaluate(w, data.train, config.task).error,
                        evaluate(w, data.validation, config.task).error};
  };
  result.metrics.initial = measure(0);

  std::vector<std::size_t> order(data.train.size());
  std::iota(order.begin(), order.end(), 0);
  const std::uint64_t order_seed = stream_seed(config.seed, kOrderStream);
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    Rng rng(derive_seed(order_seed, epoch));
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t idx : order) {
      const auto& trial = data.train.trains[idx];
      try {
        const auto step = aggregate_label_step(trial, w, data.train.targets[idx],
                                               config.gradient_model, config.critical);
        if (step.signal.direction == Direction::kNone) {
          ++diag.converged;
          continue;
        }
        if (step.fell_back) ++diag.fallbacks;
        const auto& g = *step.gradient;
        if (!std::all_of(g.begin(), g.end(), [](double x) { return std::isfinite(x); })) {
          ++diag.skipped;
          continue;
        }
        optimizer.apply(w, step.signal.direction, g);
        ++diag.steps;
      } catch (const UnreachableError&) {
        // Too little drive for even one more spike: push every synapse that
        // saw input in this trial up by one learning rate.
        for (std::size_t a = 0; a < n; ++a)
          if (trial.active(a)) w[a] += config.optimizer.lr;
        ++diag.unreachable;
      } catch (const DegenerateCrossing&) {
        ++diag.skipped;
      } catch (const ConvergenceError&) {
        ++diag.skipped;
      }
    }
    result.metrics.epochs.push_back(measure(epoch));
  }
  result.metrics.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

void write_metrics_csv(const std::filesystem::path& path, const RunMetrics& metrics) {
  auto out = open_out(path);
  out << "epoch,train_err,val_err\n";
  auto row = [&](const EpochMetrics& e) {
    out << e.epoch << ',' << fmt_double(e.train_err) << ',' << fmt_double(e.val_err) << '\n';
  };
  row(metrics.initial);
  for (const auto& e : metrics.epochs) row(e);
}

void write_run_outputs(const ExperimentConfig& config, const TaskData& data,
                       const RunResult& result) {
  const auto& dir = config.output_dir;
  if (dir.empty()) return;
  save_config(dir / "config.ini", config);
  write_metrics_csv(dir / "metrics.csv", result.metrics);
  save_weights(dir / "weights.txt", result.weights);
  write_predictions(dir / "predictions_train.csv", data.train,
                    evaluate(result.weights, data.train, config.task).predictions);
  write_predictions(dir / "predictions_validation.csv", data.validation,
                    evaluate(result.weights, data.validation, config.task).predictions);
  const auto& d = result.metrics.diagnostics;
  json j = {{"steps", d.steps},           {"converged", d.converged},
            {"unreachable", d.unreachable}, {"fallbacks", d.fallbacks},
            {"skipped", d.skipped},       {"wall_seconds", result.metrics.wall_seconds}};
  auto out = open_out(dir / "diagnostics.json");
  out << j.dump(1) << '\n';
}

std::vector<VarianceRow> variance_report(const ExperimentConfig& base,
                                         const VarianceOptions& options) {
  if (options.seeds.size() < 2) throw ConfigError("variance_report needs at least two seeds");
  if (options.epoch == 0) throw ConfigError("variance_report epoch must be positive");
  std::vector<VarianceRow> rows;
  for (auto regime : options.regimes)
    for (int order : options.gamma_orders)
      for (auto kind : options.optimizers) {
        VarianceRow row;
        row.regime = regime;
        row.gamma_order = order;
        row.optimizer = kind;
        row.seeds = options.seeds;
        row.val_errors.assign(options.seeds.size(), 0.0);
        rows.push_back(std::move(row));
      }

  const std::size_t n_seeds = options.seeds.size();
  // Nested regions would only oversubscribe; one run per thread.
  const int saved_levels = omp_get_max_active_levels();
  omp_set_max_active_levels(1);
  try {
    parallel_for(rows.size() * n_seeds, [&](std::size_t job) {
      auto& row = rows[job / n_seeds];
      const std::size_t s = job % n_seeds;
      ExperimentConfig c = base;
      c.output_dir.clear();
      c.noise.regime = row.regime;
      c.gamma_order = row.gamma_order;
      c.optimizer.kind = row.optimizer;
      c.seed = row.seeds[s];
      c.epochs = options.epoch;
      const auto data = make_task_data(c);
      row.val_errors[s] = train(c, data).metrics.epochs.back().val_err;
    });
  } catch (...) {
    omp_set_max_active_levels(saved_levels);
    throw;
  }
  omp_set_max_active_levels(saved_levels);

  for (auto& row : rows) {
    const double m = std::accumulate(row.val_errors.begin(), row.val_errors.end(), 0.0) /
                     static_cast<double>(n_seeds);
    double ss = 0.0;
    for (double v : row.val_errors) ss += (v - m) * (v - m);
    row.mean = m;
    row.variance = ss / static_cast<double>(n_seeds - 1);
  }
  return rows;
}

void write_variance_csv(const std::filesystem::path& path, std::span<const VarianceRow> rows) {
  auto out = open_out(path);
  out << "regime,statistic,optimizer,n_seeds,mean_val_err,var_val_err,val_errors\n";
  for (const auto& r : rows) {
    out << to_string(r.regime) << ",gamma" << r.gamma_order << ',' << to_string(r.optimizer) << ','
        << r.seeds.size() << ',' << fmt_double(r.mean) << ',' << fmt_double(r.variance) << ',';
    for (std::size_t i = 0; i < r.val_errors.size(); ++i)
      out << (i ? ";" : "") << fmt_double(r.val_errors[i]);
    out << '\n';
  }
}

double relative_linf(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw InvalidArgument("relative_linf: length mismatch");
  double diff = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff = std::max(diff, std::abs(a[i] - b[i]));
    scale = std::max(scale, std::abs(b[i]));
  }
  return scale > 0.0 ? diff / scale : diff;
}

GradcheckReport gradcheck(const NeuronParams& params, const GradcheckOptions& options) {
  params.validate();
  if (options.max_k == 0) throw ConfigError("gradcheck max_k must be positive");
  const CriticalOptions crit_opts{options.bisection_tol, 60};
  GradcheckReport report;
  report.instances.resize(options.n_instances);

  parallel_for(options.n_instances, [&](std::size_t i) {
    auto& inst = report.instances[i];
    inst.index = i;
    const std::uint64_t s = derive_seed(options.seed, i);
    SpikePattern pattern;
    Weights w;
    if (i == 0 && options.include_single_spike) {
      // One spike placed so that its kernel peak falls on a grid point.
      pattern = SpikePattern(1, options.duration);
      pattern.spikes[0] = {0.109 - params.peak_delay()};
      w = {0.9};
      inst.k = 1;
    } else {
      pattern = gen_gamma_renewal({1, options.input_rate}, options.duration, options.n_afferents,
                                  derive_seed(s, 0));
      Rng rng(derive_seed(s, 1));
      std::normal_distribution<double> normal(0.0, options.weight_sd);
      w.resize(options.n_afferents);
      for (double& x : w) x = normal(rng);
      Rng krng(derive_seed(s, 2));
      inst.k = 1 + std::uniform_int_distribution<std::size_t>(0, options.max_k - 1)(krng);
    }
    const EventTrain train(pattern, params);
    try {
      const auto crit = critical_threshold(train, w, inst.k, crit_opts);
      inst.analytic = sts_gradient_analytic(train, w, crit, options.model);
      const auto fd = sts_gradient_fd(train, w, inst.k, options.fd_step, crit_opts);
      inst.fd = fd.central;
      if (fd.n_flagged > 0) {
        inst.degenerate = true;
        inst.note = std::to_string(fd.n_flagged) + " coordinates moved the critical event";
      }
      inst.rel_error = relative_linf(inst.analytic, inst.fd);
    } catch (const UnreachableError& e) {
      inst.degenerate = true;
      inst.note = e.what();
    } catch (const DegenerateCrossing& e) {
      inst.degenerate = true;
      inst.note = e.what();
    }
  });

  for (const auto& inst : report.instances) {
    if (inst.degenerate) {
      ++report.n_degenerate;
    } else {
      report.max_rel_error = std::max(report.max_rel_error, inst.rel_error);
    }
  }
  report.passed = report.max_rel_error <= options.tolerance;
  return report;
}

void write_gradcheck_csv(const std::filesystem::path& path, const GradcheckReport& report) {
  auto out = open_out(path);
  out << "instance,k,afferent,analytic,fd,degenerate\n";
  for (const auto& inst : report.instances)
    for (std::size_t a = 0; a < inst.analytic.size(); ++a)
      out << inst.index << ',' << inst.k << ',' << a << ',' << fmt_double(inst.analytic[a]) << ','
          << (a < inst.fd.size() ? fmt_double(inst.fd[a]) : "") << ',' << (inst.degenerate ? 1 : 0)
          << '\n';
}

}  // namespace mst
