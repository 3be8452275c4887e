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

// Command-line front end: dataset generation, encoding, training,
// evaluation, variance report and gradient check.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "mst/error.hpp"
#include "mst/harness.hpp"

namespace {

constexpr int kExitToleranceFailure = 2;
constexpr int kExitConfigError = 3;

struct ConfigArgs {
  std::string path;
  std::vector<std::string> overrides;  // section.key=value
};

void add_config_args(CLI::App* cmd, ConfigArgs& args) {
  cmd->add_option("-c,--config", args.path, "experiment config (key = value sections)");
  cmd->add_option("-s,--set", args.overrides, "override, e.g. training.epochs=10")->take_all();
}

mst::ExperimentConfig resolve_config(const ConfigArgs& args) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    if (!args.path.empty()) pt::read_ini(args.path, tree);
  } catch (const pt::ini_parser_error& e) {
    throw mst::ConfigError(e.what());
  }
  for (const auto& o : args.overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos || o.find('.') > eq)
      throw mst::ConfigError("override '" + o + "' is not section.key=value");
    tree.put(o.substr(0, eq), o.substr(eq + 1));
  }
  std::stringstream ss;
  pt::write_ini(ss, tree);
  return mst::parse_config(ss);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');)
    if (!item.empty()) out.push_back(item);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-spike tempotron experiments"};
  app.require_subcommand(1);

  ConfigArgs gen_syn_cfg;
  std::string gen_syn_out;
  auto* gen_syn = app.add_subcommand("gen-synthetic", "write synthetic trial files and manifests");
  add_config_args(gen_syn, gen_syn_cfg);
  gen_syn->add_option("-o,--out", gen_syn_out, "output directory")->required();

  ConfigArgs gen_mnist_cfg;
  std::string gen_mnist_out;
  auto* gen_mnist = app.add_subcommand("gen-mnist", "write counting-MNIST PNGs and manifests");
  add_config_args(gen_mnist, gen_mnist_cfg);
  gen_mnist->add_option("-o,--out", gen_mnist_out, "output directory")->required();

  std::vector<std::string> encode_manifests;
  std::string encode_encoding = "focal";
  std::uint64_t encode_seed = 1;
  auto* encode = app.add_subcommand("encode", "encode the images of counting-MNIST manifests");
  encode->add_option("manifests", encode_manifests, "manifest files")->required();
  encode->add_option("-e,--encoding", encode_encoding, "focal or naive");
  encode->add_option("--seed", encode_seed, "seed of the naive encoder");

  ConfigArgs train_cfg;
  std::string train_out;
  auto* train = app.add_subcommand("train", "train a neuron and write metrics and weights");
  add_config_args(train, train_cfg);
  train->add_option("-o,--out", train_out, "output directory (overrides run.output_dir)");

  ConfigArgs eval_cfg;
  std::string eval_weights, eval_split = "validation", eval_out;
  auto* evaluate = app.add_subcommand("evaluate", "score a weight checkpoint");
  add_config_args(evaluate, eval_cfg);
  evaluate->add_option("-w,--weights", eval_weights, "weight checkpoint")->required();
  evaluate->add_option("--split", eval_split, "train or validation")
      ->check(CLI::IsMember({"train", "validation"}));
  evaluate->add_option("-p,--predictions", eval_out, "predictions CSV");

  ConfigArgs var_cfg;
  std::string var_out, var_regimes = "patterns_only", var_stats = "gamma1,gamma5,gamma15";
  std::size_t var_seeds = 10, var_epoch = 10;
  std::uint64_t var_first_seed = 1;
  auto* variance = app.add_subcommand("variance-report", "validation-error variance per optimizer");
  add_config_args(variance, var_cfg);
  variance->add_option("-o,--out", var_out, "report CSV")->required();
  variance->add_option("--regimes", var_regimes, "comma separated noise regimes");
  variance->add_option("--statistics", var_stats, "comma separated gamma1/gamma5/gamma15");
  variance->add_option("--seeds", var_seeds, "seeds per configuration");
  variance->add_option("--first-seed", var_first_seed, "first seed; seeds are consecutive");
  variance->add_option("--epoch", var_epoch, "epoch at which variance is measured");

  ConfigArgs gc_cfg;
  mst::GradcheckOptions gc;
  std::string gc_out, gc_model = "grid";
  auto* gradcheck = app.add_subcommand("gradcheck", "analytic vs finite-difference gradients");
  add_config_args(gradcheck, gc_cfg);
  gradcheck->add_option("-n,--instances", gc.n_instances, "number of instances");
  gradcheck->add_option("--afferents", gc.n_afferents, "afferents per instance");
  gradcheck->add_option("--duration", gc.duration, "instance duration [s]");
  gradcheck->add_option("--rate", gc.input_rate, "input rate [Hz]");
  gradcheck->add_option("--weight-sd", gc.weight_sd, "weight standard deviation");
  gradcheck->add_option("--tolerance", gc.tolerance, "relative L-infinity tolerance");
  gradcheck->add_option("--seed", gc.seed, "instance seed");
  gradcheck->add_option("--model", gc_model, "grid or continuous")
      ->check(CLI::IsMember({"grid", "continuous"}));
  gradcheck->add_option("-o,--out", gc_out, "CSV of analytic/FD pairs");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen_syn) {
      mst::write_synthetic_dataset(gen_syn_out, resolve_config(gen_syn_cfg));
    } else if (*gen_mnist) {
      auto c = resolve_config(gen_mnist_cfg);
      c.task = mst::Task::kCountingMnist;
      mst::write_mnist_dataset(gen_mnist_out, c);
    } else if (*encode) {
      const auto enc = mst::parse_encoding(encode_encoding);
      for (const auto& m : encode_manifests) mst::encode_mnist_split(m, enc, encode_seed);
    } else if (*train) {
      auto c = resolve_config(train_cfg);
      if (!train_out.empty()) c.output_dir = train_out;
      const auto data = mst::make_task_data(c);
      const auto result = mst::train(c, data);
      mst::write_run_outputs(c, data, result);
      std::printf("epoch,train_err,val_err\n");
      std::printf("0,%.6g,%.6g\n", result.metrics.initial.train_err, result.metrics.initial.val_err);
      for (const auto& e : result.metrics.epochs)
        std::printf("%zu,%.6g,%.6g\n", e.epoch, e.train_err, e.val_err);
    } else if (*evaluate) {
      const auto c = resolve_config(eval_cfg);
      const auto data = mst::make_task_data(c);
      const auto w = mst::load_weights(eval_weights);
      if (w.size() != data.n_afferents)
        throw mst::ConfigError("checkpoint has " + std::to_string(w.size()) +
                               " weights, dataset has " + std::to_string(data.n_afferents) +
                               " afferents");
      const auto& set = eval_split == "train" ? data.train : data.validation;
      const auto ev = mst::evaluate(w, set, c.task);
      if (!eval_out.empty()) mst::write_predictions(eval_out, set, ev.predictions);
      std::printf("%s %s_error %.6g\n", eval_split.c_str(),
                  c.task == mst::Task::kCountingMnist ? "rmse" : "count", ev.error);
    } else if (*variance) {
      const auto c = resolve_config(var_cfg);
      mst::VarianceOptions opts;
      opts.regimes.clear();
      for (const auto& r : split_list(var_regimes)) opts.regimes.push_back(mst::parse_noise_regime(r));
      opts.gamma_orders.clear();
      for (const auto& s : split_list(var_stats)) {
        if (s.rfind("gamma", 0) != 0) throw mst::ConfigError("bad statistic '" + s + "'");
        opts.gamma_orders.push_back(std::stoi(s.substr(5)));
      }
      opts.seeds.clear();
      for (std::size_t i = 0; i < var_seeds; ++i) opts.seeds.push_back(var_first_seed + i);
      opts.epoch = var_epoch;
      const auto rows = mst::variance_report(c, opts);
      mst::write_variance_csv(var_out, rows);
      for (const auto& r : rows)
        std::printf("%s gamma%d %s variance %.6g mean %.6g\n",
                    std::string(mst::to_string(r.regime)).c_str(), r.gamma_order,
                    std::string(mst::to_string(r.optimizer)).c_str(), r.variance, r.mean);
    } else if (*gradcheck) {
      const auto c = resolve_config(gc_cfg);
      gc.model = gc_model == "grid" ? mst::SpikeTimeModel::kGridLocked
                                    : mst::SpikeTimeModel::kContinuous;
      const auto report = mst::gradcheck(c.neuron, gc);
      if (!gc_out.empty()) mst::write_gradcheck_csv(gc_out, report);
      std::printf("instances %zu degenerate %zu max_rel_error %.3e tolerance %.1e %s\n",
                  report.instances.size(), report.n_degenerate, report.max_rel_error, gc.tolerance,
                  report.passed ? "PASS" : "FAIL");
      if (!report.passed) return kExitToleranceFailure;
    }
  } catch (const mst::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfigError;
  } catch (const mst::InvalidArgument& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfigError;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
