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

#ifndef MST_COUNTING_MNIST_HPP_
#define MST_COUNTING_MNIST_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mst/encoders.hpp"
#include "mst/neuron.hpp"

namespace mst {

inline constexpr std::size_t kDigitSide = 28;
inline constexpr std::size_t kDigitPixels = kDigitSide * kDigitSide;

// MNIST digits with intensities normalised to [0, 1].
struct MnistStore {
  std::vector<double> pixels;  // size() * 784, row-major per digit
  std::vector<std::uint8_t> labels;

  std::size_t size() const { return labels.size(); }
  GrayImage image(std::size_t i) const;
};

// Big-endian IDX: images magic 0x00000803 (count, 28, 28), labels
// 0x00000801. Files may be gzip-compressed.
MnistStore load_mnist_idx(const std::filesystem::path& images_path,
                          const std::filesystem::path& labels_path);
// Writes 8-bit IDX (gzip if the path ends in ".gz").
void write_mnist_idx(const std::filesystem::path& images_path,
                     const std::filesystem::path& labels_path, const MnistStore& store);

// Default file names under <data_dir>/mnist.
MnistStore load_mnist_dir(const std::filesystem::path& dir);

inline bool is_even_digit(int digit) { return digit % 2 == 0; }

struct DigitPlacement {
  int digit = 0;
  std::size_t source_index = 0;
  long x = 0, y = 0;  // top-left corner
};

struct CompositeOptions {
  std::size_t n_digits = 5;
  std::size_t canvas = kEncodedImageSize;
  double min_center_distance = 28.0;
  int max_attempts = 100000;
};

struct CompositeSample {
  GrayImage image;
  int label = 0;  // number of even digits
  std::vector<DigitPlacement> placements;
  std::uint64_t seed = 0;
  int rejections = 0;
};

// Digits are drawn uniformly with replacement; positions are rejection
// sampled jointly until every pair of centers is at least
// min_center_distance apart. Pixels combine by maximum.
CompositeSample compose_image(const MnistStore& store, std::uint64_t seed,
                              const CompositeOptions& options = {});

// True if every pair of placed digit centers is separated enough.
bool well_separated(std::span<const DigitPlacement> placements, double min_center_distance);

struct SampleRecord {
  std::size_t id = 0;
  std::uint64_t seed = 0;
  int label = 0;
  std::vector<DigitPlacement> placements;
  std::string image_file;    // PNG relative to the manifest, if persisted
  std::string pattern_file;  // spike pattern relative to the manifest, if encoded
};

struct EncoderProvenance {
  Encoding encoding = Encoding::kFocal;
  std::string bank_hash;  // FoCal only
  std::uint64_t seed = 0; // naive only
};

struct DatasetManifest {
  std::string split;
  std::uint64_t master_seed = 0;
  CompositeOptions options;
  std::vector<SampleRecord> samples;
  std::map<int, std::size_t> label_histogram;
  std::optional<EncoderProvenance> encoder;

  void recompute_histogram();
};

struct Dataset {
  DatasetManifest manifest;
  std::vector<CompositeSample> samples;
};

// Train and test splits with disjoint ids (train 0..n_train-1, test after)
// and per-sample seeds derive_seed(master_seed, id).
std::pair<Dataset, Dataset> build_dataset(const MnistStore& store, std::size_t n_train,
                                          std::size_t n_test, std::uint64_t master_seed,
                                          const CompositeOptions& options = {});

void save_manifest(const std::filesystem::path& path, const DatasetManifest& manifest);
DatasetManifest load_manifest(const std::filesystem::path& path);

void write_png(const std::filesystem::path& path, const GrayImage& image);
GrayImage read_png(const std::filesystem::path& path);

double rmse_eval(std::span<const int> predictions, std::span<const int> labels);

// RMSE of uniform guesses over [lo, hi], averaged over n_seeds guess seeds.
double random_guess_rmse(std::span<const int> labels, std::size_t n_seeds, std::uint64_t seed,
                         int lo = 0, int hi = 6);

// Output spike count at the neuron's own threshold.
int mst_predict(const EventTrain& train, std::span<const double> weights);

}  // namespace mst

#endif  // MST_COUNTING_MNIST_HPP_
