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

#ifndef MST_ENCODERS_HPP_
#define MST_ENCODERS_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "mst/neuron.hpp"

namespace mst {

// Row-major grayscale image with intensities in [0, 1].
struct GrayImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<double> pixels;

  GrayImage() = default;
  GrayImage(std::size_t w, std::size_t h, double fill = 0.0)
      : width(w), height(h), pixels(w * h, fill) {}

  double& at(std::size_t x, std::size_t y) { return pixels[y * width + x]; }
  double at(std::size_t x, std::size_t y) const { return pixels[y * width + x]; }
  // Clamp-to-edge lookup.
  double clamped(long x, long y) const;

  void validate() const;
  friend bool operator==(const GrayImage&, const GrayImage&) = default;
};

inline constexpr std::size_t kEncodedImageSize = 100;
inline constexpr std::size_t kEncodedAfferents = kEncodedImageSize * kEncodedImageSize;

enum class Encoding { kNaive, kFocal };
std::string_view to_string(Encoding e);
Encoding parse_encoding(std::string_view name);

struct EncodedSample {
  SpikePattern pattern;
  int label = 0;
  Encoding encoding = Encoding::kNaive;
};

struct NaiveOptions {
  double duration = 3.0;
  double rate_scale = 20.0;  // events/s at intensity 1
  int gamma_order = 5;
};

// Pixel p drives afferent p with a gamma renewal train at
// rate_scale * intensity_p.
EncodedSample encode_naive(const GrayImage& image, std::uint64_t seed,
                           const NaiveOptions& options = {});

enum class Polarity { kOn, kOff };

struct DogLayerConfig {
  double center_sd = 0.8;   // [px]
  double surround_sd = 1.6; // [px]
  Polarity polarity = Polarity::kOn;
  std::size_t stride = 2;
};

struct DogBankConfig {
  std::vector<DogLayerConfig> layers;
  std::size_t image_size = kEncodedImageSize;
  double support_sds = 3.0;  // kernel radius in surround sds

  // Four layers, center sd {0.8, 1.6, 3.2, 6.4}, surround 2x center,
  // on/off alternating, stride 2: 4 x 50 x 50 = 10000 units.
  static DogBankConfig defaults();
  // Stable text fingerprint (FNV-1a of the canonical description).
  std::string hash() const;
};

// Discrete difference-of-Gaussians kernel on [-radius, radius]^2 with zero
// sum and unit L2 norm.
struct DogKernel {
  int radius = 0;
  std::vector<double> values;

  double at(int dx, int dy) const {
    return values[static_cast<std::size_t>((dy + radius) * (2 * radius + 1) + (dx + radius))];
  }
  double sum() const;
  double norm() const;
};

DogKernel make_dog_kernel(const DogLayerConfig& layer, double support_sds);

struct DogUnit {
  std::size_t layer = 0;
  std::size_t row = 0, col = 0;
  long cx = 0, cy = 0;  // center pixel
};

// All layers, their units (layer-major, row-major within a layer; the unit
// index is the afferent index) and the kernel inner products between every
// pair of layers at every center offset.
class DogFilterBank {
 public:
  explicit DogFilterBank(DogBankConfig config);

  const DogBankConfig& config() const { return config_; }
  std::size_t n_layers() const { return kernels_.size(); }
  const DogKernel& kernel(std::size_t layer) const { return kernels_[layer]; }
  std::size_t grid_size(std::size_t layer) const { return grid_[layer]; }
  std::size_t layer_offset(std::size_t layer) const { return offsets_[layer]; }
  std::size_t n_units() const { return units_.size(); }
  const DogUnit& unit(std::size_t u) const { return units_[u]; }
  const std::vector<DogUnit>& units() const { return units_; }

  // <k_p(. - c_u), k_q(. - c_u - (ox, oy))>. Zero beyond the joint support.
  double overlap(std::size_t p, std::size_t q, long ox, long oy) const;
  long overlap_radius(std::size_t p, std::size_t q) const {
    return kernels_[p].radius + kernels_[q].radius;
  }

  // Writes "afferent,layer,row,col,center_x,center_y".
  void write_unit_table(const std::filesystem::path& path) const;

 private:
  DogBankConfig config_;
  std::vector<DogKernel> kernels_;
  std::vector<std::size_t> grid_;
  std::vector<std::size_t> offsets_;
  std::vector<DogUnit> units_;
  std::vector<std::vector<double>> overlap_;  // [p * n_layers + q]
};

DogFilterBank build_dog_bank(const DogBankConfig& config);

struct FocalOptions {
  std::size_t n_afferents = kEncodedAfferents;
  std::size_t max_spikes = 3000;
  double time_window = 3.0;
  double min_coefficient = 1e-6;
};

// Greedy emission sequence: units in firing order with the corrected
// coefficients they were picked at.
struct FocalCode {
  std::vector<std::size_t> units;
  std::vector<double> coefficients;
};

// Center coefficients of every unit (clamp-to-edge boundary).
std::vector<double> dog_coefficients(const GrayImage& image, const DogFilterBank& bank);

FocalCode focal_code(const GrayImage& image, const DogFilterBank& bank,
                     const FocalOptions& options = {});
// Rank r fires at r * time_window / max_spikes on afferent = unit index.
EncodedSample focal_encode(const GrayImage& image, const DogFilterBank& bank,
                           const FocalOptions& options = {});

}  // namespace mst

#endif  // MST_ENCODERS_HPP_
