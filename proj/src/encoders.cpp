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

#include "mst/encoders.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include "mst/error.hpp"
#include "mst/kernels.hpp"
#include "mst/spikegen.hpp"

namespace mst {

double GrayImage::clamped(long x, long y) const {
  x = std::clamp<long>(x, 0, static_cast<long>(width) - 1);
  y = std::clamp<long>(y, 0, static_cast<long>(height) - 1);
  return pixels[static_cast<std::size_t>(y) * width + static_cast<std::size_t>(x)];
}

void GrayImage::validate() const {
  if (pixels.size() != width * height) throw InvalidArgument("GrayImage: size mismatch");
  for (double v : pixels)
    if (!(v >= 0.0 && v <= 1.0)) throw InvalidArgument("GrayImage: intensity outside [0, 1]");
}

std::string_view to_string(Encoding e) { return e == Encoding::kNaive ? "naive" : "focal"; }

Encoding parse_encoding(std::string_view name) {
  if (name == "naive") return Encoding::kNaive;
  if (name == "focal") return Encoding::kFocal;
  throw InvalidArgument("unknown encoding '" + std::string(name) + "'");
}

namespace {

void require_encoder_size(const GrayImage& image) {
  image.validate();
  if (image.width != kEncodedImageSize || image.height != kEncodedImageSize)
    throw InvalidArgument("encoder: image must be 100x100");
}

// floor(a / b) for b > 0.
long floor_div(long a, long b) { return a >= 0 ? a / b : -((-a + b - 1) / b); }

}  // namespace

EncodedSample encode_naive(const GrayImage& image, std::uint64_t seed, const NaiveOptions& options) {
  require_encoder_size(image);
  EncodedSample sample;
  sample.encoding = Encoding::kNaive;
  sample.pattern = SpikePattern(image.pixels.size(), options.duration);
  for (std::size_t p = 0; p < image.pixels.size(); ++p) {
    const double rate = options.rate_scale * image.pixels[p];
    if (!(rate > 0.0)) continue;
    Rng rng(derive_seed(seed, p));
    sample.pattern.spikes[p] = renewal_train(rng, options.gamma_order, rate, options.duration);
  }
  sample.pattern.canonicalize();
  return sample;
}

DogBankConfig DogBankConfig::defaults() {
  DogBankConfig cfg;
  const double centers[] = {0.8, 1.6, 3.2, 6.4};
  for (std::size_t i = 0; i < 4; ++i)
    cfg.layers.push_back({centers[i], 2.0 * centers[i], i % 2 == 0 ? Polarity::kOn : Polarity::kOff, 2});
  return cfg;
}

std::string DogBankConfig::hash() const {
  std::ostringstream desc;
  desc << "size=" << image_size << ";support=" << support_sds;
  for (const auto& l : layers)
    desc << ";" << l.center_sd << "," << l.surround_sd << ","
         << (l.polarity == Polarity::kOn ? "on" : "off") << "," << l.stride;
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : desc.str()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

double DogKernel::sum() const {
  double s = 0.0;
  for (double v : values) s += v;
  return s;
}

double DogKernel::norm() const {
  double s = 0.0;
  for (double v : values) s += v * v;
  return std::sqrt(s);
}

DogKernel make_dog_kernel(const DogLayerConfig& layer, double support_sds) {
  if (!(layer.center_sd > 0.0) || !(layer.surround_sd > layer.center_sd))
    throw InvalidArgument("make_dog_kernel: need 0 < center sd < surround sd");
  if (layer.stride == 0) throw InvalidArgument("make_dog_kernel: stride must be positive");
  DogKernel k;
  k.radius = static_cast<int>(std::ceil(support_sds * layer.surround_sd));
  const int side = 2 * k.radius + 1;
  std::vector<double> center(static_cast<std::size_t>(side * side));
  std::vector<double> surround(center.size());
  double cs = 0.0, ss = 0.0;
  for (int dy = -k.radius; dy <= k.radius; ++dy) {
    for (int dx = -k.radius; dx <= k.radius; ++dx) {
      const double r2 = dx * dx + dy * dy;
      const auto i = static_cast<std::size_t>((dy + k.radius) * side + (dx + k.radius));
      center[i] = std::exp(-r2 / (2.0 * layer.center_sd * layer.center_sd));
      surround[i] = std::exp(-r2 / (2.0 * layer.surround_sd * layer.surround_sd));
      cs += center[i];
      ss += surround[i];
    }
  }
  const double sign = layer.polarity == Polarity::kOn ? 1.0 : -1.0;
  k.values.resize(center.size());
  double norm2 = 0.0;
  for (std::size_t i = 0; i < center.size(); ++i) {
    k.values[i] = sign * (center[i] / cs - surround[i] / ss);
    norm2 += k.values[i] * k.values[i];
  }
  const double norm = std::sqrt(norm2);
  for (double& v : k.values) v /= norm;
  return k;
}

DogFilterBank::DogFilterBank(DogBankConfig config) : config_(std::move(config)) {
  if (config_.layers.empty()) throw InvalidArgument("DogFilterBank: no layers");
  if (config_.image_size == 0) throw InvalidArgument("DogFilterBank: empty image");
  for (std::size_t l = 0; l < config_.layers.size(); ++l) {
    const auto& lc = config_.layers[l];
    kernels_.push_back(make_dog_kernel(lc, config_.support_sds));
    const std::size_t g = (config_.image_size + lc.stride - 1) / lc.stride;
    grid_.push_back(g);
    offsets_.push_back(units_.size());
    const long shift = static_cast<long>((lc.stride - 1) / 2);
    for (std::size_t r = 0; r < g; ++r)
      for (std::size_t c = 0; c < g; ++c)
        units_.push_back({l, r, c, static_cast<long>(c * lc.stride) + shift,
                          static_cast<long>(r * lc.stride) + shift});
  }
  const std::size_t n = kernels_.size();
  overlap_.resize(n * n);
  for (std::size_t p = 0; p < n; ++p)
    for (std::size_t q = 0; q < n; ++q)
      overlap_[p * n + q] = kernels::overlap_table_omp(kernels_[p], kernels_[q]);
}

double DogFilterBank::overlap(std::size_t p, std::size_t q, long ox, long oy) const {
  const long R = overlap_radius(p, q);
  if (ox < -R || ox > R || oy < -R || oy > R) return 0.0;
  const long side = 2 * R + 1;
  return overlap_[p * kernels_.size() + q][static_cast<std::size_t>((oy + R) * side + (ox + R))];
}

void DogFilterBank::write_unit_table(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path.string());
  out << "afferent,layer,row,col,center_x,center_y\n";
  for (std::size_t u = 0; u < units_.size(); ++u) {
    const auto& d = units_[u];
    out << u << ',' << d.layer << ',' << d.row << ',' << d.col << ',' << d.cx << ',' << d.cy
        << '\n';
  }
}

DogFilterBank build_dog_bank(const DogBankConfig& config) { return DogFilterBank(config); }

std::vector<double> dog_coefficients(const GrayImage& image, const DogFilterBank& bank) {
  image.validate();
  if (image.width != bank.config().image_size || image.height != bank.config().image_size)
    throw InvalidArgument("dog_coefficients: image size does not match the bank");
  return kernels::dog_coefficients_omp(image, bank);
}

FocalCode focal_code(const GrayImage& image, const DogFilterBank& bank,
                     const FocalOptions& options) {
  std::vector<double> coeffs = dog_coefficients(image, bank);
  std::vector<char> fired(coeffs.size(), 0);
  FocalCode code;
  code.units.reserve(options.max_spikes);
  code.coefficients.reserve(options.max_spikes);

  for (std::size_t s = 0; s < options.max_spikes; ++s) {
    std::size_t best = coeffs.size();
    double best_mag = -1.0;
    for (std::size_t u = 0; u < coeffs.size(); ++u) {
      if (!fired[u] && std::abs(coeffs[u]) > best_mag) {
        best_mag = std::abs(coeffs[u]);
        best = u;
      }
    }
    if (best == coeffs.size() || best_mag < options.min_coefficient) break;

    const double picked = coeffs[best];
    code.units.push_back(best);
    code.coefficients.push_back(picked);
    fired[best] = 1;

    // Remove the picked kernel's projection from every unit whose support
    // intersects it.
    const DogUnit& u = bank.unit(best);
    for (std::size_t q = 0; q < bank.n_layers(); ++q) {
      const long R = bank.overlap_radius(u.layer, q);
      const auto stride = static_cast<long>(bank.config().layers[q].stride);
      const long shift = (stride - 1) / 2;
      const long g = static_cast<long>(bank.grid_size(q));
      const long c0 = std::max(0L, floor_div(u.cx - R - shift + stride - 1, stride));
      const long c1 = std::min(g - 1, floor_div(u.cx + R - shift, stride));
      const long r0 = std::max(0L, floor_div(u.cy - R - shift + stride - 1, stride));
      const long r1 = std::min(g - 1, floor_div(u.cy + R - shift, stride));
      const std::size_t base = bank.layer_offset(q);
      for (long r = r0; r <= r1; ++r) {
        for (long c = c0; c <= c1; ++c) {
          const std::size_t v = base + static_cast<std::size_t>(r * g + c);
          const DogUnit& dv = bank.unit(v);
          coeffs[v] -= picked * bank.overlap(u.layer, q, dv.cx - u.cx, dv.cy - u.cy);
        }
      }
    }
  }
  return code;
}

EncodedSample focal_encode(const GrayImage& image, const DogFilterBank& bank,
                           const FocalOptions& options) {
  require_encoder_size(image);
  if (bank.n_units() > options.n_afferents)
    throw InvalidArgument("focal_encode: bank has more units than afferents");
  const FocalCode code = focal_code(image, bank, options);
  EncodedSample sample;
  sample.encoding = Encoding::kFocal;
  sample.pattern = SpikePattern(options.n_afferents, options.time_window);
  const double spacing = options.time_window / static_cast<double>(options.max_spikes);
  for (std::size_t r = 0; r < code.units.size(); ++r)
    sample.pattern.spikes[code.units[r]].push_back(static_cast<double>(r) * spacing);
  return sample;
}

}  // namespace mst
