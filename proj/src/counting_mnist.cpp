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

#include "mst/counting_mnist.hpp"

#include <png.h>
#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <random>

#include <json.hpp>

#include "mst/error.hpp"
#include "mst/spikegen.hpp"

namespace mst {
namespace {

std::vector<unsigned char> read_maybe_gzip(const std::filesystem::path& path) {
  gzFile f = gzopen(path.c_str(), "rb");
  if (!f) throw FormatError("cannot open " + path.string());
  std::vector<unsigned char> data;
  unsigned char buf[1 << 16];
  int n = 0;
  while ((n = gzread(f, buf, sizeof buf)) > 0) data.insert(data.end(), buf, buf + n);
  const bool failed = n < 0;
  gzclose(f);
  if (failed) throw FormatError("read error in " + path.string());
  return data;
}

void write_maybe_gzip(const std::filesystem::path& path, const std::vector<unsigned char>& data) {
  if (path.extension() == ".gz") {
    gzFile f = gzopen(path.c_str(), "wb9");
    if (!f) throw FormatError("cannot write " + path.string());
    const int written = gzwrite(f, data.data(), static_cast<unsigned>(data.size()));
    gzclose(f);
    if (written != static_cast<int>(data.size())) throw FormatError("short write " + path.string());
  } else {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
  }
}

std::uint32_t be32(const std::vector<unsigned char>& d, std::size_t off) {
  return (std::uint32_t{d[off]} << 24) | (std::uint32_t{d[off + 1]} << 16) |
         (std::uint32_t{d[off + 2]} << 8) | std::uint32_t{d[off + 3]};
}

void put_be32(std::vector<unsigned char>& d, std::uint32_t v) {
  for (int s = 24; s >= 0; s -= 8) d.push_back(static_cast<unsigned char>(v >> s));
}

}  // namespace

GrayImage MnistStore::image(std::size_t i) const {
  GrayImage img(kDigitSide, kDigitSide);
  std::copy_n(pixels.begin() + static_cast<std::ptrdiff_t>(i * kDigitPixels), kDigitPixels,
              img.pixels.begin());
  return img;
}

MnistStore load_mnist_idx(const std::filesystem::path& images_path,
                          const std::filesystem::path& labels_path) {
  const auto img = read_maybe_gzip(images_path);
  const auto lab = read_maybe_gzip(labels_path);
  if (img.size() < 16) throw FormatError("IDX images: truncated header");
  if (be32(img, 0) != 0x00000803) throw FormatError("IDX images: bad magic");
  if (lab.size() < 8) throw FormatError("IDX labels: truncated header");
  if (be32(lab, 0) != 0x00000801) throw FormatError("IDX labels: bad magic");
  const std::size_t n = be32(img, 4);
  if (be32(img, 8) != kDigitSide || be32(img, 12) != kDigitSide)
    throw FormatError("IDX images: expected 28x28");
  if (be32(lab, 4) != n) throw FormatError("IDX: image and label counts differ");
  if (img.size() < 16 + n * kDigitPixels) throw FormatError("IDX images: truncated data");
  if (lab.size() < 8 + n) throw FormatError("IDX labels: truncated data");

  MnistStore store;
  store.pixels.resize(n * kDigitPixels);
  for (std::size_t i = 0; i < store.pixels.size(); ++i) store.pixels[i] = img[16 + i] / 255.0;
  store.labels.assign(lab.begin() + 8, lab.begin() + 8 + static_cast<std::ptrdiff_t>(n));
  for (auto l : store.labels)
    if (l > 9) throw FormatError("IDX labels: label outside 0-9");
  return store;
}

void write_mnist_idx(const std::filesystem::path& images_path,
                     const std::filesystem::path& labels_path, const MnistStore& store) {
  std::vector<unsigned char> img;
  put_be32(img, 0x00000803);
  put_be32(img, static_cast<std::uint32_t>(store.size()));
  put_be32(img, kDigitSide);
  put_be32(img, kDigitSide);
  for (double v : store.pixels)
    img.push_back(static_cast<unsigned char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)));
  std::vector<unsigned char> lab;
  put_be32(lab, 0x00000801);
  put_be32(lab, static_cast<std::uint32_t>(store.size()));
  lab.insert(lab.end(), store.labels.begin(), store.labels.end());
  write_maybe_gzip(images_path, img);
  write_maybe_gzip(labels_path, lab);
}

MnistStore load_mnist_dir(const std::filesystem::path& dir) {
  return load_mnist_idx(dir / "digits-images-idx3-ubyte.gz", dir / "digits-labels-idx1-ubyte.gz");
}

bool well_separated(std::span<const DigitPlacement> placements, double min_center_distance) {
  for (std::size_t i = 0; i < placements.size(); ++i)
    for (std::size_t j = i + 1; j < placements.size(); ++j) {
      const double dx = static_cast<double>(placements[i].x - placements[j].x);
      const double dy = static_cast<double>(placements[i].y - placements[j].y);
      if (std::hypot(dx, dy) < min_center_distance) return false;
    }
  return true;
}

CompositeSample compose_image(const MnistStore& store, std::uint64_t seed,
                              const CompositeOptions& options) {
  if (store.size() == 0) throw InvalidArgument("compose_image: empty store");
  if (options.canvas < kDigitSide) throw InvalidArgument("compose_image: canvas too small");
  Rng rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, store.size() - 1);
  std::uniform_int_distribution<long> pos(0, static_cast<long>(options.canvas - kDigitSide));

  CompositeSample s;
  s.seed = seed;
  s.placements.resize(options.n_digits);
  for (auto& p : s.placements) {
    p.source_index = pick(rng);
    p.digit = store.labels[p.source_index];
  }
  bool placed = false;
  for (int attempt = 0; attempt < options.max_attempts; ++attempt) {
    for (auto& p : s.placements) {
      p.x = pos(rng);
      p.y = pos(rng);
    }
    if (well_separated(s.placements, options.min_center_distance)) {
      placed = true;
      break;
    }
    ++s.rejections;
  }
  if (!placed) throw InvalidArgument("compose_image: rejection cap exceeded");

  s.image = GrayImage(options.canvas, options.canvas);
  for (const auto& p : s.placements) {
    const double* src = store.pixels.data() + p.source_index * kDigitPixels;
    for (std::size_t r = 0; r < kDigitSide; ++r)
      for (std::size_t c = 0; c < kDigitSide; ++c) {
        double& dst = s.image.at(static_cast<std::size_t>(p.x) + c, static_cast<std::size_t>(p.y) + r);
        dst = std::max(dst, src[r * kDigitSide + c]);
      }
    if (is_even_digit(p.digit)) ++s.label;
  }
  return s;
}

void DatasetManifest::recompute_histogram() {
  label_histogram.clear();
  for (const auto& r : samples) ++label_histogram[r.label];
}

std::pair<Dataset, Dataset> build_dataset(const MnistStore& store, std::size_t n_train,
                                          std::size_t n_test, std::uint64_t master_seed,
                                          const CompositeOptions& options) {
  auto make = [&](const std::string& split, std::size_t first_id, std::size_t n) {
    Dataset ds;
    ds.manifest.split = split;
    ds.manifest.master_seed = master_seed;
    ds.manifest.options = options;
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t id = first_id + i;
      auto sample = compose_image(store, derive_seed(master_seed, id), options);
      ds.manifest.samples.push_back({id, sample.seed, sample.label, sample.placements, "", ""});
      ds.samples.push_back(std::move(sample));
    }
    ds.manifest.recompute_histogram();
    return ds;
  };
  return {make("train", 0, n_train), make("test", n_train, n_test)};
}

void save_manifest(const std::filesystem::path& path, const DatasetManifest& m) {
  using nlohmann::json;
  json j;
  j["format"] = "mst-counting-mnist-manifest";
  j["version"] = 1;
  j["split"] = m.split;
  j["master_seed"] = m.master_seed;
  j["n_digits"] = m.options.n_digits;
  j["canvas"] = m.options.canvas;
  j["min_center_distance"] = m.options.min_center_distance;
  json hist = json::object();
  for (const auto& [label, count] : m.label_histogram) hist[std::to_string(label)] = count;
  j["label_histogram"] = hist;
  if (m.encoder) {
    j["encoder"] = {{"encoding", std::string(to_string(m.encoder->encoding))},
                    {"bank_hash", m.encoder->bank_hash},
                    {"seed", m.encoder->seed}};
  }
  json samples = json::array();
  for (const auto& r : m.samples) {
    json pl = json::array();
    for (const auto& p : r.placements)
      pl.push_back({{"digit", p.digit}, {"source_index", p.source_index}, {"x", p.x}, {"y", p.y}});
    json s = {{"id", r.id}, {"seed", r.seed}, {"label", r.label}, {"placements", pl}};
    if (!r.image_file.empty()) s["image"] = r.image_file;
    if (!r.pattern_file.empty()) s["pattern"] = r.pattern_file;
    samples.push_back(std::move(s));
  }
  j["samples"] = std::move(samples);
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path.string());
  out << j.dump(1) << '\n';
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
  using nlohmann::json;
  std::ifstream in(path);
  if (!in) throw FormatError("cannot read " + path.string());
  DatasetManifest m;
  try {
    const json j = json::parse(in);
    if (j.at("format") != "mst-counting-mnist-manifest")
      throw FormatError("manifest: unexpected format tag");
    m.split = j.at("split").get<std::string>();
    m.master_seed = j.at("master_seed").get<std::uint64_t>();
    m.options.n_digits = j.at("n_digits").get<std::size_t>();
    m.options.canvas = j.at("canvas").get<std::size_t>();
    m.options.min_center_distance = j.at("min_center_distance").get<double>();
    if (j.contains("encoder")) {
      const auto& e = j["encoder"];
      m.encoder = EncoderProvenance{parse_encoding(e.at("encoding").get<std::string>()),
                                    e.at("bank_hash").get<std::string>(),
                                    e.at("seed").get<std::uint64_t>()};
    }
    for (const auto& s : j.at("samples")) {
      SampleRecord r;
      r.id = s.at("id").get<std::size_t>();
      r.seed = s.at("seed").get<std::uint64_t>();
      r.label = s.at("label").get<int>();
      for (const auto& p : s.at("placements"))
        r.placements.push_back({p.at("digit").get<int>(), p.at("source_index").get<std::size_t>(),
                                p.at("x").get<long>(), p.at("y").get<long>()});
      r.image_file = s.value("image", "");
      r.pattern_file = s.value("pattern", "");
      m.samples.push_back(std::move(r));
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("manifest: ") + e.what());
  }
  m.recompute_histogram();
  return m;
}

void write_png(const std::filesystem::path& path, const GrayImage& image) {
  image.validate();
  std::unique_ptr<FILE, int (*)(FILE*)> fp(std::fopen(path.c_str(), "wb"), &std::fclose);
  if (!fp) throw FormatError("cannot write " + path.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw FormatError("libpng init failed");
  }
  std::vector<png_byte> row(image.width);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw FormatError("libpng error writing " + path.string());
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(image.width),
               static_cast<png_uint_32>(image.height), 8, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (std::size_t y = 0; y < image.height; ++y) {
    for (std::size_t x = 0; x < image.width; ++x)
      row[x] = static_cast<png_byte>(std::lround(image.at(x, y) * 255.0));
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

GrayImage read_png(const std::filesystem::path& path) {
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&img, path.c_str()))
    throw FormatError("cannot read PNG " + path.string());
  img.format = PNG_FORMAT_GRAY;
  std::vector<png_byte> buf(PNG_IMAGE_SIZE(img));
  if (!png_image_finish_read(&img, nullptr, buf.data(), 0, nullptr))
    throw FormatError("cannot decode PNG " + path.string());
  GrayImage out(img.width, img.height);
  for (std::size_t i = 0; i < buf.size(); ++i) out.pixels[i] = buf[i] / 255.0;
  return out;
}

double rmse_eval(std::span<const int> predictions, std::span<const int> labels) {
  if (predictions.size() != labels.size()) throw InvalidArgument("rmse_eval: length mismatch");
  if (predictions.empty()) throw InvalidArgument("rmse_eval: empty input");
  double ss = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double d = predictions[i] - labels[i];
    ss += d * d;
  }
  return std::sqrt(ss / static_cast<double>(labels.size()));
}

double random_guess_rmse(std::span<const int> labels, std::size_t n_seeds, std::uint64_t seed,
                         int lo, int hi) {
  if (n_seeds == 0) throw InvalidArgument("random_guess_rmse: need at least one seed");
  double total = 0.0;
  std::vector<int> guesses(labels.size());
  for (std::size_t s = 0; s < n_seeds; ++s) {
    Rng rng(derive_seed(seed, s));
    std::uniform_int_distribution<int> guess(lo, hi);
    for (int& g : guesses) g = guess(rng);
    total += rmse_eval(guesses, labels);
  }
  return total / static_cast<double>(n_seeds);
}

int mst_predict(const EventTrain& train, std::span<const double> weights) {
  return static_cast<int>(count_spikes(train, weights, train.params().v_thresh));
}

}  // namespace mst
