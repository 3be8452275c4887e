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

#include "mst/spike_io.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "mst/error.hpp"

namespace mst {

void write_spike_pattern(std::ostream& out, const SpikePattern& pattern) {
  std::vector<std::pair<double, std::size_t>> rows;
  rows.reserve(pattern.total_spikes());
  for (std::size_t a = 0; a < pattern.n_afferents(); ++a)
    for (double t : pattern.spikes[a]) rows.emplace_back(t, a);
  std::sort(rows.begin(), rows.end());

  char buf[64];
  std::snprintf(buf, sizeof buf, "%zu\t%.17g\n", pattern.n_afferents(), pattern.duration);
  out << buf;
  for (const auto& [t, a] : rows) {
    std::snprintf(buf, sizeof buf, "%zu\t%.17g\n", a, t);
    out << buf;
  }
}

SpikePattern read_spike_pattern(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw FormatError("spike pattern: missing header");
  std::istringstream header(line);
  std::size_t n_afferents = 0;
  double duration = 0.0;
  if (!(header >> n_afferents >> duration))
    throw FormatError("spike pattern: bad header '" + line + "'");

  SpikePattern pattern(n_afferents, duration);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream row(line);
    std::size_t a = 0;
    double t = 0.0;
    if (!(row >> a >> t))
      throw FormatError("spike pattern: bad row at line " + std::to_string(line_no));
    if (a >= n_afferents)
      throw FormatError("spike pattern: afferent index out of range at line " +
                        std::to_string(line_no));
    pattern.spikes[a].push_back(t);
  }
  for (auto& train : pattern.spikes) std::sort(train.begin(), train.end());
  try {
    pattern.validate();
  } catch (const InvalidArgument& e) {
    throw FormatError(e.what());
  }
  return pattern;
}

void save_spike_pattern(const std::filesystem::path& path, const SpikePattern& pattern) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path.string());
  write_spike_pattern(out, pattern);
}

SpikePattern load_spike_pattern(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot read " + path.string());
  return read_spike_pattern(in);
}

}  // namespace mst
