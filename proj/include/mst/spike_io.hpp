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

#ifndef MST_SPIKE_IO_HPP_
#define MST_SPIKE_IO_HPP_

#include <filesystem>
#include <iosfwd>

#include "mst/neuron.hpp"

namespace mst {

// Columnar text format. First line: "<n_afferents>\t<duration>". Then one
// line per spike, "<afferent_index>\t<time_seconds>", ordered by time.
// Afferent indices are 0-based. Times are written with enough digits to
// round-trip exactly.
void write_spike_pattern(std::ostream& out, const SpikePattern& pattern);
SpikePattern read_spike_pattern(std::istream& in);

void save_spike_pattern(const std::filesystem::path& path, const SpikePattern& pattern);
SpikePattern load_spike_pattern(const std::filesystem::path& path);

}  // namespace mst

#endif  // MST_SPIKE_IO_HPP_
