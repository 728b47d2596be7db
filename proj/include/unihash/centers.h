// Copyright 2026 The UniHash Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace unihash {

enum class CenterMethod { kHadamard, kRandom };

// Per-class binary hash centers. Entries are exactly +1 or -1; centers stay
// fixed for the whole training run.
struct HashCenterTable {
  int code_length = 0;
  std::vector<std::vector<int8_t>> centers;
  int min_distance = 0;  // achieved minimum pairwise Hamming distance

  int num_classes() const { return static_cast<int>(centers.size()); }
  bool operator==(const HashCenterTable&) const = default;
};

inline constexpr int kRandomCenterAttempts = 10000;

HashCenterTable generate_centers(int num_classes, int code_length,
                                 CenterMethod method, int d_floor,
                                 uint64_t seed);

/// Hadamard when q is a power of two and C <= 2q, random with
/// d_floor = ceil(q/4) otherwise.
HashCenterTable generate_default_centers(int num_classes, int code_length,
                                         uint64_t seed);

/// Exact minimum over distinct pairs. A single-center table reports q.
int min_pairwise_hamming(const HashCenterTable& table);

int hamming(const std::vector<int8_t>& a, const std::vector<int8_t>& b);

/// One row per class, space-separated +1/-1.
std::string centers_to_text(const HashCenterTable& table);
void write_centers_text(const HashCenterTable& table,
                        const std::filesystem::path& path);

CenterMethod parse_center_method(const std::string& name);
std::string to_string(CenterMethod method);

}  // namespace unihash
