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

#include "unihash/centers.h"
#include "unihash/config.h"
#include "unihash/network.h"

namespace unihash {

// On-disk layout (all integers little-endian):
//   "UHCK", u32 version
//   u64 array count; per array: u64 name length, name bytes, u64 rank,
//     rank x u64 dims
//   row-major f32 payloads in manifest order
//   u64 byte length, UTF-8 key=value config block
// The arrays are every model parameter followed by "centers" (C x q, +-1).
struct Checkpoint {
  RunConfig config;
  ModelParams params;
  HashCenterTable centers;

  /// Parameters are rounded to f32 so the in-memory checkpoint equals what
  /// load() returns.
  static Checkpoint from_training(RunConfig config, ModelParams params,
                                  HashCenterTable centers);

  std::string serialize() const;
  static Checkpoint parse(const std::string& bytes);

  void save(const std::filesystem::path& path) const;
  static Checkpoint load(const std::filesystem::path& path);
};

inline constexpr uint32_t kCheckpointVersion = 1;

}  // namespace unihash
