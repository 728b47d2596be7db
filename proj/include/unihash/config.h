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
#include <utility>
#include <vector>

#include "json.hpp"
#include "unihash/dataset.h"
#include "unihash/training.h"

namespace unihash {

struct DataConfig {
  std::string path;  // empty: generate synthetic data
  int classes = 8;
  int dim = 32;
  int per_class = 250;
  double spread = 0.3;
  uint64_t seed = 1;  // generation and split
};

struct CenterConfig {
  std::string method = "auto";  // auto, hadamard, random
  int d_floor = 0;              // 0: ceil(q/4)
};

struct EvalConfig {
  int k = 100;
};

// Everything a run needs. Every key has a default and the defaults form a
// valid configuration on their own.
struct RunConfig {
  uint64_t seed = 0;  // centers, initialisation, shuffling
  DataConfig data;
  SplitOptions split;
  CenterConfig centers;
  TrainConfig train;
  EvalConfig eval;

  /// Flat dotted keys in a fixed order, e.g. "train.lambda1".
  std::vector<std::pair<std::string, std::string>> to_kv() const;
  /// Throws ConfigError for unknown keys or unparsable values.
  void set(const std::string& key, const std::string& value);
  static RunConfig from_kv(
      const std::vector<std::pair<std::string, std::string>>& kv);

  /// Accepts nested objects ({"train": {"epochs": 5}}) or dotted keys.
  void merge_json(const nlohmann::json& doc);
  void merge_file(const std::filesystem::path& path);

  std::string to_kv_text() const;
  static RunConfig from_kv_text(const std::string& text);

  void validate() const;
};

/// Key names with their one-line descriptions, in to_kv() order.
std::vector<std::pair<std::string, std::string>> config_keys();

}  // namespace unihash
