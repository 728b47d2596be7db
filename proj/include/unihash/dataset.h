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
#include <optional>
#include <string>
#include <vector>

namespace unihash {

struct Sample {
  int64_t id = 0;
  std::vector<float> features;
  std::vector<uint8_t> labels;  // multi-hot, length num_classes

  bool operator==(const Sample&) const = default;
};

struct Dataset {
  std::vector<Sample> samples;
  int num_classes = 0;
  int feature_dim = 0;
  bool is_multilabel = false;

  size_t size() const { return samples.size(); }
  bool operator==(const Dataset&) const = default;
};

// Index lists below are positions into Dataset::samples, not Sample::id.
struct SplitDataset {
  std::vector<int> seen_classes;
  std::vector<int> unseen_classes;
  std::vector<size_t> train;
  // Held out from the seen database for branch selection; searched against
  // `train`.
  std::vector<size_t> val_query;
  std::vector<size_t> query_seen;
  std::vector<size_t> query_unseen;
  std::vector<size_t> db_seen;
  std::vector<size_t> db_unseen;
  std::vector<size_t> db_all;
};

struct SplitOptions {
  double seen_ratio = 0.8;
  double query_frac = 0.2;
  double val_frac = 0.1;
  // Fraction of the remaining seen-pure database used for training.
  double train_frac = 1.0;
  uint64_t seed = 0;
};

struct Protocol {
  std::string name;
  std::vector<size_t> queries;
  std::vector<size_t> database;
};

// The four evaluation settings. Unseen protocols are absent when the split
// has no unseen classes.
struct ProtocolSets {
  std::optional<Protocol> seen_seen;
  std::optional<Protocol> seen_all;
  std::optional<Protocol> unseen_unseen;
  std::optional<Protocol> unseen_all;

  std::vector<const Protocol*> available() const;
  const std::optional<Protocol>& by_name(const std::string& name) const;
};

inline constexpr const char* kProtocolNames[4] = {
    "seen@seen", "seen@all", "unseen@unseen", "unseen@all"};

/// C Gaussian clusters around unit-norm class directions. Directions come
/// from Gram-Schmidt over seeded Gaussian draws (orthonormal while C <= D_in).
Dataset generate_synthetic(int num_classes, int feature_dim, int n_per_class,
                           double spread, uint64_t seed);

/// Reads either feature-file form; the binary form is detected by its magic.
Dataset load_features(const std::filesystem::path& path);

void write_features_text(const Dataset& ds, const std::filesystem::path& path);
void write_features_binary(const Dataset& ds,
                           const std::filesystem::path& path);
/// Text form for `.txt` paths, binary otherwise.
void write_features(const Dataset& ds, const std::filesystem::path& path);

void validate_dataset(const Dataset& ds);

/// Number of seen classes: round-half-up of ratio * C.
int seen_class_count(int num_classes, double seen_ratio);

SplitDataset split_seen_unseen(const Dataset& ds, const SplitOptions& options);

ProtocolSets build_eval_protocols(const SplitDataset& split);

/// True when every set label of `labels` is in `classes` (a membership mask).
bool labels_within(const std::vector<uint8_t>& labels,
                   const std::vector<uint8_t>& class_mask);

}  // namespace unihash
