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
#include <span>
#include <string>
#include <vector>

#include "unihash/objectives.h"

namespace unihash {

// q-bit binary code, bit j at word j / 64, position j % 64 (LSB first).
// Bits past q are always zero.
struct PackedCode {
  int bits = 0;
  std::vector<uint64_t> words;

  bool operator==(const PackedCode&) const = default;
};

/// Bit j is set iff u_j >= 0 (sign(0) is taken as +1).
PackedCode binarize(std::span<const double> u);
PackedCode pack_bits(std::span<const uint8_t> bits);
std::vector<uint8_t> unpack(const PackedCode& code);

/// Popcount of the XOR; throws ShapeError on a length mismatch.
int hamming_distance(const PackedCode& a, const PackedCode& b);

/// Words in order, each as 16 lowercase hex digits (most significant first).
std::string to_hex(const PackedCode& code);

struct SearchHit {
  size_t position;  // position within the index
  int64_t id;
  int distance;
};

// Immutable after construction; safe to query from several threads.
class PackedCodeIndex {
 public:
  PackedCodeIndex(std::vector<PackedCode> codes, std::vector<int64_t> ids,
                  LabelMatrix labels);

  size_t size() const { return codes_.size(); }
  int bits() const { return bits_; }
  const PackedCode& code(size_t i) const { return codes_[i]; }
  int64_t id(size_t i) const { return ids_[i]; }
  const std::vector<uint8_t>& labels(size_t i) const { return labels_[i]; }

  /// Top-K by ascending distance, ties by ascending position.
  std::vector<SearchHit> search(const PackedCode& query, size_t k) const;

  /// Distance from the query to every entry, in index order.
  std::vector<int> distances(const PackedCode& query) const;

 private:
  int bits_ = 0;
  std::vector<PackedCode> codes_;
  std::vector<int64_t> ids_;
  LabelMatrix labels_;
};

/// Relevance rule for retrieval: the two samples share at least one label.
bool shares_label(std::span<const uint8_t> a, std::span<const uint8_t> b);

/// AP@K = sum_{r<=K} Prec(r) rel(r) / min(R, K); zero when R = 0 or nothing
/// relevant was retrieved. `relevance` holds the ranked flags (only the first
/// K are read).
double average_precision(std::span<const uint8_t> relevance,
                         size_t total_relevant, size_t k);

/// Mean AP@K over the queries. Queries without any relevant database item
/// count as zero.
double mean_average_precision(const std::vector<PackedCode>& queries,
                              const LabelMatrix& query_labels,
                              const PackedCodeIndex& index, size_t k);

struct PrPoint {
  int radius = 0;
  double precision = 0.0;
  double recall = 0.0;
};

/// Hamming-radius sweep r = 0..q, micro-averaged over queries. A radius that
/// retrieves nothing for every query reports precision 1.
std::vector<PrPoint> pr_curve(const std::vector<PackedCode>& queries,
                              const LabelMatrix& query_labels,
                              const PackedCodeIndex& index);

/// Mean squared Euclidean distance between the two branches' codes.
double consistency_tau2(const CodeMatrix& center_codes,
                        const CodeMatrix& pairwise_codes);

enum class Branch { kCenter, kPairwise };

std::string to_string(Branch branch);

struct BranchSelection {
  Branch branch = Branch::kCenter;
  double map_center = 0.0;
  double map_pairwise = 0.0;
};

/// argmax over the two mAPs; a tie goes to the center branch.
BranchSelection choose_branch(double map_center, double map_pairwise);

}  // namespace unihash
