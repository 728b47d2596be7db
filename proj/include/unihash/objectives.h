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
#include <string>
#include <vector>

#include "unihash/centers.h"

namespace unihash {

// Row-major batches: one row per sample.
using CodeMatrix = std::vector<std::vector<double>>;
using LabelMatrix = std::vector<std::vector<uint8_t>>;

struct LossWeights {
  double center = 4.0;    // lambda1
  double pairwise = 1.0;  // lambda2
  double mutual = 1.0;    // lambda3

  void validate() const;
  bool operator==(const LossWeights&) const = default;
};

/// Which branch is held constant as the mutual-loss target.
enum class DetachSide { kPairwise, kCenter };

std::string to_string(DetachSide side);

class SimilarityMatrix {
 public:
  explicit SimilarityMatrix(size_t n) : n_(n), values_(n * n, 0) {}

  size_t size() const { return n_; }
  uint8_t operator()(size_t i, size_t j) const { return values_[i * n_ + j]; }
  void set(size_t i, size_t j, uint8_t v) { values_[i * n_ + j] = v; }

 private:
  size_t n_;
  std::vector<uint8_t> values_;
};

inline constexpr double kLogFloor = 1e-12;
inline constexpr double kNormFloor = 1e-12;

/// Softmax over sqrt(q)-scaled cosines to every center, then a per-class
/// binary cross-entropy against the multi-hot labels, averaged over rows.
/// Writes d(loss)/d(codes) into `grad` when given.
double center_loss(const CodeMatrix& codes, const LabelMatrix& labels,
                   const HashCenterTable& centers, CodeMatrix* grad = nullptr);

SimilarityMatrix similarity_matrix(const LabelMatrix& labels);

struct PairwiseOptions {
  bool include_diagonal = true;
};

/// One ordered-pair term of the pairwise likelihood loss for
/// I = 0.5 * u_i . u_j.
double pairwise_term(double inner, bool similar);

/// Mean of pairwise_term over ordered pairs (N^2 of them, or N(N-1) without
/// the diagonal).
double pairwise_loss(const CodeMatrix& codes, const SimilarityMatrix& sim,
                     const PairwiseOptions& options = {},
                     CodeMatrix* grad = nullptr);

/// Mean of 1 - cos(u_c, u_p). Only the non-detached side receives gradient;
/// the detached side's gradient (if requested) is left at zero.
double mutual_loss(const CodeMatrix& center_codes,
                   const CodeMatrix& pairwise_codes, DetachSide detach,
                   CodeMatrix* grad_center = nullptr,
                   CodeMatrix* grad_pairwise = nullptr);

double total_loss(double center, double pairwise, double mutual,
                  const LossWeights& weights);

/// Cosine computed as dot / sqrt(|a|^2 |b|^2) so that cos(a, a) == 1
/// exactly; throws NumericError for a zero vector.
double cosine(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace unihash
