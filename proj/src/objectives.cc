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

#include "unihash/objectives.h"

#include <algorithm>
#include <cmath>

#include "unihash/errors.h"

namespace unihash {
namespace {

double squared_norm(const std::vector<double>& a) {
  double s = 0.0;
  for (double x : a) s += x * x;
  return s;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (size_t j = 0; j < a.size(); ++j) s += a[j] * b[j];
  return s;
}

void check_rows(const CodeMatrix& codes, size_t width, const char* what) {
  for (const auto& row : codes) {
    if (row.size() != width) {
      throw ShapeError(std::string(what) + ": ragged code matrix");
    }
  }
}

void zero_like(const CodeMatrix& codes, CodeMatrix* grad) {
  if (!grad) return;
  grad->assign(codes.size(), {});
  for (size_t i = 0; i < codes.size(); ++i) {
    (*grad)[i].assign(codes[i].size(), 0.0);
  }
}

double clamped_log(double p) { return std::log(std::max(p, kLogFloor)); }

double clamped_log_slope(double p) { return p > kLogFloor ? 1.0 / p : 0.0; }

}  // namespace

void LossWeights::validate() const {
  for (double w : {center, pairwise, mutual}) {
    if (!std::isfinite(w) || w < 0.0) {
      throw ConfigError("loss weights must be finite and nonnegative");
    }
  }
}

std::string to_string(DetachSide side) {
  return side == DetachSide::kPairwise ? "pairwise" : "center";
}

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  const double na = squared_norm(a);
  const double nb = squared_norm(b);
  if (na == 0.0 || nb == 0.0) {
    throw NumericError("cosine of a zero-norm vector");
  }
  return dot(a, b) / std::sqrt(na * nb);
}

double center_loss(const CodeMatrix& codes, const LabelMatrix& labels,
                   const HashCenterTable& centers, CodeMatrix* grad) {
  const size_t n = codes.size();
  const size_t num_classes = centers.centers.size();
  const size_t q = static_cast<size_t>(centers.code_length);
  if (n == 0) throw ArgumentError("center_loss: empty batch");
  if (num_classes < 2) throw ArgumentError("center_loss: need C >= 2");
  if (labels.size() != n) throw ShapeError("center_loss: label rows != code rows");
  check_rows(codes, q, "center_loss");
  zero_like(codes, grad);

  const double scale = std::sqrt(static_cast<double>(q));
  double total = 0.0;
  std::vector<double> cosines(num_classes), probs(num_classes),
      d_prob(num_classes);
  for (size_t i = 0; i < n; ++i) {
    const auto& u = codes[i];
    if (labels[i].size() != num_classes) {
      throw ShapeError("center_loss: label width != number of centers");
    }
    const double norm_sq = squared_norm(u);
    if (norm_sq == 0.0) {
      throw NumericError("center_loss: code row " + std::to_string(i) +
                         " has zero norm");
    }
    const double norm = std::max(std::sqrt(norm_sq), kNormFloor);

    double peak = -1e300;
    for (size_t c = 0; c < num_classes; ++c) {
      double d = 0.0;
      for (size_t j = 0; j < q; ++j) d += u[j] * centers.centers[c][j];
      cosines[c] = d / (norm * scale);  // |h_c| = sqrt(q)
      peak = std::max(peak, scale * cosines[c]);
    }
    double z = 0.0;
    for (size_t c = 0; c < num_classes; ++c) {
      probs[c] = std::exp(scale * cosines[c] - peak);
      z += probs[c];
    }
    for (auto& p : probs) p /= z;

    double row_loss = 0.0;
    for (size_t c = 0; c < num_classes; ++c) {
      const double y = labels[i][c] ? 1.0 : 0.0;
      row_loss -= y * clamped_log(probs[c]) +
                  (1.0 - y) * clamped_log(1.0 - probs[c]);
      d_prob[c] = -y * clamped_log_slope(probs[c]) +
                  (1.0 - y) * clamped_log_slope(1.0 - probs[c]);
    }
    total += row_loss;

    if (grad) {
      double weighted = 0.0;
      for (size_t c = 0; c < num_classes; ++c) weighted += d_prob[c] * probs[c];
      auto& g = (*grad)[i];
      for (size_t c = 0; c < num_classes; ++c) {
        // softmax backward, then logit = scale * cos
        const double d_cos =
            scale * probs[c] * (d_prob[c] - weighted) / static_cast<double>(n);
        if (d_cos == 0.0) continue;
        // d cos / d u = h / (|u| |h|) - cos * u / |u|^2
        for (size_t j = 0; j < q; ++j) {
          g[j] += d_cos * (centers.centers[c][j] / (norm * scale) -
                           cosines[c] * u[j] / (norm * norm));
        }
      }
    }
  }
  return total / static_cast<double>(n);
}

SimilarityMatrix similarity_matrix(const LabelMatrix& labels) {
  SimilarityMatrix sim(labels.size());
  for (size_t i = 0; i < labels.size(); ++i) {
    for (size_t j = i; j < labels.size(); ++j) {
      if (labels[i].size() != labels[j].size()) {
        throw ShapeError("similarity_matrix: ragged label matrix");
      }
      uint8_t shared = 0;
      for (size_t c = 0; c < labels[i].size() && !shared; ++c) {
        shared = labels[i][c] && labels[j][c];
      }
      sim.set(i, j, shared);
      sim.set(j, i, shared);
    }
  }
  return sim;
}

double pairwise_term(double inner, bool similar) {
  return std::log1p(std::exp(-std::fabs(inner))) + std::max(0.0, inner) -
         (similar ? inner : 0.0);
}

double pairwise_loss(const CodeMatrix& codes, const SimilarityMatrix& sim,
                     const PairwiseOptions& options, CodeMatrix* grad) {
  const size_t n = codes.size();
  if (n < 2) throw ArgumentError("pairwise_loss: need at least two samples");
  if (sim.size() != n) throw ShapeError("pairwise_loss: S size != batch size");
  check_rows(codes, codes[0].size(), "pairwise_loss");
  zero_like(codes, grad);

  const double pairs = options.include_diagonal
                           ? static_cast<double>(n * n)
                           : static_cast<double>(n * (n - 1));
  const size_t q = codes[0].size();
  double total = 0.0;
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = 0; j < n; ++j) {
      if (i == j && !options.include_diagonal) continue;
      const double inner = 0.5 * dot(codes[i], codes[j]);
      total += pairwise_term(inner, sim(i, j) != 0);
      if (grad) {
        // d term / d I = sigmoid(I) - S
        const double slope = (1.0 / (1.0 + std::exp(-inner)) -
                              (sim(i, j) ? 1.0 : 0.0)) /
                             pairs;
        for (size_t k = 0; k < q; ++k) {
          (*grad)[i][k] += 0.5 * slope * codes[j][k];
          (*grad)[j][k] += 0.5 * slope * codes[i][k];
        }
      }
    }
  }
  return total / pairs;
}

double mutual_loss(const CodeMatrix& center_codes,
                   const CodeMatrix& pairwise_codes, DetachSide detach,
                   CodeMatrix* grad_center, CodeMatrix* grad_pairwise) {
  const size_t n = center_codes.size();
  if (n == 0) throw ArgumentError("mutual_loss: empty batch");
  if (pairwise_codes.size() != n) {
    throw ShapeError("mutual_loss: branch batches differ in size");
  }
  zero_like(center_codes, grad_center);
  zero_like(pairwise_codes, grad_pairwise);

  double total = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const auto& a = center_codes[i];
    const auto& b = pairwise_codes[i];
    if (a.size() != b.size()) throw ShapeError("mutual_loss: code widths differ");
    const double na = squared_norm(a);
    const double nb = squared_norm(b);
    if (na == 0.0 || nb == 0.0) {
      throw NumericError("mutual_loss: code row " + std::to_string(i) +
                         " has zero norm");
    }
    const double denom = std::sqrt(na * nb);
    const double cos = std::clamp(dot(a, b) / denom, -1.0, 1.0);
    total += 1.0 - cos;

    // Gradient of -cos / n with respect to the live side.
    const bool live_center = detach == DetachSide::kPairwise;
    CodeMatrix* grad = live_center ? grad_center : grad_pairwise;
    if (!grad) continue;
    const auto& live = live_center ? a : b;
    const auto& target = live_center ? b : a;
    const double live_sq = live_center ? na : nb;
    auto& g = (*grad)[i];
    for (size_t j = 0; j < live.size(); ++j) {
      g[j] = -(target[j] / denom - cos * live[j] / live_sq) /
             static_cast<double>(n);
    }
  }
  return total / static_cast<double>(n);
}

double total_loss(double center, double pairwise, double mutual,
                  const LossWeights& weights) {
  return weights.center * center + weights.pairwise * pairwise +
         weights.mutual * mutual;
}

}  // namespace unihash
