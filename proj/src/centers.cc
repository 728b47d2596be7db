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

#include "unihash/centers.h"

#include <bit>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include "unihash/errors.h"

namespace unihash {
namespace {

// Sylvester construction: H[i][j] = (-1)^popcount(i & j).
std::vector<int8_t> hadamard_row(int order, int row) {
  std::vector<int8_t> out(order);
  for (int j = 0; j < order; ++j) {
    out[j] = (std::popcount(static_cast<unsigned>(row & j)) & 1) ? -1 : 1;
  }
  return out;
}

struct WorstPair {
  int distance;
  int first;
  int second;
};

WorstPair worst_pair(const std::vector<std::vector<int8_t>>& centers,
                     int code_length) {
  WorstPair worst{code_length, 0, 0};
  for (size_t a = 0; a < centers.size(); ++a) {
    for (size_t b = a + 1; b < centers.size(); ++b) {
      int d = hamming(centers[a], centers[b]);
      if (d < worst.distance || worst.first == worst.second) {
        worst = {d, static_cast<int>(a), static_cast<int>(b)};
      }
    }
  }
  return worst;
}

}  // namespace

int hamming(const std::vector<int8_t>& a, const std::vector<int8_t>& b) {
  int d = 0;
  for (size_t j = 0; j < a.size(); ++j) d += a[j] != b[j];
  return d;
}

int min_pairwise_hamming(const HashCenterTable& table) {
  if (table.centers.size() < 2) return table.code_length;
  int best = std::numeric_limits<int>::max();
  for (size_t a = 0; a < table.centers.size(); ++a) {
    for (size_t b = a + 1; b < table.centers.size(); ++b) {
      best = std::min(best, hamming(table.centers[a], table.centers[b]));
    }
  }
  return best;
}

HashCenterTable generate_centers(int num_classes, int code_length,
                                 CenterMethod method, int d_floor,
                                 uint64_t seed) {
  if (code_length < 1) throw ArgumentError("code length must be >= 1");
  if (num_classes < 1) throw ArgumentError("need at least one class");

  HashCenterTable table;
  table.code_length = code_length;

  if (method == CenterMethod::kHadamard) {
    if (!std::has_single_bit(static_cast<unsigned>(code_length))) {
      throw CapabilityError("Hadamard centers need q to be a power of two, got " +
                            std::to_string(code_length));
    }
    if (num_classes > 2 * code_length) {
      throw CapabilityError("Hadamard centers support at most 2q = " +
                            std::to_string(2 * code_length) + " classes, got " +
                            std::to_string(num_classes));
    }
    for (int c = 0; c < num_classes; ++c) {
      auto row = hadamard_row(code_length, c % code_length);
      if (c >= code_length) {
        for (auto& v : row) v = static_cast<int8_t>(-v);
      }
      table.centers.push_back(std::move(row));
    }
    table.min_distance = min_pairwise_hamming(table);
    return table;
  }

  if (d_floor < 0 || d_floor > code_length) {
    throw ArgumentError("d_floor must lie in [0, q]");
  }
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution coin(0.5);
  auto draw = [&] {
    std::vector<int8_t> c(code_length);
    for (auto& v : c) v = coin(rng) ? 1 : -1;
    return c;
  };
  for (int c = 0; c < num_classes; ++c) table.centers.push_back(draw());

  int best = -1;
  for (int attempt = 0;; ++attempt) {
    WorstPair worst = worst_pair(table.centers, code_length);
    best = std::max(best, worst.distance);
    if (num_classes < 2 || worst.distance >= d_floor) {
      table.min_distance = min_pairwise_hamming(table);
      return table;
    }
    if (attempt == kRandomCenterAttempts) {
      throw GenerationError(
          "random centers: could not reach d_floor=" + std::to_string(d_floor) +
          " within " + std::to_string(kRandomCenterAttempts) +
          " resamples; best minimum distance achieved " + std::to_string(best));
    }
    table.centers[worst.second] = draw();
  }
}

HashCenterTable generate_default_centers(int num_classes, int code_length,
                                         uint64_t seed) {
  if (code_length >= 1 &&
      std::has_single_bit(static_cast<unsigned>(code_length)) &&
      num_classes <= 2 * code_length) {
    return generate_centers(num_classes, code_length, CenterMethod::kHadamard,
                            0, seed);
  }
  return generate_centers(num_classes, code_length, CenterMethod::kRandom,
                          (code_length + 3) / 4, seed);
}

std::string centers_to_text(const HashCenterTable& table) {
  std::ostringstream out;
  for (const auto& row : table.centers) {
    for (size_t j = 0; j < row.size(); ++j) {
      if (j) out << ' ';
      out << (row[j] > 0 ? "+1" : "-1");
    }
    out << '\n';
  }
  return out.str();
}

void write_centers_text(const HashCenterTable& table,
                        const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << centers_to_text(table);
}

CenterMethod parse_center_method(const std::string& name) {
  if (name == "hadamard") return CenterMethod::kHadamard;
  if (name == "random") return CenterMethod::kRandom;
  throw ArgumentError("unknown center method '" + name + "'");
}

std::string to_string(CenterMethod method) {
  return method == CenterMethod::kHadamard ? "hadamard" : "random";
}

}  // namespace unihash
