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

#include "unihash/retrieval.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>

#include "unihash/errors.h"

namespace unihash {

PackedCode binarize(std::span<const double> u) {
  PackedCode code;
  code.bits = static_cast<int>(u.size());
  code.words.assign((u.size() + 63) / 64, 0);
  for (size_t j = 0; j < u.size(); ++j) {
    if (!std::isfinite(u[j])) throw NumericError("binarize: non-finite code");
    if (u[j] >= 0.0) code.words[j / 64] |= uint64_t{1} << (j % 64);
  }
  return code;
}

PackedCode pack_bits(std::span<const uint8_t> bits) {
  PackedCode code;
  code.bits = static_cast<int>(bits.size());
  code.words.assign((bits.size() + 63) / 64, 0);
  for (size_t j = 0; j < bits.size(); ++j) {
    if (bits[j]) code.words[j / 64] |= uint64_t{1} << (j % 64);
  }
  return code;
}

std::vector<uint8_t> unpack(const PackedCode& code) {
  std::vector<uint8_t> bits(code.bits);
  for (size_t j = 0; j < bits.size(); ++j) {
    bits[j] = (code.words[j / 64] >> (j % 64)) & 1;
  }
  return bits;
}

int hamming_distance(const PackedCode& a, const PackedCode& b) {
  if (a.bits != b.bits || a.words.size() != b.words.size()) {
    throw ShapeError("hamming_distance: code lengths differ (" +
                     std::to_string(a.bits) + " vs " + std::to_string(b.bits) +
                     ")");
  }
  int d = 0;
  for (size_t w = 0; w < a.words.size(); ++w) {
    d += std::popcount(a.words[w] ^ b.words[w]);
  }
  return d;
}

std::string to_hex(const PackedCode& code) {
  std::string out;
  char buf[17];
  for (uint64_t w : code.words) {
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(w));
    out += buf;
  }
  return out;
}

PackedCodeIndex::PackedCodeIndex(std::vector<PackedCode> codes,
                                 std::vector<int64_t> ids, LabelMatrix labels)
    : codes_(std::move(codes)), ids_(std::move(ids)), labels_(std::move(labels)) {
  if (codes_.size() != ids_.size() || codes_.size() != labels_.size()) {
    throw ShapeError("PackedCodeIndex: parallel arrays differ in length");
  }
  if (!codes_.empty()) bits_ = codes_.front().bits;
  for (const auto& c : codes_) {
    if (c.bits != bits_) throw ShapeError("PackedCodeIndex: mixed code lengths");
  }
}

std::vector<int> PackedCodeIndex::distances(const PackedCode& query) const {
  std::vector<int> out(codes_.size());
  for (size_t i = 0; i < codes_.size(); ++i) {
    out[i] = hamming_distance(query, codes_[i]);
  }
  return out;
}

std::vector<SearchHit> PackedCodeIndex::search(const PackedCode& query,
                                               size_t k) const {
  if (k < 1) throw ArgumentError("search: K must be >= 1");
  if (codes_.empty()) throw ProtocolError("search: empty index");
  const auto dist = distances(query);
  // Distances live in [0, q]: bucket by distance, buckets keep position order.
  std::vector<std::vector<size_t>> buckets(static_cast<size_t>(bits_) + 1);
  for (size_t i = 0; i < dist.size(); ++i) buckets[dist[i]].push_back(i);
  std::vector<SearchHit> hits;
  const size_t want = std::min(k, codes_.size());
  hits.reserve(want);
  for (int d = 0; d <= bits_ && hits.size() < want; ++d) {
    for (size_t pos : buckets[d]) {
      if (hits.size() == want) break;
      hits.push_back({pos, ids_[pos], d});
    }
  }
  return hits;
}

bool shares_label(std::span<const uint8_t> a, std::span<const uint8_t> b) {
  const size_t n = std::min(a.size(), b.size());
  for (size_t c = 0; c < n; ++c) {
    if (a[c] && b[c]) return true;
  }
  return false;
}

double average_precision(std::span<const uint8_t> relevance,
                         size_t total_relevant, size_t k) {
  if (k < 1) throw ArgumentError("average_precision: K must be >= 1");
  if (total_relevant == 0) return 0.0;
  const size_t depth = std::min(k, relevance.size());
  double sum = 0.0;
  size_t hits = 0;
  for (size_t r = 0; r < depth; ++r) {
    if (relevance[r]) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(r + 1);
    }
  }
  if (hits == 0) return 0.0;
  return sum / static_cast<double>(std::min(total_relevant, k));
}

double mean_average_precision(const std::vector<PackedCode>& queries,
                              const LabelMatrix& query_labels,
                              const PackedCodeIndex& index, size_t k) {
  if (queries.empty()) throw ProtocolError("mAP: empty query set");
  if (query_labels.size() != queries.size()) {
    throw ShapeError("mAP: query labels and codes differ in length");
  }
  double total = 0.0;
  for (size_t qi = 0; qi < queries.size(); ++qi) {
    size_t relevant = 0;
    for (size_t i = 0; i < index.size(); ++i) {
      relevant += shares_label(query_labels[qi], index.labels(i));
    }
    const auto hits = index.search(queries[qi], k);
    std::vector<uint8_t> flags(hits.size());
    for (size_t r = 0; r < hits.size(); ++r) {
      flags[r] = shares_label(query_labels[qi], index.labels(hits[r].position));
    }
    total += average_precision(flags, relevant, k);
  }
  return total / static_cast<double>(queries.size());
}

std::vector<PrPoint> pr_curve(const std::vector<PackedCode>& queries,
                              const LabelMatrix& query_labels,
                              const PackedCodeIndex& index) {
  if (queries.empty()) throw ProtocolError("pr_curve: empty query set");
  if (index.size() == 0) throw ProtocolError("pr_curve: empty index");
  const size_t q = static_cast<size_t>(index.bits());
  std::vector<double> retrieved(q + 1, 0.0), true_pos(q + 1, 0.0);
  double total_relevant = 0.0;
  for (size_t qi = 0; qi < queries.size(); ++qi) {
    const auto dist = index.distances(queries[qi]);
    for (size_t i = 0; i < dist.size(); ++i) {
      const bool rel = shares_label(query_labels[qi], index.labels(i));
      retrieved[dist[i]] += 1.0;
      if (rel) {
        true_pos[dist[i]] += 1.0;
        total_relevant += 1.0;
      }
    }
  }
  std::vector<PrPoint> curve;
  double cum_retrieved = 0.0, cum_tp = 0.0;
  for (size_t r = 0; r <= q; ++r) {
    cum_retrieved += retrieved[r];
    cum_tp += true_pos[r];
    PrPoint p;
    p.radius = static_cast<int>(r);
    p.precision = cum_retrieved > 0.0 ? cum_tp / cum_retrieved : 1.0;
    p.recall = total_relevant > 0.0 ? cum_tp / total_relevant : 0.0;
    curve.push_back(p);
  }
  return curve;
}

double consistency_tau2(const CodeMatrix& center_codes,
                        const CodeMatrix& pairwise_codes) {
  if (center_codes.size() != pairwise_codes.size()) {
    throw ShapeError("consistency_tau2: batch sizes differ");
  }
  if (center_codes.empty()) return 0.0;
  double total = 0.0;
  for (size_t n = 0; n < center_codes.size(); ++n) {
    if (center_codes[n].size() != pairwise_codes[n].size()) {
      throw ShapeError("consistency_tau2: code widths differ");
    }
    for (size_t j = 0; j < center_codes[n].size(); ++j) {
      const double d = center_codes[n][j] - pairwise_codes[n][j];
      total += d * d;
    }
  }
  return total / static_cast<double>(center_codes.size());
}

std::string to_string(Branch branch) {
  return branch == Branch::kCenter ? "center" : "pairwise";
}

BranchSelection choose_branch(double map_center, double map_pairwise) {
  return {map_pairwise > map_center ? Branch::kPairwise : Branch::kCenter,
          map_center, map_pairwise};
}

}  // namespace unihash
