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

#include "reference_model.h"

#include <algorithm>
#include <cmath>

namespace unihash::reference {
namespace {

Vec affine(const Linear& layer, const Vec& x) {
  Vec y(layer.out);
  for (int o = 0; o < layer.out; ++o) {
    Real acc = layer.bias[o];
    for (int i = 0; i < layer.in; ++i) {
      acc += static_cast<Real>(layer.weight[size_t(o) * layer.in + i]) * x[i];
    }
    y[o] = acc;
  }
  return y;
}

Vec relu(const Vec& pre, std::vector<uint8_t>& signature) {
  Vec out(pre.size());
  for (size_t i = 0; i < pre.size(); ++i) {
    signature.push_back(pre[i] > 0);
    out[i] = pre[i] > 0 ? pre[i] : 0;
  }
  return out;
}

Vec branch(const ModelParams& p, const Gate& gate,
           const std::vector<Expert>& bank, const Vec& v,
           std::vector<uint8_t>& signature) {
  const Vec raw = affine(gate.fc2, relu(affine(gate.fc1, v), signature));
  const size_t m = raw.size();
  Vec act(m);
  if (p.config.gate_mode == GateMode::kSigmoidNorm) {
    for (size_t i = 0; i < m; ++i) act[i] = 1 / (1 + std::exp(-raw[i]));
  } else {
    Real peak = *std::max_element(raw.begin(), raw.end());
    Real z = 0;
    for (size_t i = 0; i < m; ++i) z += act[i] = std::exp(raw[i] - peak);
    for (auto& a : act) a /= z;
  }

  // Selection by repeated arg-max; the first maximum wins ties.
  std::vector<int> chosen;
  std::vector<uint8_t> taken(m, 0);
  for (int s = 0; s < p.config.top_k; ++s) {
    int best = -1;
    for (size_t i = 0; i < m; ++i) {
      if (!taken[i] && (best < 0 || act[i] > act[best])) best = int(i);
    }
    taken[best] = 1;
    chosen.push_back(best);
    signature.push_back(static_cast<uint8_t>(best));
  }
  Real total = 0;
  for (int i : chosen) total += act[i];

  Vec merged(p.config.code_length, 0);
  for (int i : chosen) {
    const Real w = total < kRoutingSumFloor ? Real(1) / chosen.size()
                                            : act[i] / total;
    const Vec out =
        affine(bank[i].fc2, relu(affine(bank[i].fc1, v), signature));
    for (size_t j = 0; j < merged.size(); ++j) merged[j] += w * out[j];
  }
  if (p.config.tanh_output) {
    for (auto& x : merged) x = std::tanh(x);
  }
  return merged;
}

Real dot(const Vec& a, const Vec& b) {
  Real s = 0;
  for (size_t j = 0; j < a.size(); ++j) s += a[j] * b[j];
  return s;
}

Real cosine(const Vec& a, const Vec& b) {
  return dot(a, b) / std::sqrt(dot(a, a) * dot(b, b));
}

}  // namespace

Codes forward(const ModelParams& params,
              const std::vector<std::vector<double>>& inputs) {
  Codes out;
  for (const auto& x : inputs) {
    std::vector<uint8_t> sig;
    Vec h(x.begin(), x.end());
    for (const auto& layer : params.backbone) h = relu(affine(layer, h), sig);
    const bool shared = params.config.shared_experts;
    out.center.push_back(branch(params, params.gate_c, params.experts, h, sig));
    out.pairwise.push_back(branch(params, params.gate_p,
                                  shared ? params.experts : params.experts_p,
                                  h, sig));
    out.signatures.push_back(std::move(sig));
  }
  return out;
}

Real center_loss(const Mat& codes, const LabelMatrix& labels,
                 const HashCenterTable& centers) {
  const Real scale = std::sqrt(Real(centers.code_length));
  Real total = 0;
  for (size_t i = 0; i < codes.size(); ++i) {
    Vec logits;
    for (const auto& h : centers.centers) {
      Vec hv(h.begin(), h.end());
      logits.push_back(scale * cosine(codes[i], hv));
    }
    Real z = 0;
    for (Real l : logits) z += std::exp(l);
    for (size_t c = 0; c < logits.size(); ++c) {
      const Real prob = std::exp(logits[c]) / z;
      const Real floor = kLogFloor;
      total -= labels[i][c] ? std::log(std::max(prob, floor))
                            : std::log(std::max(1 - prob, floor));
    }
  }
  return total / codes.size();
}

Real pairwise_loss(const Mat& codes, const LabelMatrix& labels,
                   bool include_diagonal) {
  const size_t n = codes.size();
  Real total = 0;
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = 0; j < n; ++j) {
      if (i == j && !include_diagonal) continue;
      bool similar = false;
      for (size_t c = 0; c < labels[i].size(); ++c) {
        similar = similar || (labels[i][c] && labels[j][c]);
      }
      const Real inner = dot(codes[i], codes[j]) / 2;
      total += std::log1p(std::exp(-std::fabs(inner))) +
               std::max(Real(0), inner) - (similar ? inner : 0);
    }
  }
  return total / (include_diagonal ? n * n : n * (n - 1));
}

Real mutual_loss(const Mat& center, const Mat& pairwise) {
  Real total = 0;
  for (size_t i = 0; i < center.size(); ++i) {
    total += 1 - cosine(center[i], pairwise[i]);
  }
  return total / center.size();
}

Real quadratic(const Mat& center, const Mat& pairwise) {
  Real total = 0;
  for (const Mat* m : {&center, &pairwise}) {
    for (const auto& row : *m) total += dot(row, row);
  }
  return total;
}

}  // namespace unihash::reference
