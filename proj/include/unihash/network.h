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

namespace unihash {

enum class GateMode { kSigmoidNorm, kSoftmax };

GateMode parse_gate_mode(const std::string& name);
std::string to_string(GateMode mode);

struct ModelConfig {
  int input_dim = 32;
  int feature_dim = 64;
  int code_length = 16;
  int num_experts = 8;
  int top_k = 2;
  // Number of affine+ReLU backbone layers; 0 makes the backbone the identity
  // (requires input_dim == feature_dim).
  int backbone_depth = 1;
  GateMode gate_mode = GateMode::kSigmoidNorm;
  bool shared_experts = true;
  bool tanh_output = true;

  void validate() const;
  bool operator==(const ModelConfig&) const = default;
};

// Dense affine map y = W x + b, W stored row-major (out x in).
struct Linear {
  int in = 0;
  int out = 0;
  std::vector<double> weight;
  std::vector<double> bias;

  Linear() = default;
  Linear(int in_dim, int out_dim)
      : in(in_dim), out(out_dim), weight(size_t(in_dim) * out_dim, 0.0),
        bias(out_dim, 0.0) {}

  std::vector<double> apply(std::span<const double> x) const;
  bool operator==(const Linear&) const = default;
};

// Linear(d->q), ReLU, Linear(q->q).
struct Expert {
  Linear fc1;
  Linear fc2;
  bool operator==(const Expert&) const = default;
};

// Linear(d->d), ReLU, Linear(d->m).
struct Gate {
  Linear fc1;
  Linear fc2;
  bool operator==(const Gate&) const = default;
};

struct ModelParams {
  ModelConfig config;
  std::vector<Linear> backbone;
  std::vector<Expert> experts;    // shared bank, or the center bank
  std::vector<Expert> experts_p;  // pairwise bank; empty when shared
  Gate gate_c;
  Gate gate_p;

  const std::vector<Expert>& bank(bool pairwise) const {
    return pairwise && !config.shared_experts ? experts_p : experts;
  }
  bool operator==(const ModelParams&) const = default;
};

/// Seeded uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) initialisation of every
/// weight and bias.
ModelParams init_params(const ModelConfig& config, uint64_t seed);

/// Same structure as `params` with every array zeroed. Gradients use this
/// layout.
ModelParams zeros_like(const ModelParams& params);

// Flat view of one parameter array, used by the optimiser, gradient checks
// and checkpoints.
struct ParamArray {
  std::string name;
  std::string group;  // backbone, experts, gate_c, gate_p
  std::vector<size_t> shape;
  std::span<double> values;
};

struct ConstParamArray {
  std::string name;
  std::string group;
  std::vector<size_t> shape;
  std::span<const double> values;
};

std::vector<ParamArray> param_arrays(ModelParams& params);
std::vector<ConstParamArray> param_arrays(const ModelParams& params);
size_t param_count(const ModelParams& params);

struct GateScores {
  std::vector<double> raw;
  std::vector<double> activated;
};

struct Routing {
  std::vector<int> indices;
  std::vector<double> weights;
  bool uniform_fallback = false;
};

struct RoutingRecord {
  Routing center;
  Routing pairwise;
};

struct CodePair {
  std::vector<double> u_c;
  std::vector<double> u_p;
  RoutingRecord routing;
};

inline constexpr double kRoutingSumFloor = 1e-12;

std::vector<double> backbone_forward(const ModelParams& params,
                                     std::span<const double> x);

GateScores gate_scores(const Gate& gate, GateMode mode,
                       std::span<const double> v);

/// Top-k by activation, ties toward the smaller index. Weights are the
/// selected scores over their sum; a sum below 1e-12 falls back to 1/k.
Routing select_topk(std::span<const double> activated, int k);

std::vector<double> expert_forward(const Expert& expert,
                                   std::span<const double> v);

CodePair smmoh_forward(const ModelParams& params, std::span<const double> v);

CodePair encode(const ModelParams& params, std::span<const float> x);

// Intermediate values kept for the backward pass.
struct ExpertTrace {
  std::vector<double> hidden_pre;
  std::vector<double> output;
};

struct BranchTrace {
  std::vector<double> gate_hidden_pre;
  GateScores scores;
  Routing routing;
  std::vector<ExpertTrace> experts;  // parallel to routing.indices
  std::vector<double> merged;
  std::vector<double> code;
};

struct ForwardTrace {
  std::vector<std::vector<double>> layer_inputs;  // input of each backbone layer
  std::vector<std::vector<double>> backbone_pre;
  std::vector<double> features;
  BranchTrace center;
  BranchTrace pairwise;
};

ForwardTrace forward_trace(const ModelParams& params,
                           std::span<const double> x);

/// Every piecewise choice made by a forward pass: ReLU masks and top-k
/// selections. Two passes with equal signatures lie on the same smooth piece.
std::vector<uint8_t> activation_signature(const ForwardTrace& trace);

}  // namespace unihash
