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

#include "unihash/network.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "unihash/errors.h"

namespace unihash {
namespace {

void check_dim(std::span<const double> x, int expected, const char* what) {
  if (x.size() != static_cast<size_t>(expected)) {
    throw ShapeError(std::string(what) + ": expected dimension " +
                     std::to_string(expected) + ", got " +
                     std::to_string(x.size()));
  }
}

std::vector<double> relu(std::vector<double> v) {
  for (auto& x : v) x = x > 0.0 ? x : 0.0;
  return v;
}

void init_linear(Linear& layer, std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(layer.in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (auto& w : layer.weight) w = dist(rng);
  for (auto& b : layer.bias) b = dist(rng);
}

Expert make_expert(int d, int q) { return {Linear(d, q), Linear(q, q)}; }
Gate make_gate(int d, int m) { return {Linear(d, d), Linear(d, m)}; }

void add_linear(std::vector<ParamArray>& out, Linear& l,
                const std::string& prefix, const std::string& group) {
  out.push_back({prefix + ".weight", group,
                 {size_t(l.out), size_t(l.in)}, std::span<double>(l.weight)});
  out.push_back({prefix + ".bias", group, {size_t(l.out)},
                 std::span<double>(l.bias)});
}

std::vector<double> activate(const std::vector<double>& raw, GateMode mode) {
  std::vector<double> out(raw.size());
  if (mode == GateMode::kSigmoidNorm) {
    for (size_t i = 0; i < raw.size(); ++i) {
      out[i] = 1.0 / (1.0 + std::exp(-raw[i]));
    }
    return out;
  }
  const double peak = *std::max_element(raw.begin(), raw.end());
  double total = 0.0;
  for (size_t i = 0; i < raw.size(); ++i) {
    out[i] = std::exp(raw[i] - peak);
    total += out[i];
  }
  for (auto& a : out) a /= total;
  return out;
}

BranchTrace run_branch(const ModelParams& params, const Gate& gate,
                       const std::vector<Expert>& bank,
                       std::span<const double> v) {
  BranchTrace br;
  br.gate_hidden_pre = gate.fc1.apply(v);
  auto hidden = relu(br.gate_hidden_pre);
  br.scores.raw = gate.fc2.apply(hidden);
  br.scores.activated = activate(br.scores.raw, params.config.gate_mode);
  br.routing = select_topk(br.scores.activated, params.config.top_k);

  const size_t q = static_cast<size_t>(params.config.code_length);
  br.merged.assign(q, 0.0);
  for (size_t s = 0; s < br.routing.indices.size(); ++s) {
    const Expert& e = bank[br.routing.indices[s]];
    ExpertTrace et;
    et.hidden_pre = e.fc1.apply(v);
    et.output = e.fc2.apply(relu(et.hidden_pre));
    const double w = br.routing.weights[s];
    for (size_t j = 0; j < q; ++j) br.merged[j] += w * et.output[j];
    br.experts.push_back(std::move(et));
  }
  br.code = br.merged;
  if (params.config.tanh_output) {
    for (auto& x : br.code) x = std::tanh(x);
  }
  return br;
}

}  // namespace

GateMode parse_gate_mode(const std::string& name) {
  if (name == "sigmoid_norm" || name == "sigmoid") return GateMode::kSigmoidNorm;
  if (name == "softmax") return GateMode::kSoftmax;
  throw ArgumentError("unknown gate mode '" + name + "'");
}

std::string to_string(GateMode mode) {
  return mode == GateMode::kSoftmax ? "softmax" : "sigmoid_norm";
}

void ModelConfig::validate() const {
  if (input_dim < 1 || feature_dim < 1 || code_length < 1) {
    throw ConfigError("model dimensions must be positive");
  }
  if (num_experts < 1 || top_k < 1 || top_k > num_experts) {
    throw ConfigError("need 1 <= k <= m, got k=" + std::to_string(top_k) +
                      " m=" + std::to_string(num_experts));
  }
  if (backbone_depth < 0) throw ConfigError("backbone depth must be >= 0");
  if (backbone_depth == 0 && input_dim != feature_dim) {
    throw ConfigError("identity backbone requires input_dim == feature_dim");
  }
}

std::vector<double> Linear::apply(std::span<const double> x) const {
  check_dim(x, in, "linear layer input");
  std::vector<double> y(bias);
  for (int o = 0; o < out; ++o) {
    const double* row = weight.data() + size_t(o) * in;
    double acc = 0.0;
    for (int i = 0; i < in; ++i) acc += row[i] * x[i];
    y[o] += acc;
  }
  return y;
}

ModelParams init_params(const ModelConfig& config, uint64_t seed) {
  config.validate();
  ModelParams p;
  p.config = config;
  const int d = config.feature_dim;
  const int q = config.code_length;
  const int m = config.num_experts;
  for (int l = 0; l < config.backbone_depth; ++l) {
    p.backbone.emplace_back(l == 0 ? config.input_dim : d, d);
  }
  for (int i = 0; i < m; ++i) p.experts.push_back(make_expert(d, q));
  if (!config.shared_experts) {
    for (int i = 0; i < m; ++i) p.experts_p.push_back(make_expert(d, q));
  }
  p.gate_c = make_gate(d, m);
  p.gate_p = make_gate(d, m);

  std::mt19937_64 rng(seed);
  for (auto& layer : p.backbone) init_linear(layer, rng);
  for (auto* bank : {&p.experts, &p.experts_p}) {
    for (auto& e : *bank) {
      init_linear(e.fc1, rng);
      init_linear(e.fc2, rng);
    }
  }
  for (auto* g : {&p.gate_c, &p.gate_p}) {
    init_linear(g->fc1, rng);
    init_linear(g->fc2, rng);
  }
  return p;
}

ModelParams zeros_like(const ModelParams& params) {
  ModelParams z = params;
  for (auto& a : param_arrays(z)) std::fill(a.values.begin(), a.values.end(), 0.0);
  return z;
}

std::vector<ParamArray> param_arrays(ModelParams& p) {
  std::vector<ParamArray> out;
  for (size_t l = 0; l < p.backbone.size(); ++l) {
    add_linear(out, p.backbone[l], "backbone." + std::to_string(l), "backbone");
  }
  const std::string bank_c = p.config.shared_experts ? "experts." : "experts_c.";
  for (size_t i = 0; i < p.experts.size(); ++i) {
    add_linear(out, p.experts[i].fc1, bank_c + std::to_string(i) + ".fc1",
               "experts");
    add_linear(out, p.experts[i].fc2, bank_c + std::to_string(i) + ".fc2",
               "experts");
  }
  for (size_t i = 0; i < p.experts_p.size(); ++i) {
    add_linear(out, p.experts_p[i].fc1,
               "experts_p." + std::to_string(i) + ".fc1", "experts");
    add_linear(out, p.experts_p[i].fc2,
               "experts_p." + std::to_string(i) + ".fc2", "experts");
  }
  add_linear(out, p.gate_c.fc1, "gate_c.fc1", "gate_c");
  add_linear(out, p.gate_c.fc2, "gate_c.fc2", "gate_c");
  add_linear(out, p.gate_p.fc1, "gate_p.fc1", "gate_p");
  add_linear(out, p.gate_p.fc2, "gate_p.fc2", "gate_p");
  return out;
}

std::vector<ConstParamArray> param_arrays(const ModelParams& params) {
  auto mutable_view = param_arrays(const_cast<ModelParams&>(params));
  std::vector<ConstParamArray> out;
  out.reserve(mutable_view.size());
  for (auto& a : mutable_view) {
    out.push_back({std::move(a.name), std::move(a.group), std::move(a.shape),
                   std::span<const double>(a.values)});
  }
  return out;
}

size_t param_count(const ModelParams& params) {
  size_t n = 0;
  for (const auto& a : param_arrays(params)) n += a.values.size();
  return n;
}

std::vector<double> backbone_forward(const ModelParams& params,
                                     std::span<const double> x) {
  check_dim(x, params.config.input_dim, "backbone input");
  std::vector<double> h(x.begin(), x.end());
  for (const auto& layer : params.backbone) h = relu(layer.apply(h));
  return h;
}

GateScores gate_scores(const Gate& gate, GateMode mode,
                       std::span<const double> v) {
  GateScores s;
  s.raw = gate.fc2.apply(relu(gate.fc1.apply(v)));
  s.activated = activate(s.raw, mode);
  return s;
}

Routing select_topk(std::span<const double> activated, int k) {
  if (k < 1 || static_cast<size_t>(k) > activated.size()) {
    throw ArgumentError("select_topk: need 1 <= k <= m, got k=" +
                        std::to_string(k) + " m=" +
                        std::to_string(activated.size()));
  }
  std::vector<int> order(activated.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return activated[a] > activated[b];
  });
  Routing r;
  r.indices.assign(order.begin(), order.begin() + k);
  double total = 0.0;
  for (int i : r.indices) total += activated[i];
  r.weights.resize(k);
  if (total < kRoutingSumFloor) {
    r.uniform_fallback = true;
    std::fill(r.weights.begin(), r.weights.end(), 1.0 / k);
  } else {
    for (int s = 0; s < k; ++s) r.weights[s] = activated[r.indices[s]] / total;
  }
  return r;
}

std::vector<double> expert_forward(const Expert& expert,
                                   std::span<const double> v) {
  return expert.fc2.apply(relu(expert.fc1.apply(v)));
}

ForwardTrace forward_trace(const ModelParams& params,
                           std::span<const double> x) {
  check_dim(x, params.config.input_dim, "backbone input");
  ForwardTrace t;
  std::vector<double> h(x.begin(), x.end());
  for (const auto& layer : params.backbone) {
    t.layer_inputs.push_back(h);
    t.backbone_pre.push_back(layer.apply(h));
    h = relu(t.backbone_pre.back());
  }
  t.features = std::move(h);
  t.center = run_branch(params, params.gate_c, params.bank(false), t.features);
  t.pairwise = run_branch(params, params.gate_p, params.bank(true), t.features);
  return t;
}

CodePair smmoh_forward(const ModelParams& params, std::span<const double> v) {
  check_dim(v, params.config.feature_dim, "SM-MoH input");
  BranchTrace c = run_branch(params, params.gate_c, params.bank(false), v);
  BranchTrace p = run_branch(params, params.gate_p, params.bank(true), v);
  return {std::move(c.code), std::move(p.code),
          {std::move(c.routing), std::move(p.routing)}};
}

CodePair encode(const ModelParams& params, std::span<const float> x) {
  std::vector<double> xd(x.begin(), x.end());
  return smmoh_forward(params, backbone_forward(params, xd));
}

std::vector<uint8_t> activation_signature(const ForwardTrace& trace) {
  std::vector<uint8_t> sig;
  auto mask = [&](const std::vector<double>& pre) {
    for (double a : pre) sig.push_back(a > 0.0);
  };
  for (const auto& pre : trace.backbone_pre) mask(pre);
  for (const BranchTrace* br : {&trace.center, &trace.pairwise}) {
    mask(br->gate_hidden_pre);
    for (int i : br->routing.indices) sig.push_back(static_cast<uint8_t>(i));
    for (const auto& e : br->experts) mask(e.hidden_pre);
  }
  return sig;
}

}  // namespace unihash
