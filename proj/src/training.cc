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

#include "unihash/training.h"

#include <algorithm>
#include <cmath>

#include "reference_model.h"
#include "unihash/errors.h"

namespace unihash {
namespace {

// Accumulates the parameter gradient of y = W x + b and optionally the input
// gradient.
void linear_backward(const Linear& layer, Linear& grad,
                     std::span<const double> input,
                     std::span<const double> d_out,
                     std::vector<double>* d_input) {
  for (int o = 0; o < layer.out; ++o) {
    const double g = d_out[o];
    if (g == 0.0) continue;
    grad.bias[o] += g;
    double* row = grad.weight.data() + size_t(o) * layer.in;
    for (int i = 0; i < layer.in; ++i) row[i] += g * input[i];
  }
  if (!d_input) return;
  for (int o = 0; o < layer.out; ++o) {
    const double g = d_out[o];
    if (g == 0.0) continue;
    const double* row = layer.weight.data() + size_t(o) * layer.in;
    for (int i = 0; i < layer.in; ++i) (*d_input)[i] += g * row[i];
  }
}

std::vector<double> relu_of(const std::vector<double>& pre) {
  std::vector<double> out(pre.size());
  for (size_t i = 0; i < pre.size(); ++i) out[i] = pre[i] > 0.0 ? pre[i] : 0.0;
  return out;
}

void relu_mask(std::vector<double>& grad, const std::vector<double>& pre) {
  for (size_t i = 0; i < grad.size(); ++i) {
    if (!(pre[i] > 0.0)) grad[i] = 0.0;
  }
}

// Two-layer block (fc1, ReLU, fc2) shared by experts and gates.
void block_backward(const Linear& fc1, const Linear& fc2, Linear& g1,
                    Linear& g2, const std::vector<double>& hidden_pre,
                    std::span<const double> input,
                    std::span<const double> d_out, std::vector<double>& d_input) {
  std::vector<double> d_hidden(hidden_pre.size(), 0.0);
  linear_backward(fc2, g2, relu_of(hidden_pre), d_out, &d_hidden);
  relu_mask(d_hidden, hidden_pre);
  linear_backward(fc1, g1, input, d_hidden, &d_input);
}

void branch_backward(const ModelParams& params, const Gate& gate,
                     Gate& gate_grad, const std::vector<Expert>& bank,
                     std::vector<Expert>& bank_grad, const BranchTrace& br,
                     const std::vector<double>& features,
                     const std::vector<double>& d_code,
                     std::vector<double>& d_features) {
  const size_t q = d_code.size();
  std::vector<double> d_merged(d_code);
  if (params.config.tanh_output) {
    for (size_t j = 0; j < q; ++j) d_merged[j] *= 1.0 - br.code[j] * br.code[j];
  }

  const size_t k = br.routing.indices.size();
  std::vector<double> d_weight(k, 0.0);
  for (size_t s = 0; s < k; ++s) {
    const int e = br.routing.indices[s];
    const ExpertTrace& et = br.experts[s];
    std::vector<double> d_out(q);
    for (size_t j = 0; j < q; ++j) {
      d_out[j] = br.routing.weights[s] * d_merged[j];
      d_weight[s] += d_merged[j] * et.output[j];
    }
    block_backward(bank[e].fc1, bank[e].fc2, bank_grad[e].fc1,
                   bank_grad[e].fc2, et.hidden_pre, features, d_out,
                   d_features);
  }

  // Uniform fallback weights are constant, so the gate gets nothing.
  if (br.routing.uniform_fallback) return;

  const auto& act = br.scores.activated;
  double selected_sum = 0.0;
  double weighted = 0.0;
  for (size_t s = 0; s < k; ++s) {
    selected_sum += act[br.routing.indices[s]];
    weighted += d_weight[s] * br.routing.weights[s];
  }
  std::vector<double> d_act(act.size(), 0.0);
  for (size_t s = 0; s < k; ++s) {
    d_act[br.routing.indices[s]] = (d_weight[s] - weighted) / selected_sum;
  }

  std::vector<double> d_raw(act.size(), 0.0);
  if (params.config.gate_mode == GateMode::kSigmoidNorm) {
    for (size_t i = 0; i < act.size(); ++i) {
      d_raw[i] = d_act[i] * act[i] * (1.0 - act[i]);
    }
  } else {
    double dot = 0.0;
    for (size_t i = 0; i < act.size(); ++i) dot += d_act[i] * act[i];
    for (size_t i = 0; i < act.size(); ++i) d_raw[i] = act[i] * (d_act[i] - dot);
  }
  block_backward(gate.fc1, gate.fc2, gate_grad.fc1, gate_grad.fc2,
                 br.gate_hidden_pre, features, d_raw, d_features);
}

void sample_backward(const ModelParams& params, ModelParams& grads,
                     const ForwardTrace& trace,
                     const std::vector<double>& d_center,
                     const std::vector<double>& d_pairwise) {
  std::vector<double> d_features(trace.features.size(), 0.0);
  const bool shared = params.config.shared_experts;
  branch_backward(params, params.gate_c, grads.gate_c, params.experts,
                  grads.experts, trace.center, trace.features, d_center,
                  d_features);
  branch_backward(params, params.gate_p, grads.gate_p,
                  shared ? params.experts : params.experts_p,
                  shared ? grads.experts : grads.experts_p, trace.pairwise,
                  trace.features, d_pairwise, d_features);

  std::vector<double> d_h = std::move(d_features);
  for (size_t l = params.backbone.size(); l-- > 0;) {
    relu_mask(d_h, trace.backbone_pre[l]);
    std::vector<double> d_in(trace.layer_inputs[l].size(), 0.0);
    linear_backward(params.backbone[l], grads.backbone[l],
                    trace.layer_inputs[l], d_h, l > 0 ? &d_in : nullptr);
    d_h = std::move(d_in);
  }
}

void check_finite(const ModelParams& grads) {
  for (const auto& a : param_arrays(grads)) {
    for (double g : a.values) {
      if (!std::isfinite(g)) {
        throw NumericError("non-finite gradient in parameter array " + a.name);
      }
    }
  }
}

reference::Real reference_loss(const ObjectiveDef& def,
                               const reference::Codes& live,
                               const reference::Codes& target) {
  if (def.kind == ObjectiveDef::Kind::kQuadratic) {
    return reference::quadratic(live.center, live.pairwise);
  }
  const reference::Real lc =
      reference::center_loss(live.center, def.labels, def.centers);
  const reference::Real lp = reference::pairwise_loss(
      live.pairwise, def.labels, def.pairwise.include_diagonal);
  const reference::Real lm =
      def.detach == DetachSide::kPairwise
          ? reference::mutual_loss(live.center, target.pairwise)
          : reference::mutual_loss(target.center, live.pairwise);
  return def.weights.center * lc + def.weights.pairwise * lp +
         def.weights.mutual * lm;
}

}  // namespace

Batch make_batch(const Dataset& ds, std::span<const size_t> positions) {
  Batch b;
  b.inputs.reserve(positions.size());
  b.labels.reserve(positions.size());
  for (size_t pos : positions) {
    const Sample& s = ds.samples.at(pos);
    b.inputs.emplace_back(s.features.begin(), s.features.end());
    b.labels.push_back(s.labels);
  }
  return b;
}

Objective unihash_objective(LabelMatrix labels, HashCenterTable centers,
                            LossWeights weights, DetachSide detach,
                            PairwiseOptions pairwise) {
  weights.validate();
  SimilarityMatrix sim = similarity_matrix(labels);
  return [labels = std::move(labels), centers = std::move(centers), weights,
          detach, pairwise, sim = std::move(sim)](
             const BranchCodes& live, const BranchCodes& target,
             BranchCodes* grad) {
    LossBreakdown out;
    CodeMatrix g_center, g_pair, gm_center, gm_pair;
    const bool want = grad != nullptr;
    out.center = center_loss(live.center, labels, centers,
                             want ? &g_center : nullptr);
    out.pairwise = pairwise_loss(live.pairwise, sim, pairwise,
                                 want ? &g_pair : nullptr);
    if (detach == DetachSide::kPairwise) {
      out.mutual = mutual_loss(live.center, target.pairwise, detach,
                               want ? &gm_center : nullptr,
                               want ? &gm_pair : nullptr);
    } else {
      out.mutual = mutual_loss(target.center, live.pairwise, detach,
                               want ? &gm_center : nullptr,
                               want ? &gm_pair : nullptr);
    }
    out.total = total_loss(out.center, out.pairwise, out.mutual, weights);
    if (want) {
      grad->center = std::move(g_center);
      grad->pairwise = std::move(g_pair);
      for (size_t i = 0; i < grad->center.size(); ++i) {
        for (size_t j = 0; j < grad->center[i].size(); ++j) {
          grad->center[i][j] = weights.center * grad->center[i][j] +
                               weights.mutual * gm_center[i][j];
          grad->pairwise[i][j] = weights.pairwise * grad->pairwise[i][j] +
                                 weights.mutual * gm_pair[i][j];
        }
      }
    }
    return out;
  };
}

Objective quadratic_objective() {
  return [](const BranchCodes& live, const BranchCodes&, BranchCodes* grad) {
    LossBreakdown out;
    if (grad) *grad = live;
    for (const CodeMatrix* m : {&live.center, &live.pairwise}) {
      for (const auto& row : *m) {
        for (double x : row) out.total += x * x;
      }
    }
    if (grad) {
      for (CodeMatrix* m : {&grad->center, &grad->pairwise}) {
        for (auto& row : *m) {
          for (auto& x : row) x *= 2.0;
        }
      }
    }
    return out;
  };
}

ObjectiveDef ObjectiveDef::unihash(LabelMatrix labels,
                                     HashCenterTable centers,
                                     LossWeights weights, DetachSide detach,
                                     PairwiseOptions pairwise) {
  ObjectiveDef def;
  def.kind = Kind::kUniHash;
  def.labels = std::move(labels);
  def.centers = std::move(centers);
  def.weights = weights;
  def.detach = detach;
  def.pairwise = pairwise;
  return def;
}

ObjectiveDef ObjectiveDef::quadratic() {
  ObjectiveDef def;
  def.kind = Kind::kQuadratic;
  return def;
}

Objective make_objective(const ObjectiveDef& def) {
  if (def.kind == ObjectiveDef::Kind::kQuadratic) return quadratic_objective();
  return unihash_objective(def.labels, def.centers, def.weights, def.detach,
                           def.pairwise);
}

BranchCodes forward_codes(const ModelParams& params,
                          const std::vector<std::vector<double>>& inputs) {
  BranchCodes codes;
  for (const auto& x : inputs) {
    CodePair cp = smmoh_forward(params, backbone_forward(params, x));
    codes.center.push_back(std::move(cp.u_c));
    codes.pairwise.push_back(std::move(cp.u_p));
  }
  return codes;
}

BackwardResult backward(const ModelParams& params,
                        const std::vector<std::vector<double>>& inputs,
                        const Objective& objective) {
  if (inputs.empty()) throw ArgumentError("backward: empty batch");
  std::vector<ForwardTrace> traces;
  traces.reserve(inputs.size());
  BackwardResult result;
  for (size_t n = 0; n < inputs.size(); ++n) {
    const auto& x = inputs[n];
    if (!std::all_of(x.begin(), x.end(),
                     [](double v) { return std::isfinite(v); })) {
      throw NumericError("non-finite input in batch row " + std::to_string(n));
    }
    traces.push_back(forward_trace(params, x));
    result.codes.center.push_back(traces.back().center.code);
    result.codes.pairwise.push_back(traces.back().pairwise.code);
    result.routing.push_back(
        {traces.back().center.routing, traces.back().pairwise.routing});
  }
  BranchCodes d_codes;
  result.loss = objective(result.codes, result.codes, &d_codes);
  if (!std::isfinite(result.loss.total)) {
    throw NumericError("non-finite loss value");
  }
  result.grads = zeros_like(params);
  for (size_t n = 0; n < traces.size(); ++n) {
    sample_backward(params, result.grads, traces[n], d_codes.center[n],
                    d_codes.pairwise[n]);
  }
  check_finite(result.grads);
  return result;
}

BackwardResult backward(const ModelParams& params, const Batch& batch,
                        const HashCenterTable& centers,
                        const LossWeights& weights, DetachSide detach,
                        const PairwiseOptions& pairwise) {
  return backward(params, batch.inputs,
                  unihash_objective(batch.labels, centers, weights, detach,
                                    pairwise));
}

GradCheckReport finite_diff_check(const ModelParams& params,
                                  const std::vector<std::vector<double>>& inputs,
                                  const ObjectiveDef& objective,
                                  const GradCheckOptions& options) {
  if (!(options.eps > 0.0 && options.eps <= 1e-2)) {
    throw ArgumentError("finite_diff_check: eps must lie in (0, 1e-2]");
  }
  const BackwardResult analytic =
      backward(params, inputs, make_objective(objective));
  const reference::Codes base = reference::forward(params, inputs);

  ModelParams work = params;
  auto work_arrays = param_arrays(work);
  const auto grad_arrays = param_arrays(analytic.grads);
  GradCheckReport report;
  bool corrupted = false;

  for (size_t a = 0; a < work_arrays.size(); ++a) {
    auto& arr = work_arrays[a];
    if (!options.groups.empty() &&
        std::find(options.groups.begin(), options.groups.end(), arr.group) ==
            options.groups.end()) {
      continue;
    }
    double& group_max = report.group_max[arr.group];
    for (size_t i = 0; i < arr.values.size(); ++i) {
      const double theta = arr.values[i];
      const double up = theta + options.eps;
      const double down = theta - options.eps;
      arr.values[i] = up;
      const reference::Codes plus = reference::forward(work, inputs);
      arr.values[i] = down;
      const reference::Codes minus = reference::forward(work, inputs);
      arr.values[i] = theta;
      if (plus.signatures != base.signatures ||
          minus.signatures != base.signatures) {
        ++report.skipped;
        continue;
      }
      const reference::Real diff = reference_loss(objective, plus, base) -
                                   reference_loss(objective, minus, base);
      const double fd = static_cast<double>(diff / (reference::Real(up) -
                                                    reference::Real(down)));
      double g = grad_arrays[a].values[i];
      if (options.corrupt && !corrupted && std::fabs(g) >= 1e-6) {
        g *= 2.0;
        corrupted = true;
      }
      const double denom =
          std::max({std::fabs(g), std::fabs(fd), kGradCheckFloor});
      const double rel = std::fabs(g - fd) / denom;
      ++report.checked;
      group_max = std::max(group_max, rel);
      if (report.worst_param.empty() || rel > report.max_rel_error) {
        report.max_rel_error = rel;
        report.worst_param = arr.name + "[" + std::to_string(i) + "]";
      }
    }
  }
  return report;
}

OptimizerState make_optimizer(const ModelParams& params,
                              const RmsPropOptions& options) {
  if (!(options.lr > 0.0) || !(options.decay >= 0.0 && options.decay < 1.0) ||
      !(options.eps > 0.0)) {
    throw ConfigError("invalid RMSProp hyperparameters");
  }
  return {options, zeros_like(params)};
}

void rmsprop_step(OptimizerState& state, ModelParams& params,
                  const ModelParams& grads) {
  auto theta = param_arrays(params);
  auto g = param_arrays(grads);
  auto v = param_arrays(state.mean_square);
  if (theta.size() != g.size() || theta.size() != v.size()) {
    throw ShapeError("rmsprop_step: parameter layouts differ");
  }
  const auto& o = state.options;
  for (size_t a = 0; a < theta.size(); ++a) {
    if (theta[a].values.size() != g[a].values.size() ||
        theta[a].values.size() != v[a].values.size()) {
      throw ShapeError("rmsprop_step: shape mismatch in " + theta[a].name);
    }
    for (size_t i = 0; i < theta[a].values.size(); ++i) {
      const double gi = g[a].values[i];
      double& vi = v[a].values[i];
      vi = o.decay * vi + (1.0 - o.decay) * gi * gi;
      theta[a].values[i] -= o.lr * gi / (std::sqrt(vi) + o.eps);
    }
  }
}

DetachSchedule parse_detach_schedule(const std::string& name) {
  if (name == "per_epoch") return DetachSchedule::kPerEpoch;
  if (name == "per_iteration") return DetachSchedule::kPerIteration;
  throw ArgumentError("unknown detach schedule '" + name + "'");
}

std::string to_string(DetachSchedule schedule) {
  return schedule == DetachSchedule::kPerEpoch ? "per_epoch" : "per_iteration";
}

DetachSide detach_side_for(int64_t step) {
  return step % 2 == 0 ? DetachSide::kPairwise : DetachSide::kCenter;
}

}  // namespace unihash
