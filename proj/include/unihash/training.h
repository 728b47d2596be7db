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
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "unihash/centers.h"
#include "unihash/dataset.h"
#include "unihash/network.h"
#include "unihash/objectives.h"

namespace unihash {

struct Batch {
  std::vector<std::vector<double>> inputs;
  LabelMatrix labels;
};

Batch make_batch(const Dataset& ds, std::span<const size_t> positions);

struct BranchCodes {
  CodeMatrix center;
  CodeMatrix pairwise;
};

struct LossBreakdown {
  double total = 0.0;
  double center = 0.0;
  double pairwise = 0.0;
  double mutual = 0.0;
};

// A scalar objective over the two branches' codes. `live` are the codes the
// gradient flows through; `target` holds the values used for any detached
// term. During a plain backward pass the two are identical; a finite
// difference probe perturbs `live` and keeps `target` at the base point.
// When `grad` is non-null it receives d(total)/d(live).
using Objective = std::function<LossBreakdown(
    const BranchCodes& live, const BranchCodes& target, BranchCodes* grad)>;

/// lambda1 * L_C + lambda2 * L_P + lambda3 * L_M with the mutual term's
/// detached side read from `target`.
Objective unihash_objective(LabelMatrix labels, HashCenterTable centers,
                            LossWeights weights, DetachSide detach,
                            PairwiseOptions pairwise = {});

/// Sum of squared code entries over both branches. Test head for the
/// gradient checker.
Objective quadratic_objective();

// Declarative form of the objectives above. The gradient checker needs it to
// re-evaluate the loss through its own extended-precision path.
struct ObjectiveDef {
  enum class Kind { kUniHash, kQuadratic };

  Kind kind = Kind::kUniHash;
  LabelMatrix labels;
  HashCenterTable centers;
  LossWeights weights;
  DetachSide detach = DetachSide::kPairwise;
  PairwiseOptions pairwise;

  static ObjectiveDef unihash(LabelMatrix labels, HashCenterTable centers,
                               LossWeights weights, DetachSide detach,
                               PairwiseOptions pairwise = {});
  static ObjectiveDef quadratic();
};

Objective make_objective(const ObjectiveDef& def);

struct BackwardResult {
  LossBreakdown loss;
  ModelParams grads;
  BranchCodes codes;
  std::vector<RoutingRecord> routing;
};

BackwardResult backward(const ModelParams& params,
                        const std::vector<std::vector<double>>& inputs,
                        const Objective& objective);

BackwardResult backward(const ModelParams& params, const Batch& batch,
                        const HashCenterTable& centers,
                        const LossWeights& weights, DetachSide detach,
                        const PairwiseOptions& pairwise = {});

BranchCodes forward_codes(const ModelParams& params,
                          const std::vector<std::vector<double>>& inputs);

struct GradCheckOptions {
  double eps = 1e-4;
  // Test hook: doubles the first checked analytic gradient entry with
  // magnitude >= 1e-6 before comparison.
  bool corrupt = false;
  // Restrict the check to these parameter groups; empty means all.
  std::vector<std::string> groups;
};

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::map<std::string, double> group_max;
  std::string worst_param;
  size_t checked = 0;
  size_t skipped = 0;  // coordinates whose ReLU/top-k pattern flips
};

inline constexpr double kGradCheckFloor = 1e-8;

/// Central differences against the analytic gradient, coordinate by
/// coordinate. Relative error is |g - fd| / max(|g|, |fd|, 1e-8). The
/// difference quotient is taken on an extended-precision re-evaluation of the
/// model; coordinates whose ReLU or top-k pattern changes inside [-eps, eps]
/// are skipped and counted.
GradCheckReport finite_diff_check(const ModelParams& params,
                                  const std::vector<std::vector<double>>& inputs,
                                  const ObjectiveDef& objective,
                                  const GradCheckOptions& options = {});

struct RmsPropOptions {
  double lr = 1e-4;
  double decay = 0.99;
  double eps = 1e-8;
  bool operator==(const RmsPropOptions&) const = default;
};

struct OptimizerState {
  RmsPropOptions options;
  ModelParams mean_square;  // uncentered accumulator of g^2
};

OptimizerState make_optimizer(const ModelParams& params,
                              const RmsPropOptions& options);

/// v <- decay * v + (1 - decay) * g^2;  theta <- theta - lr * g / (sqrt(v) + eps)
void rmsprop_step(OptimizerState& state, ModelParams& params,
                  const ModelParams& grads);

enum class DetachSchedule { kPerEpoch, kPerIteration };

DetachSchedule parse_detach_schedule(const std::string& name);
std::string to_string(DetachSchedule schedule);

/// Parity rule for a 1-based step counter: even detaches the pairwise codes.
DetachSide detach_side_for(int64_t step);

struct TrainConfig {
  int epochs = 100;
  int batch_size = 64;
  LossWeights weights;
  RmsPropOptions optimizer;
  DetachSchedule schedule = DetachSchedule::kPerEpoch;
  PairwiseOptions pairwise;
  ModelConfig model;
  uint64_t seed = 0;

  void validate() const;
};

struct EpochLog {
  int epoch = 0;
  double loss = 0.0;
  double loss_center = 0.0;
  double loss_pairwise = 0.0;
  double loss_mutual = 0.0;
  double tau2 = 0.0;
  std::string detach_side;
};

struct TrainResult {
  ModelParams params;
  std::vector<EpochLog> log;
};

/// Seeded minibatch RMSProp over `train_positions` for config.epochs epochs.
TrainResult train(const TrainConfig& config, const Dataset& ds,
                  const std::vector<size_t>& train_positions,
                  const HashCenterTable& centers);

inline constexpr const char* kTrainLogHeader =
    "epoch,loss,loss_center,loss_pairwise,loss_mutual,tau2,detach_side";

std::string train_log_csv(const std::vector<EpochLog>& log);

}  // namespace unihash
