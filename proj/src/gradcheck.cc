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


#include "unihash/gradcheck.h"

#include <algorithm>
#include <random>

#include "unihash/centers.h"
#include "unihash/errors.h"
#include "unihash/rng.h"

namespace unihash {

ModelConfig GradCheckSuiteOptions::small_model() {
  ModelConfig mc;
  mc.input_dim = 8;
  mc.feature_dim = 8;
  mc.code_length = 8;
  mc.num_experts = 4;
  mc.top_k = 2;
  return mc;
}

GradCheckSuiteResult run_gradcheck_suite(const GradCheckSuiteOptions& options) {
  if (options.seeds < 1) throw ArgumentError("gradcheck: seeds must be >= 1");
  if (options.batch < 2) throw ArgumentError("gradcheck: batch must be >= 2");
  constexpr int kClasses = 4;
  const int q = options.model.code_length;
  const HashCenterTable centers = generate_default_centers(kClasses, q, 0);

  GradCheckSuiteResult result;
  result.tolerance = std::max(1e-4, options.eps);
  GradCheckOptions fd;
  fd.eps = options.eps;
  fd.corrupt = options.corrupt;

  for (GateMode mode : {GateMode::kSigmoidNorm, GateMode::kSoftmax}) {
    for (DetachSide side : {DetachSide::kPairwise, DetachSide::kCenter}) {
      for (int s = 0; s < options.seeds; ++s) {
        const uint64_t seed = options.base_seed + static_cast<uint64_t>(s);
        ModelConfig mc = options.model;
        mc.gate_mode = mode;
        const ModelParams params = init_params(mc, mix_seed(seed, 1));

        std::mt19937_64 rng(mix_seed(seed, 3));
        std::normal_distribution<double> normal;
        std::uniform_int_distribution<int> pick(0, kClasses - 1);
        std::vector<std::vector<double>> inputs(
            options.batch, std::vector<double>(mc.input_dim));
        for (auto& row : inputs) {
          for (auto& x : row) x = normal(rng);
        }
        LabelMatrix labels(options.batch, std::vector<uint8_t>(kClasses, 0));
        for (auto& row : labels) row[pick(rng)] = 1;

        GradCheckCase c;
        c.gate_mode = mode;
        c.detach = side;
        c.seed = seed;
        c.report = finite_diff_check(
            params, inputs,
            ObjectiveDef::unihash(labels, centers, LossWeights{}, side), fd);
        result.max_rel_error =
            std::max(result.max_rel_error, c.report.max_rel_error);
        result.cases.push_back(std::move(c));
      }
    }
  }
  return result;
}

}  // namespace unihash
