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

#include "unihash/network.h"
#include "unihash/objectives.h"
#include "unihash/training.h"

namespace unihash {

// The small random instance the gradient checker runs on: N=4 samples,
// D_in=d=q=8, m=4 experts, k=2, four classes with Hadamard centers.
struct GradCheckSuiteOptions {
  int seeds = 5;
  uint64_t base_seed = 0;
  double eps = 1e-4;
  bool corrupt = false;
  int batch = 4;
  ModelConfig model = small_model();

  static ModelConfig small_model();
};

struct GradCheckCase {
  GateMode gate_mode = GateMode::kSigmoidNorm;
  DetachSide detach = DetachSide::kPairwise;
  uint64_t seed = 0;
  GradCheckReport report;
};

struct GradCheckSuiteResult {
  std::vector<GradCheckCase> cases;
  double tolerance = 0.0;  // max(1e-4, eps)
  double max_rel_error = 0.0;
  bool passed() const { return max_rel_error < tolerance; }
};

/// Every (gate mode x detach side) combination for each seed.
GradCheckSuiteResult run_gradcheck_suite(const GradCheckSuiteOptions& options);

}  // namespace unihash
