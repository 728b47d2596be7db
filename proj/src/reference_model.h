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
#include <vector>

#include "unihash/network.h"
#include "unihash/objectives.h"

// Extended-precision straight-line evaluation of the model and objectives,
// kept separate from the training path. The finite-difference checker uses
// it so that its probes share no code with the analytic gradients and their
// rounding noise stays far below the check's 1e-8 floor.

namespace unihash::reference {

using Real = long double;
using Vec = std::vector<Real>;
using Mat = std::vector<Vec>;

struct Codes {
  Mat center;
  Mat pairwise;
  std::vector<std::vector<uint8_t>> signatures;
};

Codes forward(const ModelParams& params,
              const std::vector<std::vector<double>>& inputs);

Real center_loss(const Mat& codes, const LabelMatrix& labels,
                 const HashCenterTable& centers);
Real pairwise_loss(const Mat& codes, const LabelMatrix& labels,
                   bool include_diagonal);
Real mutual_loss(const Mat& center, const Mat& pairwise);
Real quadratic(const Mat& center, const Mat& pairwise);

}  // namespace unihash::reference
