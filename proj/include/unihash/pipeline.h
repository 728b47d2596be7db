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

#include <vector>

#include "unihash/checkpoint.h"
#include "unihash/config.h"
#include "unihash/dataset.h"
#include "unihash/evaluation.h"
#include "unihash/training.h"

// End-to-end wiring shared by the CLI commands and the acceptance suite:
// data -> split -> centers -> train -> checkpoint -> evaluate.

namespace unihash {

struct PreparedData {
  Dataset dataset;
  SplitDataset split;
  ProtocolSets protocols;
};

/// Loads data.path, or generates synthetic data when it is empty, then splits
/// with data.seed.
PreparedData prepare_data(const RunConfig& config);

HashCenterTable make_centers(const RunConfig& config, int num_classes);

struct TrainedRun {
  Checkpoint checkpoint;
  std::vector<EpochLog> log;
};

TrainedRun run_training(const RunConfig& config, const PreparedData& data);

MetricsReport run_evaluation(const Checkpoint& checkpoint,
                             const PreparedData& data);

}  // namespace unihash
