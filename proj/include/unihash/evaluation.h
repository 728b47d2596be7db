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

#include <string>
#include <vector>

#include "json.hpp"
#include "unihash/dataset.h"
#include "unihash/network.h"
#include "unihash/retrieval.h"

namespace unihash {

// Continuous and binary codes of a set of dataset positions for both
// branches.
struct EncodedSet {
  std::vector<size_t> positions;
  CodeMatrix center;
  CodeMatrix pairwise;
  std::vector<PackedCode> center_bits;
  std::vector<PackedCode> pairwise_bits;
};

EncodedSet encode_positions(const ModelParams& params, const Dataset& ds,
                            const std::vector<size_t>& positions);

/// Branch choice by validation mAP@K: val_query searched against the training
/// pool.
BranchSelection select_branch(const ModelParams& params, const Dataset& ds,
                              const SplitDataset& split, size_t k);

struct ProtocolMetrics {
  std::string name;
  bool available = false;
  size_t num_queries = 0;
  size_t db_size = 0;
  double map_center = 0.0;
  double map_pairwise = 0.0;
  double map_selected = 0.0;
  std::vector<PrPoint> pr_center;
  std::vector<PrPoint> pr_pairwise;
};

struct MetricsReport {
  size_t k = 0;
  BranchSelection selection;
  double tau2 = 0.0;  // over every query of the split
  std::vector<ProtocolMetrics> protocols;  // always four, in canonical order
  std::vector<std::pair<std::string, std::string>> config;

  const ProtocolMetrics& protocol(const std::string& name) const;
};

MetricsReport evaluate_protocols(const ModelParams& params, const Dataset& ds,
                                 const SplitDataset& split,
                                 const ProtocolSets& protocols, size_t k);

nlohmann::json metrics_json(const MetricsReport& report);

/// protocol,branch,k,map rows for available protocols.
std::string metrics_csv(const MetricsReport& report);

/// protocol,branch,radius,precision,recall rows.
std::string pr_curve_csv(const MetricsReport& report);

}  // namespace unihash
