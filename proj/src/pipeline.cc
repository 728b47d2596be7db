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

#include "unihash/pipeline.h"

#include "unihash/errors.h"
#include "unihash/rng.h"

namespace unihash {

PreparedData prepare_data(const RunConfig& config) {
  PreparedData out;
  if (config.data.path.empty()) {
    out.dataset = generate_synthetic(config.data.classes, config.data.dim,
                                     config.data.per_class, config.data.spread,
                                     config.data.seed);
  } else {
    out.dataset = load_features(config.data.path);
  }
  SplitOptions opts = config.split;
  opts.seed = mix_seed(config.data.seed, 7);
  out.split = split_seen_unseen(out.dataset, opts);
  out.protocols = build_eval_protocols(out.split);
  return out;
}

HashCenterTable make_centers(const RunConfig& config, int num_classes) {
  const int q = config.train.model.code_length;
  const uint64_t seed = mix_seed(config.seed, 2);
  if (config.centers.method == "auto") {
    if (config.centers.d_floor == 0) {
      return generate_default_centers(num_classes, q, seed);
    }
    try {
      return generate_centers(num_classes, q, CenterMethod::kHadamard, 0, seed);
    } catch (const CapabilityError&) {
      return generate_centers(num_classes, q, CenterMethod::kRandom,
                              config.centers.d_floor, seed);
    }
  }
  const int d_floor =
      config.centers.d_floor > 0 ? config.centers.d_floor : (q + 3) / 4;
  return generate_centers(num_classes, q,
                          parse_center_method(config.centers.method), d_floor,
                          seed);
}

TrainedRun run_training(const RunConfig& config, const PreparedData& data) {
  RunConfig resolved = config;
  resolved.train.model.input_dim = data.dataset.feature_dim;
  resolved.train.seed = config.seed;
  resolved.validate();
  HashCenterTable centers = make_centers(resolved, data.dataset.num_classes);
  TrainResult result =
      train(resolved.train, data.dataset, data.split.train, centers);
  return {Checkpoint::from_training(resolved, std::move(result.params),
                                    std::move(centers)),
          std::move(result.log)};
}

MetricsReport run_evaluation(const Checkpoint& checkpoint,
                             const PreparedData& data) {
  if (checkpoint.params.config.input_dim != data.dataset.feature_dim) {
    throw ConfigError("checkpoint expects input dimension " +
                      std::to_string(checkpoint.params.config.input_dim) +
                      ", dataset has " +
                      std::to_string(data.dataset.feature_dim));
  }
  if (checkpoint.centers.num_classes() != data.dataset.num_classes) {
    throw ConfigError("checkpoint centers cover a different class count");
  }
  MetricsReport report =
      evaluate_protocols(checkpoint.params, data.dataset, data.split,
                         data.protocols,
                         static_cast<size_t>(checkpoint.config.eval.k));
  report.config = checkpoint.config.to_kv();
  return report;
}

}  // namespace unihash
