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

#include <algorithm>
#include <charconv>
#include <numeric>
#include <random>
#include <sstream>

#include "unihash/errors.h"
#include "unihash/format.h"
#include "unihash/rng.h"
#include "unihash/training.h"

namespace unihash {
namespace {

double batch_tau2(const BranchCodes& codes) {
  double total = 0.0;
  for (size_t n = 0; n < codes.center.size(); ++n) {
    for (size_t j = 0; j < codes.center[n].size(); ++j) {
      const double d = codes.center[n][j] - codes.pairwise[n][j];
      total += d * d;
    }
  }
  return total / static_cast<double>(codes.center.size());
}

}  // namespace

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (batch_size < 2) throw ConfigError("batch size must be >= 2");
  weights.validate();
  model.validate();
}

TrainResult train(const TrainConfig& config, const Dataset& ds,
                  const std::vector<size_t>& train_positions,
                  const HashCenterTable& centers) {
  config.validate();
  if (train_positions.size() < 2) {
    throw ConfigError("training pool needs at least two samples");
  }
  if (config.model.input_dim != ds.feature_dim) {
    throw ConfigError("model input_dim " +
                      std::to_string(config.model.input_dim) +
                      " != dataset feature dimension " +
                      std::to_string(ds.feature_dim));
  }
  if (centers.num_classes() != ds.num_classes) {
    throw ConfigError("hash centers cover " +
                      std::to_string(centers.num_classes()) +
                      " classes, dataset has " +
                      std::to_string(ds.num_classes));
  }
  if (centers.code_length != config.model.code_length) {
    throw ConfigError("hash center length != model code length");
  }

  TrainResult result;
  result.params = init_params(config.model, mix_seed(config.seed, 1));
  OptimizerState optimizer = make_optimizer(result.params, config.optimizer);

  std::vector<size_t> order = train_positions;
  int64_t iteration = 0;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::mt19937_64 rng(mix_seed(config.seed, 1000 + epoch));
    std::shuffle(order.begin(), order.end(), rng);

    EpochLog log;
    log.epoch = epoch;
    log.detach_side = config.schedule == DetachSchedule::kPerEpoch
                          ? to_string(detach_side_for(epoch))
                          : "alternating";
    int batches = 0;
    for (size_t start = 0; start < order.size();
         start += static_cast<size_t>(config.batch_size)) {
      const size_t end =
          std::min(order.size(), start + static_cast<size_t>(config.batch_size));
      if (end - start < 2) break;  // the pairwise term needs a pair
      ++iteration;
      const DetachSide side = config.schedule == DetachSchedule::kPerEpoch
                                  ? detach_side_for(epoch)
                                  : detach_side_for(iteration);
      Batch batch = make_batch(
          ds, std::span<const size_t>(order.data() + start, end - start));
      BackwardResult step;
      try {
        step = backward(result.params, batch, centers, config.weights, side,
                        config.pairwise);
        rmsprop_step(optimizer, result.params, step.grads);
      } catch (const NumericError& e) {
        throw NumericError("epoch " + std::to_string(epoch) + " batch " +
                           std::to_string(batches + 1) + ": " + e.what());
      }
      log.loss += step.loss.total;
      log.loss_center += step.loss.center;
      log.loss_pairwise += step.loss.pairwise;
      log.loss_mutual += step.loss.mutual;
      log.tau2 += batch_tau2(step.codes);
      ++batches;
    }
    const double inv = 1.0 / static_cast<double>(batches);
    log.loss *= inv;
    log.loss_center *= inv;
    log.loss_pairwise *= inv;
    log.loss_mutual *= inv;
    log.tau2 *= inv;
    result.log.push_back(log);
  }
  return result;
}

std::string train_log_csv(const std::vector<EpochLog>& log) {
  std::ostringstream out;
  out << kTrainLogHeader << '\n';
  for (const auto& e : log) {
    out << e.epoch << ',' << format_double(e.loss) << ','
        << format_double(e.loss_center) << ','
        << format_double(e.loss_pairwise) << ','
        << format_double(e.loss_mutual) << ',' << format_double(e.tau2) << ','
        << e.detach_side << '\n';
  }
  return out.str();
}

}  // namespace unihash
