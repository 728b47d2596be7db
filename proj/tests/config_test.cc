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


#include "unihash/config.h"

#include <gtest/gtest.h>

#include <cstring>

#include "test_util.h"
#include "unihash/checkpoint.h"
#include "unihash/errors.h"

namespace unihash {
namespace {

TEST(RunConfig, DefaultsAreValid) {
  RunConfig c;
  EXPECT_NO_THROW(c.validate());
  EXPECT_EQ(c.train.model.code_length, 16);
  EXPECT_EQ(c.train.model.num_experts, 8);
  EXPECT_EQ(c.train.model.feature_dim, 64);
  EXPECT_EQ(c.data.dim, 32);
  EXPECT_EQ(c.train.model.top_k, 2);
  EXPECT_EQ(c.train.optimizer.lr, 1e-4);
  EXPECT_EQ(c.eval.k, 100);
}

TEST(RunConfig, KeyValueRoundTrip) {
  RunConfig c;
  c.seed = 17;
  c.data.spread = 0.125;
  c.train.weights.mutual = 0.3;
  c.train.model.gate_mode = GateMode::kSoftmax;
  c.train.model.shared_experts = false;
  c.centers.method = "random";
  const RunConfig back = RunConfig::from_kv(c.to_kv());
  EXPECT_EQ(back.to_kv(), c.to_kv());
  EXPECT_EQ(RunConfig::from_kv_text(c.to_kv_text()).to_kv_text(),
            c.to_kv_text());
  EXPECT_EQ(back.train.model.gate_mode, GateMode::kSoftmax);
  EXPECT_EQ(back.train.weights.mutual, 0.3);
  // Every documented key appears exactly once in the flat view.
  const auto keys = config_keys();
  ASSERT_EQ(keys.size(), c.to_kv().size());
  for (size_t i = 0; i < keys.size(); ++i) {
    EXPECT_EQ(keys[i].first, c.to_kv()[i].first);
    EXPECT_FALSE(keys[i].second.empty());
  }
}

TEST(RunConfig, DoublesSurviveTextExactly) {
  RunConfig c;
  c.train.weights.center = 0.1 + 0.2;
  c.data.spread = 1.0 / 3.0;
  const RunConfig back = RunConfig::from_kv_text(c.to_kv_text());
  EXPECT_EQ(back.train.weights.center, c.train.weights.center);
  EXPECT_EQ(back.data.spread, c.data.spread);
}

TEST(RunConfig, BadKeysAndValues) {
  RunConfig c;
  EXPECT_THROW(c.set("train.nope", "1"), ConfigError);
  EXPECT_THROW(c.set("train.epochs", "many"), ConfigError);
  EXPECT_THROW(c.set("train.epochs", "3x"), ConfigError);
  EXPECT_THROW(c.set("model.shared_experts", "yes please"), ConfigError);
  EXPECT_THROW(c.set("model.gate_mode", "relu"), ConfigError);
  EXPECT_THROW(c.set("centers.method", "magic"), ConfigError);
  EXPECT_THROW(c.set("train.detach_schedule", "sometimes"), ConfigError);
  EXPECT_THROW(RunConfig::from_kv_text("seed 3\n"), FormatError);
}

TEST(RunConfig, ValidationRejectsOutOfRange) {
  auto bad = [](auto mutate) {
    RunConfig c;
    mutate(c);
    EXPECT_THROW(c.validate(), ConfigError);
  };
  bad([](RunConfig& c) { c.data.classes = 1; });
  bad([](RunConfig& c) { c.data.spread = -0.1; });
  bad([](RunConfig& c) { c.eval.k = 0; });
  bad([](RunConfig& c) { c.centers.d_floor = 17; });
  bad([](RunConfig& c) { c.split.seen_ratio = 0.0; });
  bad([](RunConfig& c) { c.split.seen_ratio = 1.5; });
  bad([](RunConfig& c) { c.train.epochs = 0; });
  bad([](RunConfig& c) { c.train.model.top_k = 9; });
}

TEST(RunConfig, MergeJsonNestedAndDotted) {
  RunConfig c;
  c.merge_json(nlohmann::json::parse(
      R"({"train": {"epochs": 7, "lambda3": 0.5}, "model.top_k": 1,
          "model": {"gate_mode": "softmax", "shared_experts": false},
          "data": {"path": "x.uhf"}, "seed": 42})"));
  EXPECT_EQ(c.train.epochs, 7);
  EXPECT_EQ(c.train.weights.mutual, 0.5);
  EXPECT_EQ(c.train.model.top_k, 1);
  EXPECT_EQ(c.train.model.gate_mode, GateMode::kSoftmax);
  EXPECT_FALSE(c.train.model.shared_experts);
  EXPECT_EQ(c.data.path, "x.uhf");
  EXPECT_EQ(c.seed, 42u);
  EXPECT_THROW(c.merge_json(nlohmann::json::array()), ConfigError);
  EXPECT_THROW(c.merge_json({{"train", {{"bogus", 1}}}}), ConfigError);
  EXPECT_THROW(c.merge_json({{"train", {{"epochs", {1, 2}}}}}), ConfigError);
}

TEST(RunConfig, MergeFile) {
  testing::TempDir dir("cfg");
  testing::write_file(dir / "c.json", R"({"eval": {"k": 12}})");
  RunConfig c;
  c.merge_file(dir / "c.json");
  EXPECT_EQ(c.eval.k, 12);
  testing::write_file(dir / "broken.json", "{ not json");
  EXPECT_THROW(c.merge_file(dir / "broken.json"), ConfigError);
  EXPECT_THROW(c.merge_file(dir / "missing.json"), ConfigError);
}

// ------------------------------------------------------------- checkpoint

Checkpoint sample_checkpoint(bool shared) {
  RunConfig c;
  c.seed = 3;
  c.train.model.input_dim = 6;
  c.train.model.feature_dim = 5;
  c.train.model.code_length = 8;
  c.train.model.shared_experts = shared;
  c.train.model.backbone_depth = 2;
  ModelParams p = init_params(c.train.model, 11);
  p.gate_c.fc1.bias[0] = 0.1;  // not representable in f32
  return Checkpoint::from_training(c, p, generate_default_centers(3, 8, 0));
}

TEST(Checkpoint, FromTrainingRoundsToFloat) {
  const Checkpoint ck = sample_checkpoint(true);
  EXPECT_EQ(ck.params.gate_c.fc1.bias[0], double(0.1f));
}

TEST(Checkpoint, SerializeParseRoundTrip) {
  for (bool shared : {true, false}) {
    const Checkpoint ck = sample_checkpoint(shared);
    const Checkpoint back = Checkpoint::parse(ck.serialize());
    EXPECT_TRUE(back.params == ck.params);
    EXPECT_EQ(back.centers, ck.centers);
    EXPECT_EQ(back.config.to_kv(), ck.config.to_kv());
    EXPECT_EQ(back.serialize(), ck.serialize());
  }
}

TEST(Checkpoint, HeaderLayout) {
  const std::string bytes = sample_checkpoint(true).serialize();
  ASSERT_GT(bytes.size(), 16u);
  EXPECT_EQ(bytes.substr(0, 4), "UHCK");
  uint32_t version = 0;
  std::memcpy(&version, bytes.data() + 4, 4);
  EXPECT_EQ(version, kCheckpointVersion);
  uint64_t count = 0;
  std::memcpy(&count, bytes.data() + 8, 8);
  const auto arrays = param_arrays(sample_checkpoint(true).params);
  EXPECT_EQ(count, arrays.size() + 1);
  // The trailing block is the flat config text.
  const std::string text = sample_checkpoint(true).config.to_kv_text();
  EXPECT_EQ(bytes.substr(bytes.size() - text.size()), text);
}

TEST(Checkpoint, SaveLoad) {
  testing::TempDir dir("ck");
  const Checkpoint ck = sample_checkpoint(false);
  ck.save(dir / "m.uhck");
  const Checkpoint back = Checkpoint::load(dir / "m.uhck");
  EXPECT_TRUE(back.params == ck.params);
  EXPECT_THROW(Checkpoint::load(dir / "absent.uhck"), IoError);
}

TEST(Checkpoint, CorruptInputsAreFormatErrors) {
  const std::string good = sample_checkpoint(true).serialize();
  std::string bad = good;
  bad[0] = 'X';
  EXPECT_THROW(Checkpoint::parse(bad), FormatError);
  bad = good;
  bad[4] = 9;
  EXPECT_THROW(Checkpoint::parse(bad), FormatError);
  for (size_t cut : {size_t(2), size_t(10), good.size() / 2, good.size() - 3}) {
    EXPECT_THROW(Checkpoint::parse(good.substr(0, cut)), FormatError) << cut;
  }
  EXPECT_THROW(Checkpoint::parse(""), FormatError);
}

TEST(Checkpoint, ConfigMismatchIsFormatError) {
  Checkpoint ck = sample_checkpoint(true);
  std::string bytes = ck.serialize();
  // Claim a different code length in the config block.
  const std::string from = "model.code_length=8\n";
  const auto at = bytes.rfind(from);
  ASSERT_NE(at, std::string::npos);
  bytes.replace(at, from.size(), "model.code_length=9\n");
  EXPECT_THROW(Checkpoint::parse(bytes), FormatError);
}

}  // namespace
}  // namespace unihash
