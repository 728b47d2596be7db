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


#include "unihash/network.h"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "test_util.h"
#include "unihash/errors.h"

namespace unihash {
namespace {

using Vec = std::vector<double>;

ModelConfig small_config(GateMode mode = GateMode::kSigmoidNorm) {
  ModelConfig mc;
  mc.input_dim = 5;
  mc.feature_dim = 6;
  mc.code_length = 4;
  mc.num_experts = 4;
  mc.top_k = 2;
  mc.backbone_depth = 2;
  mc.gate_mode = mode;
  return mc;
}

// Straight-line affine map, written independently of Linear::apply.
Vec affine(const Linear& l, const Vec& x) {
  Vec y(l.out);
  for (int o = 0; o < l.out; ++o) {
    double s = l.bias[o];
    for (int i = 0; i < l.in; ++i) s += l.weight[o * l.in + i] * x[i];
    y[o] = s;
  }
  return y;
}

Vec relu(Vec v) {
  for (auto& x : v) x = std::max(0.0, x);
  return v;
}

void fill(Linear& l, double w, double b) {
  std::fill(l.weight.begin(), l.weight.end(), w);
  std::fill(l.bias.begin(), l.bias.end(), b);
}

// ---------------------------------------------------------------- backbone

TEST(Backbone, IdentityModeReturnsInput) {
  ModelConfig mc = small_config();
  mc.backbone_depth = 0;
  mc.input_dim = 3;
  mc.feature_dim = 3;
  const ModelParams p = init_params(mc, 1);
  EXPECT_EQ(backbone_forward(p, Vec{1, 2, 3}), (Vec{1, 2, 3}));
  mc.input_dim = 4;
  EXPECT_THROW(init_params(mc, 1), ConfigError);
}

TEST(Backbone, ZeroWeightsGiveReluOfBias) {
  ModelParams p = init_params(small_config(), 2);
  fill(p.backbone[0], 0.0, -0.5);
  fill(p.backbone[1], 0.0, 0.75);
  EXPECT_EQ(backbone_forward(p, Vec{1, 2, 3, 4, 5}), Vec(6, 0.75));
  fill(p.backbone[1], 0.0, -2.0);
  EXPECT_EQ(backbone_forward(p, Vec{1, 2, 3, 4, 5}), Vec(6, 0.0));
}

TEST(Backbone, MatchesStraightLineReimplementation) {
  std::mt19937_64 rng(3);
  for (uint64_t seed = 0; seed < 20; ++seed) {
    const ModelParams p = init_params(small_config(), seed);
    const Vec x = testing::random_vector(rng, 5);
    const Vec expected = relu(affine(p.backbone[1], relu(affine(p.backbone[0], x))));
    const Vec got = backbone_forward(p, x);
    ASSERT_EQ(got.size(), expected.size());
    for (size_t j = 0; j < got.size(); ++j) EXPECT_NEAR(got[j], expected[j], 1e-12);
  }
}

TEST(Backbone, WrongInputDimensionIsShapeError) {
  const ModelParams p = init_params(small_config(), 1);
  EXPECT_THROW(backbone_forward(p, Vec{1, 2, 3}), ShapeError);
}

// ------------------------------------------------------------------- gates

TEST(GateScores, ZeroParametersGiveUniformActivations) {
  Gate g{Linear(3, 3), Linear(3, 4)};
  const Vec v{0.3, -1.0, 2.0};
  const GateScores sig = gate_scores(g, GateMode::kSigmoidNorm, v);
  EXPECT_EQ(sig.raw, Vec(4, 0.0));
  EXPECT_EQ(sig.activated, Vec(4, 0.5));
  const GateScores soft = gate_scores(g, GateMode::kSoftmax, v);
  EXPECT_EQ(soft.activated, Vec(4, 0.25));
}

TEST(GateScores, SoftmaxOfKnownLogits) {
  // fc1 = identity with zero bias; fc2 = identity. Raw scores equal v after
  // the hidden ReLU, so feed v = [1, 0, 0] and shift with fc2's bias.
  Gate g{Linear(3, 3), Linear(3, 3)};
  for (int i = 0; i < 3; ++i) {
    g.fc1.weight[i * 3 + i] = 1.0;
    g.fc2.weight[i * 3 + i] = 1.0;
  }
  g.fc2.bias = {0.0, 0.0, -1.0};
  const GateScores s = gate_scores(g, GateMode::kSoftmax, Vec{1, 0, 0});
  EXPECT_EQ(s.raw, (Vec{1, 0, -1}));
  const double z = std::exp(1.0) + 1.0 + std::exp(-1.0);
  const Vec expected{std::exp(1.0) / z, 1.0 / z, std::exp(-1.0) / z};
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(s.activated[i], expected[i], 1e-15);
  EXPECT_NEAR(s.activated[0], 0.66524, 1e-5);
  EXPECT_NEAR(s.activated[1], 0.24473, 1e-5);
  EXPECT_NEAR(s.activated[2], 0.09003, 1e-5);
}

TEST(GateScores, ActivationRangesOnRandomInputs) {
  std::mt19937_64 rng(4);
  const ModelParams p = init_params(small_config(), 4);
  for (int t = 0; t < 200; ++t) {
    const Vec v = testing::random_vector(rng, 6, 3.0);
    const GateScores sig = gate_scores(p.gate_c, GateMode::kSigmoidNorm, v);
    for (size_t i = 0; i < sig.raw.size(); ++i) {
      EXPECT_GT(sig.activated[i], 0.0);
      EXPECT_LT(sig.activated[i], 1.0);
      EXPECT_DOUBLE_EQ(sig.activated[i], 1.0 / (1.0 + std::exp(-sig.raw[i])));
    }
    const GateScores soft = gate_scores(p.gate_c, GateMode::kSoftmax, v);
    const double sum =
        std::accumulate(soft.activated.begin(), soft.activated.end(), 0.0);
    EXPECT_NEAR(sum, 1.0, 1e-9);
  }
}

TEST(GateModeNames, ParseAndPrint) {
  EXPECT_EQ(parse_gate_mode("sigmoid_norm"), GateMode::kSigmoidNorm);
  EXPECT_EQ(parse_gate_mode("softmax"), GateMode::kSoftmax);
  EXPECT_EQ(to_string(GateMode::kSoftmax), "softmax");
  EXPECT_EQ(to_string(GateMode::kSigmoidNorm), "sigmoid_norm");
  EXPECT_THROW(parse_gate_mode("relu"), ArgumentError);
}

// ------------------------------------------------------------------- top-k

TEST(SelectTopK, PicksLargestAndNormalizes) {
  const Routing r = select_topk(Vec{0.9, 0.1, 0.6, 0.4}, 2);
  EXPECT_EQ(r.indices, (std::vector<int>{0, 2}));
  EXPECT_NEAR(r.weights[0], 0.6, 1e-15);
  EXPECT_NEAR(r.weights[1], 0.4, 1e-15);
  EXPECT_FALSE(r.uniform_fallback);
}

TEST(SelectTopK, TiesGoToSmallerIndex) {
  EXPECT_EQ(select_topk(Vec{0.5, 0.5, 0.1}, 1).indices, std::vector<int>{0});
  EXPECT_EQ(select_topk(Vec{0.1, 0.5, 0.5, 0.5}, 2).indices,
            (std::vector<int>{1, 2}));
}

TEST(SelectTopK, DenseLimitAndFallback) {
  const Vec s{0.2, 0.3, 0.5};
  const Routing r = select_topk(s, 3);
  ASSERT_EQ(r.indices.size(), 3u);
  for (size_t i = 0; i < 3; ++i) {
    EXPECT_NEAR(r.weights[i], s[r.indices[i]] / 1.0, 1e-15);
  }
  const Routing zero = select_topk(Vec{0.0, 0.0, 1e-14}, 2);
  EXPECT_TRUE(zero.uniform_fallback);
  EXPECT_EQ(zero.weights, (Vec{0.5, 0.5}));
  EXPECT_THROW(select_topk(s, 4), ArgumentError);
  EXPECT_THROW(select_topk(s, 0), ArgumentError);
}

// ------------------------------------------------------------------- merge

TEST(SmMoH, SingleExpertDegeneracy) {
  ModelConfig mc = small_config();
  mc.num_experts = 1;
  mc.top_k = 1;
  const ModelParams p = init_params(mc, 6);
  std::mt19937_64 rng(6);
  const Vec v = testing::random_vector(rng, 6);
  const CodePair c = smmoh_forward(p, v);
  Vec e = expert_forward(p.experts[0], v);
  for (auto& x : e) x = std::tanh(x);
  EXPECT_EQ(c.u_c, e);
  EXPECT_EQ(c.u_p, e);
  EXPECT_EQ(c.routing.center.weights, Vec{1.0});
}

TEST(SmMoH, IdenticalGatesGiveIdenticalBranches) {
  ModelParams p = init_params(small_config(), 7);
  p.gate_p = p.gate_c;
  std::mt19937_64 rng(7);
  for (int t = 0; t < 50; ++t) {
    const CodePair c = smmoh_forward(p, testing::random_vector(rng, 6));
    EXPECT_EQ(c.u_c, c.u_p);
  }
}

TEST(SmMoH, HandEvaluatedMerge) {
  // Two experts with constant outputs e1 = 0.5, e2 = -1 in every coordinate,
  // and a center gate that scores them 0.6 / 0.4 after normalization.
  ModelConfig mc;
  mc.input_dim = 2;
  mc.feature_dim = 2;
  mc.code_length = 3;
  mc.num_experts = 2;
  mc.top_k = 2;
  mc.backbone_depth = 0;
  ModelParams p = init_params(mc, 8);
  fill(p.experts[0].fc1, 0.0, 0.0);
  fill(p.experts[0].fc2, 0.0, 0.5);
  fill(p.experts[1].fc1, 0.0, 0.0);
  fill(p.experts[1].fc2, 0.0, -1.0);
  fill(p.gate_c.fc1, 0.0, 0.0);
  fill(p.gate_c.fc2, 0.0, 0.0);
  // sigmoid(a) / (sigmoid(a) + sigmoid(b)) = 0.6 with b = 0 needs
  // sigmoid(a) = 0.75, i.e. a = ln 3.
  p.gate_c.fc2.bias = {std::log(3.0), 0.0};
  const CodePair c = smmoh_forward(p, Vec{0.1, 0.2});
  EXPECT_EQ(c.routing.center.indices, (std::vector<int>{0, 1}));
  EXPECT_NEAR(c.routing.center.weights[0], 0.6, 1e-15);
  const double expected = std::tanh(0.6 * 0.5 + 0.4 * -1.0);
  for (double u : c.u_c) EXPECT_NEAR(u, expected, 1e-15);

  p.config.tanh_output = false;
  const CodePair raw = smmoh_forward(p, Vec{0.1, 0.2});
  for (double u : raw.u_c) EXPECT_NEAR(u, -0.1, 1e-15);
}

TEST(SmMoH, OutputsBoundedWithTanh) {
  ModelConfig mc = small_config();
  const ModelParams p = init_params(mc, 9);
  std::mt19937_64 rng(9);
  for (int t = 0; t < 200; ++t) {
    const CodePair c = smmoh_forward(p, testing::random_vector(rng, 6, 0.5));
    for (double u : c.u_c) EXPECT_LT(std::fabs(u), 1.0);
    for (double u : c.u_p) EXPECT_LT(std::fabs(u), 1.0);
  }
}

TEST(SmMoH, RoutingWeightsSumToOne) {
  std::mt19937_64 rng(10);
  for (GateMode mode : {GateMode::kSigmoidNorm, GateMode::kSoftmax}) {
    const ModelParams p = init_params(small_config(mode), 10);
    for (int t = 0; t < 1000; ++t) {
      const CodePair c = smmoh_forward(p, testing::random_vector(rng, 6, 2.0));
      for (const Routing* r : {&c.routing.center, &c.routing.pairwise}) {
        ASSERT_EQ(r->indices.size(), 2u);
        EXPECT_NE(r->indices[0], r->indices[1]);
        double sum = 0.0;
        for (double w : r->weights) {
          EXPECT_GE(w, 0.0);
          sum += w;
        }
        EXPECT_NEAR(sum, 1.0, 1e-9);
      }
    }
  }
}

TEST(SmMoH, NonSelectedExpertsDoNotAffectOutput) {
  std::mt19937_64 rng(11);
  for (bool shared : {true, false}) {
    ModelConfig mc = small_config();
    mc.shared_experts = shared;
    const ModelParams p = init_params(mc, 11);
    for (int t = 0; t < 100; ++t) {
      const Vec v = testing::random_vector(rng, 6);
      const CodePair base = smmoh_forward(p, v);
      ModelParams q = p;
      const auto& sel_c = base.routing.center.indices;
      const auto& sel_p = base.routing.pairwise.indices;
      for (int i = 0; i < mc.num_experts; ++i) {
        const bool used_c = std::count(sel_c.begin(), sel_c.end(), i) > 0;
        const bool used_p = std::count(sel_p.begin(), sel_p.end(), i) > 0;
        if (shared ? !(used_c || used_p) : !used_c) {
          fill(q.experts[i].fc2, 3.0, -7.0);
        }
        if (!shared && !used_p) fill(q.experts_p[i].fc1, -2.0, 5.0);
      }
      const CodePair after = smmoh_forward(q, v);
      EXPECT_EQ(after.u_c, base.u_c);
      EXPECT_EQ(after.u_p, base.u_p);
    }
  }
}

TEST(SmMoH, UnsharedBanksAreIndependent) {
  ModelConfig mc = small_config();
  mc.shared_experts = false;
  ModelParams p = init_params(mc, 12);
  ASSERT_EQ(p.experts_p.size(), p.experts.size());
  std::mt19937_64 rng(12);
  const Vec v = testing::random_vector(rng, 6);
  const CodePair base = smmoh_forward(p, v);
  for (auto& e : p.experts_p) fill(e.fc2, 0.1, 0.2);
  const CodePair after = smmoh_forward(p, v);
  EXPECT_EQ(after.u_c, base.u_c);
  EXPECT_NE(after.u_p, base.u_p);
}

TEST(SmMoH, PermutingExpertsWithGateColumnsIsInvariant) {
  std::mt19937_64 rng(13);
  for (GateMode mode : {GateMode::kSigmoidNorm, GateMode::kSoftmax}) {
    const ModelParams p = init_params(small_config(mode), 13);
    const std::vector<int> perm{2, 0, 3, 1};  // new slot i holds old perm[i]
    ModelParams q = p;
    for (int i = 0; i < 4; ++i) {
      q.experts[i] = p.experts[perm[i]];
      for (Gate* g : {&q.gate_c, &q.gate_p}) {
        const Gate& src = g == &q.gate_c ? p.gate_c : p.gate_p;
        const int d = src.fc2.in;
        for (int j = 0; j < d; ++j) {
          g->fc2.weight[i * d + j] = src.fc2.weight[perm[i] * d + j];
        }
        g->fc2.bias[i] = src.fc2.bias[perm[i]];
      }
    }
    for (int t = 0; t < 100; ++t) {
      const Vec v = testing::random_vector(rng, 6);
      const CodePair a = smmoh_forward(p, v);
      const CodePair b = smmoh_forward(q, v);
      for (size_t j = 0; j < a.u_c.size(); ++j) {
        EXPECT_NEAR(a.u_c[j], b.u_c[j], 1e-12);
        EXPECT_NEAR(a.u_p[j], b.u_p[j], 1e-12);
      }
    }
  }
}

TEST(Encode, FloatInputMatchesDoubleForwardPath) {
  const ModelParams p = init_params(small_config(), 14);
  const std::vector<float> x{0.5f, -1.25f, 2.0f, 0.0f, 3.5f};
  const Vec xd(x.begin(), x.end());
  const CodePair a = encode(p, x);
  const CodePair b = smmoh_forward(p, backbone_forward(p, xd));
  EXPECT_EQ(a.u_c, b.u_c);
  EXPECT_EQ(a.u_p, b.u_p);
  const ForwardTrace tr = forward_trace(p, xd);
  EXPECT_EQ(tr.center.code, a.u_c);
  EXPECT_EQ(tr.pairwise.code, a.u_p);
  EXPECT_EQ(tr.center.routing.indices, a.routing.center.indices);
}

// ---------------------------------------------------------- initialization

TEST(InitParams, UniformWithinFanInBound) {
  const ModelParams p = init_params(small_config(), 15);
  auto check = [](const Linear& l) {
    const double bound = 1.0 / std::sqrt(double(l.in));
    for (double w : l.weight) EXPECT_LE(std::fabs(w), bound);
    for (double b : l.bias) EXPECT_LE(std::fabs(b), bound);
  };
  for (const auto& l : p.backbone) check(l);
  for (const auto& e : p.experts) {
    check(e.fc1);
    check(e.fc2);
  }
  check(p.gate_c.fc1);
  check(p.gate_p.fc2);
  EXPECT_EQ(init_params(small_config(), 15), p);
  EXPECT_NE(init_params(small_config(), 16), p);
}

TEST(ParamArrays, NamesShapesAndCount) {
  ModelConfig mc = small_config();
  mc.num_experts = 2;
  mc.top_k = 1;
  mc.backbone_depth = 1;
  ModelParams p = init_params(mc, 1);
  std::vector<std::string> names;
  size_t total = 0;
  for (const auto& a : param_arrays(p)) {
    names.push_back(a.name);
    size_t n = 1;
    for (size_t d : a.shape) n *= d;
    EXPECT_EQ(n, a.values.size()) << a.name;
    total += n;
  }
  const std::vector<std::string> expected = {
      "backbone.0.weight",    "backbone.0.bias",      "experts.0.fc1.weight",
      "experts.0.fc1.bias",   "experts.0.fc2.weight", "experts.0.fc2.bias",
      "experts.1.fc1.weight", "experts.1.fc1.bias",   "experts.1.fc2.weight",
      "experts.1.fc2.bias",   "gate_c.fc1.weight",    "gate_c.fc1.bias",
      "gate_c.fc2.weight",    "gate_c.fc2.bias",      "gate_p.fc1.weight",
      "gate_p.fc1.bias",      "gate_p.fc2.weight",    "gate_p.fc2.bias"};
  EXPECT_EQ(names, expected);
  // d=6, D_in=5, q=4, m=2: backbone 36, experts 2*(28+20), gates 2*(42+14).
  EXPECT_EQ(total, 36u + 96u + 112u);
  EXPECT_EQ(param_count(p), total);

  mc.shared_experts = false;
  ModelParams u = init_params(mc, 1);
  EXPECT_EQ(param_count(u), total + 96u);
  EXPECT_EQ(param_arrays(u)[2].name, "experts_c.0.fc1.weight");

  const ModelParams z = zeros_like(u);
  for (const auto& a : param_arrays(z)) {
    for (double v : a.values) EXPECT_EQ(v, 0.0);
  }
}

TEST(ModelConfig, ValidationRules) {
  ModelConfig mc = small_config();
  EXPECT_NO_THROW(mc.validate());
  mc.top_k = 5;
  EXPECT_THROW(mc.validate(), ConfigError);
  mc.top_k = 0;
  EXPECT_THROW(mc.validate(), ConfigError);
  mc = small_config();
  mc.code_length = 0;
  EXPECT_THROW(mc.validate(), ConfigError);
  mc = small_config();
  mc.backbone_depth = -1;
  EXPECT_THROW(mc.validate(), ConfigError);
}

TEST(ActivationSignature, ChangesWithRouting) {
  ModelParams p = init_params(small_config(), 17);
  std::mt19937_64 rng(17);
  const Vec x = testing::random_vector(rng, 5);
  const auto base = activation_signature(forward_trace(p, x));
  EXPECT_EQ(activation_signature(forward_trace(p, x)), base);
  const auto tr = forward_trace(p, x);
  const int unused = [&] {
    for (int i = 0; i < 4; ++i) {
      const auto& idx = tr.center.routing.indices;
      if (std::find(idx.begin(), idx.end(), i) == idx.end()) return i;
    }
    return -1;
  }();
  p.gate_c.fc2.bias[unused] += 100.0;
  EXPECT_NE(activation_signature(forward_trace(p, x)), base);
}

}  // namespace
}  // namespace unihash
