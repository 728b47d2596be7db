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


#include "unihash/objectives.h"

#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <numeric>
#include <random>

#include "test_util.h"
#include "unihash/centers.h"
#include "unihash/errors.h"

namespace unihash {
namespace {

using Vec = std::vector<double>;

HashCenterTable table(std::vector<std::vector<int8_t>> rows) {
  HashCenterTable t;
  t.code_length = static_cast<int>(rows[0].size());
  t.centers = std::move(rows);
  t.min_distance = min_pairwise_hamming(t);
  return t;
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// ---- test-side oracles: direct transcriptions of the loss definitions.

double oracle_center(const CodeMatrix& u, const LabelMatrix& y,
                     const HashCenterTable& h) {
  const size_t q = h.code_length;
  double total = 0.0;
  for (size_t i = 0; i < u.size(); ++i) {
    std::vector<double> logits;
    for (const auto& c : h.centers) {
      double dot = 0, nu = 0, nh = 0;
      for (size_t j = 0; j < q; ++j) {
        dot += u[i][j] * c[j];
        nu += u[i][j] * u[i][j];
        nh += double(c[j]) * c[j];
      }
      logits.push_back(std::sqrt(double(q)) * dot / std::sqrt(nu * nh));
    }
    double z = 0;
    for (double l : logits) z += std::exp(l);
    for (size_t c = 0; c < logits.size(); ++c) {
      const double p = std::exp(logits[c]) / z;
      total -= y[i][c] ? std::log(p) : std::log(1 - p);
    }
  }
  return total / u.size();
}

double oracle_pairwise(const CodeMatrix& u, const LabelMatrix& y,
                       bool diagonal) {
  double total = 0.0;
  size_t count = 0;
  for (size_t i = 0; i < u.size(); ++i) {
    for (size_t j = 0; j < u.size(); ++j) {
      if (i == j && !diagonal) continue;
      double inner = 0;
      for (size_t k = 0; k < u[i].size(); ++k) inner += u[i][k] * u[j][k];
      inner *= 0.5;
      bool s = false;
      for (size_t c = 0; c < y[i].size(); ++c) s |= y[i][c] && y[j][c];
      total += std::log(1 + std::exp(inner)) - (s ? inner : 0.0);
      ++count;
    }
  }
  return total / count;
}

double oracle_mutual(const CodeMatrix& a, const CodeMatrix& b) {
  double total = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    double dot = 0, na = 0, nb = 0;
    for (size_t k = 0; k < a[i].size(); ++k) {
      dot += a[i][k] * b[i][k];
      na += a[i][k] * a[i][k];
      nb += b[i][k] * b[i][k];
    }
    total += 1 - dot / std::sqrt(na * nb);
  }
  return total / a.size();
}

// Central differences of a scalar function of a code matrix.
CodeMatrix numeric_grad(const std::function<double(const CodeMatrix&)>& f,
                        CodeMatrix u, double eps = 1e-6) {
  CodeMatrix g = u;
  for (size_t i = 0; i < u.size(); ++i) {
    for (size_t j = 0; j < u[i].size(); ++j) {
      const double keep = u[i][j];
      u[i][j] = keep + eps;
      const double up = f(u);
      u[i][j] = keep - eps;
      const double down = f(u);
      u[i][j] = keep;
      g[i][j] = (up - down) / (2 * eps);
    }
  }
  return g;
}

void expect_close(const CodeMatrix& a, const CodeMatrix& b, double tol) {
  ASSERT_EQ(a.size(), b.size());
  for (size_t i = 0; i < a.size(); ++i) {
    for (size_t j = 0; j < a[i].size(); ++j) {
      EXPECT_NEAR(a[i][j], b[i][j], tol) << i << "," << j;
    }
  }
}

// ------------------------------------------------------------ center loss

TEST(CenterLoss, SymmetricCaseIsTwoLnTwo) {
  const double l = center_loss({{1, -1}}, {{1, 0}}, table({{1, 1}, {-1, -1}}));
  EXPECT_NEAR(l, 2 * std::log(2.0), 1e-12);
  EXPECT_NEAR(l, 1.386294, 1e-6);
}

TEST(CenterLoss, AlignedWithOwnCenter) {
  const HashCenterTable h = table({{1, -1, 1, 1}, {-1, 1, -1, -1}});
  const double l = center_loss({{1, -1, 1, 1}}, {{1, 0}}, h);
  EXPECT_NEAR(l, -2 * std::log(sigmoid(4.0)), 1e-12);
  EXPECT_NEAR(l, 0.036300, 1e-6);
}

TEST(CenterLoss, SingleBitCode) {
  const double l = center_loss({{0.5}}, {{1, 0}}, table({{1}, {-1}}));
  EXPECT_NEAR(sigmoid(2.0), 0.880797, 1e-6);
  EXPECT_NEAR(l, -2 * std::log(sigmoid(2.0)), 1e-12);
  EXPECT_NEAR(l, 0.253856, 1e-6);
}

TEST(CenterLoss, MatchesOracleAndFiniteDifferences) {
  std::mt19937_64 rng(1);
  for (uint64_t seed = 0; seed < 10; ++seed) {
    const int q = 8, classes = 5, n = 6;
    const HashCenterTable h =
        generate_centers(classes, q, CenterMethod::kRandom, 2, seed);
    const CodeMatrix u = testing::random_matrix(rng, n, q);
    LabelMatrix y = testing::random_onehot(rng, n, classes);
    y[0][(std::find(y[0].begin(), y[0].end(), 1) - y[0].begin() + 1) % classes] = 1;
    CodeMatrix g;
    const double l = center_loss(u, y, h, &g);
    EXPECT_NEAR(l, oracle_center(u, y, h), 1e-12);
    expect_close(g, numeric_grad([&](const CodeMatrix& v) {
                   return oracle_center(v, y, h);
                 }, u), 1e-7);
  }
}

TEST(CenterLoss, DecreasesMovingTowardOwnCenter) {
  std::mt19937_64 rng(2);
  const HashCenterTable h = generate_centers(6, 16, CenterMethod::kHadamard, 0, 0);
  for (int t = 0; t < 50; ++t) {
    const int cls = t % 6;
    LabelMatrix y(1, std::vector<uint8_t>(6, 0));
    y[0][cls] = 1;
    const Vec start = testing::random_vector(rng, 16);
    auto at = [&](double alpha) {
      Vec u(16);
      for (int j = 0; j < 16; ++j) {
        u[j] = (1 - alpha) * start[j] + alpha * h.centers[cls][j];
      }
      return center_loss({u}, y, h);
    };
    EXPECT_LT(at(0.6), at(0.3));
    EXPECT_LT(at(0.9), at(0.6));
  }
}

TEST(CenterLoss, SaturationStaysFinite) {
  // Probabilities underflow toward 0/1; the log floor keeps the value finite.
  const HashCenterTable h = table({{1, 1, 1, 1}, {-1, -1, -1, -1}});
  CodeMatrix u{{-1, -1, -1, -1}};
  u[0].resize(4);
  HashCenterTable wide = generate_centers(2, 1024, CenterMethod::kHadamard, 0, 0);
  CodeMatrix far(1, Vec(1024));
  for (int j = 0; j < 1024; ++j) far[0][j] = -wide.centers[0][j];
  CodeMatrix g;
  const double l = center_loss(far, {{1, 0}}, wide, &g);
  EXPECT_TRUE(std::isfinite(l));
  EXPECT_NEAR(l, -2 * std::log(kLogFloor), 1e-6);
  for (double v : g[0]) EXPECT_TRUE(std::isfinite(v));
  EXPECT_GT(center_loss(u, {{1, 0}}, h), 0.0);
}

TEST(CenterLoss, Errors) {
  const HashCenterTable h = table({{1, 1}, {-1, -1}});
  try {
    center_loss({{1, 0}, {0, 0}}, {{1, 0}, {0, 1}}, h);
    FAIL();
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("row 1"), std::string::npos);
  }
  EXPECT_THROW(center_loss({}, {}, h), ArgumentError);
  EXPECT_THROW(center_loss({{1, 1}}, {{1}}, table({{1, 1}})), ArgumentError);
  EXPECT_THROW(center_loss({{1, 1, 1}}, {{1, 0}}, h), ShapeError);
  EXPECT_THROW(center_loss({{1, 1}}, {{1, 0, 0}}, h), ShapeError);
}

// -------------------------------------------------------------- similarity

TEST(Similarity, LabelIntersection) {
  LabelMatrix y(4, std::vector<uint8_t>(6, 0));
  y[0][1] = y[0][3] = 1;  // {1,3}
  y[1][3] = y[1][5] = 1;  // {3,5}
  y[2][2] = y[2][5] = 1;  // {2,5}
  y[3][1] = y[3][3] = 1;  // same as row 0
  const SimilarityMatrix s = similarity_matrix(y);
  EXPECT_EQ(s(0, 1), 1);
  EXPECT_EQ(s(0, 2), 0);
  EXPECT_EQ(s(0, 3), 1);
  EXPECT_EQ(s(1, 2), 1);
  for (size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(s(i, i), 1);
    for (size_t j = 0; j < 4; ++j) EXPECT_EQ(s(i, j), s(j, i));
  }
  const SimilarityMatrix one_hot = similarity_matrix({{1, 0}, {1, 0}, {0, 1}});
  EXPECT_EQ(one_hot(0, 1), 1);
  EXPECT_EQ(one_hot(0, 2), 0);
}

// ---------------------------------------------------------- pairwise loss

TEST(PairwiseTerm, ClosedForms) {
  EXPECT_NEAR(pairwise_term(0.0, true), std::log(2.0), 1e-15);
  EXPECT_NEAR(pairwise_term(0.0, false), std::log(2.0), 1e-15);
  EXPECT_NEAR(pairwise_term(4.0, true), std::log1p(std::exp(-4.0)), 1e-15);
  EXPECT_NEAR(pairwise_term(4.0, true), 0.018150, 1e-6);
  EXPECT_NEAR(pairwise_term(4.0, false), 4.018150, 1e-6);
  // Stable at large |I|, where the naive log(1 + e^I) overflows.
  EXPECT_NEAR(pairwise_term(800.0, false), 800.0, 1e-12);
  EXPECT_NEAR(pairwise_term(-800.0, true), 800.0, 1e-12);
  EXPECT_NEAR(pairwise_term(-800.0, false), 0.0, 1e-12);
}

TEST(PairwiseLoss, AllOnesCodes) {
  // q=8 all-ones rows: every inner product is 4.
  const CodeMatrix u(2, Vec(8, 1.0));
  const double same = pairwise_loss(u, similarity_matrix({{1, 0}, {1, 0}}));
  EXPECT_NEAR(same, std::log1p(std::exp(-4.0)), 1e-15);
  const double diff = pairwise_loss(u, similarity_matrix({{1, 0}, {0, 1}}));
  // Diagonal pairs are similar, the two off-diagonal pairs are not.
  EXPECT_NEAR(diff, std::log1p(std::exp(-4.0)) + 2.0, 1e-15);
}

TEST(PairwiseLoss, MatchesOracleAndFiniteDifferences) {
  std::mt19937_64 rng(3);
  for (bool diag : {true, false}) {
    for (int t = 0; t < 10; ++t) {
      const CodeMatrix u = testing::random_matrix(rng, 5, 6);
      const LabelMatrix y = testing::random_onehot(rng, 5, 3);
      CodeMatrix g;
      const double l =
          pairwise_loss(u, similarity_matrix(y), PairwiseOptions{diag}, &g);
      EXPECT_NEAR(l, oracle_pairwise(u, y, diag), 1e-12);
      expect_close(g, numeric_grad([&](const CodeMatrix& v) {
                     return oracle_pairwise(v, y, diag);
                   }, u), 1e-7);
    }
  }
}

TEST(PairwiseLoss, PermutationInvariant) {
  std::mt19937_64 rng(4);
  const CodeMatrix u = testing::random_matrix(rng, 6, 4);
  const LabelMatrix y = testing::random_onehot(rng, 6, 3);
  const std::vector<size_t> perm{3, 5, 0, 1, 4, 2};
  CodeMatrix pu;
  LabelMatrix py;
  for (size_t i : perm) {
    pu.push_back(u[i]);
    py.push_back(y[i]);
  }
  EXPECT_NEAR(pairwise_loss(u, similarity_matrix(y)),
              pairwise_loss(pu, similarity_matrix(py)), 1e-14);
}

TEST(PairwiseLoss, Errors) {
  EXPECT_THROW(pairwise_loss({{1, 1}}, similarity_matrix({{1}})), ArgumentError);
  EXPECT_THROW(pairwise_loss({{1, 1}, {1, 0}}, similarity_matrix({{1}, {1}, {1}})),
               ShapeError);
}

// ------------------------------------------------------------ mutual loss

TEST(MutualLoss, ClosedForms) {
  std::mt19937_64 rng(5);
  const CodeMatrix u = testing::random_matrix(rng, 7, 9);
  EXPECT_EQ(mutual_loss(u, u, DetachSide::kPairwise), 0.0);
  CodeMatrix neg = u;
  for (auto& r : neg) {
    for (auto& x : r) x = -x;
  }
  EXPECT_NEAR(mutual_loss(u, neg, DetachSide::kCenter), 2.0, 1e-15);
  EXPECT_NEAR(mutual_loss({{1, 0}}, {{0, 1}}, DetachSide::kCenter), 1.0, 0.0);
}

TEST(MutualLoss, RangeAndOracle) {
  std::mt19937_64 rng(6);
  for (int t = 0; t < 100; ++t) {
    const CodeMatrix a = testing::random_matrix(rng, 4, 5);
    const CodeMatrix b = testing::random_matrix(rng, 4, 5);
    const double l = mutual_loss(a, b, DetachSide::kPairwise);
    EXPECT_GE(l, 0.0);
    EXPECT_LE(l, 2.0);
    EXPECT_NEAR(l, oracle_mutual(a, b), 1e-14);
  }
}

TEST(MutualLoss, GradientOnlyOnLiveSide) {
  std::mt19937_64 rng(7);
  const CodeMatrix a = testing::random_matrix(rng, 4, 5);
  const CodeMatrix b = testing::random_matrix(rng, 4, 5);
  CodeMatrix gc, gp;
  mutual_loss(a, b, DetachSide::kPairwise, &gc, &gp);
  for (const auto& r : gp) {
    for (double v : r) EXPECT_EQ(v, 0.0);
  }
  expect_close(gc, numeric_grad([&](const CodeMatrix& v) {
                 return oracle_mutual(v, b);
               }, a), 1e-8);
  mutual_loss(a, b, DetachSide::kCenter, &gc, &gp);
  for (const auto& r : gc) {
    for (double v : r) EXPECT_EQ(v, 0.0);
  }
  expect_close(gp, numeric_grad([&](const CodeMatrix& v) {
                 return oracle_mutual(a, v);
               }, b), 1e-8);
}

TEST(MutualLoss, Errors) {
  EXPECT_THROW(mutual_loss({{0, 0}}, {{1, 0}}, DetachSide::kCenter), NumericError);
  EXPECT_THROW(mutual_loss({{1, 0}}, {{1, 0}, {0, 1}}, DetachSide::kCenter),
               ShapeError);
  EXPECT_THROW(mutual_loss({}, {}, DetachSide::kCenter), ArgumentError);
}

TEST(Cosine, SelfIsExactlyOne) {
  std::mt19937_64 rng(8);
  for (int t = 0; t < 100; ++t) {
    const Vec v = testing::random_vector(rng, 13, 10.0);
    EXPECT_EQ(cosine(v, v), 1.0);
  }
  EXPECT_THROW(cosine({0, 0}, {1, 1}), NumericError);
}

// ------------------------------------------------------------- total loss

TEST(TotalLoss, WeightedSum) {
  EXPECT_EQ(total_loss(0.5, 0.2, 0.1, {0, 0, 0}), 0.0);
  EXPECT_NEAR(total_loss(0.5, 0.2, 0.1, LossWeights{}), 2.3, 1e-15);
  EXPECT_EQ(total_loss(0.5, 0.2, 0.1, {1, 0, 0}), 0.5);
  const LossWeights defaults;
  EXPECT_EQ(defaults.center, 4.0);
  EXPECT_EQ(defaults.pairwise, 1.0);
  EXPECT_EQ(defaults.mutual, 1.0);
}

TEST(LossWeights, Validation) {
  EXPECT_NO_THROW(LossWeights{}.validate());
  EXPECT_THROW((LossWeights{-1, 1, 1}.validate()), ConfigError);
  EXPECT_THROW((LossWeights{1, NAN, 1}.validate()), ConfigError);
  EXPECT_THROW((LossWeights{1, 1, INFINITY}.validate()), ConfigError);
}

TEST(DetachSideNames, Print) {
  EXPECT_EQ(to_string(DetachSide::kPairwise), "pairwise");
  EXPECT_EQ(to_string(DetachSide::kCenter), "center");
}

}  // namespace
}  // namespace unihash
