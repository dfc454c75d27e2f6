#include <gtest/gtest.h>

#include <numeric>
#include <vector>

#include "oracles.hpp"
#include "suan/errors.hpp"
#include "suan/rng.hpp"
#include "suan/weighting.hpp"

using namespace suan;

namespace {

std::vector<double> norm(const std::vector<double>& w, int w0) {
  return normalize_weights(w, {w0});
}

}  // namespace

TEST(PredictionMargin, TopOneMinusTopTwo) {
  const std::vector<double> a{0.7, 0.2, 0.1};
  EXPECT_EQ(prediction_margin(a).pseudo_label, 0u);
  EXPECT_NEAR(prediction_margin(a).margin, 0.5, 1e-15);
  const std::vector<double> uniform{1.0 / 3, 1.0 / 3, 1.0 / 3};
  EXPECT_EQ(prediction_margin(uniform).pseudo_label, 0u);
  EXPECT_EQ(prediction_margin(uniform).margin, 0.0);
  const std::vector<double> one_hot{0.0, 1.0, 0.0};
  EXPECT_EQ(prediction_margin(one_hot).pseudo_label, 1u);
  EXPECT_EQ(prediction_margin(one_hot).margin, 1.0);
  const std::vector<double> too_short{1.0};
  EXPECT_THROW(prediction_margin(too_short), ArgumentError);
}

TEST(BatchMarginVector, GroupsByPseudoLabel) {
  const auto v = batch_margin_vector(Matrix::from_rows({{0.9, 0.1}, {0.7, 0.3}}), 2);
  EXPECT_NEAR(v[0], 0.6, 1e-15);
  EXPECT_EQ(v[1], 0.0);
  const auto tie = batch_margin_vector(Matrix::from_rows({{0.5, 0.5}}), 2);
  EXPECT_EQ(tie, (std::vector<double>{0.0, 0.0}));
  const auto both = batch_margin_vector(Matrix::from_rows({{0.8, 0.2}, {0.2, 0.8}}), 2);
  EXPECT_NEAR(both[0], 0.6, 1e-15);
  EXPECT_NEAR(both[1], 0.6, 1e-15);
  EXPECT_EQ(batch_margin_vector(Matrix(0, 3), 3), std::vector<double>(3, 0.0));
}

TEST(BatchMarginVector, MatchesGroupingOracleOnRandomBatches) {
  Rng rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t k = 2 + rng.below(5), n = 1 + rng.below(30);
    oracle::Rows rows(n);
    Matrix probs(n, k);
    for (std::size_t r = 0; r < n; ++r) {
      std::vector<double> z(k);
      for (double& v : z) v = 2.0 * rng.normal();
      rows[r] = oracle::softmax(z);
      for (std::size_t c = 0; c < k; ++c) probs(r, c) = rows[r][c];
    }
    const auto got = batch_margin_vector(probs, k);
    const auto want = oracle::batch_margins(rows, k);
    for (std::size_t c = 0; c < k; ++c) EXPECT_NEAR(got[c], want[c], 1e-12);
  }
}

TEST(MarginRegister, RunningMeanExamples) {
  MarginRegister reg(2);
  reg.update(std::vector<double>{0.4, 0.2});
  EXPECT_EQ(std::vector<double>(reg.values().begin(), reg.values().end()),
            (std::vector<double>{0.4, 0.2}));
  reg.update(std::vector<double>{0.2, 0.0});
  EXPECT_NEAR(reg.values()[0], 0.3, 1e-15);
  EXPECT_NEAR(reg.values()[1], 0.1, 1e-15);
  EXPECT_EQ(reg.update_count(), 2u);
  EXPECT_THROW(reg.update(std::vector<double>{0.1}), ShapeError);
}

TEST(MarginRegister, RestoredStateIsValidated) {
  EXPECT_NO_THROW(MarginRegister({0.3, 0.1}, 2));
  EXPECT_THROW(MarginRegister({0.3, 0.1}, 0), ArgumentError);
  EXPECT_THROW(MarginRegister({1.5, 0.1}, 2), ArgumentError);
}

TEST(MarginRegister, EqualsBruteForceMeanOverLongSequences) {
  Rng rng(99);
  const std::size_t k = 6;
  MarginRegister reg(k);
  std::vector<std::vector<double>> stored;
  for (int t = 0; t < 1000; ++t) {
    std::vector<double> m(k);
    for (double& v : m) v = rng.uniform();
    stored.push_back(m);
    reg.update(m);
  }
  for (std::size_t c = 0; c < k; ++c) {
    long double s = 0.0L;
    for (const auto& m : stored) s += m[c];
    EXPECT_NEAR(reg.values()[c], static_cast<double>(s / stored.size()), 1e-12);
  }
}

TEST(SourceWeights, RegisterLookup) {
  const MarginRegister reg({0.3, 0.1}, 1);
  const std::vector<std::size_t> labels{0, 1, 0};
  EXPECT_EQ(source_weights(reg, labels), (std::vector<double>{0.3, 0.1, 0.3}));
  const std::vector<std::size_t> bad{2};
  EXPECT_THROW(source_weights(reg, bad), IndexError);
  EXPECT_EQ(source_weights(MarginRegister(3), labels), std::vector<double>(3, 0.0));
}

TEST(TargetWeights, RowMaxima) {
  const auto w = target_weights(Matrix::from_rows({{0.7, 0.2, 0.1}, {0.4, 0.35, 0.25}}));
  EXPECT_EQ(w, (std::vector<double>{0.7, 0.4}));
  EXPECT_EQ(target_weights(Matrix(1, 4, 0.25)), std::vector<double>{0.25});
}

TEST(NormalizeWeights, ReferenceExamples) {
  EXPECT_EQ(norm({2, 4, 6}, 0), (std::vector<double>{0, 1, 2}));
  EXPECT_EQ(norm({2, 4, 6}, 1), (std::vector<double>{0, 0, 1}));
  EXPECT_EQ(norm({5, 5, 5}, 0), (std::vector<double>{1, 1, 1}));
  EXPECT_EQ(norm({5, 5, 5}, 1), (std::vector<double>{0, 0, 0}));
}

TEST(NormalizeWeights, Errors) {
  EXPECT_THROW(norm({}, 0), ArgumentError);
  EXPECT_THROW(norm({1.0, 2.0}, 2), ArgumentError);
  EXPECT_THROW(norm({1.0, std::nan("")}, 0), ArgumentError);
}

TEST(NormalizeWeights, MatchesOracleAndInvariantsOnRandomBatches) {
  Rng rng(123);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> w(1 + rng.below(50));
    for (double& v : w) v = rng.uniform(-2.0, 2.0);
    for (int w0 : {0, 1}) {
      const auto got = norm(w, w0);
      const auto want = oracle::normalize(w, w0);
      for (std::size_t i = 0; i < w.size(); ++i) {
        EXPECT_GE(got[i], 0.0);
        EXPECT_NEAR(got[i], want[i], 1e-12);
      }
    }
    const auto out = norm(w, 0);
    const double mean = std::accumulate(out.begin(), out.end(), 0.0) / out.size();
    EXPECT_NEAR(mean, 1.0, 1e-9);
  }
}

TEST(NormalizeWeights, PositiveAffineInvariance) {
  Rng rng(321);
  for (int trial = 0; trial < 200; ++trial) {
    // Dyadic inputs and power-of-two scales keep every intermediate exact,
    // so the outputs must agree bit for bit.
    std::vector<double> w(2 + rng.below(20));
    for (double& v : w) v = static_cast<double>(rng.below(64));
    const double scale = std::ldexp(1.0, static_cast<int>(rng.below(5)));
    const double shift = static_cast<double>(rng.below(16));
    std::vector<double> moved(w);
    for (double& v : moved) v = scale * v + shift;
    for (int w0 : {0, 1}) EXPECT_EQ(norm(w, w0), norm(moved, w0));
  }
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> w(2 + rng.below(20));
    for (double& v : w) v = rng.uniform();
    const double scale = rng.uniform(0.1, 10.0), shift = rng.uniform(-5.0, 5.0);
    std::vector<double> moved(w);
    for (double& v : moved) v = scale * v + shift;
    const auto a = norm(w, 0), b = norm(moved, 0);
    for (std::size_t i = 0; i < w.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-12);
  }
}
