#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "suan/bound.hpp"
#include "suan/errors.hpp"
#include "suan/rng.hpp"
#include "suan/trainer.hpp"

using namespace suan;

TEST(ComplexityTerm, ClosedFormValue) {
  EXPECT_NEAR(complexity_term(2, 1.0, 36.0, 0.05), 2.3326, 5e-5);
  EXPECT_NEAR(complexity_term(2, 1.0, 36.0, 0.05),
              4.0 * std::sqrt((2.0 * std::log(72.0) + std::log(40.0)) / 36.0), 1e-15);
}

TEST(ComplexityTerm, MatchesOracleOverAGrid) {
  for (int d : {1, 3, 7})
    for (double g : {0.5, 1.0, 1.5, 4.0})
      for (double m : {1.0, 12.0, 36.0, 500.0})
        EXPECT_NEAR(complexity_term(d, g, m, 0.05), oracle::complexity(d, g, m, 0.05), 1e-12);
}

TEST(ComplexityTerm, TargetClassCountBeyondSourceDoesNotMatter) {
  for (double g : {0.1, 0.5, 0.99})
    EXPECT_EQ(complexity_term(3, g, 24.0, 0.05), complexity_term(3, 1.0, 24.0, 0.05));
  EXPECT_LT(complexity_term(3, 1.0, 144.0, 0.05), complexity_term(3, 1.0, 36.0, 0.05));
}

TEST(ComplexityTerm, DomainErrors) {
  EXPECT_THROW(complexity_term(0, 1.0, 36.0, 0.05), ArgumentError);
  EXPECT_THROW(complexity_term(2, 1.0, 0.0, 0.05), ArgumentError);
  EXPECT_THROW(complexity_term(2, 1.0, 36.0, 1.0), ArgumentError);
  EXPECT_THROW(complexity_term(2, 1.0, 0.4, 0.05), ArgumentError);
}

TEST(RiskBound, AdditiveComposition) {
  BoundInputs in;
  in.vc_dim = 2;
  EXPECT_EQ(risk_bound(in), complexity_term(2, 1.0, 36.0, 0.05));
  BoundInputs full = in;
  full.empirical_divergence = 2.0;
  EXPECT_DOUBLE_EQ(risk_bound(full), risk_bound(in) + 1.0);
  full.source_risk = 0.05;
  full.empirical_divergence = 0.4;
  full.lambda = 0.1;
  EXPECT_NEAR(risk_bound(full), 0.05 + 0.2 + oracle::complexity(2, 1.0, 36.0, 0.05) + 0.1,
              1e-12);
  const auto d = decompose_bound(full);
  EXPECT_EQ(d.half_divergence, 0.2);
  EXPECT_EQ(d.total, risk_bound(full));
  full.empirical_divergence = 2.5;
  EXPECT_THROW(risk_bound(full), ArgumentError);
}

TEST(RiskBound, MonotoneInEachRiskTerm) {
  BoundInputs base;
  for (double step : {0.0, 0.1, 0.3}) {
    BoundInputs a = base, b = base, c = base;
    a.source_risk = step;
    b.empirical_divergence = step;
    c.lambda = step;
    EXPECT_GE(risk_bound(a), risk_bound(base));
    EXPECT_GE(risk_bound(b), risk_bound(base));
    EXPECT_GE(risk_bound(c), risk_bound(base));
  }
}

TEST(ProxyDivergence, IdenticalSetsAreIndistinguishable) {
  Rng rng(1);
  Matrix x(200, 2);
  for (double& v : x.values()) v = rng.normal();
  EXPECT_NEAR(proxy_divergence(x, x, 7), 0.0, 0.3);
}

TEST(ProxyDivergence, FarCloudsAreFullySeparated) {
  Rng rng(2);
  Matrix a(150, 2), b(150, 2);
  for (std::size_t i = 0; i < 150; ++i) {
    a(i, 0) = rng.normal() - 5.0;
    a(i, 1) = rng.normal();
    b(i, 0) = rng.normal() + 5.0;
    b(i, 1) = rng.normal();
  }
  const double d = proxy_divergence(a, b, 7);
  EXPECT_NEAR(d, 2.0, 0.2);
  EXPECT_EQ(d, proxy_divergence(a, b, 7));
  EXPECT_THROW(proxy_divergence(Matrix(0, 2), b, 7), ArgumentError);
}

TEST(LambdaOracle, ZeroShiftZeroNoiseIsNearZero) {
  ScenarioConfig cfg;
  cfg.noise_scale = 0.0;
  cfg.shift = DomainShift{0.0, {0, 1}, {}};
  const Scenario sc = build_scenario(cfg);
  const double lambda = lambda_oracle(sc.source, sc.target, sc.label_sets, 3);
  EXPECT_GE(lambda, 0.0);
  EXPECT_NEAR(lambda, 0.0, 0.05);
}

TEST(LambdaOracle, PermutedLabelsApproachChance) {
  ScenarioConfig cfg;
  const Scenario sc = build_scenario(cfg);
  Dataset src = sc.source, tgt = sc.target;
  Rng rng(5);
  rng.shuffle(src.labels);
  rng.shuffle(tgt.labels);
  // Shuffling mixes private labels in, so restrict both sides to common rows.
  auto common = [&](std::size_t c) { return sc.label_sets.is_common(c); };
  const Dataset s = src.filter(common), t = tgt.filter(common);
  const double k = static_cast<double>(sc.label_sets.common().size());
  const double chance = 2.0 * (1.0 - 1.0 / k);
  const double lambda = lambda_oracle(s, t, sc.label_sets, 3);
  EXPECT_GT(lambda, chance - 0.35);
  EXPECT_LE(lambda, 2.0);
}

TEST(LambdaOracle, EmptyCommonSetIsRejected) {
  ScenarioConfig cfg;
  cfg.num_common = 0;
  cfg.num_source_private = 2;
  cfg.num_target_private = 2;
  const Scenario sc = build_scenario(cfg);
  EXPECT_THROW(lambda_oracle(sc.source, sc.target, sc.label_sets, 1), ArgumentError);
}

TEST(DefaultVcDim, ClampedParameterCountOverTen) {
  Rng rng(1);
  NetworkShape shape;
  const SuanModel model = SuanModel::create(3, 6, shape, false, rng);
  const auto expected = std::min<std::size_t>(10, std::max<std::size_t>(
                                                      1, model.domain.parameter_count() / 10));
  EXPECT_EQ(default_vc_dim(model), static_cast<int>(expected));
}

TEST(PropertyScan, TargetClassSweepReproducesTheReportedSetup) {
  ScanSetup setup;  // d=3, δ=0.05, m=36, |C_s|=15, |C|=10
  const auto r = property_scan(setup, ScanMode::kVaryTargetClasses, {10, 13, 15, 20, 25, 26});
  EXPECT_TRUE(r.holds);
  ASSERT_EQ(r.rows.size(), 6u);
  EXPECT_EQ(r.rows[0].verdict, Verdict::kStart);
  EXPECT_EQ(r.rows[1].verdict, Verdict::kNonDecreasing);
  for (std::size_t i = 3; i < 6; ++i) {
    EXPECT_EQ(r.rows[i].verdict, Verdict::kConstant);
    EXPECT_EQ(r.rows[i].bound, r.rows[2].bound);
  }
  for (const auto& row : r.rows) {
    const double gamma = 15.0 / row.parameter;
    EXPECT_DOUBLE_EQ(row.gamma, gamma);
    EXPECT_DOUBLE_EQ(row.m_prime, 10.0 / 15.0 * 36.0);
    EXPECT_NEAR(row.bound, oracle::complexity(3, gamma, 24.0, 0.05), 1e-12);
  }
}

TEST(PropertyScan, CommonFractionSweepDecreasesInsideTheRegion) {
  ScanSetup setup;
  std::vector<double> grid;
  for (int i = 1; i <= 10; ++i) grid.push_back(0.1 * i);
  const auto r = property_scan(setup, ScanMode::kVaryCommonClasses, grid);
  EXPECT_TRUE(r.holds);
  const double threshold = std::numbers::e / (2.0 * 36.0);
  for (std::size_t i = 1; i < r.rows.size(); ++i) {
    const bool inside = grid[i - 1] >= threshold && grid[i] >= threshold;
    EXPECT_EQ(r.rows[i].verdict, inside ? Verdict::kDecreasing : Verdict::kOutsideRegion);
    if (inside) EXPECT_LT(r.rows[i].bound, r.rows[i - 1].bound);
  }
}

TEST(PropertyScan, VerdictsAreLiteralComparisons) {
  // Small d and m push the γ > 1 region toward a falling bound; whatever the
  // closed form does, each verdict must restate the comparison of the values.
  for (int d : {1, 2, 3, 6})
    for (double m : {4.0, 36.0}) {
      ScanSetup setup;
      setup.vc_dim = d;
      setup.m = m;
      const auto r = property_scan(setup, ScanMode::kVaryTargetClasses, {10, 11, 12, 13, 14, 15, 20});
      bool holds = true;
      for (std::size_t i = 1; i < r.rows.size(); ++i) {
        const double prev = r.rows[i - 1].bound, cur = r.rows[i].bound;
        const bool flat = r.rows[i - 1].gamma <= 1.0 && r.rows[i].gamma <= 1.0;
        const bool ok = flat ? cur == prev : cur >= prev;
        holds = holds && ok;
        EXPECT_EQ(r.rows[i].verdict == Verdict::kViolated, !ok);
      }
      EXPECT_EQ(r.holds, holds);
    }
}

TEST(PropertyScan, SinglePointAndErrors) {
  ScanSetup setup;
  const auto r = property_scan(setup, ScanMode::kVaryTargetClasses, {15});
  EXPECT_TRUE(r.holds);
  EXPECT_EQ(r.rows.at(0).verdict, Verdict::kStart);
  EXPECT_THROW(property_scan(setup, ScanMode::kVaryTargetClasses, {}), ArgumentError);
  EXPECT_THROW(property_scan(setup, ScanMode::kVaryCommonClasses, {0.5, 0.2}), ArgumentError);
  EXPECT_EQ(parse_scan_mode("vary_common_classes"), ScanMode::kVaryCommonClasses);
}

TEST(ProxyDivergence, TrainingShrinksTheCommonClassGap) {
  ScenarioConfig sc_cfg;
  const Scenario sc = build_scenario(sc_cfg);
  auto common = [&](std::size_t c) { return sc.label_sets.is_common(c); };
  const Dataset s = sc.source.filter(common), t = sc.target.filter(common);
  TrainConfig cfg;
  cfg.seed = 1;
  cfg.max_steps = 1;
  const SuanModel before = fit(sc, cfg).model;
  cfg.max_steps = 2000;
  const SuanModel after = fit(sc, cfg).model;
  const double d_before =
      proxy_divergence(extract_features(before, s.features), extract_features(before, t.features), 9);
  const double d_after =
      proxy_divergence(extract_features(after, s.features), extract_features(after, t.features), 9);
  EXPECT_LT(d_after, d_before);
}
