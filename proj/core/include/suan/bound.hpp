#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

#include "suan/matrix.hpp"
#include "suan/scenario.hpp"

namespace suan {

struct SuanModel;

/// Inputs of the target-risk bound. α = |C|/|C_s| enters through m′ = α·m.
struct BoundInputs {
  int vc_dim = 3;                   ///< d ≥ 1
  double gamma = 1.0;               ///< |C_s| / |C_t|
  double m_prime = 36.0;            ///< α·m
  double delta = 0.05;              ///< confidence parameter in (0, 1)
  double source_risk = 0.0;         ///< ε_S(h) in [0, 1]
  double empirical_divergence = 0.0;  ///< d̂ in [0, 2]
  double lambda = 0.0;              ///< combined ideal risk, ≥ 0

  void validate() const;
  friend bool operator==(const BoundInputs&, const BoundInputs&) = default;
};

/// 4·sqrt((d·ln(2·max{1,γ}·m′) + ln(2/δ)) / (max{1,γ}·m′)).
double complexity_term(int vc_dim, double gamma, double m_prime, double delta);

/// The four addends of the bound and their sum.
struct BoundDecomposition {
  double source_risk = 0.0;
  double half_divergence = 0.0;
  double complexity = 0.0;
  double lambda = 0.0;
  double total = 0.0;
};

BoundDecomposition decompose_bound(const BoundInputs& inputs);

/// ε_S + d̂/2 + complexity_term + λ.
double risk_bound(const BoundInputs& inputs);

/// Training budget of the small discriminators and joint classifiers used by
/// the two estimators below.
struct EstimatorConfig {
  std::size_t hidden = 16;
  std::size_t steps = 600;
  std::size_t batch_size = 32;
  double learning_rate = 0.1;
  double train_fraction = 0.5;  ///< proxy divergence only: share of each set used to train

  void validate() const;
};

/// Proxy for the H∆H divergence: a fresh logistic domain discriminator is
/// trained on a split of both sets and scored on the held-out remainder.
/// Returns 2·(1 − 2·err) clamped to [0, 2], where err is the held-out error
/// averaged over the two domains (so unequal set sizes cannot bias it).
double proxy_divergence(const Matrix& source_features, const Matrix& target_features,
                        std::uint64_t seed, const EstimatorConfig& config = {});

/// Upper estimate of the combined ideal risk: one classifier trained jointly on
/// the common-class rows of both domains (target rows use oracle labels),
/// returning its source error plus its target error. Diagnostic only.
double lambda_oracle(const Dataset& source, const Dataset& target, const LabelSets& sets,
                     std::uint64_t seed, const EstimatorConfig& config = {});

/// Default VC-dimension input: parameter count of the smallest domain
/// discriminator divided by 10, clamped to [1, 10].
int default_vc_dim(const SuanModel& model);

enum class ScanMode { kVaryTargetClasses, kVaryCommonClasses };

std::string_view to_string(ScanMode mode);
ScanMode parse_scan_mode(std::string_view name);

struct ScanSetup {
  int vc_dim = 3;
  double delta = 0.05;
  double m = 36.0;  ///< per-domain sample count
  /// kVaryTargetClasses: fixed |C| and |C_s|; the grid lists |C_t|.
  std::size_t num_common = 10;
  std::size_t num_source = 15;
  /// kVaryCommonClasses: fixed γ; the grid lists α.
  double gamma = 1.0;
  /// Held fixed at every grid point.
  double source_risk = 0.0;
  double empirical_divergence = 0.0;
  double lambda = 0.0;
};

/// Outcome of comparing a grid point with its predecessor.
enum class Verdict {
  kStart,           ///< first point, nothing to compare
  kNonDecreasing,   ///< expected and observed: bound[i] ≥ bound[i−1]
  kConstant,        ///< expected and observed: bound[i] == bound[i−1]
  kDecreasing,      ///< expected and observed: bound[i] < bound[i−1]
  kOutsideRegion,   ///< the property makes no claim about this pair
  kViolated,        ///< the expected relation does not hold
};

std::string_view to_string(Verdict v);

struct ScanRow {
  double parameter = 0.0;  ///< |C_t| or α
  double gamma = 0.0;
  double alpha = 0.0;
  double m_prime = 0.0;
  double bound = 0.0;
  Verdict verdict = Verdict::kStart;
};

struct ScanResult {
  ScanMode mode = ScanMode::kVaryTargetClasses;
  std::vector<ScanRow> rows;
  bool holds = true;  ///< no row is kViolated
};

/// Evaluate the bound along the grid and compare each point with the previous.
///
/// kVaryTargetClasses: a pair whose points both have γ ≤ 1 must be exactly
/// equal; any other pair must be non-decreasing. kVaryCommonClasses: a pair
/// whose points both satisfy α ≥ e/(2·max{1,γ}·m) must strictly decrease;
/// other pairs are outside the region.
ScanResult property_scan(const ScanSetup& setup, ScanMode mode, const std::vector<double>& grid);

}  // namespace suan
