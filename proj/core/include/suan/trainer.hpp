#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "suan/matrix.hpp"
#include "suan/mlp.hpp"
#include "suan/scenario.hpp"
#include "suan/weighting.hpp"

namespace suan {

enum class TrainMode { kSuan, kSourceOnly, kUnweightedAdversarial, kUanWeighting };

std::string_view to_string(TrainMode mode);
/// Throws ArgumentError on an unknown name.
TrainMode parse_train_mode(std::string_view name);

enum class GrlSchedule { kConstant, kLinearRamp };
enum class GateStatistic { kBatchEma, kFullSourceSet };

std::string_view to_string(GrlSchedule s);
GrlSchedule parse_grl_schedule(std::string_view name);
std::string_view to_string(GateStatistic g);
GateStatistic parse_gate_statistic(std::string_view name);

struct NetworkShape {
  std::size_t feature_hidden = 32;
  std::size_t feature_out = 16;
  std::size_t domain_hidden = 16;
  bool normalized_domain_input = true;  ///< D reads the L2-normalised features G reads

  friend bool operator==(const NetworkShape&, const NetworkShape&) = default;
};

struct TrainConfig {
  std::size_t max_steps = 2000;
  double epsilon = 0.1;  ///< register updates only while the source error is below this
  double learning_rate = 0.05;
  std::size_t batch_size = 36;  ///< per domain
  std::optional<int> w0;        ///< unset: 1 when ξ ≥ 0.3, else 0
  double grl_lambda = 0.1;
  GrlSchedule grl_schedule = GrlSchedule::kConstant;
  GateStatistic gate = GateStatistic::kBatchEma;
  double gate_ema_decay = 0.9;
  TrainMode mode = TrainMode::kSuan;
  NetworkShape shape;
  std::uint64_t seed = 0;

  void validate() const;

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

/// w0 from the overlap of the label sets when the config leaves it unset.
int resolve_w0(const TrainConfig& config, const LabelSets& sets);

/// Feature extractor F, classifier G over the source classes, adversarial
/// domain classifier D and, for the entropy-weighting baseline only, a
/// non-adversarial domain classifier D′.
struct SuanModel {
  MlpParams feature;
  MlpParams classifier;
  MlpParams domain;
  std::optional<MlpParams> domain_prime;
  bool normalized_domain_input = true;

  static SuanModel create(std::size_t input_dim, std::size_t num_source_classes,
                          const NetworkShape& shape, bool with_domain_prime, Rng& rng);

  /// Throws ShapeError unless G and D (and D′) consume F's output width.
  void validate() const;

  friend bool operator==(const SuanModel&, const SuanModel&) = default;
};

/// Class probabilities G(l2_normalize(F(x))), one row per input.
Matrix predict_proba(const SuanModel& model, const Matrix& inputs);
/// Raw features F(x).
Matrix extract_features(const SuanModel& model, const Matrix& inputs);
/// Features as the domain classifiers read them.
Matrix domain_features(const SuanModel& model, const Matrix& inputs);

struct ClassifierObjective {
  double loss = 0.0;
  GradientSet feature_grad;
  GradientSet classifier_grad;
  Matrix probs;
};

/// Mean cross-entropy of G(l2_normalize(F(x))) on labelled source rows.
ClassifierObjective classifier_objective(const SuanModel& model, const Matrix& inputs,
                                         std::span<const std::size_t> labels);

/// How the domain loss gradient reaches the feature extractor.
enum class FeatureRouting {
  kReversed,  ///< through the gradient reversal layer: scaled by −λ
  kPlain,     ///< ungated, as if F were minimising E_D
};

struct DomainObjective {
  double loss = 0.0;
  GradientSet domain_grad;   ///< descent direction for D
  GradientSet feature_grad;  ///< for F, routed as requested
};

/// E_D = −mean_s wˢ·log D(F(x)) − mean_t wᵗ·log(1 − D(F(x))).
/// Source rows carry domain label 1, target rows 0. Throws ArgumentError on
/// a negative weight.
DomainObjective domain_objective(const SuanModel& model, const Matrix& source_inputs,
                                 const Matrix& target_inputs,
                                 std::span<const double> source_weights,
                                 std::span<const double> target_weights, double grl_lambda,
                                 FeatureRouting routing = FeatureRouting::kReversed);

/// Fraction of rows whose argmax prediction differs from the label.
double source_error(const SuanModel& model, const Dataset& data);

struct UanWeights {
  std::vector<double> source;
  std::vector<double> target;
};

/// Entropy/D′ weights: wˢ = H(ŷ)/log|C_s| − d̂′(x), wᵗ = d̂′(x) − H(ŷ)/log|C_s|.
/// Throws ConfigError when the model has no D′.
UanWeights uan_baseline_weights(const SuanModel& model, const Matrix& source_inputs,
                                const Matrix& target_inputs);

/// Pure form of the above, from class probabilities and D′ outputs.
double uan_source_weight(std::span<const double> probs, double domain_prime_prob);
double uan_target_weight(std::span<const double> probs, double domain_prime_prob);

/// Mean weights over the four label groups; labels are read for diagnostics
/// only. NaN when a group is absent from the batch.
struct GroupWeightMeans {
  double source_common = 0.0;
  double source_private = 0.0;
  double target_common = 0.0;
  double target_private = 0.0;
};

struct TraceRecord {
  std::size_t step = 0;
  double classifier_loss = 0.0;  ///< E_G
  double domain_loss = 0.0;      ///< E_D (0 in source-only mode)
  double batch_source_error = 0.0;
  double gate_statistic = 0.0;  ///< compared against ε
  bool register_updated = false;
  std::size_t register_updates = 0;
  double grl_lambda = 0.0;
  GroupWeightMeans weights;
  std::vector<double> register_values;
};

struct TrainTrace {
  std::vector<TraceRecord> records;
};

/// Mutable training state: the model, the register, and the gate statistic.
struct TrainerState {
  SuanModel model;
  MarginRegister margin_register;
  std::optional<double> error_ema;
  std::size_t step = 0;
};

/// One labelled batch per domain. Target labels are never read by the
/// update; they only feed the diagnostic weight means in the trace.
struct StepBatches {
  const Dataset& source;
  const Dataset& target;
  const LabelSets* label_sets = nullptr;   ///< diagnostics only
  const Dataset* full_source = nullptr;    ///< required for GateStatistic::kFullSourceSet
};

/// One iteration of the training loop in the configured mode. `w0` is the
/// resolved activation threshold.
TraceRecord train_step(TrainerState& state, const StepBatches& batches,
                       const TrainConfig& config, int w0);

struct FitResult {
  SuanModel model;
  MarginRegister margin_register;
  TrainTrace trace;
  int w0 = 0;
};

/// Run max_steps iterations over class-balanced source batches and shuffled
/// target batches.
FitResult fit(const Scenario& scenario, const TrainConfig& config);

}  // namespace suan
