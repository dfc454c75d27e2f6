#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "suan/eval.hpp"
#include "suan/scenario.hpp"
#include "suan/trainer.hpp"

namespace suan {

/// Bound inputs the user pins; anything left unset is derived from the run
/// (ε_S from the source error, d̂ from the proxy divergence, λ from the joint
/// oracle, d from the discriminator size).
struct BoundSettings {
  std::optional<int> vc_dim;
  double delta = 0.05;
  std::optional<double> source_risk;
  std::optional<double> empirical_divergence;
  std::optional<double> lambda;

  friend bool operator==(const BoundSettings&, const BoundSettings&) = default;
};

/// One run per (value, seed). `parameter` is a dotted key such as
/// "scenario.num_target_private"; see sweepable_parameters().
struct SweepSpec {
  std::string parameter;
  std::vector<double> values;
  std::vector<std::uint64_t> seeds;

  friend bool operator==(const SweepSpec&, const SweepSpec&) = default;
};

/// Everything one invocation needs. `seed` drives both the scenario and the
/// trainer (scenario seed = seed, trainer seed = seed + 1); the per-section
/// seed fields are overwritten from it.
struct ExperimentConfig {
  std::uint64_t seed = 0;
  ScenarioConfig scenario;
  TrainConfig train;
  double threshold = kDefaultThreshold;
  BoundSettings bound;
  std::optional<SweepSpec> sweep;
  std::string out = "suan_out";

  /// Throws ConfigError naming the offending field.
  void validate() const;

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

/// Parse a YAML document. Missing keys keep their defaults; unknown keys are
/// rejected. Malformed YAML raises ParseError carrying the 1-based line;
/// semantic problems raise ConfigError.
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config_file(const std::string& path);

/// YAML text that parse_config maps back to an equal config. Floats use the
/// shortest representation that round-trips exactly.
std::string emit_config(const ExperimentConfig& config);

/// Dotted names accepted by SweepSpec::parameter.
const std::vector<std::string>& sweepable_parameters();

/// Copy of `config` with the named parameter set to `value`. Integer fields
/// require an integral value. Throws ConfigError for unknown names.
ExperimentConfig with_parameter(const ExperimentConfig& config, std::string_view parameter,
                                double value);

/// Copy with the seed applied to scenario and trainer.
ExperimentConfig with_seed(const ExperimentConfig& config, std::uint64_t seed);

}  // namespace suan
