#pragma once

#include <filesystem>
#include <string>

#include "suan/bound.hpp"
#include "suan/config.hpp"
#include "suan/eval.hpp"
#include "suan/trainer.hpp"

namespace suan {

/// Report floats: 9 significant digits.
std::string format_number(double value);

/// Headline numbers of one (config, seed) run.
struct RunSummary {
  double averaged_accuracy = 0.0;
  double common_accuracy = 0.0;   ///< mean over common classes present in the target
  double unknown_accuracy = 0.0;  ///< NaN when the target has no private classes
  GroupWeightMeans weights;       ///< means of the evaluation weight groups
  std::size_t register_updates = 0;
  double source_error = 0.0;
  int w0 = 0;
};

/// Bound inputs resolved for a trained run plus the diagnostic target error.
struct BoundReport {
  BoundInputs inputs;
  double alpha = 0.0;
  double m = 0.0;
  BoundDecomposition decomposition;
  double empirical_target_risk = 0.0;  ///< closed-set error on target common rows
};

/// Fill every bound input the settings leave open from the trained model.
BoundReport resolve_bound(const BoundSettings& settings, const SuanModel& model,
                          const Scenario& scenario, const TrainConfig& train,
                          std::uint64_t seed);

/// Train, evaluate and write trace.csv, eval_report.json, weight_groups.csv,
/// register.json, bound.json, model.json and config.yaml into `dir`.
RunSummary run_single(const ExperimentConfig& config, const std::filesystem::path& dir);

/// A single run into config.out, or, with a sweep, one run per (value, seed)
/// into config.out/<parameter>=<value>/seed_<seed> plus
/// config.out/sweep_summary.csv. Throws IoError when a directory cannot be
/// created or a file cannot be written.
void run_experiment(const ExperimentConfig& config);

/// Model weights as JSON (full double precision, so loading is exact).
std::string model_to_json(const SuanModel& model);
SuanModel model_from_json(const std::string& text);

}  // namespace suan
