#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "suan/scenario.hpp"
#include "suan/trainer.hpp"

namespace suan {

inline constexpr double kDefaultThreshold = 0.5;

/// A known class, or `unknown` when the confidence falls below threshold.
struct Prediction {
  std::optional<std::size_t> label;  ///< empty means unknown
  double confidence = 0.0;           ///< max class probability

  bool known() const noexcept { return label.has_value(); }
  friend bool operator==(const Prediction&, const Prediction&) = default;
};

/// Decision rule on a probability row: argmax when max ≥ threshold (ties to
/// the smallest index), unknown otherwise.
Prediction decide(std::span<const double> probs, double threshold);

Prediction infer(const SuanModel& model, std::span<const double> features, double threshold);
std::vector<Prediction> infer_batch(const SuanModel& model, const Matrix& inputs,
                                    double threshold);

/// Accuracy for one evaluation class. `label` empty denotes the merged
/// unknown class.
struct ClassAccuracy {
  std::optional<std::size_t> label;
  double accuracy = 0.0;
  std::size_t count = 0;

  friend bool operator==(const ClassAccuracy&, const ClassAccuracy&) = default;
};

/// Weights split by domain and commonness of the true label.
struct WeightGroups {
  std::vector<double> source_common;
  std::vector<double> source_private;
  std::vector<double> target_common;
  std::vector<double> target_private;

  std::size_t total() const {
    return source_common.size() + source_private.size() + target_common.size() +
           target_private.size();
  }
};

struct EvalReport {
  std::vector<ClassAccuracy> per_class;  ///< common classes ascending, then unknown
  double averaged_accuracy = 0.0;
  double threshold = kDefaultThreshold;
  WeightGroups weight_groups;
};

/// Per-class accuracy over the common classes plus one merged unknown class
/// (every target-private sample). Classes without evaluation samples are left
/// out of the average. Throws DataError for a sample labelled source-private
/// and ShapeError when the inputs are misaligned.
EvalReport uda_accuracy(std::span<const Prediction> predictions,
                        std::span<const std::size_t> true_labels, const LabelSets& sets,
                        double threshold = kDefaultThreshold);

struct TaggedWeight {
  double weight;
  Domain domain;
  std::size_t true_label;
};

WeightGroups weight_density_groups(std::span<const TaggedWeight> weights,
                                   const LabelSets& sets);

struct ClassGain {
  std::optional<std::size_t> label;
  double gain;
};

/// method accuracy − baseline accuracy per class; negative values flag
/// negative transfer. Throws ArgumentError unless both reports cover the same
/// classes in the same order.
std::vector<ClassGain> per_class_gain(const EvalReport& method, const EvalReport& baseline);

/// Weights the trained model assigns to every sample of both domains, each
/// domain normalised as one batch with w0 = 0. The raw weights are those the
/// training mode uses: register lookups and row maxima for the margin method,
/// entropy/D′ weights for that baseline, and all ones otherwise.
std::vector<TaggedWeight> model_sample_weights(const SuanModel& model,
                                               const MarginRegister& reg, TrainMode mode,
                                               const Dataset& source, const Dataset& target);

}  // namespace suan
