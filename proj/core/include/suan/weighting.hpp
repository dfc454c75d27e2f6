#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "suan/matrix.hpp"

namespace suan {

struct MarginResult {
  std::size_t pseudo_label = 0;
  double margin = 0.0;  ///< top-1 minus top-2 probability, in [0, 1]
};

/// Pseudo-label (argmax, smallest index on ties) and its prediction margin.
MarginResult prediction_margin(std::span<const double> probs);

/// Per-class mean margin, grouped by pseudo-label. Classes that receive no
/// rows contribute 0. An empty batch yields the all-zero vector.
std::vector<double> batch_margin_vector(const Matrix& probs, std::size_t num_classes);

/// Running mean of accepted batch margin vectors, one slot per source class.
///
/// Starts at the all-zero vector with a zero update count. Every `update`
/// folds a new batch vector in as V ← (t·V + m) / (t + 1), so after n updates
/// the register holds the arithmetic mean of the n vectors.
class MarginRegister {
 public:
  explicit MarginRegister(std::size_t num_classes);
  /// Restore a saved state; throws ArgumentError on out-of-range entries or a
  /// nonzero vector paired with a zero count.
  MarginRegister(std::vector<double> values, std::size_t update_count);

  void update(std::span<const double> batch_margins);

  std::span<const double> values() const noexcept { return values_; }
  std::size_t update_count() const noexcept { return update_count_; }
  std::size_t num_classes() const noexcept { return values_.size(); }

  friend bool operator==(const MarginRegister&, const MarginRegister&) = default;

 private:
  std::vector<double> values_;
  std::size_t update_count_ = 0;
};

/// Class-wise source weights: sample i gets register[yᵢ].
std::vector<double> source_weights(const MarginRegister& reg,
                                   std::span<const std::size_t> labels);

/// Confidence weights for target rows: the row maximum.
std::vector<double> target_weights(const Matrix& probs);

struct NormalizationConfig {
  int w0 = 0;  ///< activation threshold, 0 or 1
};

/// Batch normalisation of raw weights.
///
/// Min-max scaling to w̄ ∈ [0, 1], rescaling by b / Σw̄ so the batch mean is
/// one, then max(· − w0, 0). A batch whose weights are all equal maps to
/// w̄ = 1 everywhere. Raw weights may be negative (the entropy-based baseline
/// produces them). Throws ArgumentError on an empty batch, a non-finite
/// weight, or w0 ∉ {0, 1}.
std::vector<double> normalize_weights(std::span<const double> weights,
                                      NormalizationConfig config);

}  // namespace suan
