#pragma once

#include <cstddef>
#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "suan/matrix.hpp"
#include "suan/rng.hpp"

namespace suan {

enum class Domain { kSource, kTarget };

const char* to_string(Domain d);

/// Source, target, and the derived common/private partitions.
///
/// Class sets are kept sorted and duplicate-free. The three derived sets
/// (common, source-private, target-private) are pairwise disjoint.
class LabelSets {
 public:
  LabelSets(std::vector<std::size_t> source_classes, std::vector<std::size_t> target_classes);

  const std::vector<std::size_t>& source_classes() const noexcept { return source_; }
  const std::vector<std::size_t>& target_classes() const noexcept { return target_; }
  const std::vector<std::size_t>& common() const noexcept { return common_; }
  const std::vector<std::size_t>& source_private() const noexcept { return source_private_; }
  const std::vector<std::size_t>& target_private() const noexcept { return target_private_; }

  bool is_common(std::size_t c) const;
  bool is_source_private(std::size_t c) const;
  bool is_target_private(std::size_t c) const;

  /// |C| / |C_s|
  double alpha() const;
  /// |C| / |C_t|
  double beta() const;
  /// |C_s| / |C_t|
  double gamma() const;

  friend bool operator==(const LabelSets&, const LabelSets&) = default;

 private:
  std::vector<std::size_t> source_;
  std::vector<std::size_t> target_;
  std::vector<std::size_t> common_;
  std::vector<std::size_t> source_private_;
  std::vector<std::size_t> target_private_;
};

/// ξ = |C_s ∩ C_t| / |C_s ∪ C_t|.
double jaccard_index(const LabelSets& sets);

/// ξ from the overlap fractions α = |C|/|C_s| and β = |C|/|C_t|:
/// αβ / (α + β − αβ).
double xi_from_fractions(double alpha, double beta);

/// The alternative closed form αβ / ((1 − α)(α + β) + α). It disagrees with
/// the set definition of ξ and is exposed only so diagnostics can show both.
double xi_alternative_form(double alpha, double beta);

struct Sample {
  std::span<const double> features;
  std::size_t true_label;
  Domain domain;
};

/// Feature rows with one ground-truth label each, all from one domain.
struct Dataset {
  Matrix features;
  std::vector<std::size_t> labels;
  Domain domain = Domain::kSource;

  std::size_t size() const noexcept { return labels.size(); }
  Sample sample(std::size_t i) const { return {features.row(i), labels[i], domain}; }

  /// Subset of rows, same domain.
  Dataset select(std::span<const std::size_t> indices) const;
  /// Rows whose label satisfies `keep`.
  template <typename Pred>
  Dataset filter(Pred keep) const {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (keep(labels[i])) idx.push_back(i);
    }
    return select(idx);
  }
};

struct DomainShift {
  double rotation_deg = 25.0;
  std::array<std::size_t, 2> rotation_plane{0, 1};  ///< axes spanning the rotation
  std::vector<double> translation;  ///< empty means zero; otherwise length feature_dim

  friend bool operator==(const DomainShift&, const DomainShift&) = default;
};

struct ScenarioConfig {
  std::size_t feature_dim = 3;
  std::size_t num_common = 4;
  std::size_t num_source_private = 2;
  std::size_t num_target_private = 3;
  std::size_t source_samples_per_class = 100;
  std::size_t target_samples_per_class = 100;
  double class_separation = 3.0;  ///< radius of the circle holding the source classes
  /// Radius of the inner ring holding target-private classes, as a fraction of
  /// class_separation.
  double private_radius = 0.25;
  double noise_scale = 0.5;  ///< isotropic standard deviation of every blob
  DomainShift shift = default_shift();
  std::uint64_t seed = 0;

  /// Pure translation by 2 along axis 2, an axis that carries no class signal.
  static DomainShift default_shift() { return DomainShift{0.0, {0, 1}, {0.0, 0.0, 2.0}}; }

  std::size_t num_classes() const {
    return num_common + num_source_private + num_target_private;
  }
  /// Throws ArgumentError when the configuration cannot generate a scenario.
  void validate() const;

  friend bool operator==(const ScenarioConfig&, const ScenarioConfig&) = default;
};

struct Scenario {
  Dataset source;
  Dataset target;
  LabelSets label_sets;
  Matrix class_means;  ///< source-domain means, one row per class
};

/// Label layout: common classes 0..|C|−1, then source-private, then
/// target-private. Source classes sit at equally spaced angles on a circle of
/// radius class_separation in axes (0, 1). Target-private classes sit on an
/// inner ring, each at the angular midpoint between two neighbouring source
/// classes: gaps bordered by two private classes first, then gaps bordered by
/// one, then the rest, ties by angle. When target-private classes outnumber the
/// gaps, later laps use a proportionally smaller ring. The target domain uses
/// the rotated and translated means.
Scenario build_scenario(const ScenarioConfig& config);

/// Index batches in which every class is represented as evenly as possible.
///
/// Each epoch visits every sample exactly once. Classes are dealt round-robin
/// in a per-epoch class order, so any batch holds per-class counts that differ
/// by at most one.
class BalancedBatches {
 public:
  BalancedBatches(std::span<const std::size_t> labels, std::size_t batch_size,
                  std::uint64_t seed);

  std::vector<std::size_t> next();
  std::size_t epoch() const noexcept { return epoch_; }

 private:
  void refill();

  std::vector<std::vector<std::size_t>> by_class_;
  std::size_t batch_size_;
  Rng rng_;
  std::vector<std::size_t> order_;
  std::size_t cursor_ = 0;
  std::size_t epoch_ = 0;
};

/// Label-free batches: a fresh permutation each epoch, cut into chunks.
class ShuffledBatches {
 public:
  ShuffledBatches(std::size_t count, std::size_t batch_size, std::uint64_t seed);

  std::vector<std::size_t> next();

 private:
  std::size_t count_;
  std::size_t batch_size_;
  Rng rng_;
  std::vector<std::size_t> order_;
  std::size_t cursor_ = 0;
};

/// CSV: feature_0..feature_{d-1},label,domain
void write_dataset_csv(std::ostream& out, const Dataset& data);

}  // namespace suan
