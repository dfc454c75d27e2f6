#include "suan/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <numbers>
#include <optional>
#include <ostream>

#include "suan/errors.hpp"

namespace suan {

const char* to_string(Domain d) { return d == Domain::kSource ? "source" : "target"; }

namespace {

std::vector<std::size_t> sorted_unique(std::vector<std::size_t> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

bool contains(const std::vector<std::size_t>& sorted, std::size_t c) {
  return std::binary_search(sorted.begin(), sorted.end(), c);
}

}  // namespace

LabelSets::LabelSets(std::vector<std::size_t> source_classes,
                     std::vector<std::size_t> target_classes)
    : source_(sorted_unique(std::move(source_classes))),
      target_(sorted_unique(std::move(target_classes))) {
  std::set_intersection(source_.begin(), source_.end(), target_.begin(), target_.end(),
                        std::back_inserter(common_));
  std::set_difference(source_.begin(), source_.end(), common_.begin(), common_.end(),
                      std::back_inserter(source_private_));
  std::set_difference(target_.begin(), target_.end(), common_.begin(), common_.end(),
                      std::back_inserter(target_private_));
}

bool LabelSets::is_common(std::size_t c) const { return contains(common_, c); }
bool LabelSets::is_source_private(std::size_t c) const { return contains(source_private_, c); }
bool LabelSets::is_target_private(std::size_t c) const { return contains(target_private_, c); }

double LabelSets::alpha() const {
  if (source_.empty()) throw ArgumentError("empty source label set");
  return static_cast<double>(common_.size()) / static_cast<double>(source_.size());
}

double LabelSets::beta() const {
  if (target_.empty()) throw ArgumentError("empty target label set");
  return static_cast<double>(common_.size()) / static_cast<double>(target_.size());
}

double LabelSets::gamma() const {
  if (target_.empty()) throw ArgumentError("empty target label set");
  return static_cast<double>(source_.size()) / static_cast<double>(target_.size());
}

double jaccard_index(const LabelSets& sets) {
  const std::size_t common = sets.common().size();
  const std::size_t uni = sets.source_classes().size() + sets.target_classes().size() - common;
  if (uni == 0) throw ArgumentError("jaccard index of two empty label sets");
  return static_cast<double>(common) / static_cast<double>(uni);
}

namespace {

/// Smallest-denominator fraction p/q (q ≤ max_den) whose double quotient is
/// exactly x, found among the continued-fraction convergents of x.
std::optional<std::pair<std::uint64_t, std::uint64_t>> exact_ratio(double x,
                                                                    std::uint64_t max_den) {
  std::uint64_t h0 = 0, h1 = 1, k0 = 1, k1 = 0;
  double y = x;
  for (int i = 0; i < 64; ++i) {
    const double a = std::floor(y);
    if (a > 1e15) break;
    const auto ai = static_cast<std::uint64_t>(a);
    const std::uint64_t h2 = ai * h1 + h0;
    const std::uint64_t k2 = ai * k1 + k0;
    if (k2 > max_den) break;
    if (static_cast<double>(h2) / static_cast<double>(k2) == x) return std::pair{h2, k2};
    const double frac = y - a;
    if (frac <= 0.0) break;
    y = 1.0 / frac;
    h0 = h1;
    h1 = h2;
    k0 = k1;
    k1 = k2;
  }
  return std::nullopt;
}

}  // namespace

double xi_from_fractions(double alpha, double beta) {
  if (!(alpha >= 0.0 && alpha <= 1.0) || !(beta > 0.0 && beta <= 1.0)) {
    throw ArgumentError(fmt::format("fractions out of range: alpha={} beta={}", alpha, beta));
  }
  const double denom = alpha + beta - alpha * beta;
  if (denom == 0.0) throw ArgumentError("degenerate fractions");
  // Class-count fractions are small rationals a1/a2 and b1/b2. Evaluating
  // a1·b1 / (a1·b2 + b1·a2 − a1·b1) with integers and one final division gives
  // the correctly rounded value of the rational, i.e. exactly what the set
  // form |C| / |C_s ∪ C_t| produces.
  constexpr std::uint64_t kMaxDen = 1u << 20;
  const auto a = exact_ratio(alpha, kMaxDen);
  const auto b = exact_ratio(beta, kMaxDen);
  if (a && b) {
    const auto [a1, a2] = *a;
    const auto [b1, b2] = *b;
    const std::uint64_t num = a1 * b1;
    const std::uint64_t den = a1 * b2 + b1 * a2 - num;
    return static_cast<double>(num) / static_cast<double>(den);
  }
  return alpha * beta / denom;
}

double xi_alternative_form(double alpha, double beta) {
  const double denom = (1.0 - alpha) * (alpha + beta) + alpha;
  if (denom == 0.0) throw ArgumentError("degenerate fractions");
  return alpha * beta / denom;
}

Dataset Dataset::select(std::span<const std::size_t> indices) const {
  Dataset out;
  out.features = features.select_rows(indices);
  out.labels.reserve(indices.size());
  for (std::size_t i : indices) out.labels.push_back(labels[i]);
  out.domain = domain;
  return out;
}

void ScenarioConfig::validate() const {
  if (feature_dim < 2) throw ArgumentError("feature_dim must be at least 2");
  if (num_common + num_source_private == 0) {
    throw ArgumentError("the source domain needs at least one class");
  }
  if (num_common + num_target_private == 0) {
    throw ArgumentError("the target domain needs at least one class");
  }
  if (source_samples_per_class == 0 || target_samples_per_class == 0) {
    throw ArgumentError("samples per class must be positive");
  }
  if (!(class_separation >= 0.0) || !(noise_scale >= 0.0)) {
    throw ArgumentError("class_separation and noise_scale must be non-negative");
  }
  if (!(private_radius >= 0.0 && private_radius <= 1.0)) {
    throw ArgumentError("private_radius must lie in [0, 1]");
  }
  const auto [ax, ay] = shift.rotation_plane;
  if (ax == ay || ax >= feature_dim || ay >= feature_dim) {
    throw ArgumentError(fmt::format("rotation plane ({}, {}) invalid for feature_dim {}", ax,
                                    ay, feature_dim));
  }
  if (!shift.translation.empty() && shift.translation.size() != feature_dim) {
    throw ArgumentError(fmt::format("translation has {} entries, feature_dim is {}",
                                    shift.translation.size(), feature_dim));
  }
}

namespace {

Dataset draw_domain(const Matrix& means, const std::vector<std::size_t>& classes,
                    std::size_t per_class, double noise, Domain domain, Rng& rng) {
  Dataset data;
  data.domain = domain;
  data.features = Matrix(classes.size() * per_class, means.cols());
  data.labels.reserve(classes.size() * per_class);
  std::size_t r = 0;
  for (std::size_t c : classes) {
    for (std::size_t i = 0; i < per_class; ++i, ++r) {
      auto row = data.features.row(r);
      auto mean = means.row(c);
      for (std::size_t k = 0; k < row.size(); ++k) row[k] = mean[k] + noise * rng.normal();
      data.labels.push_back(c);
    }
  }
  return data;
}

}  // namespace

Scenario build_scenario(const ScenarioConfig& config) {
  config.validate();
  const std::size_t total = config.num_classes();
  const std::size_t n_common = config.num_common;
  const std::size_t n_source = n_common + config.num_source_private;

  std::vector<std::size_t> source_classes;
  std::vector<std::size_t> target_classes;
  for (std::size_t c = 0; c < n_common; ++c) {
    source_classes.push_back(c);
    target_classes.push_back(c);
  }
  for (std::size_t c = n_common; c < n_source; ++c) source_classes.push_back(c);
  for (std::size_t c = n_source; c < total; ++c) target_classes.push_back(c);

  Matrix means(total, config.feature_dim);
  const double step = 2.0 * std::numbers::pi / static_cast<double>(n_source);
  for (std::size_t c = 0; c < n_source; ++c) {
    means(c, 0) = config.class_separation * std::cos(step * static_cast<double>(c));
    means(c, 1) = config.class_separation * std::sin(step * static_cast<double>(c));
  }
  // Gap g lies between source classes g and g+1 (cyclically).
  std::vector<std::pair<int, std::size_t>> gaps;
  for (std::size_t g = 0; g < n_source; ++g) {
    const std::size_t h = (g + 1) % n_source;
    const int private_sides = static_cast<int>(g >= n_common) + static_cast<int>(h >= n_common);
    gaps.emplace_back(-private_sides, g);
  }
  std::sort(gaps.begin(), gaps.end());
  for (std::size_t c = n_source; c < total; ++c) {
    const std::size_t j = c - n_source;
    const double angle = step * (static_cast<double>(gaps[j % n_source].second) + 0.5);
    const double radius = config.private_radius * config.class_separation /
                          static_cast<double>(1 + j / n_source);
    means(c, 0) = radius * std::cos(angle);
    means(c, 1) = radius * std::sin(angle);
  }

  const double theta = config.shift.rotation_deg * std::numbers::pi / 180.0;
  const double cs = std::cos(theta);
  const double sn = std::sin(theta);
  const auto [ax, ay] = config.shift.rotation_plane;
  Matrix shifted = means;
  for (std::size_t c = 0; c < total; ++c) {
    const double x = means(c, ax);
    const double y = means(c, ay);
    shifted(c, ax) = cs * x - sn * y;
    shifted(c, ay) = sn * x + cs * y;
    for (std::size_t k = 0; k < config.shift.translation.size(); ++k) {
      shifted(c, k) += config.shift.translation[k];
    }
  }

  Rng root(config.seed);
  Rng source_rng(root.fork_seed());
  Rng target_rng(root.fork_seed());
  Scenario scenario{
      draw_domain(means, source_classes, config.source_samples_per_class, config.noise_scale,
                  Domain::kSource, source_rng),
      draw_domain(shifted, target_classes, config.target_samples_per_class,
                  config.noise_scale, Domain::kTarget, target_rng),
      LabelSets(source_classes, target_classes), means};
  return scenario;
}

BalancedBatches::BalancedBatches(std::span<const std::size_t> labels, std::size_t batch_size,
                                 std::uint64_t seed)
    : batch_size_(batch_size), rng_(seed) {
  if (batch_size == 0) throw ArgumentError("batch size must be positive");
  if (labels.empty()) throw ArgumentError("cannot batch an empty dataset");
  const std::size_t max_label = *std::max_element(labels.begin(), labels.end());
  std::vector<std::vector<std::size_t>> groups(max_label + 1);
  for (std::size_t i = 0; i < labels.size(); ++i) groups[labels[i]].push_back(i);
  for (auto& g : groups) {
    if (!g.empty()) by_class_.push_back(std::move(g));
  }
  if (batch_size < by_class_.size()) {
    throw ArgumentError(fmt::format("batch size {} is smaller than the {} classes", batch_size,
                                    by_class_.size()));
  }
  refill();
}

void BalancedBatches::refill() {
  std::vector<std::size_t> class_order(by_class_.size());
  for (std::size_t k = 0; k < class_order.size(); ++k) class_order[k] = k;
  rng_.shuffle(class_order);
  std::vector<std::vector<std::size_t>> pools = by_class_;
  for (auto& p : pools) rng_.shuffle(p);

  // Deal one sample per class per round, always in the same class order.
  order_.clear();
  std::size_t round = 0;
  bool any = true;
  while (any) {
    any = false;
    for (std::size_t k : class_order) {
      if (round < pools[k].size()) {
        order_.push_back(pools[k][round]);
        any = true;
      }
    }
    ++round;
  }
  cursor_ = 0;
}

std::vector<std::size_t> BalancedBatches::next() {
  if (cursor_ >= order_.size()) {
    ++epoch_;
    refill();
  }
  const std::size_t end = std::min(order_.size(), cursor_ + batch_size_);
  std::vector<std::size_t> batch(order_.begin() + static_cast<std::ptrdiff_t>(cursor_),
                                 order_.begin() + static_cast<std::ptrdiff_t>(end));
  cursor_ = end;
  return batch;
}

ShuffledBatches::ShuffledBatches(std::size_t count, std::size_t batch_size, std::uint64_t seed)
    : count_(count), batch_size_(batch_size), rng_(seed) {
  if (batch_size == 0) throw ArgumentError("batch size must be positive");
  if (count == 0) throw ArgumentError("cannot batch an empty dataset");
  cursor_ = count_;
}

std::vector<std::size_t> ShuffledBatches::next() {
  if (cursor_ >= count_) {
    order_.resize(count_);
    for (std::size_t i = 0; i < count_; ++i) order_[i] = i;
    rng_.shuffle(order_);
    cursor_ = 0;
  }
  const std::size_t end = std::min(count_, cursor_ + batch_size_);
  std::vector<std::size_t> batch(order_.begin() + static_cast<std::ptrdiff_t>(cursor_),
                                 order_.begin() + static_cast<std::ptrdiff_t>(end));
  cursor_ = end;
  return batch;
}

void write_dataset_csv(std::ostream& out, const Dataset& data) {
  for (std::size_t k = 0; k < data.features.cols(); ++k) out << "feature_" << k << ',';
  out << "label,domain\n";
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (double v : data.features.row(i)) out << fmt::format("{:.9g}", v) << ',';
    out << data.labels[i] << ',' << to_string(data.domain) << '\n';
  }
}

}  // namespace suan
