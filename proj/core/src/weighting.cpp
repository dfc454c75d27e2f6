#include "suan/weighting.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>

#include "suan/errors.hpp"

namespace suan {

MarginResult prediction_margin(std::span<const double> probs) {
  if (probs.size() < 2) throw ArgumentError("margin needs at least two classes");
  std::size_t best = 0;
  for (std::size_t c = 1; c < probs.size(); ++c) {
    if (probs[c] > probs[best]) best = c;
  }
  double runner_up = -1.0;
  for (std::size_t c = 0; c < probs.size(); ++c) {
    if (c != best) runner_up = std::max(runner_up, probs[c]);
  }
  return {best, std::clamp(probs[best] - runner_up, 0.0, 1.0)};
}

std::vector<double> batch_margin_vector(const Matrix& probs, std::size_t num_classes) {
  std::vector<double> sums(num_classes, 0.0);
  if (probs.rows() == 0) return sums;
  if (probs.cols() != num_classes) {
    throw ShapeError(fmt::format("probability width {} != {} classes", probs.cols(),
                                 num_classes));
  }
  std::vector<std::size_t> counts(num_classes, 0);
  for (std::size_t r = 0; r < probs.rows(); ++r) {
    const auto [label, margin] = prediction_margin(probs.row(r));
    sums[label] += margin;
    ++counts[label];
  }
  for (std::size_t c = 0; c < num_classes; ++c) {
    if (counts[c] > 0) sums[c] /= static_cast<double>(counts[c]);
  }
  return sums;
}

MarginRegister::MarginRegister(std::size_t num_classes) : values_(num_classes, 0.0) {
  if (num_classes == 0) throw ArgumentError("register needs at least one class");
}

MarginRegister::MarginRegister(std::vector<double> values, std::size_t update_count)
    : values_(std::move(values)), update_count_(update_count) {
  if (values_.empty()) throw ArgumentError("register needs at least one class");
  for (double v : values_) {
    if (!(v >= 0.0 && v <= 1.0)) throw ArgumentError("register entry outside [0, 1]");
    if (update_count_ == 0 && v != 0.0) {
      throw ArgumentError("register with zero updates must be all zeros");
    }
  }
}

void MarginRegister::update(std::span<const double> batch_margins) {
  if (batch_margins.size() != values_.size()) {
    throw ShapeError(fmt::format("batch margin vector has {} entries, register has {}",
                                 batch_margins.size(), values_.size()));
  }
  const double t = static_cast<double>(update_count_);
  for (std::size_t c = 0; c < values_.size(); ++c) {
    values_[c] = std::clamp((t * values_[c] + batch_margins[c]) / (t + 1.0), 0.0, 1.0);
  }
  ++update_count_;
}

std::vector<double> source_weights(const MarginRegister& reg,
                                   std::span<const std::size_t> labels) {
  std::vector<double> out;
  out.reserve(labels.size());
  const auto values = reg.values();
  for (std::size_t y : labels) {
    if (y >= values.size()) {
      throw IndexError(fmt::format("source label {} outside {} classes", y, values.size()));
    }
    out.push_back(values[y]);
  }
  return out;
}

std::vector<double> target_weights(const Matrix& probs) {
  std::vector<double> out;
  out.reserve(probs.rows());
  for (std::size_t r = 0; r < probs.rows(); ++r) {
    auto row = probs.row(r);
    out.push_back(row.empty() ? 0.0 : *std::max_element(row.begin(), row.end()));
  }
  return out;
}

std::vector<double> normalize_weights(std::span<const double> weights,
                                      NormalizationConfig config) {
  if (weights.empty()) throw ArgumentError("cannot normalise an empty batch");
  if (config.w0 != 0 && config.w0 != 1) throw ArgumentError("w0 must be 0 or 1");
  const auto [lo_it, hi_it] = std::minmax_element(weights.begin(), weights.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  if (!std::isfinite(lo) || !std::isfinite(hi)) throw ArgumentError("non-finite weight");

  std::vector<double> scaled(weights.size(), 1.0);
  if (hi > lo) {
    double total = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      scaled[i] = (weights[i] - lo) / (hi - lo);
      total += scaled[i];
    }
    // total >= 1 because the maximum maps to exactly 1.
    const double factor = static_cast<double>(weights.size()) / total;
    for (double& v : scaled) v *= factor;
  }
  const double threshold = static_cast<double>(config.w0);
  for (double& v : scaled) v = std::max(v - threshold, 0.0);
  return scaled;
}

}  // namespace suan
