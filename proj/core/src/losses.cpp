#include "suan/losses.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>

#include "suan/errors.hpp"

namespace suan {

Matrix softmax_rows(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    auto in = logits.row(r);
    auto dst = out.row(r);
    const double peak = *std::max_element(in.begin(), in.end());
    double total = 0.0;
    for (std::size_t c = 0; c < in.size(); ++c) {
      dst[c] = std::exp(in[c] - peak);
      total += dst[c];
    }
    for (double& v : dst) v /= total;
  }
  return out;
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

CrossEntropyResult cross_entropy(const Matrix& probs, std::span<const std::size_t> labels) {
  if (labels.size() != probs.rows()) {
    throw ShapeError(fmt::format("{} labels for {} rows", labels.size(), probs.rows()));
  }
  CrossEntropyResult result{0.0, Matrix(probs.rows(), probs.cols())};
  if (probs.rows() == 0) return result;
  const double n = static_cast<double>(probs.rows());
  for (std::size_t r = 0; r < probs.rows(); ++r) {
    if (labels[r] >= probs.cols()) {
      throw IndexError(fmt::format("label {} out of range for {} classes", labels[r],
                                   probs.cols()));
    }
    result.loss -= std::log(std::max(probs(r, labels[r]), kProbabilityFloor));
    for (std::size_t c = 0; c < probs.cols(); ++c) {
      result.logit_grad(r, c) = (probs(r, c) - (c == labels[r] ? 1.0 : 0.0)) / n;
    }
  }
  result.loss /= n;
  return result;
}

BceResult weighted_bce(std::span<const double> probs, std::span<const double> targets,
                       std::span<const double> weights) {
  if (probs.size() != targets.size() || probs.size() != weights.size()) {
    throw ShapeError("weighted_bce length mismatch");
  }
  BceResult result{0.0, std::vector<double>(probs.size(), 0.0)};
  if (probs.empty()) return result;
  const double n = static_cast<double>(probs.size());
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (weights[i] < 0.0) throw ArgumentError("negative sample weight");
    if (weights[i] == 0.0) continue;
    const double p = std::clamp(probs[i], kProbabilityFloor, 1.0 - kProbabilityFloor);
    const double t = targets[i];
    result.loss += weights[i] * (-t * std::log(p) - (1.0 - t) * std::log(1.0 - p));
    result.logit_grad[i] = weights[i] * (probs[i] - t) / n;
  }
  result.loss /= n;
  return result;
}

double entropy(std::span<const double> probs) {
  double h = 0.0;
  for (double p : probs) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

}  // namespace suan
