#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "suan/matrix.hpp"

namespace suan {

/// Probabilities are clamped to this floor before any logarithm.
inline constexpr double kProbabilityFloor = 1e-12;

Matrix softmax_rows(const Matrix& logits);
double sigmoid(double x);

struct CrossEntropyResult {
  double loss = 0.0;
  Matrix logit_grad;  ///< (p − onehot) / n: softmax and CE composed
};

/// Mean −log p(label) over rows.
CrossEntropyResult cross_entropy(const Matrix& probs, std::span<const std::size_t> labels);

struct BceResult {
  double loss = 0.0;
  std::vector<double> logit_grad;
};

/// Mean of wᵢ·(−tᵢ log pᵢ − (1−tᵢ) log(1−pᵢ)), p clamped to [floor, 1−floor].
/// The gradient is taken with respect to the logistic logit.
BceResult weighted_bce(std::span<const double> probs, std::span<const double> targets,
                       std::span<const double> weights);

/// Shannon entropy (natural log) of a probability row.
double entropy(std::span<const double> probs);

}  // namespace suan
