#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "suan/matrix.hpp"
#include "suan/rng.hpp"

namespace suan {

enum class Activation { kRectifier, kIdentity };

/// Output transform applied after the last layer.
enum class Head {
  kNone,      ///< raw final-layer output (feature extractors)
  kSoftmax,   ///< row-wise softmax over classes
  kLogistic,  ///< sigmoid of a single logit
};

struct DenseLayer {
  Matrix weight;  ///< in × out
  std::vector<double> bias;
  Activation activation = Activation::kIdentity;

  std::size_t in_width() const noexcept { return weight.rows(); }
  std::size_t out_width() const noexcept { return weight.cols(); }

  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

struct MlpParams {
  std::vector<DenseLayer> layers;
  Head head = Head::kNone;

  std::size_t in_width() const;
  std::size_t out_width() const;
  std::size_t parameter_count() const;

  /// Throws ShapeError when layer widths do not chain or a head is
  /// inconsistent with the output width.
  void validate() const;

  friend bool operator==(const MlpParams&, const MlpParams&) = default;
};

struct LayerGradient {
  Matrix weight;
  std::vector<double> bias;

  friend bool operator==(const LayerGradient&, const LayerGradient&) = default;
};

/// One gradient tensor per parameter tensor of an MlpParams.
struct GradientSet {
  std::vector<LayerGradient> layers;

  static GradientSet zeros_like(const MlpParams& params);

  GradientSet& operator+=(const GradientSet& other);
  /// Largest |entry|; handy for asserting "all zero".
  double max_abs() const;

  friend bool operator==(const GradientSet&, const GradientSet&) = default;
};

struct LayerSpec {
  std::size_t width;
  Activation activation;
};

/// Scaled-uniform initialisation: U[-s, s], s = sqrt(6 / (fan_in + fan_out)),
/// zero biases.
MlpParams make_mlp(std::size_t in_width, const std::vector<LayerSpec>& layers, Head head,
                   Rng& rng);

/// Intermediate values retained for the backward pass.
struct ForwardCache {
  std::vector<Matrix> layer_inputs;     ///< input to layer k
  std::vector<Matrix> pre_activations;  ///< x·W + b of layer k
};

struct ForwardResult {
  ForwardCache cache;
  Matrix logits;   ///< final layer output, before the head
  Matrix outputs;  ///< after the head
};

ForwardResult mlp_forward(const MlpParams& params, const Matrix& inputs);

struct BackwardResult {
  GradientSet grads;
  Matrix input_grad;
};

/// Backpropagate `logit_grad` (gradient with respect to the final layer
/// output, i.e. before the head) through every layer.
BackwardResult mlp_backward(const MlpParams& params, const ForwardCache& cache,
                            const Matrix& logit_grad);

/// Every gradient entry multiplied by -lambda: the gradient reversal layer.
GradientSet grl_scale(const GradientSet& upstream, double lambda);
Matrix grl_scale(const Matrix& upstream, double lambda);

/// θ ← θ − lr·g, in place.
void sgd_step(MlpParams& params, const GradientSet& grads, double lr);

/// Central differences (f(θ+h) − f(θ−h)) / 2h, one parameter at a time.
GradientSet finite_diff_gradient(const std::function<double(const MlpParams&)>& loss,
                                 const MlpParams& params, double h);

}  // namespace suan
