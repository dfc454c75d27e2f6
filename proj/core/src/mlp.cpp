#include "suan/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>

#include "suan/errors.hpp"
#include "suan/losses.hpp"

namespace suan {

std::size_t MlpParams::in_width() const {
  return layers.empty() ? 0 : layers.front().in_width();
}

std::size_t MlpParams::out_width() const {
  return layers.empty() ? 0 : layers.back().out_width();
}

std::size_t MlpParams::parameter_count() const {
  std::size_t count = 0;
  for (const auto& layer : layers) count += layer.weight.size() + layer.bias.size();
  return count;
}

void MlpParams::validate() const {
  if (layers.empty()) throw ShapeError("network has no layers");
  for (std::size_t k = 0; k < layers.size(); ++k) {
    if (layers[k].bias.size() != layers[k].out_width()) {
      throw ShapeError(fmt::format("layer {} bias length {} != width {}", k,
                                   layers[k].bias.size(), layers[k].out_width()));
    }
    if (k > 0 && layers[k].in_width() != layers[k - 1].out_width()) {
      throw ShapeError(fmt::format("layer {} input width {} does not chain to {}", k,
                                   layers[k].in_width(), layers[k - 1].out_width()));
    }
  }
  if (head == Head::kLogistic && out_width() != 1) {
    throw ShapeError("logistic head needs a single output");
  }
}

GradientSet GradientSet::zeros_like(const MlpParams& params) {
  GradientSet g;
  g.layers.reserve(params.layers.size());
  for (const auto& layer : params.layers) {
    g.layers.push_back({Matrix(layer.weight.rows(), layer.weight.cols()),
                        std::vector<double>(layer.bias.size(), 0.0)});
  }
  return g;
}

GradientSet& GradientSet::operator+=(const GradientSet& other) {
  if (other.layers.size() != layers.size()) throw ShapeError("gradient layer count mismatch");
  for (std::size_t k = 0; k < layers.size(); ++k) {
    auto dst = layers[k].weight.values();
    auto src = other.layers[k].weight.values();
    if (dst.size() != src.size() || layers[k].bias.size() != other.layers[k].bias.size()) {
      throw ShapeError("gradient shape mismatch");
    }
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
    for (std::size_t i = 0; i < layers[k].bias.size(); ++i) {
      layers[k].bias[i] += other.layers[k].bias[i];
    }
  }
  return *this;
}

double GradientSet::max_abs() const {
  double m = 0.0;
  for (const auto& layer : layers) {
    for (double v : layer.weight.values()) m = std::max(m, std::abs(v));
    for (double v : layer.bias) m = std::max(m, std::abs(v));
  }
  return m;
}

MlpParams make_mlp(std::size_t in_width, const std::vector<LayerSpec>& layers, Head head,
                   Rng& rng) {
  MlpParams params;
  params.head = head;
  std::size_t fan_in = in_width;
  for (const auto& spec : layers) {
    DenseLayer layer{Matrix(fan_in, spec.width), std::vector<double>(spec.width, 0.0),
                     spec.activation};
    const double s = std::sqrt(6.0 / static_cast<double>(fan_in + spec.width));
    for (double& w : layer.weight.values()) w = rng.uniform(-s, s);
    params.layers.push_back(std::move(layer));
    fan_in = spec.width;
  }
  params.validate();
  return params;
}

ForwardResult mlp_forward(const MlpParams& params, const Matrix& inputs) {
  if (params.layers.empty()) throw ShapeError("network has no layers");
  if (inputs.cols() != params.in_width()) {
    throw ShapeError(fmt::format("input width {} but network expects {}", inputs.cols(),
                                 params.in_width()));
  }
  ForwardResult result;
  result.cache.layer_inputs.reserve(params.layers.size());
  result.cache.pre_activations.reserve(params.layers.size());
  Matrix current = inputs;
  for (const auto& layer : params.layers) {
    Matrix z = matmul(current, layer.weight);
    for (std::size_t r = 0; r < z.rows(); ++r) {
      auto row = z.row(r);
      for (std::size_t c = 0; c < row.size(); ++c) row[c] += layer.bias[c];
    }
    Matrix a = z;
    if (layer.activation == Activation::kRectifier) {
      for (double& v : a.values()) v = std::max(v, 0.0);
    }
    result.cache.layer_inputs.push_back(std::move(current));
    result.cache.pre_activations.push_back(std::move(z));
    current = std::move(a);
  }
  result.logits = current;
  switch (params.head) {
    case Head::kNone:
      result.outputs = std::move(current);
      break;
    case Head::kSoftmax:
      result.outputs = softmax_rows(current);
      break;
    case Head::kLogistic:
      for (double& v : current.values()) v = sigmoid(v);
      result.outputs = std::move(current);
      break;
  }
  return result;
}

BackwardResult mlp_backward(const MlpParams& params, const ForwardCache& cache,
                            const Matrix& logit_grad) {
  const std::size_t depth = params.layers.size();
  if (cache.layer_inputs.size() != depth || cache.pre_activations.size() != depth) {
    throw ShapeError("forward cache does not match network depth");
  }
  BackwardResult result;
  result.grads.layers.resize(depth);
  Matrix grad = logit_grad;
  for (std::size_t k = depth; k-- > 0;) {
    const auto& layer = params.layers[k];
    const Matrix& z = cache.pre_activations[k];
    if (grad.rows() != z.rows() || grad.cols() != z.cols()) {
      throw ShapeError("upstream gradient shape mismatch");
    }
    if (layer.activation == Activation::kRectifier) {
      auto g = grad.values();
      auto pre = z.values();
      for (std::size_t i = 0; i < g.size(); ++i) {
        if (pre[i] <= 0.0) g[i] = 0.0;
      }
    }
    auto& out = result.grads.layers[k];
    out.weight = matmul_transposed_lhs(cache.layer_inputs[k], grad);
    out.bias.assign(layer.out_width(), 0.0);
    for (std::size_t r = 0; r < grad.rows(); ++r) {
      auto row = grad.row(r);
      for (std::size_t c = 0; c < row.size(); ++c) out.bias[c] += row[c];
    }
    grad = matmul_transposed_rhs(grad, layer.weight);
  }
  result.input_grad = std::move(grad);
  return result;
}

GradientSet grl_scale(const GradientSet& upstream, double lambda) {
  GradientSet out = upstream;
  const double factor = -lambda;
  for (auto& layer : out.layers) {
    for (double& v : layer.weight.values()) v *= factor;
    for (double& v : layer.bias) v *= factor;
  }
  return out;
}

Matrix grl_scale(const Matrix& upstream, double lambda) {
  Matrix out = upstream;
  const double factor = -lambda;
  for (double& v : out.values()) v *= factor;
  return out;
}

void sgd_step(MlpParams& params, const GradientSet& grads, double lr) {
  if (grads.layers.size() != params.layers.size()) {
    throw ShapeError("gradient layer count does not match parameters");
  }
  for (std::size_t k = 0; k < params.layers.size(); ++k) {
    auto& layer = params.layers[k];
    const auto& g = grads.layers[k];
    if (g.weight.rows() != layer.weight.rows() || g.weight.cols() != layer.weight.cols() ||
        g.bias.size() != layer.bias.size()) {
      throw ShapeError(fmt::format("gradient shape mismatch at layer {}", k));
    }
    auto w = layer.weight.values();
    auto gw = g.weight.values();
    for (std::size_t i = 0; i < w.size(); ++i) w[i] -= lr * gw[i];
    for (std::size_t i = 0; i < layer.bias.size(); ++i) layer.bias[i] -= lr * g.bias[i];
  }
}

GradientSet finite_diff_gradient(const std::function<double(const MlpParams&)>& loss,
                                 const MlpParams& params, double h) {
  if (!(h > 0.0)) throw ArgumentError("finite difference step must be positive");
  GradientSet out = GradientSet::zeros_like(params);
  MlpParams probe = params;
  auto central = [&](double& slot) {
    const double saved = slot;
    slot = saved + h;
    const double up = loss(probe);
    slot = saved - h;
    const double down = loss(probe);
    slot = saved;
    return (up - down) / (2.0 * h);
  };
  for (std::size_t k = 0; k < probe.layers.size(); ++k) {
    auto w = probe.layers[k].weight.values();
    auto gw = out.layers[k].weight.values();
    for (std::size_t i = 0; i < w.size(); ++i) gw[i] = central(w[i]);
    for (std::size_t i = 0; i < probe.layers[k].bias.size(); ++i) {
      out.layers[k].bias[i] = central(probe.layers[k].bias[i]);
    }
  }
  return out;
}

}  // namespace suan
