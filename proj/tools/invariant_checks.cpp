#include "invariant_checks.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <functional>
#include <numeric>

#include "suan/bound.hpp"
#include "suan/eval.hpp"
#include "suan/losses.hpp"
#include "suan/mlp.hpp"
#include "suan/rng.hpp"
#include "suan/scenario.hpp"
#include "suan/weighting.hpp"

namespace suan::tools {

namespace {

Matrix random_matrix(std::size_t rows, std::size_t cols, Rng& rng) {
  Matrix m(rows, cols);
  for (double& v : m.values()) v = rng.normal();
  return m;
}

double max_rel_error(const GradientSet& a, const GradientSet& b) {
  double worst = 0.0;
  auto cmp = [&](double x, double y) {
    worst = std::max(worst, std::abs(x - y) / std::max(1e-6, std::abs(x) + std::abs(y)));
  };
  for (std::size_t l = 0; l < a.layers.size(); ++l) {
    const auto wa = a.layers[l].weight.values();
    const auto wb = b.layers[l].weight.values();
    for (std::size_t i = 0; i < wa.size(); ++i) cmp(wa[i], wb[i]);
    for (std::size_t i = 0; i < a.layers[l].bias.size(); ++i) {
      cmp(a.layers[l].bias[i], b.layers[l].bias[i]);
    }
  }
  return worst;
}

CheckResult classifier_gradient(Rng& rng) {
  MlpParams net = make_mlp(3, {{5, Activation::kRectifier}, {4, Activation::kIdentity}},
                           Head::kSoftmax, rng);
  const Matrix x = random_matrix(6, 3, rng);
  std::vector<std::size_t> y(6);
  for (auto& v : y) v = rng.below(4);
  auto loss = [&](const MlpParams& p) { return cross_entropy(mlp_forward(p, x).outputs, y).loss; };
  const ForwardResult fwd = mlp_forward(net, x);
  const GradientSet analytic =
      mlp_backward(net, fwd.cache, cross_entropy(fwd.outputs, y).logit_grad).grads;
  const double err = max_rel_error(analytic, finite_diff_gradient(loss, net, 1e-6));
  return {"classifier gradient vs finite differences", err < 1e-4,
          fmt::format("max relative error {:.3g}", err)};
}

CheckResult gradient_reversal(Rng& rng) {
  MlpParams net = make_mlp(2, {{3, Activation::kRectifier}, {1, Activation::kIdentity}},
                           Head::kLogistic, rng);
  GradientSet g = GradientSet::zeros_like(net);
  for (auto& layer : g.layers) {
    for (double& v : layer.weight.values()) v = rng.normal();
    for (double& v : layer.bias) v = rng.normal();
  }
  bool ok = true;
  for (double lambda : {0.0, 0.5, 1.0}) {
    const GradientSet r = grl_scale(g, lambda);
    for (std::size_t l = 0; l < g.layers.size(); ++l) {
      const auto a = g.layers[l].weight.values();
      const auto b = r.layers[l].weight.values();
      for (std::size_t i = 0; i < a.size(); ++i) ok = ok && b[i] == -lambda * a[i];
    }
  }
  return {"gradient reversal scales by -lambda exactly", ok, ""};
}

CheckResult register_average(Rng& rng) {
  const std::size_t k = 4;
  MarginRegister reg(k);
  std::vector<double> sum(k, 0.0);
  const std::size_t n = 200;
  for (std::size_t t = 0; t < n; ++t) {
    std::vector<double> m(k);
    for (std::size_t c = 0; c < k; ++c) {
      m[c] = rng.uniform();
      sum[c] += m[c];
    }
    reg.update(m);
  }
  double worst = 0.0;
  for (std::size_t c = 0; c < k; ++c) {
    worst = std::max(worst, std::abs(reg.values()[c] - sum[c] / static_cast<double>(n)));
  }
  return {"margin register equals the mean of its updates", worst < 1e-12,
          fmt::format("max deviation {:.3g}", worst)};
}

CheckResult normalisation(Rng& rng) {
  bool ok = true;
  double worst_mean = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> w(1 + rng.below(40));
    for (double& v : w) v = rng.uniform(-3.0, 3.0);
    const auto out0 = normalize_weights(w, {0});
    const auto out1 = normalize_weights(w, {1});
    for (double v : out0) ok = ok && v >= 0.0;
    for (double v : out1) ok = ok && v >= 0.0;
    const double mean =
        std::accumulate(out0.begin(), out0.end(), 0.0) / static_cast<double>(out0.size());
    worst_mean = std::max(worst_mean, std::abs(mean - 1.0));
  }
  return {"normalised weights are non-negative with mean one", ok && worst_mean < 1e-9,
          fmt::format("max |mean - 1| {:.3g}", worst_mean)};
}

CheckResult overlap_ratio(Rng& rng) {
  bool ok = true;
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<std::size_t> s, t;
    const std::size_t universe = 1 + rng.below(30);
    for (std::size_t c = 0; c < universe; ++c) {
      const auto r = rng.below(3);
      if (r != 1) s.push_back(c);
      if (r != 2) t.push_back(c);
    }
    if (s.empty() || t.empty()) continue;
    const LabelSets sets(s, t);
    if (sets.common().empty()) continue;  // the fraction form needs alpha, beta > 0
    ok = ok && jaccard_index(sets) == xi_from_fractions(sets.alpha(), sets.beta());
  }
  return {"set overlap ratio matches the fraction form", ok, ""};
}

CheckResult bound_properties() {
  ScanSetup setup;
  const ScanResult p1 =
      property_scan(setup, ScanMode::kVaryTargetClasses, {10, 13, 15, 20, 25, 26});
  setup.num_common = 1;
  setup.num_source = 1;
  const ScanResult p2 = property_scan(setup, ScanMode::kVaryCommonClasses,
                                      {0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0});
  return {"bound monotonicity scans", p1.holds && p2.holds,
          fmt::format("vary_target_classes {}, vary_common_classes {}",
                      p1.holds ? "holds" : "violated", p2.holds ? "holds" : "violated")};
}

}  // namespace

std::vector<CheckResult> run_invariant_checks(std::uint64_t seed) {
  Rng rng(seed);
  std::vector<CheckResult> out;
  out.push_back(classifier_gradient(rng));
  out.push_back(gradient_reversal(rng));
  out.push_back(register_average(rng));
  out.push_back(normalisation(rng));
  out.push_back(overlap_ratio(rng));
  out.push_back(bound_properties());
  return out;
}

}  // namespace suan::tools
