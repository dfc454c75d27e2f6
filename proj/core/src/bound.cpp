#include "suan/bound.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <numbers>

#include "suan/errors.hpp"
#include "suan/losses.hpp"
#include "suan/mlp.hpp"
#include "suan/rng.hpp"
#include "suan/trainer.hpp"

namespace suan {

void BoundInputs::validate() const {
  if (vc_dim < 1) throw ArgumentError("vc_dim must be at least 1");
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw ArgumentError("gamma must be positive");
  if (!(m_prime > 0.0) || !std::isfinite(m_prime)) {
    throw ArgumentError("m_prime must be positive");
  }
  if (!(delta > 0.0 && delta < 1.0)) throw ArgumentError("delta must lie in (0, 1)");
  if (!(source_risk >= 0.0 && source_risk <= 1.0)) {
    throw ArgumentError("source_risk must lie in [0, 1]");
  }
  if (!(empirical_divergence >= 0.0 && empirical_divergence <= 2.0)) {
    throw ArgumentError("empirical_divergence must lie in [0, 2]");
  }
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw ArgumentError("lambda must be non-negative");
  }
}

double complexity_term(int vc_dim, double gamma, double m_prime, double delta) {
  if (vc_dim < 1) throw ArgumentError("vc_dim must be at least 1");
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw ArgumentError("gamma must be positive");
  if (!(m_prime > 0.0) || !std::isfinite(m_prime)) {
    throw ArgumentError("m_prime must be positive");
  }
  if (!(delta > 0.0 && delta < 1.0)) throw ArgumentError("delta must lie in (0, 1)");
  const double effective = std::max(1.0, gamma) * m_prime;
  if (!(2.0 * effective > 1.0)) {
    throw ArgumentError(
        fmt::format("2·max(1, gamma)·m_prime must exceed 1 (got {})", 2.0 * effective));
  }
  const double numerator =
      static_cast<double>(vc_dim) * std::log(2.0 * effective) + std::log(2.0 / delta);
  return 4.0 * std::sqrt(numerator / effective);
}

BoundDecomposition decompose_bound(const BoundInputs& inputs) {
  inputs.validate();
  BoundDecomposition out;
  out.source_risk = inputs.source_risk;
  out.half_divergence = inputs.empirical_divergence / 2.0;
  out.complexity = complexity_term(inputs.vc_dim, inputs.gamma, inputs.m_prime, inputs.delta);
  out.lambda = inputs.lambda;
  out.total = out.source_risk + out.half_divergence + out.complexity + out.lambda;
  return out;
}

double risk_bound(const BoundInputs& inputs) { return decompose_bound(inputs).total; }

void EstimatorConfig::validate() const {
  if (hidden == 0) throw ArgumentError("estimator hidden width must be positive");
  if (steps == 0) throw ArgumentError("estimator steps must be positive");
  if (batch_size == 0) throw ArgumentError("estimator batch_size must be positive");
  if (!(learning_rate > 0.0)) throw ArgumentError("estimator learning_rate must be positive");
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw ArgumentError("estimator train_fraction must lie in (0, 1)");
  }
}

namespace {

std::vector<std::size_t> iota_indices(std::size_t n) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  return idx;
}

/// Minibatch SGD on mean cross-entropy; `labels` index the softmax outputs.
MlpParams train_softmax_classifier(const Matrix& inputs, const std::vector<std::size_t>& labels,
                                   std::size_t num_classes, Rng& rng,
                                   const EstimatorConfig& config) {
  MlpParams net = make_mlp(inputs.cols(),
                           {{config.hidden, Activation::kRectifier},
                            {num_classes, Activation::kIdentity}},
                           Head::kSoftmax, rng);
  std::vector<std::size_t> order = iota_indices(inputs.rows());
  std::size_t cursor = order.size();
  for (std::size_t step = 0; step < config.steps; ++step) {
    std::vector<std::size_t> batch;
    batch.reserve(config.batch_size);
    while (batch.size() < config.batch_size) {
      if (cursor == order.size()) {
        rng.shuffle(order);
        cursor = 0;
      }
      batch.push_back(order[cursor++]);
      if (batch.size() == order.size()) break;
    }
    const Matrix x = inputs.select_rows(batch);
    std::vector<std::size_t> y(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) y[i] = labels[batch[i]];
    const ForwardResult fwd = mlp_forward(net, x);
    const CrossEntropyResult ce = cross_entropy(fwd.outputs, y);
    const BackwardResult back = mlp_backward(net, fwd.cache, ce.logit_grad);
    sgd_step(net, back.grads, config.learning_rate);
  }
  return net;
}

std::size_t argmax_row(std::span<const double> row) {
  return static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
}

}  // namespace

double proxy_divergence(const Matrix& source_features, const Matrix& target_features,
                        std::uint64_t seed, const EstimatorConfig& config) {
  config.validate();
  if (source_features.rows() == 0 || target_features.rows() == 0) {
    throw ArgumentError("proxy_divergence needs nonempty source and target sets");
  }
  if (source_features.cols() != target_features.cols()) {
    throw ShapeError(fmt::format("feature widths differ: {} vs {}", source_features.cols(),
                                 target_features.cols()));
  }
  Rng rng(seed);
  // Per-domain split; each domain keeps at least one held-out row when it can.
  auto split = [&](std::size_t n) {
    std::vector<std::size_t> idx = iota_indices(n);
    rng.shuffle(idx);
    std::size_t n_train = static_cast<std::size_t>(std::floor(config.train_fraction * n));
    n_train = std::clamp<std::size_t>(n_train, 1, n > 1 ? n - 1 : 1);
    std::vector<std::size_t> train(idx.begin(), idx.begin() + static_cast<long>(n_train));
    std::vector<std::size_t> held(idx.begin() + static_cast<long>(n_train), idx.end());
    if (held.empty()) held = train;  // single-row domain: score on what we have
    return std::pair{train, held};
  };
  const auto [s_train, s_held] = split(source_features.rows());
  const auto [t_train, t_held] = split(target_features.rows());

  const Matrix x_train =
      vstack(source_features.select_rows(s_train), target_features.select_rows(t_train));
  std::vector<std::size_t> y_train(s_train.size(), 0);
  y_train.resize(s_train.size() + t_train.size(), 1);
  const MlpParams net = train_softmax_classifier(x_train, y_train, 2, rng, config);

  auto domain_error = [&](const Matrix& feats, const std::vector<std::size_t>& rows,
                          std::size_t truth) {
    const Matrix probs = mlp_forward(net, feats.select_rows(rows)).outputs;
    std::size_t wrong = 0;
    for (std::size_t i = 0; i < probs.rows(); ++i) {
      if (argmax_row(probs.row(i)) != truth) ++wrong;
    }
    return static_cast<double>(wrong) / static_cast<double>(probs.rows());
  };
  const double err =
      0.5 * (domain_error(source_features, s_held, 0) + domain_error(target_features, t_held, 1));
  return std::clamp(2.0 * (1.0 - 2.0 * err), 0.0, 2.0);
}

double lambda_oracle(const Dataset& source, const Dataset& target, const LabelSets& sets,
                     std::uint64_t seed, const EstimatorConfig& config) {
  config.validate();
  const auto& common = sets.common();
  if (common.empty()) throw ArgumentError("lambda_oracle needs at least one common class");
  auto common_index = [&](std::size_t label) {
    return static_cast<std::size_t>(std::lower_bound(common.begin(), common.end(), label) -
                                    common.begin());
  };
  const Dataset s = source.filter([&](std::size_t y) { return sets.is_common(y); });
  const Dataset t = target.filter([&](std::size_t y) { return sets.is_common(y); });
  if (s.labels.empty() || t.labels.empty()) {
    throw ArgumentError("lambda_oracle needs common-class rows in both domains");
  }
  if (s.features.cols() != t.features.cols()) {
    throw ShapeError("source and target feature widths differ");
  }
  const Matrix x = vstack(s.features, t.features);
  std::vector<std::size_t> y;
  y.reserve(x.rows());
  for (std::size_t label : s.labels) y.push_back(common_index(label));
  for (std::size_t label : t.labels) y.push_back(common_index(label));

  Rng rng(seed);
  const MlpParams net = train_softmax_classifier(x, y, common.size(), rng, config);
  auto error_rate = [&](const Dataset& d) {
    const Matrix probs = mlp_forward(net, d.features).outputs;
    std::size_t wrong = 0;
    for (std::size_t i = 0; i < probs.rows(); ++i) {
      if (argmax_row(probs.row(i)) != common_index(d.labels[i])) ++wrong;
    }
    return static_cast<double>(wrong) / static_cast<double>(probs.rows());
  };
  return error_rate(s) + error_rate(t);
}

int default_vc_dim(const SuanModel& model) {
  std::size_t smallest = model.domain.parameter_count();
  if (model.domain_prime) smallest = std::min(smallest, model.domain_prime->parameter_count());
  return static_cast<int>(std::clamp<std::size_t>(smallest / 10, 1, 10));
}

std::string_view to_string(ScanMode mode) {
  return mode == ScanMode::kVaryTargetClasses ? "vary_target_classes" : "vary_common_classes";
}

ScanMode parse_scan_mode(std::string_view name) {
  if (name == "vary_target_classes") return ScanMode::kVaryTargetClasses;
  if (name == "vary_common_classes") return ScanMode::kVaryCommonClasses;
  throw ArgumentError(fmt::format("unknown scan mode '{}'", name));
}

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::kStart:
      return "start";
    case Verdict::kNonDecreasing:
      return "non_decreasing";
    case Verdict::kConstant:
      return "constant";
    case Verdict::kDecreasing:
      return "decreasing";
    case Verdict::kOutsideRegion:
      return "outside_region";
    case Verdict::kViolated:
      return "violated";
  }
  return "violated";
}

ScanResult property_scan(const ScanSetup& setup, ScanMode mode, const std::vector<double>& grid) {
  if (grid.empty()) throw ArgumentError("property_scan needs a nonempty grid");
  if (!std::is_sorted(grid.begin(), grid.end())) {
    throw ArgumentError("property_scan grid must be sorted ascending");
  }
  if (!(setup.m > 0.0)) throw ArgumentError("m must be positive");

  ScanResult result;
  result.mode = mode;
  for (double p : grid) {
    ScanRow row;
    row.parameter = p;
    if (mode == ScanMode::kVaryTargetClasses) {
      if (setup.num_common == 0 || setup.num_source < setup.num_common) {
        throw ArgumentError("need 0 < num_common <= num_source");
      }
      if (!(p >= static_cast<double>(setup.num_common))) {
        throw ArgumentError(fmt::format("|C_t| = {} is below |C| = {}", p, setup.num_common));
      }
      row.gamma = static_cast<double>(setup.num_source) / p;
      row.alpha = static_cast<double>(setup.num_common) / static_cast<double>(setup.num_source);
    } else {
      if (!(p > 0.0 && p <= 1.0)) {
        throw ArgumentError(fmt::format("alpha = {} outside (0, 1]", p));
      }
      row.gamma = setup.gamma;
      row.alpha = p;
    }
    row.m_prime = row.alpha * setup.m;
    row.bound = risk_bound(BoundInputs{setup.vc_dim, row.gamma, row.m_prime, setup.delta,
                                       setup.source_risk, setup.empirical_divergence,
                                       setup.lambda});
    result.rows.push_back(row);
  }

  for (std::size_t i = 1; i < result.rows.size(); ++i) {
    const ScanRow& prev = result.rows[i - 1];
    ScanRow& cur = result.rows[i];
    if (mode == ScanMode::kVaryTargetClasses) {
      if (prev.gamma <= 1.0 && cur.gamma <= 1.0) {
        cur.verdict = cur.bound == prev.bound ? Verdict::kConstant : Verdict::kViolated;
      } else {
        cur.verdict = cur.bound >= prev.bound ? Verdict::kNonDecreasing : Verdict::kViolated;
      }
    } else {
      const double floor_alpha =
          std::numbers::e / (2.0 * std::max(1.0, setup.gamma) * setup.m);
      if (prev.alpha >= floor_alpha && cur.alpha >= floor_alpha) {
        cur.verdict = cur.bound < prev.bound ? Verdict::kDecreasing : Verdict::kViolated;
      } else {
        cur.verdict = Verdict::kOutsideRegion;
      }
    }
    if (cur.verdict == Verdict::kViolated) result.holds = false;
  }
  return result;
}

}  // namespace suan
