#include "suan/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <limits>

#include "suan/errors.hpp"
#include "suan/losses.hpp"

namespace suan {

std::string_view to_string(TrainMode mode) {
  switch (mode) {
    case TrainMode::kSuan:
      return "suan";
    case TrainMode::kSourceOnly:
      return "source_only";
    case TrainMode::kUnweightedAdversarial:
      return "unweighted_adversarial";
    case TrainMode::kUanWeighting:
      return "uan_weighting";
  }
  return "suan";
}

TrainMode parse_train_mode(std::string_view name) {
  for (auto m : {TrainMode::kSuan, TrainMode::kSourceOnly, TrainMode::kUnweightedAdversarial,
                 TrainMode::kUanWeighting}) {
    if (to_string(m) == name) return m;
  }
  throw ArgumentError(fmt::format("unknown mode '{}'", name));
}

std::string_view to_string(GrlSchedule s) {
  return s == GrlSchedule::kConstant ? "constant" : "linear_ramp";
}

GrlSchedule parse_grl_schedule(std::string_view name) {
  if (name == "constant") return GrlSchedule::kConstant;
  if (name == "linear_ramp") return GrlSchedule::kLinearRamp;
  throw ArgumentError(fmt::format("unknown grl schedule '{}'", name));
}

std::string_view to_string(GateStatistic g) {
  return g == GateStatistic::kBatchEma ? "batch_ema" : "full_source_set";
}

GateStatistic parse_gate_statistic(std::string_view name) {
  if (name == "batch_ema") return GateStatistic::kBatchEma;
  if (name == "full_source_set") return GateStatistic::kFullSourceSet;
  throw ArgumentError(fmt::format("unknown gate statistic '{}'", name));
}

void TrainConfig::validate() const {
  if (max_steps < 1) throw ArgumentError("max_steps must be at least 1");
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw ArgumentError("epsilon must lie in (0, 1)");
  if (!(learning_rate > 0.0)) throw ArgumentError("learning_rate must be positive");
  if (batch_size == 0) throw ArgumentError("batch_size must be positive");
  if (w0 && *w0 != 0 && *w0 != 1) throw ArgumentError("w0 must be 0 or 1");
  if (!(grl_lambda >= 0.0)) throw ArgumentError("grl_lambda must be non-negative");
  if (!(gate_ema_decay >= 0.0 && gate_ema_decay < 1.0)) {
    throw ArgumentError("gate_ema_decay must lie in [0, 1)");
  }
  if (shape.feature_hidden == 0 || shape.feature_out == 0 || shape.domain_hidden == 0) {
    throw ArgumentError("network widths must be positive");
  }
}

int resolve_w0(const TrainConfig& config, const LabelSets& sets) {
  if (config.w0) return *config.w0;
  return jaccard_index(sets) >= 0.3 ? 1 : 0;
}

SuanModel SuanModel::create(std::size_t input_dim, std::size_t num_source_classes,
                            const NetworkShape& shape, bool with_domain_prime, Rng& rng) {
  if (num_source_classes == 0) throw ArgumentError("classifier needs at least one class");
  SuanModel m;
  m.feature = make_mlp(input_dim,
                       {{shape.feature_hidden, Activation::kRectifier},
                        {shape.feature_out, Activation::kRectifier}},
                       Head::kNone, rng);
  m.classifier = make_mlp(shape.feature_out, {{num_source_classes, Activation::kIdentity}},
                          Head::kSoftmax, rng);
  const std::vector<LayerSpec> domain_layers{{shape.domain_hidden, Activation::kRectifier},
                                             {1, Activation::kIdentity}};
  m.domain = make_mlp(shape.feature_out, domain_layers, Head::kLogistic, rng);
  if (with_domain_prime) {
    m.domain_prime = make_mlp(shape.feature_out, domain_layers, Head::kLogistic, rng);
  }
  m.normalized_domain_input = shape.normalized_domain_input;
  return m;
}

void SuanModel::validate() const {
  feature.validate();
  classifier.validate();
  domain.validate();
  if (classifier.in_width() != feature.out_width()) {
    throw ShapeError("classifier input width differs from feature width");
  }
  if (domain.in_width() != feature.out_width()) {
    throw ShapeError("domain classifier input width differs from feature width");
  }
  if (domain_prime) {
    domain_prime->validate();
    if (domain_prime->in_width() != feature.out_width()) {
      throw ShapeError("D' input width differs from feature width");
    }
  }
}

Matrix extract_features(const SuanModel& model, const Matrix& inputs) {
  return mlp_forward(model.feature, inputs).outputs;
}

Matrix domain_features(const SuanModel& model, const Matrix& inputs) {
  Matrix z = extract_features(model, inputs);
  return model.normalized_domain_input ? l2_normalize_rows(z) : z;
}

Matrix predict_proba(const SuanModel& model, const Matrix& inputs) {
  return mlp_forward(model.classifier, l2_normalize_rows(extract_features(model, inputs)))
      .outputs;
}

namespace {

std::size_t argmax(std::span<const double> row) {
  std::size_t best = 0;
  for (std::size_t c = 1; c < row.size(); ++c) {
    if (row[c] > row[best]) best = c;
  }
  return best;
}

double error_rate(const Matrix& probs, std::span<const std::size_t> labels) {
  if (labels.empty()) throw ArgumentError("error rate of an empty set");
  std::size_t wrong = 0;
  for (std::size_t r = 0; r < probs.rows(); ++r) {
    if (argmax(probs.row(r)) != labels[r]) ++wrong;
  }
  return static_cast<double>(wrong) / static_cast<double>(labels.size());
}

std::vector<double> column(const Matrix& m) {
  return {m.values().begin(), m.values().end()};
}

Matrix as_column(std::span<const double> v) {
  return Matrix(v.size(), 1, std::vector<double>(v.begin(), v.end()));
}

struct BinaryGrad {
  double loss;
  GradientSet params;
  Matrix source_input_grad;
  Matrix target_input_grad;
};

// Weighted source-vs-target cross-entropy of a logistic discriminator on
// precomputed features.
BinaryGrad discriminator_loss(const MlpParams& disc, const Matrix& source_features,
                              const Matrix& target_features, std::span<const double> ws,
                              std::span<const double> wt) {
  if (ws.size() != source_features.rows() || wt.size() != target_features.rows()) {
    throw ShapeError("weight count does not match batch size");
  }
  const auto fs = mlp_forward(disc, source_features);
  const auto ft = mlp_forward(disc, target_features);
  const std::vector<double> ones(ws.size(), 1.0);
  const std::vector<double> zeros(wt.size(), 0.0);
  const auto bs = weighted_bce(column(fs.outputs), ones, ws);
  const auto bt = weighted_bce(column(ft.outputs), zeros, wt);
  auto back_s = mlp_backward(disc, fs.cache, as_column(bs.logit_grad));
  auto back_t = mlp_backward(disc, ft.cache, as_column(bt.logit_grad));
  back_s.grads += back_t.grads;
  return {bs.loss + bt.loss, std::move(back_s.grads), std::move(back_s.input_grad),
          std::move(back_t.input_grad)};
}

}  // namespace

ClassifierObjective classifier_objective(const SuanModel& model, const Matrix& inputs,
                                         std::span<const std::size_t> labels) {
  const auto f = mlp_forward(model.feature, inputs);
  const Matrix normalized = l2_normalize_rows(f.outputs);
  const auto g = mlp_forward(model.classifier, normalized);
  const auto ce = cross_entropy(g.outputs, labels);
  auto g_back = mlp_backward(model.classifier, g.cache, ce.logit_grad);
  const Matrix feature_grad = l2_normalize_rows_backward(f.outputs, g_back.input_grad);
  auto f_back = mlp_backward(model.feature, f.cache, feature_grad);
  return {ce.loss, std::move(f_back.grads), std::move(g_back.grads), g.outputs};
}

DomainObjective domain_objective(const SuanModel& model, const Matrix& source_inputs,
                                 const Matrix& target_inputs,
                                 std::span<const double> source_weights,
                                 std::span<const double> target_weights, double grl_lambda,
                                 FeatureRouting routing) {
  const auto fs = mlp_forward(model.feature, source_inputs);
  const auto ft = mlp_forward(model.feature, target_inputs);
  const bool normalized = model.normalized_domain_input;
  auto disc = discriminator_loss(
      model.domain, normalized ? l2_normalize_rows(fs.outputs) : fs.outputs,
      normalized ? l2_normalize_rows(ft.outputs) : ft.outputs, source_weights, target_weights);
  if (normalized) {
    disc.source_input_grad = l2_normalize_rows_backward(fs.outputs, disc.source_input_grad);
    disc.target_input_grad = l2_normalize_rows_backward(ft.outputs, disc.target_input_grad);
  }
  auto feature_grad = mlp_backward(model.feature, fs.cache, disc.source_input_grad).grads;
  feature_grad += mlp_backward(model.feature, ft.cache, disc.target_input_grad).grads;
  if (routing == FeatureRouting::kReversed) feature_grad = grl_scale(feature_grad, grl_lambda);
  return {disc.loss, std::move(disc.params), std::move(feature_grad)};
}

double source_error(const SuanModel& model, const Dataset& data) {
  if (data.size() == 0) throw ArgumentError("source error of an empty dataset");
  return error_rate(predict_proba(model, data.features), data.labels);
}

double uan_source_weight(std::span<const double> probs, double domain_prime_prob) {
  const double log_k = std::log(static_cast<double>(probs.size()));
  const double normalized_entropy = log_k > 0.0 ? entropy(probs) / log_k : 0.0;
  return normalized_entropy - domain_prime_prob;
}

double uan_target_weight(std::span<const double> probs, double domain_prime_prob) {
  return -uan_source_weight(probs, domain_prime_prob);
}

UanWeights uan_baseline_weights(const SuanModel& model, const Matrix& source_inputs,
                                const Matrix& target_inputs) {
  if (!model.domain_prime) throw ConfigError("entropy weighting requires the D' classifier");
  UanWeights out;
  auto weigh = [&](const Matrix& inputs, bool source) {
    const Matrix probs = predict_proba(model, inputs);
    const Matrix d_prime = mlp_forward(*model.domain_prime, domain_features(model, inputs)).outputs;
    std::vector<double> w;
    w.reserve(inputs.rows());
    for (std::size_t r = 0; r < inputs.rows(); ++r) {
      w.push_back(source ? uan_source_weight(probs.row(r), d_prime(r, 0))
                         : uan_target_weight(probs.row(r), d_prime(r, 0)));
    }
    return w;
  };
  out.source = weigh(source_inputs, true);
  out.target = weigh(target_inputs, false);
  return out;
}

namespace {

double group_mean(std::span<const double> w, std::span<const std::size_t> labels,
                  const auto& in_group) {
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (in_group(labels[i])) {
      total += w[i];
      ++count;
    }
  }
  return count == 0 ? std::numeric_limits<double>::quiet_NaN()
                    : total / static_cast<double>(count);
}

GroupWeightMeans group_means(std::span<const double> ws, std::span<const double> wt,
                             const StepBatches& b) {
  if (b.label_sets == nullptr) return {};
  const LabelSets& sets = *b.label_sets;
  auto common = [&](std::size_t c) { return sets.is_common(c); };
  return {group_mean(ws, b.source.labels, common),
          group_mean(ws, b.source.labels,
                     [&](std::size_t c) { return sets.is_source_private(c); }),
          group_mean(wt, b.target.labels, common),
          group_mean(wt, b.target.labels,
                     [&](std::size_t c) { return sets.is_target_private(c); })};
}

double scheduled_lambda(const TrainConfig& config, std::size_t step) {
  if (config.grl_schedule == GrlSchedule::kConstant) return config.grl_lambda;
  const double progress =
      std::min(1.0, static_cast<double>(step) / static_cast<double>(config.max_steps));
  return config.grl_lambda * progress;
}

}  // namespace

TraceRecord train_step(TrainerState& state, const StepBatches& batches,
                       const TrainConfig& config, int w0) {
  const Dataset& src = batches.source;
  const Dataset& tgt = batches.target;
  if (src.size() == 0 || tgt.size() == 0) throw ArgumentError("empty training batch");
  SuanModel& model = state.model;

  TraceRecord rec;
  rec.step = state.step;
  rec.grl_lambda = scheduled_lambda(config, state.step);

  auto cls = classifier_objective(model, src.features, src.labels);
  rec.classifier_loss = cls.loss;
  rec.batch_source_error = error_rate(cls.probs, src.labels);
  if (config.gate == GateStatistic::kFullSourceSet) {
    if (batches.full_source == nullptr) {
      throw ConfigError("full-set gate statistic needs the full source dataset");
    }
    rec.gate_statistic = source_error(model, *batches.full_source);
  } else {
    state.error_ema = state.error_ema
                          ? config.gate_ema_decay * *state.error_ema +
                                (1.0 - config.gate_ema_decay) * rec.batch_source_error
                          : rec.batch_source_error;
    rec.gate_statistic = *state.error_ema;
  }

  std::vector<double> ws;
  std::vector<double> wt;
  const NormalizationConfig norm{w0};
  switch (config.mode) {
    case TrainMode::kSourceOnly:
      break;
    case TrainMode::kSuan: {
      const Matrix target_probs = predict_proba(model, tgt.features);
      if (rec.gate_statistic < config.epsilon) {
        state.margin_register.update(
            batch_margin_vector(target_probs, state.margin_register.num_classes()));
        rec.register_updated = true;
      }
      ws = normalize_weights(source_weights(state.margin_register, src.labels), norm);
      wt = normalize_weights(target_weights(target_probs), norm);
      break;
    }
    case TrainMode::kUnweightedAdversarial:
      ws.assign(src.size(), 1.0);
      wt.assign(tgt.size(), 1.0);
      break;
    case TrainMode::kUanWeighting: {
      auto raw = uan_baseline_weights(model, src.features, tgt.features);
      ws = normalize_weights(raw.source, norm);
      wt = normalize_weights(raw.target, norm);
      break;
    }
  }

  GradientSet feature_grad = std::move(cls.feature_grad);
  if (config.mode != TrainMode::kSourceOnly) {
    auto dom = domain_objective(model, src.features, tgt.features, ws, wt, rec.grl_lambda);
    rec.domain_loss = dom.loss;
    feature_grad += dom.feature_grad;
    rec.weights = group_means(ws, wt, batches);
    if (config.mode == TrainMode::kUanWeighting) {
      // D′ sees the current features but never pushes gradient into F.
      const Matrix fs = domain_features(model, src.features);
      const Matrix ft = domain_features(model, tgt.features);
      const std::vector<double> ones_s(src.size(), 1.0);
      const std::vector<double> ones_t(tgt.size(), 1.0);
      auto prime = discriminator_loss(*model.domain_prime, fs, ft, ones_s, ones_t);
      sgd_step(*model.domain_prime, prime.params, config.learning_rate);
    }
    sgd_step(model.domain, dom.domain_grad, config.learning_rate);
  }
  sgd_step(model.classifier, cls.classifier_grad, config.learning_rate);
  sgd_step(model.feature, feature_grad, config.learning_rate);

  rec.register_updates = state.margin_register.update_count();
  const auto reg = state.margin_register.values();
  rec.register_values.assign(reg.begin(), reg.end());
  ++state.step;
  return rec;
}

FitResult fit(const Scenario& scenario, const TrainConfig& config) {
  config.validate();
  const std::size_t num_classes = scenario.label_sets.source_classes().size();
  const auto& src_classes = scenario.label_sets.source_classes();
  if (src_classes.empty() || src_classes.back() != num_classes - 1) {
    throw DataError("source classes must be indexed 0..|C_s|-1");
  }
  const int w0 = resolve_w0(config, scenario.label_sets);

  Rng rng(config.seed);
  TrainerState state{SuanModel::create(scenario.source.features.cols(), num_classes,
                                       config.shape,
                                       config.mode == TrainMode::kUanWeighting, rng),
                     MarginRegister(num_classes), std::nullopt, 0};
  BalancedBatches source_stream(scenario.source.labels, config.batch_size, rng.fork_seed());
  ShuffledBatches target_stream(scenario.target.size(), config.batch_size, rng.fork_seed());

  FitResult result{{}, MarginRegister(num_classes), {}, w0};
  result.trace.records.reserve(config.max_steps);
  for (std::size_t t = 0; t < config.max_steps; ++t) {
    const Dataset sb = scenario.source.select(source_stream.next());
    const Dataset tb = scenario.target.select(target_stream.next());
    result.trace.records.push_back(train_step(
        state, {sb, tb, &scenario.label_sets, &scenario.source}, config, w0));
  }
  result.model = std::move(state.model);
  result.margin_register = std::move(state.margin_register);
  return result;
}

}  // namespace suan
