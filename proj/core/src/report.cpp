#include "suan/report.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <fstream>
#include <nlohmann/json.hpp>
#include <numeric>

#include "suan/errors.hpp"

namespace suan {

namespace {

using ordered_json = nlohmann::ordered_json;

/// JSON number carrying exactly the 9-significant-digit value.
double rounded(double value) {
  if (!std::isfinite(value)) return value;
  return std::stod(format_number(value));
}

ordered_json json_number(double value) {
  if (!std::isfinite(value)) return nullptr;
  return rounded(value);
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(fmt::format("cannot write '{}'", path.string()));
  out << content;
  if (!out) throw IoError(fmt::format("write to '{}' failed", path.string()));
}

void make_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) {
    throw IoError(fmt::format("cannot create directory '{}': {}", dir.string(), ec.message()));
  }
}

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return std::nan("");
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

std::string trace_csv(const TrainTrace& trace, std::size_t num_classes) {
  std::string out =
      "step,classifier_loss,domain_loss,batch_source_error,gate_statistic,register_updated,"
      "register_updates,grl_lambda,w_source_common,w_source_private,w_target_common,"
      "w_target_private";
  for (std::size_t c = 0; c < num_classes; ++c) out += fmt::format(",register_{}", c);
  out += '\n';
  for (const auto& r : trace.records) {
    out += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{}", r.step,
                       format_number(r.classifier_loss), format_number(r.domain_loss),
                       format_number(r.batch_source_error), format_number(r.gate_statistic),
                       r.register_updated ? 1 : 0, r.register_updates,
                       format_number(r.grl_lambda), format_number(r.weights.source_common),
                       format_number(r.weights.source_private),
                       format_number(r.weights.target_common),
                       format_number(r.weights.target_private));
    for (double v : r.register_values) out += "," + format_number(v);
    out += '\n';
  }
  return out;
}

std::string_view group_name(const LabelSets& sets, Domain d, std::size_t label) {
  const bool common = sets.is_common(label);
  if (d == Domain::kSource) return common ? "source_common" : "source_private";
  return common ? "target_common" : "target_private";
}

std::string weights_csv(const std::vector<TaggedWeight>& weights, const LabelSets& sets) {
  std::string out = "domain,label,group,weight\n";
  for (const auto& w : weights) {
    out += fmt::format("{},{},{},{}\n", to_string(w.domain), w.true_label,
                       group_name(sets, w.domain, w.true_label), format_number(w.weight));
  }
  return out;
}

ordered_json layer_json(const DenseLayer& layer) {
  ordered_json j;
  j["in"] = layer.in_width();
  j["out"] = layer.out_width();
  j["activation"] = layer.activation == Activation::kRectifier ? "rectifier" : "identity";
  j["weight"] = std::vector<double>(layer.weight.values().begin(), layer.weight.values().end());
  j["bias"] = layer.bias;
  return j;
}

std::string_view head_name(Head h) {
  switch (h) {
    case Head::kNone:
      return "none";
    case Head::kSoftmax:
      return "softmax";
    case Head::kLogistic:
      return "logistic";
  }
  return "none";
}

ordered_json mlp_json(const MlpParams& p) {
  ordered_json j;
  j["head"] = head_name(p.head);
  j["layers"] = ordered_json::array();
  for (const auto& l : p.layers) j["layers"].push_back(layer_json(l));
  return j;
}

MlpParams mlp_from_json(const nlohmann::json& j) {
  MlpParams p;
  const auto head = j.at("head").get<std::string>();
  if (head == "none") {
    p.head = Head::kNone;
  } else if (head == "softmax") {
    p.head = Head::kSoftmax;
  } else if (head == "logistic") {
    p.head = Head::kLogistic;
  } else {
    throw ParseError(fmt::format("unknown head '{}'", head), 0);
  }
  for (const auto& lj : j.at("layers")) {
    DenseLayer layer;
    const auto in = lj.at("in").get<std::size_t>();
    const auto out = lj.at("out").get<std::size_t>();
    auto weights = lj.at("weight").get<std::vector<double>>();
    if (weights.size() != in * out) {
      throw ShapeError(fmt::format("layer weight has {} entries, expected {}", weights.size(),
                                   in * out));
    }
    layer.weight = Matrix(in, out, std::move(weights));
    layer.bias = lj.at("bias").get<std::vector<double>>();
    const auto act = lj.at("activation").get<std::string>();
    if (act == "rectifier") {
      layer.activation = Activation::kRectifier;
    } else if (act == "identity") {
      layer.activation = Activation::kIdentity;
    } else {
      throw ParseError(fmt::format("unknown activation '{}'", act), 0);
    }
    p.layers.push_back(std::move(layer));
  }
  p.validate();
  return p;
}

std::string sweep_value_label(double v) { return fmt::format("{}", v); }

}  // namespace

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  return fmt::format("{:.9g}", value);
}

BoundReport resolve_bound(const BoundSettings& settings, const SuanModel& model,
                          const Scenario& scenario, const TrainConfig& train,
                          std::uint64_t seed) {
  const LabelSets& sets = scenario.label_sets;
  if (sets.common().empty()) {
    throw ConfigError("the bound needs at least one common class");
  }
  BoundReport report;
  report.m = static_cast<double>(train.batch_size);
  report.alpha = sets.alpha();
  report.inputs.vc_dim = settings.vc_dim.value_or(default_vc_dim(model));
  report.inputs.gamma = sets.gamma();
  report.inputs.m_prime = report.alpha * report.m;
  report.inputs.delta = settings.delta;

  const Dataset s_common = scenario.source.filter([&](std::size_t y) { return sets.is_common(y); });
  const Dataset t_common = scenario.target.filter([&](std::size_t y) { return sets.is_common(y); });
  Dataset s_feat = s_common;
  s_feat.features = extract_features(model, s_common.features);
  Dataset t_feat = t_common;
  t_feat.features = extract_features(model, t_common.features);

  Rng rng(seed);
  const std::uint64_t div_seed = rng.fork_seed();
  const std::uint64_t lambda_seed = rng.fork_seed();
  report.inputs.source_risk =
      settings.source_risk.value_or(source_error(model, scenario.source));
  report.inputs.empirical_divergence = settings.empirical_divergence.value_or(
      proxy_divergence(s_feat.features, t_feat.features, div_seed));
  report.inputs.lambda =
      settings.lambda.value_or(lambda_oracle(s_feat, t_feat, sets, lambda_seed));
  report.decomposition = decompose_bound(report.inputs);

  const Matrix probs = predict_proba(model, t_common.features);
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < probs.rows(); ++i) {
    const auto row = probs.row(i);
    const auto pred = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) -
                                               row.begin());
    if (pred != t_common.labels[i]) ++wrong;
  }
  report.empirical_target_risk =
      static_cast<double>(wrong) / static_cast<double>(std::max<std::size_t>(1, probs.rows()));
  return report;
}

RunSummary run_single(const ExperimentConfig& input, const std::filesystem::path& dir) {
  const ExperimentConfig config = with_seed(input, input.seed);
  config.validate();
  make_dir(dir);

  const Scenario scenario = build_scenario(config.scenario);
  const FitResult fitted = fit(scenario, config.train);
  const LabelSets& sets = scenario.label_sets;

  const auto predictions = infer_batch(fitted.model, scenario.target.features, config.threshold);
  const EvalReport eval = uda_accuracy(predictions, scenario.target.labels, sets, config.threshold);
  const auto weights = model_sample_weights(fitted.model, fitted.margin_register,
                                            config.train.mode, scenario.source, scenario.target);
  const WeightGroups groups = weight_density_groups(weights, sets);

  RunSummary summary;
  summary.averaged_accuracy = eval.averaged_accuracy;
  std::vector<double> common_acc;
  summary.unknown_accuracy = std::nan("");
  for (const auto& c : eval.per_class) {
    if (c.label) {
      common_acc.push_back(c.accuracy);
    } else {
      summary.unknown_accuracy = c.accuracy;
    }
  }
  summary.common_accuracy = mean_of(common_acc);
  summary.weights = {mean_of(groups.source_common), mean_of(groups.source_private),
                     mean_of(groups.target_common), mean_of(groups.target_private)};
  summary.register_updates = fitted.margin_register.update_count();
  summary.source_error = source_error(fitted.model, scenario.source);
  summary.w0 = fitted.w0;

  write_file(dir / "config.yaml", emit_config(config));
  write_file(dir / "trace.csv", trace_csv(fitted.trace, sets.source_classes().size()));
  write_file(dir / "weight_groups.csv", weights_csv(weights, sets));

  ordered_json report;
  report["mode"] = to_string(config.train.mode);
  report["seed"] = config.seed;
  report["threshold"] = json_number(config.threshold);
  report["w0"] = fitted.w0;
  report["jaccard_index"] = json_number(jaccard_index(sets));
  report["averaged_accuracy"] = json_number(eval.averaged_accuracy);
  report["common_accuracy"] = json_number(summary.common_accuracy);
  report["unknown_accuracy"] = json_number(summary.unknown_accuracy);
  report["source_error"] = json_number(summary.source_error);
  report["per_class"] = ordered_json::array();
  for (const auto& c : eval.per_class) {
    ordered_json row;
    if (c.label) {
      row["label"] = *c.label;
    } else {
      row["label"] = "unknown";
    }
    row["accuracy"] = json_number(c.accuracy);
    row["count"] = c.count;
    report["per_class"].push_back(row);
  }
  ordered_json wg;
  wg["source_common"] = json_number(summary.weights.source_common);
  wg["source_private"] = json_number(summary.weights.source_private);
  wg["target_common"] = json_number(summary.weights.target_common);
  wg["target_private"] = json_number(summary.weights.target_private);
  report["weight_group_means"] = wg;
  write_file(dir / "eval_report.json", report.dump(2) + "\n");

  ordered_json reg;
  reg["num_classes"] = fitted.margin_register.num_classes();
  reg["update_count"] = fitted.margin_register.update_count();
  reg["values"] = ordered_json::array();
  for (double v : fitted.margin_register.values()) reg["values"].push_back(json_number(v));
  write_file(dir / "register.json", reg.dump(2) + "\n");

  if (!sets.common().empty()) {
    const BoundReport b = resolve_bound(config.bound, fitted.model, scenario, config.train,
                                        config.seed);
    ordered_json bj;
    ordered_json in;
    in["vc_dim"] = b.inputs.vc_dim;
    in["gamma"] = json_number(b.inputs.gamma);
    in["alpha"] = json_number(b.alpha);
    in["m"] = json_number(b.m);
    in["m_prime"] = json_number(b.inputs.m_prime);
    in["delta"] = json_number(b.inputs.delta);
    in["source_risk"] = json_number(b.inputs.source_risk);
    in["empirical_divergence"] = json_number(b.inputs.empirical_divergence);
    in["lambda"] = json_number(b.inputs.lambda);
    bj["inputs"] = in;
    ordered_json dec;
    dec["source_risk"] = json_number(b.decomposition.source_risk);
    dec["half_divergence"] = json_number(b.decomposition.half_divergence);
    dec["complexity"] = json_number(b.decomposition.complexity);
    dec["lambda"] = json_number(b.decomposition.lambda);
    dec["total"] = json_number(b.decomposition.total);
    bj["decomposition"] = dec;
    bj["empirical_target_risk"] = json_number(b.empirical_target_risk);
    write_file(dir / "bound.json", bj.dump(2) + "\n");
  }

  write_file(dir / "model.json", model_to_json(fitted.model));
  return summary;
}

void run_experiment(const ExperimentConfig& config) {
  config.validate();
  const std::filesystem::path root(config.out);
  if (!config.sweep) {
    run_single(config, root);
    return;
  }
  make_dir(root);
  const SweepSpec& sweep = *config.sweep;
  std::string csv =
      "parameter,value,seed,mode,averaged_accuracy,common_accuracy,unknown_accuracy,"
      "w_source_common,w_source_private,w_target_common,w_target_private,register_updates,"
      "source_error\n";
  for (double value : sweep.values) {
    ExperimentConfig point = with_parameter(config, sweep.parameter, value);
    point.sweep.reset();
    for (std::uint64_t seed : sweep.seeds) {
      const ExperimentConfig run = with_seed(point, seed);
      const auto dir = root / fmt::format("{}={}", sweep.parameter, sweep_value_label(value)) /
                       fmt::format("seed_{}", seed);
      const RunSummary s = run_single(run, dir);
      csv += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{}\n", sweep.parameter,
                         format_number(value), seed, to_string(run.train.mode),
                         format_number(s.averaged_accuracy), format_number(s.common_accuracy),
                         format_number(s.unknown_accuracy), format_number(s.weights.source_common),
                         format_number(s.weights.source_private),
                         format_number(s.weights.target_common),
                         format_number(s.weights.target_private), s.register_updates,
                         format_number(s.source_error));
    }
  }
  write_file(root / "sweep_summary.csv", csv);
}

std::string model_to_json(const SuanModel& model) {
  ordered_json j;
  j["normalized_domain_input"] = model.normalized_domain_input;
  j["feature"] = mlp_json(model.feature);
  j["classifier"] = mlp_json(model.classifier);
  j["domain"] = mlp_json(model.domain);
  if (model.domain_prime) j["domain_prime"] = mlp_json(*model.domain_prime);
  return j.dump(1) + "\n";
}

SuanModel model_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(fmt::format("malformed model JSON: {}", e.what()), 0);
  }
  try {
    SuanModel m;
    m.normalized_domain_input = j.at("normalized_domain_input").get<bool>();
    m.feature = mlp_from_json(j.at("feature"));
    m.classifier = mlp_from_json(j.at("classifier"));
    m.domain = mlp_from_json(j.at("domain"));
    if (j.contains("domain_prime")) m.domain_prime = mlp_from_json(j.at("domain_prime"));
    m.validate();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(fmt::format("invalid model JSON: {}", e.what()), 0);
  }
}

}  // namespace suan
