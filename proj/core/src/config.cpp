#include "suan/config.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <yaml-cpp/yaml.h>

#include "suan/errors.hpp"

namespace suan {

namespace {

int line_of(const YAML::Node& node) {
  const YAML::Mark mark = node.Mark();
  return mark.line >= 0 ? mark.line + 1 : 0;
}

std::string where(const YAML::Node& node) {
  const int line = line_of(node);
  return line > 0 ? fmt::format(" (line {})", line) : std::string{};
}

/// Rejects keys outside `allowed` and non-map nodes.
void check_keys(const YAML::Node& node, const std::string& path,
                const std::set<std::string>& allowed) {
  if (!node.IsMap()) {
    throw ConfigError(fmt::format("'{}' must be a mapping{}", path, where(node)));
  }
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    if (!allowed.contains(key)) {
      const std::string full = path.empty() ? key : path + "." + key;
      throw ConfigError(fmt::format("unknown key '{}'{}", full, where(kv.first)));
    }
  }
}

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

template <typename T>
T scalar_as(const YAML::Node& node, const std::string& name, std::string_view type) {
  if (!node.IsScalar()) {
    throw ConfigError(fmt::format("'{}' must be a {}{}", name, type, where(node)));
  }
  try {
    return node.as<T>();
  } catch (const YAML::BadConversion&) {
    throw ConfigError(fmt::format("'{}' must be a {}, got '{}'{}", name, type,
                                  node.Scalar(), where(node)));
  }
}

double read_double(const YAML::Node& node, const std::string& name) {
  const double v = scalar_as<double>(node, name, "number");
  if (!std::isfinite(v)) {
    throw ConfigError(fmt::format("'{}' must be finite{}", name, where(node)));
  }
  return v;
}

std::size_t read_count(const YAML::Node& node, const std::string& name) {
  const auto v = scalar_as<long long>(node, name, "non-negative integer");
  if (v < 0) {
    throw ConfigError(fmt::format("'{}' must be a non-negative integer{}", name, where(node)));
  }
  return static_cast<std::size_t>(v);
}

std::uint64_t read_seed(const YAML::Node& node, const std::string& name) {
  const auto text = scalar_as<std::string>(node, name, "non-negative integer");
  if (text.empty() || text.front() == '-') {
    throw ConfigError(fmt::format("'{}' must be a non-negative integer{}", name, where(node)));
  }
  return scalar_as<std::uint64_t>(node, name, "non-negative integer");
}

bool read_bool(const YAML::Node& node, const std::string& name) {
  return scalar_as<bool>(node, name, "boolean");
}

std::string read_string(const YAML::Node& node, const std::string& name) {
  return scalar_as<std::string>(node, name, "string");
}

template <typename Parse>
auto read_enum(const YAML::Node& node, const std::string& name, Parse parse) {
  const auto text = read_string(node, name);
  try {
    return parse(text);
  } catch (const ArgumentError& e) {
    throw ConfigError(fmt::format("'{}': {}{}", name, e.what(), where(node)));
  }
}

std::optional<int> read_w0(const YAML::Node& node, const std::string& name) {
  if (node.IsScalar() && node.Scalar() == "auto") return std::nullopt;
  const auto v = scalar_as<long long>(node, name, "0, 1 or auto");
  if (v != 0 && v != 1) {
    throw ConfigError(fmt::format("'{}' must be 0 or 1 (got {}){}", name, v, where(node)));
  }
  return static_cast<int>(v);
}

std::vector<double> read_double_list(const YAML::Node& node, const std::string& name) {
  if (!node.IsSequence()) {
    throw ConfigError(fmt::format("'{}' must be a list{}", name, where(node)));
  }
  std::vector<double> out;
  for (std::size_t i = 0; i < node.size(); ++i) {
    out.push_back(read_double(node[i], fmt::format("{}[{}]", name, i)));
  }
  return out;
}

/// Keep the translation length in step with feature_dim, zero-padding or
/// dropping trailing axes.
void fit_translation(ScenarioConfig& sc) {
  if (sc.shift.translation.empty()) return;
  sc.shift.translation.resize(sc.feature_dim, 0.0);
  if (std::all_of(sc.shift.translation.begin(), sc.shift.translation.end(),
                  [](double v) { return v == 0.0; })) {
    sc.shift.translation.clear();
  }
}

void parse_shift(const YAML::Node& node, DomainShift& shift, bool& translation_set) {
  const std::string path = "scenario.shift";
  check_keys(node, path, {"rotation_deg", "rotation_plane", "translation"});
  if (auto n = node["rotation_deg"]) shift.rotation_deg = read_double(n, join(path, "rotation_deg"));
  if (auto n = node["rotation_plane"]) {
    const std::string name = join(path, "rotation_plane");
    if (!n.IsSequence() || n.size() != 2) {
      throw ConfigError(fmt::format("'{}' must be a list of two axes{}", name, where(n)));
    }
    shift.rotation_plane = {read_count(n[0], name + "[0]"), read_count(n[1], name + "[1]")};
  }
  if (auto n = node["translation"]) {
    shift.translation = read_double_list(n, join(path, "translation"));
    translation_set = true;
  }
}

void parse_scenario(const YAML::Node& node, ScenarioConfig& sc) {
  const std::string path = "scenario";
  check_keys(node, path,
             {"feature_dim", "num_common", "num_source_private", "num_target_private",
              "source_samples_per_class", "target_samples_per_class", "class_separation",
              "private_radius", "noise_scale", "shift"});
  auto count = [&](const char* key, std::size_t& field) {
    if (auto n = node[key]) field = read_count(n, join(path, key));
  };
  auto number = [&](const char* key, double& field) {
    if (auto n = node[key]) field = read_double(n, join(path, key));
  };
  count("feature_dim", sc.feature_dim);
  count("num_common", sc.num_common);
  count("num_source_private", sc.num_source_private);
  count("num_target_private", sc.num_target_private);
  count("source_samples_per_class", sc.source_samples_per_class);
  count("target_samples_per_class", sc.target_samples_per_class);
  number("class_separation", sc.class_separation);
  number("private_radius", sc.private_radius);
  number("noise_scale", sc.noise_scale);
  bool translation_set = false;
  if (auto n = node["shift"]) parse_shift(n, sc.shift, translation_set);
  if (!translation_set) fit_translation(sc);
}

void parse_train(const YAML::Node& node, TrainConfig& tc) {
  const std::string path = "train";
  check_keys(node, path,
             {"max_steps", "epsilon", "learning_rate", "batch_size", "grl_lambda",
              "grl_schedule", "gate", "gate_ema_decay", "network"});
  auto count = [&](const char* key, std::size_t& field) {
    if (auto n = node[key]) field = read_count(n, join(path, key));
  };
  auto number = [&](const char* key, double& field) {
    if (auto n = node[key]) field = read_double(n, join(path, key));
  };
  count("max_steps", tc.max_steps);
  number("epsilon", tc.epsilon);
  number("learning_rate", tc.learning_rate);
  count("batch_size", tc.batch_size);
  number("grl_lambda", tc.grl_lambda);
  if (auto n = node["grl_schedule"]) {
    tc.grl_schedule = read_enum(n, "train.grl_schedule", parse_grl_schedule);
  }
  if (auto n = node["gate"]) tc.gate = read_enum(n, "train.gate", parse_gate_statistic);
  number("gate_ema_decay", tc.gate_ema_decay);
  if (auto net = node["network"]) {
    const std::string npath = "train.network";
    check_keys(net, npath,
               {"feature_hidden", "feature_out", "domain_hidden", "normalized_domain_input"});
    if (auto n = net["feature_hidden"]) {
      tc.shape.feature_hidden = read_count(n, join(npath, "feature_hidden"));
    }
    if (auto n = net["feature_out"]) {
      tc.shape.feature_out = read_count(n, join(npath, "feature_out"));
    }
    if (auto n = net["domain_hidden"]) {
      tc.shape.domain_hidden = read_count(n, join(npath, "domain_hidden"));
    }
    if (auto n = net["normalized_domain_input"]) {
      tc.shape.normalized_domain_input = read_bool(n, join(npath, "normalized_domain_input"));
    }
  }
}

void parse_bound(const YAML::Node& node, BoundSettings& b) {
  const std::string path = "bound";
  check_keys(node, path, {"vc_dim", "delta", "source_risk", "empirical_divergence", "lambda"});
  if (auto n = node["vc_dim"]) {
    const auto v = scalar_as<long long>(n, "bound.vc_dim", "positive integer");
    if (v < 1) throw ConfigError(fmt::format("'bound.vc_dim' must be at least 1{}", where(n)));
    b.vc_dim = static_cast<int>(v);
  }
  if (auto n = node["delta"]) b.delta = read_double(n, "bound.delta");
  if (auto n = node["source_risk"]) b.source_risk = read_double(n, "bound.source_risk");
  if (auto n = node["empirical_divergence"]) {
    b.empirical_divergence = read_double(n, "bound.empirical_divergence");
  }
  if (auto n = node["lambda"]) b.lambda = read_double(n, "bound.lambda");
}

void parse_sweep(const YAML::Node& node, std::optional<SweepSpec>& sweep) {
  const std::string path = "sweep";
  check_keys(node, path, {"parameter", "values", "seeds"});
  SweepSpec s;
  if (auto n = node["parameter"]) {
    s.parameter = read_string(n, "sweep.parameter");
  } else {
    throw ConfigError(fmt::format("'sweep.parameter' is required{}", where(node)));
  }
  if (auto n = node["values"]) {
    s.values = read_double_list(n, "sweep.values");
  } else {
    throw ConfigError(fmt::format("'sweep.values' is required{}", where(node)));
  }
  if (auto n = node["seeds"]) {
    if (!n.IsSequence()) throw ConfigError(fmt::format("'sweep.seeds' must be a list{}", where(n)));
    for (std::size_t i = 0; i < n.size(); ++i) {
      s.seeds.push_back(read_seed(n[i], fmt::format("sweep.seeds[{}]", i)));
    }
  } else {
    s.seeds = {0};
  }
  sweep = std::move(s);
}

// ---- emission ------------------------------------------------------------

std::string num(double v) { return fmt::format("{}", v); }

std::string quoted(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

template <typename Range, typename Fmt>
std::string flow_list(const Range& items, Fmt f) {
  std::string out = "[";
  bool first = true;
  for (const auto& item : items) {
    if (!first) out += ", ";
    out += f(item);
    first = false;
  }
  return out + "]";
}

// ---- sweepable parameters -------------------------------------------------

using Setter = std::function<void(ExperimentConfig&, double)>;

std::size_t as_count(std::string_view name, double v) {
  if (!(v >= 0.0) || std::floor(v) != v || v > 1e15) {
    throw ConfigError(fmt::format("'{}' needs a non-negative integer, got {}", name, v));
  }
  return static_cast<std::size_t>(v);
}

const std::map<std::string, Setter, std::less<>>& setters() {
  static const std::map<std::string, Setter, std::less<>> table = [] {
    std::map<std::string, Setter, std::less<>> t;
    auto count = [&t](const std::string& name, std::size_t ScenarioConfig::*field) {
      t[name] = [name, field](ExperimentConfig& c, double v) {
        c.scenario.*field = as_count(name, v);
      };
    };
    auto real = [&t](const std::string& name, double ScenarioConfig::*field) {
      t[name] = [field](ExperimentConfig& c, double v) { c.scenario.*field = v; };
    };
    count("scenario.num_common", &ScenarioConfig::num_common);
    count("scenario.num_source_private", &ScenarioConfig::num_source_private);
    count("scenario.num_target_private", &ScenarioConfig::num_target_private);
    count("scenario.source_samples_per_class", &ScenarioConfig::source_samples_per_class);
    count("scenario.target_samples_per_class", &ScenarioConfig::target_samples_per_class);
    real("scenario.class_separation", &ScenarioConfig::class_separation);
    real("scenario.private_radius", &ScenarioConfig::private_radius);
    real("scenario.noise_scale", &ScenarioConfig::noise_scale);
    t["scenario.feature_dim"] = [](ExperimentConfig& c, double v) {
      c.scenario.feature_dim = as_count("scenario.feature_dim", v);
      fit_translation(c.scenario);
    };
    t["scenario.shift.rotation_deg"] = [](ExperimentConfig& c, double v) {
      c.scenario.shift.rotation_deg = v;
    };
    t["train.max_steps"] = [](ExperimentConfig& c, double v) {
      c.train.max_steps = as_count("train.max_steps", v);
    };
    t["train.batch_size"] = [](ExperimentConfig& c, double v) {
      c.train.batch_size = as_count("train.batch_size", v);
    };
    t["train.epsilon"] = [](ExperimentConfig& c, double v) { c.train.epsilon = v; };
    t["train.learning_rate"] = [](ExperimentConfig& c, double v) { c.train.learning_rate = v; };
    t["train.grl_lambda"] = [](ExperimentConfig& c, double v) { c.train.grl_lambda = v; };
    t["train.gate_ema_decay"] = [](ExperimentConfig& c, double v) { c.train.gate_ema_decay = v; };
    t["threshold"] = [](ExperimentConfig& c, double v) { c.threshold = v; };
    t["w0"] = [](ExperimentConfig& c, double v) {
      if (v != 0.0 && v != 1.0) throw ConfigError(fmt::format("'w0' must be 0 or 1, got {}", v));
      c.train.w0 = static_cast<int>(v);
    };
    return t;
  }();
  return table;
}

}  // namespace

void ExperimentConfig::validate() const {
  auto section = [](const char* name, auto&& fn) {
    try {
      fn();
    } catch (const ArgumentError& e) {
      throw ConfigError(fmt::format("{}: {}", name, e.what()));
    }
  };
  section("scenario", [&] { scenario.validate(); });
  section("train", [&] { train.validate(); });
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    throw ConfigError(fmt::format("threshold must lie in [0, 1], got {}", threshold));
  }
  if (bound.vc_dim && *bound.vc_dim < 1) throw ConfigError("bound.vc_dim must be at least 1");
  if (!(bound.delta > 0.0 && bound.delta < 1.0)) {
    throw ConfigError("bound.delta must lie in (0, 1)");
  }
  if (bound.source_risk && !(*bound.source_risk >= 0.0 && *bound.source_risk <= 1.0)) {
    throw ConfigError("bound.source_risk must lie in [0, 1]");
  }
  if (bound.empirical_divergence &&
      !(*bound.empirical_divergence >= 0.0 && *bound.empirical_divergence <= 2.0)) {
    throw ConfigError("bound.empirical_divergence must lie in [0, 2]");
  }
  if (bound.lambda && !(*bound.lambda >= 0.0)) {
    throw ConfigError("bound.lambda must be non-negative");
  }
  if (out.empty()) throw ConfigError("out must name a directory");
  if (sweep) {
    if (!setters().contains(sweep->parameter)) {
      throw ConfigError(fmt::format("sweep.parameter '{}' is not a sweepable field",
                                    sweep->parameter));
    }
    if (sweep->values.empty()) throw ConfigError("sweep.values must not be empty");
    if (sweep->seeds.empty()) throw ConfigError("sweep.seeds must not be empty");
    for (double v : sweep->values) {
      ExperimentConfig point = with_parameter(*this, sweep->parameter, v);
      point.sweep.reset();
      try {
        point.validate();
      } catch (const ConfigError& e) {
        throw ConfigError(fmt::format("sweep value {} of '{}': {}", v, sweep->parameter,
                                      e.what()));
      }
    }
  }
}

ExperimentConfig parse_config(std::string_view text) {
  YAML::Node root;
  try {
    root = YAML::Load(std::string(text));
  } catch (const YAML::ParserException& e) {
    throw ParseError(fmt::format("malformed config at line {}: {}", e.mark.line + 1, e.msg),
                     e.mark.line + 1);
  }
  ExperimentConfig config = with_seed(ExperimentConfig{}, 0);
  if (root.IsNull()) {
    config.validate();
    return config;
  }
  check_keys(root, "",
             {"seed", "mode", "threshold", "w0", "out", "scenario", "train", "bound", "sweep"});
  if (auto n = root["seed"]) config.seed = read_seed(n, "seed");
  if (auto n = root["mode"]) config.train.mode = read_enum(n, "mode", parse_train_mode);
  if (auto n = root["threshold"]) config.threshold = read_double(n, "threshold");
  if (auto n = root["w0"]) config.train.w0 = read_w0(n, "w0");
  if (auto n = root["out"]) config.out = read_string(n, "out");
  if (auto n = root["scenario"]) parse_scenario(n, config.scenario);
  if (auto n = root["train"]) parse_train(n, config.train);
  if (auto n = root["bound"]) parse_bound(n, config.bound);
  if (auto n = root["sweep"]) parse_sweep(n, config.sweep);
  config = with_seed(config, config.seed);
  config.validate();
  return config;
}

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError(fmt::format("cannot open config '{}'", path));
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string emit_config(const ExperimentConfig& c) {
  const auto& sc = c.scenario;
  const auto& tc = c.train;
  std::string y;
  auto line = [&y](int indent, const std::string& text) {
    y.append(static_cast<std::size_t>(indent), ' ');
    y += text;
    y += '\n';
  };
  line(0, fmt::format("seed: {}", c.seed));
  line(0, fmt::format("mode: {}", to_string(tc.mode)));
  line(0, fmt::format("threshold: {}", num(c.threshold)));
  line(0, fmt::format("w0: {}", tc.w0 ? std::to_string(*tc.w0) : std::string("auto")));
  line(0, fmt::format("out: {}", quoted(c.out)));
  line(0, "scenario:");
  line(2, fmt::format("feature_dim: {}", sc.feature_dim));
  line(2, fmt::format("num_common: {}", sc.num_common));
  line(2, fmt::format("num_source_private: {}", sc.num_source_private));
  line(2, fmt::format("num_target_private: {}", sc.num_target_private));
  line(2, fmt::format("source_samples_per_class: {}", sc.source_samples_per_class));
  line(2, fmt::format("target_samples_per_class: {}", sc.target_samples_per_class));
  line(2, fmt::format("class_separation: {}", num(sc.class_separation)));
  line(2, fmt::format("private_radius: {}", num(sc.private_radius)));
  line(2, fmt::format("noise_scale: {}", num(sc.noise_scale)));
  line(2, "shift:");
  line(4, fmt::format("rotation_deg: {}", num(sc.shift.rotation_deg)));
  line(4, fmt::format("rotation_plane: [{}, {}]", sc.shift.rotation_plane[0],
                      sc.shift.rotation_plane[1]));
  line(4, fmt::format("translation: {}", flow_list(sc.shift.translation, num)));
  line(0, "train:");
  line(2, fmt::format("max_steps: {}", tc.max_steps));
  line(2, fmt::format("epsilon: {}", num(tc.epsilon)));
  line(2, fmt::format("learning_rate: {}", num(tc.learning_rate)));
  line(2, fmt::format("batch_size: {}", tc.batch_size));
  line(2, fmt::format("grl_lambda: {}", num(tc.grl_lambda)));
  line(2, fmt::format("grl_schedule: {}", to_string(tc.grl_schedule)));
  line(2, fmt::format("gate: {}", to_string(tc.gate)));
  line(2, fmt::format("gate_ema_decay: {}", num(tc.gate_ema_decay)));
  line(2, "network:");
  line(4, fmt::format("feature_hidden: {}", tc.shape.feature_hidden));
  line(4, fmt::format("feature_out: {}", tc.shape.feature_out));
  line(4, fmt::format("domain_hidden: {}", tc.shape.domain_hidden));
  line(4, fmt::format("normalized_domain_input: {}", tc.shape.normalized_domain_input));
  line(0, "bound:");
  if (c.bound.vc_dim) line(2, fmt::format("vc_dim: {}", *c.bound.vc_dim));
  line(2, fmt::format("delta: {}", num(c.bound.delta)));
  if (c.bound.source_risk) line(2, fmt::format("source_risk: {}", num(*c.bound.source_risk)));
  if (c.bound.empirical_divergence) {
    line(2, fmt::format("empirical_divergence: {}", num(*c.bound.empirical_divergence)));
  }
  if (c.bound.lambda) line(2, fmt::format("lambda: {}", num(*c.bound.lambda)));
  if (c.sweep) {
    line(0, "sweep:");
    line(2, fmt::format("parameter: {}", quoted(c.sweep->parameter)));
    line(2, fmt::format("values: {}", flow_list(c.sweep->values, num)));
    line(2, fmt::format("seeds: {}", flow_list(c.sweep->seeds, [](std::uint64_t s) {
                          return std::to_string(s);
                        })));
  }
  return y;
}

const std::vector<std::string>& sweepable_parameters() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& kv : setters()) out.push_back(kv.first);
    return out;
  }();
  return names;
}

ExperimentConfig with_parameter(const ExperimentConfig& config, std::string_view parameter,
                                double value) {
  const auto it = setters().find(parameter);
  if (it == setters().end()) {
    throw ConfigError(fmt::format("'{}' is not a sweepable field", parameter));
  }
  ExperimentConfig out = config;
  it->second(out, value);
  return out;
}

ExperimentConfig with_seed(const ExperimentConfig& config, std::uint64_t seed) {
  ExperimentConfig out = config;
  out.seed = seed;
  out.scenario.seed = seed;
  out.train.seed = seed + 1;  // distinct stream from the scenario generator
  return out;
}

}  // namespace suan
