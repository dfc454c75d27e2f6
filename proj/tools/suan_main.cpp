// suan: command-line runner for the margin-weighted domain adaptation lab.
//
//   suan run   [--config f.yaml] [--seed N] [--mode M] [--out DIR] [--threshold T] [--w0 0|1]
//   suan sweep --config f.yaml [same overrides]
//   suan bound [--vc-dim D] [--gamma G] [--m-prime M] ... | --scan MODE --grid a,b,c
//   suan check [--seed N]

#include <CLI11.hpp>
#include <fmt/format.h>

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "invariant_checks.hpp"
#include "suan/bound.hpp"
#include "suan/config.hpp"
#include "suan/errors.hpp"
#include "suan/report.hpp"

namespace {

struct Overrides {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> mode;
  std::optional<std::string> out;
  std::optional<double> threshold;
  std::optional<int> w0;
};

void add_override_flags(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config_path, "YAML experiment config")->check(CLI::ExistingFile);
  cmd->add_option("--seed", o.seed, "experiment seed");
  cmd->add_option("--mode", o.mode, "suan | source_only | unweighted_adversarial | uan_weighting");
  cmd->add_option("--out", o.out, "output directory");
  cmd->add_option("--threshold", o.threshold, "unknown-class confidence threshold");
  cmd->add_option("--w0", o.w0, "activation threshold of the weight normalisation")
      ->check(CLI::IsMember({0, 1}));
}

suan::ExperimentConfig resolve_config(const Overrides& o) {
  suan::ExperimentConfig c =
      o.config_path.empty() ? suan::parse_config("") : suan::load_config_file(o.config_path);
  if (o.seed) c = suan::with_seed(c, *o.seed);
  if (o.mode) c.train.mode = suan::parse_train_mode(*o.mode);
  if (o.out) c.out = *o.out;
  if (o.threshold) c.threshold = *o.threshold;
  if (o.w0) c.train.w0 = *o.w0;
  c.validate();
  return c;
}

int cmd_run(const Overrides& o) {
  suan::ExperimentConfig c = resolve_config(o);
  c.sweep.reset();
  const suan::RunSummary s = suan::run_single(c, c.out);
  fmt::print("mode={} seed={} averaged_accuracy={} common={} unknown={} -> {}\n",
             suan::to_string(c.train.mode), c.seed, suan::format_number(s.averaged_accuracy),
             suan::format_number(s.common_accuracy), suan::format_number(s.unknown_accuracy),
             c.out);
  return 0;
}

int cmd_sweep(const Overrides& o) {
  const suan::ExperimentConfig c = resolve_config(o);
  if (!c.sweep) throw suan::ConfigError("sweep needs a 'sweep' section in the config");
  suan::run_experiment(c);
  fmt::print("{} runs -> {}/sweep_summary.csv\n", c.sweep->values.size() * c.sweep->seeds.size(),
             c.out);
  return 0;
}

struct BoundArgs {
  suan::BoundInputs inputs;
  std::string scan;
  std::vector<double> grid;
  suan::ScanSetup setup;
};

int cmd_bound(const BoundArgs& a) {
  if (!a.scan.empty()) {
    suan::ScanSetup setup = a.setup;
    setup.vc_dim = a.inputs.vc_dim;
    setup.delta = a.inputs.delta;
    setup.gamma = a.inputs.gamma;
    setup.source_risk = a.inputs.source_risk;
    setup.empirical_divergence = a.inputs.empirical_divergence;
    setup.lambda = a.inputs.lambda;
    const auto result = suan::property_scan(setup, suan::parse_scan_mode(a.scan), a.grid);
    fmt::print("parameter,gamma,alpha,m_prime,bound,verdict\n");
    for (const auto& r : result.rows) {
      fmt::print("{},{},{},{},{},{}\n", suan::format_number(r.parameter),
                 suan::format_number(r.gamma), suan::format_number(r.alpha),
                 suan::format_number(r.m_prime), suan::format_number(r.bound),
                 suan::to_string(r.verdict));
    }
    return result.holds ? 0 : 3;
  }
  const auto d = suan::decompose_bound(a.inputs);
  fmt::print(
      "{{\n  \"source_risk\": {},\n  \"half_divergence\": {},\n  \"complexity\": {},\n"
      "  \"lambda\": {},\n  \"total\": {}\n}}\n",
      suan::format_number(d.source_risk), suan::format_number(d.half_divergence),
      suan::format_number(d.complexity), suan::format_number(d.lambda),
      suan::format_number(d.total));
  return 0;
}

int cmd_check(std::uint64_t seed) {
  bool all = true;
  for (const auto& r : suan::tools::run_invariant_checks(seed)) {
    fmt::print("[{}] {}{}\n", r.passed ? "PASS" : "FAIL", r.name,
               r.detail.empty() ? "" : " (" + r.detail + ")");
    all = all && r.passed;
  }
  return all ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Margin-weighted universal domain adaptation lab"};
  app.require_subcommand(1);

  Overrides run_o, sweep_o;
  auto* run = app.add_subcommand("run", "train and evaluate one experiment");
  add_override_flags(run, run_o);
  auto* sweep = app.add_subcommand("sweep", "run the config's sweep section");
  add_override_flags(sweep, sweep_o);

  BoundArgs bound_a;
  auto* bound = app.add_subcommand("bound", "evaluate the target-risk bound or scan it");
  bound->add_option("--vc-dim", bound_a.inputs.vc_dim, "VC dimension d")->capture_default_str();
  bound->add_option("--gamma", bound_a.inputs.gamma, "|C_s| / |C_t|")->capture_default_str();
  bound->add_option("--m-prime", bound_a.inputs.m_prime, "alpha * m")->capture_default_str();
  bound->add_option("--delta", bound_a.inputs.delta, "confidence parameter")
      ->capture_default_str();
  bound->add_option("--source-risk", bound_a.inputs.source_risk)->capture_default_str();
  bound->add_option("--divergence", bound_a.inputs.empirical_divergence)->capture_default_str();
  bound->add_option("--lambda", bound_a.inputs.lambda)->capture_default_str();
  bound->add_option("--scan", bound_a.scan, "vary_target_classes | vary_common_classes");
  bound->add_option("--grid", bound_a.grid, "ascending grid (|C_t| or alpha)")->delimiter(',');
  bound->add_option("--m", bound_a.setup.m, "per-domain sample count for scans")
      ->capture_default_str();
  bound->add_option("--num-common", bound_a.setup.num_common, "|C| for vary_target_classes")
      ->capture_default_str();
  bound->add_option("--num-source", bound_a.setup.num_source, "|C_s| for vary_target_classes")
      ->capture_default_str();

  std::uint64_t check_seed = 7;
  auto* check = app.add_subcommand("check", "run the built-in invariant suite");
  check->add_option("--seed", check_seed)->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(run_o);
    if (*sweep) return cmd_sweep(sweep_o);
    if (*bound) return cmd_bound(bound_a);
    if (*check) return cmd_check(check_seed);
  } catch (const suan::ParseError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
