// Acceptance suite: one PASS/FAIL line per criterion.
//
//   suan_acceptance [--only N ...] [--known-red N ...]
//
// The exit status is nonzero when a criterion fails that is not listed under
// --known-red. A known-red criterion still prints FAIL; the flag only records
// that the failure is expected and analysed, so it does not break the build.

#include <CLI11.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "suan/bound.hpp"
#include "suan/config.hpp"
#include "suan/eval.hpp"
#include "suan/losses.hpp"
#include "suan/report.hpp"
#include "suan/rng.hpp"
#include "suan/scenario.hpp"
#include "suan/trainer.hpp"
#include "suan/weighting.hpp"

using namespace suan;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool passed = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

Matrix random_matrix(std::size_t r, std::size_t c, Rng& rng) {
  Matrix m(r, c);
  for (double& v : m.values()) v = rng.normal();
  return m;
}

double max_rel_error(const GradientSet& a, const GradientSet& b) {
  double worst = 0.0;
  auto cmp = [&](double x, double y) {
    worst = std::max(worst, std::abs(x - y) / std::max(1e-6, std::abs(x) + std::abs(y)));
  };
  for (std::size_t l = 0; l < a.layers.size(); ++l) {
    for (std::size_t i = 0; i < a.layers[l].weight.size(); ++i)
      cmp(a.layers[l].weight.values()[i], b.layers[l].weight.values()[i]);
    for (std::size_t i = 0; i < a.layers[l].bias.size(); ++i)
      cmp(a.layers[l].bias[i], b.layers[l].bias[i]);
  }
  return worst;
}

GradientSet numeric_grad(const SuanModel& model, MlpParams SuanModel::*net,
                         const std::function<double(const SuanModel&)>& f) {
  return finite_diff_gradient(
      [&](const MlpParams& p) {
        SuanModel m = model;
        m.*net = p;
        return f(m);
      },
      model.*net, 1e-6);
}

SuanModel random_tiny_model(Rng& rng, std::size_t in, std::size_t k) {
  NetworkShape shape;
  shape.feature_hidden = 2 + rng.below(5);
  shape.feature_out = 2 + rng.below(4);
  shape.domain_hidden = 2 + rng.below(4);
  shape.normalized_domain_input = rng.below(2) == 1;
  return SuanModel::create(in, k, shape, false, rng);
}

/// True when an input sits within `margin` of a rectifier kink, or a feature
/// row is all zero (where l2 normalisation has no derivative). Central
/// differences straddle such points, so gradient checks redraw those cases.
bool near_kink(const SuanModel& model, const Matrix& x, double margin = 1e-3) {
  const auto f = mlp_forward(model.feature, x);
  for (const Matrix& z : f.cache.pre_activations)
    for (double v : z.values())
      if (std::abs(v) < margin) return true;
  for (std::size_t r = 0; r < f.outputs.rows(); ++r) {
    bool any = false;
    for (double v : f.outputs.row(r)) any = any || v > margin;
    if (!any) return true;
  }
  const auto d = mlp_forward(model.domain, domain_features(model, x));
  for (const Matrix& z : d.cache.pre_activations)
    for (double v : z.values())
      if (std::abs(v) < margin) return true;
  return false;
}

// 1. Analytic gradients of the classifier and domain objectives against
//    central differences.
Outcome gradient_correctness() {
  const auto t0 = Clock::now();
  Rng rng(1);
  double worst = 0.0;
  for (int net = 0; net < 20; ++net) {
    const std::size_t in = 2 + rng.below(3), k = 2 + rng.below(4), n = 3 + rng.below(5);
    SuanModel model;
    Matrix xs, xt;
    do {
      model = random_tiny_model(rng, in, k);
      xs = random_matrix(n, in, rng);
      xt = random_matrix(n + 1, in, rng);
    } while (near_kink(model, xs) || near_kink(model, xt));
    std::vector<std::size_t> y(n);
    for (auto& v : y) v = rng.below(k);
    std::vector<double> ws(n), wt(n + 1);
    for (double& w : ws) w = rng.uniform(0.0, 2.0);
    for (double& w : wt) w = rng.uniform(0.0, 2.0);

    const auto eg = classifier_objective(model, xs, y);
    auto fg = [&](const SuanModel& m) { return classifier_objective(m, xs, y).loss; };
    worst = std::max(worst, max_rel_error(eg.feature_grad,
                                          numeric_grad(model, &SuanModel::feature, fg)));
    worst = std::max(worst, max_rel_error(eg.classifier_grad,
                                          numeric_grad(model, &SuanModel::classifier, fg)));

    const auto ed = domain_objective(model, xs, xt, ws, wt, 1.0, FeatureRouting::kPlain);
    auto fd = [&](const SuanModel& m) {
      return domain_objective(m, xs, xt, ws, wt, 1.0, FeatureRouting::kPlain).loss;
    };
    worst = std::max(worst, max_rel_error(ed.domain_grad,
                                          numeric_grad(model, &SuanModel::domain, fd)));
    worst = std::max(worst, max_rel_error(ed.feature_grad,
                                          numeric_grad(model, &SuanModel::feature, fd)));
  }
  const double secs = seconds_since(t0);
  return {worst < 1e-4 && secs < 30.0,
          fmt::format("20 networks, max relative error {:.3g} (< 1e-4), {:.2f} s (< 30 s)", worst,
                      secs)};
}

// 2. The reversed feature gradient is the ungated one times −λ, entry by entry.
Outcome grl_exactness() {
  Rng rng(2);
  std::size_t entries = 0, mismatches = 0;
  for (int net = 0; net < 10; ++net) {
    const SuanModel model = random_tiny_model(rng, 3, 3);
    const Matrix xs = random_matrix(6, 3, rng), xt = random_matrix(5, 3, rng);
    std::vector<double> ws(6), wt(5);
    for (double& w : ws) w = rng.uniform(0.0, 2.0);
    for (double& w : wt) w = rng.uniform(0.0, 2.0);
    const auto plain = domain_objective(model, xs, xt, ws, wt, 1.0, FeatureRouting::kPlain);
    for (double lambda : {0.0, 0.5, 1.0}) {
      const auto rev =
          domain_objective(model, xs, xt, ws, wt, lambda, FeatureRouting::kReversed);
      for (std::size_t l = 0; l < plain.feature_grad.layers.size(); ++l) {
        const auto& a = plain.feature_grad.layers[l];
        const auto& b = rev.feature_grad.layers[l];
        for (std::size_t i = 0; i < a.weight.size(); ++i, ++entries)
          if (b.weight.values()[i] != -lambda * a.weight.values()[i]) ++mismatches;
        for (std::size_t i = 0; i < a.bias.size(); ++i, ++entries)
          if (b.bias[i] != -lambda * a.bias[i]) ++mismatches;
      }
      if (!(rev.domain_grad == plain.domain_grad)) ++mismatches;
    }
  }
  return {mismatches == 0,
          fmt::format("{} entries over lambda in {{0, 0.5, 1}}, {} mismatches", entries,
                      mismatches)};
}

// 3. The register equals the brute-force mean of the stored margin vectors.
Outcome register_oracle() {
  Rng rng(3);
  double worst = 0.0;
  for (int seq = 0; seq < 20; ++seq) {
    const std::size_t k = 2 + rng.below(8);
    const std::size_t len = seq == 0 ? 1000 : 1 + rng.below(1000);
    MarginRegister reg(k);
    std::vector<long double> sum(k, 0.0L);
    for (std::size_t t = 0; t < len; ++t) {
      std::vector<double> m(k);
      for (double& v : m) v = rng.uniform();
      for (std::size_t c = 0; c < k; ++c) sum[c] += m[c];
      reg.update(m);
    }
    for (std::size_t c = 0; c < k; ++c)
      worst = std::max(worst, std::abs(reg.values()[c] - static_cast<double>(sum[c] / len)));
  }
  return {worst < 1e-12, fmt::format("20 sequences up to 1000 updates, max deviation {:.3g}",
                                     worst)};
}

// 4. Non-negativity, unit mean before the threshold, positive-affine invariance.
Outcome normalization_invariants() {
  Rng rng(4);
  bool nonneg = true;
  double worst_mean = 0.0;
  for (int b = 0; b < 1000; ++b) {
    std::vector<double> w(2 + rng.below(60));
    for (double& v : w) v = rng.uniform(-3.0, 3.0);
    if (*std::max_element(w.begin(), w.end()) == *std::min_element(w.begin(), w.end()))
      continue;
    for (int w0 : {0, 1})
      for (double v : normalize_weights(w, {w0})) nonneg = nonneg && v >= 0.0;
    const auto out = normalize_weights(w, {0});
    double s = 0.0;
    for (double v : out) s += v;
    worst_mean = std::max(worst_mean, std::abs(s / out.size() - 1.0));
  }
  // Affine maps with power-of-two scale and integer shift on small integers
  // are exact in floating point, so any output difference would come from the
  // normalisation itself.
  std::size_t exact_batches = 0, exact_failures = 0;
  for (int b = 0; b < 1000; ++b, ++exact_batches) {
    std::vector<double> w(2 + rng.below(30));
    for (double& v : w) v = static_cast<double>(rng.below(1024));
    const double scale = std::ldexp(1.0, static_cast<int>(rng.below(8)) - 3);
    const double shift = static_cast<double>(rng.below(1000)) - 500.0;
    std::vector<double> moved(w);
    for (double& v : moved) v = scale * v + shift;
    for (int w0 : {0, 1})
      if (normalize_weights(w, {w0}) != normalize_weights(moved, {w0})) ++exact_failures;
  }
  double general = 0.0;
  for (int b = 0; b < 1000; ++b) {
    std::vector<double> w(2 + rng.below(30));
    for (double& v : w) v = rng.uniform();
    const double scale = rng.uniform(0.01, 100.0), shift = rng.uniform(-10.0, 10.0);
    std::vector<double> moved(w);
    for (double& v : moved) v = scale * v + shift;
    const auto a = normalize_weights(w, {0}), c = normalize_weights(moved, {0});
    for (std::size_t i = 0; i < a.size(); ++i) general = std::max(general, std::abs(a[i] - c[i]));
  }
  const bool ok = nonneg && worst_mean <= 1e-9 && exact_failures == 0;
  return {ok, fmt::format("non-negative: {}; max |mean-1| {:.3g} (<= 1e-9); affine: {}/{} exact "
                          "batches differ, general-input max drift {:.3g}",
                          nonneg ? "yes" : "no", worst_mean, exact_failures, exact_batches,
                          general)};
}

ExperimentConfig seeded_default(std::uint64_t seed, TrainMode mode) {
  ExperimentConfig c = with_seed(parse_config(""), seed);
  c.train.mode = mode;
  return c;
}

struct TrainedRun {
  double averaged_accuracy = 0.0;
  GroupWeightMeans weights;
};

TrainedRun train_and_evaluate(const ExperimentConfig& c) {
  const Scenario sc = build_scenario(c.scenario);
  const FitResult fit_result = fit(sc, c.train);
  const auto preds = infer_batch(fit_result.model, sc.target.features, c.threshold);
  const auto report = uda_accuracy(preds, sc.target.labels, sc.label_sets, c.threshold);
  const auto tagged = model_sample_weights(fit_result.model, fit_result.margin_register,
                                           c.train.mode, sc.source, sc.target);
  const auto groups = weight_density_groups(tagged, sc.label_sets);
  auto mean = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? std::nan("") : s / static_cast<double>(v.size());
  };
  return {report.averaged_accuracy,
          {mean(groups.source_common), mean(groups.source_private), mean(groups.target_common),
           mean(groups.target_private)}};
}

// 5. Source weights favour common classes; target weights separate by ≥ 0.15.
Outcome weight_separation(std::vector<TrainedRun>& suan_runs) {
  const auto t0 = Clock::now();
  int source_ok = 0, target_ok = 0;
  double min_gap = INFINITY;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const TrainedRun r = train_and_evaluate(seeded_default(seed, TrainMode::kSuan));
    suan_runs.push_back(r);
    if (r.weights.source_common > r.weights.source_private) ++source_ok;
    const double gap = r.weights.target_common - r.weights.target_private;
    min_gap = std::min(min_gap, gap);
    if (gap >= 0.15) ++target_ok;
  }
  const double secs = seconds_since(t0);
  return {source_ok >= 9 && target_ok >= 9 && secs < 300.0,
          fmt::format("source common>private in {}/10, target gap>=0.15 in {}/10 (min gap "
                      "{:.3f}), {:.1f} s (< 300 s)",
                      source_ok, target_ok, min_gap, secs)};
}

// 6. Averaged accuracy beats both baselines by at least five points.
Outcome negative_transfer(const std::vector<TrainedRun>& suan_runs) {
  double suan = 0.0, source_only = 0.0, unweighted = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    suan += suan_runs.at(seed).averaged_accuracy;
    source_only +=
        train_and_evaluate(seeded_default(seed, TrainMode::kSourceOnly)).averaged_accuracy;
    unweighted += train_and_evaluate(seeded_default(seed, TrainMode::kUnweightedAdversarial))
                      .averaged_accuracy;
  }
  suan /= 10.0;
  source_only /= 10.0;
  unweighted /= 10.0;
  const double margin = std::min(suan - source_only, suan - unweighted);
  return {margin >= 0.05,
          fmt::format("suan {:.4f}, source_only {:.4f}, unweighted_adversarial {:.4f}; "
                      "smallest lead {:+.2f} points (>= +5)",
                      suan, source_only, unweighted, 100.0 * margin)};
}

// 7. Set-based and fraction-based overlap agree exactly; 20/21/10 gives ≈ 0.32.
Outcome jaccard_consistency() {
  Rng rng(7);
  int checked = 0, mismatches = 0;
  while (checked < 10000) {
    std::set<std::size_t> s, t;
    const std::size_t universe = 1 + rng.below(60);
    for (std::size_t c = 0; c < universe; ++c) {
      const auto r = rng.below(3);
      if (r != 1) s.insert(c);
      if (r != 2) t.insert(c);
    }
    if (s.empty() || t.empty()) continue;
    const LabelSets sets({s.begin(), s.end()}, {t.begin(), t.end()});
    ++checked;
    if (sets.common().empty()) {
      if (jaccard_index(sets) != 0.0) ++mismatches;
      continue;
    }
    if (jaccard_index(sets) != xi_from_fractions(sets.alpha(), sets.beta())) ++mismatches;
    if (jaccard_index(sets) != oracle::jaccard(s, t)) ++mismatches;
  }
  std::vector<std::size_t> src, tgt;
  for (std::size_t c = 0; c < 20; ++c) src.push_back(c);
  for (std::size_t c = 0; c < 10; ++c) tgt.push_back(c);
  for (std::size_t c = 20; c < 31; ++c) tgt.push_back(c);
  const double xi = jaccard_index(LabelSets(src, tgt));
  const bool ok = mismatches == 0 && std::abs(xi - 0.32) <= 0.005 && xi == 10.0 / 31.0;
  return {ok, fmt::format("{} partitions, {} mismatches; 20/21/10 split xi = {:.4f} "
                          "(0.32 +/- 0.005)",
                          checked, mismatches, xi)};
}

// 8. Bound vs |C_t|: non-decreasing while γ > 1, exactly constant once γ ≤ 1.
Outcome bound_property_one() {
  ScanSetup setup;
  setup.vc_dim = 3;
  setup.delta = 0.05;
  setup.m = 36;
  setup.num_source = 15;
  setup.num_common = 10;
  const std::vector<double> grid{10, 13, 15, 20, 25, 26};
  const auto scan = property_scan(setup, ScanMode::kVaryTargetClasses, grid);
  std::vector<double> ref;
  for (double ct : grid) ref.push_back(oracle::complexity(3, 15.0 / ct, 10.0 / 15.0 * 36.0, 0.05));
  bool ok = scan.holds;
  ok = ok && ref[1] >= ref[0] && ref[2] >= ref[1];
  ok = ok && ref[3] == ref[2] && ref[4] == ref[2] && ref[5] == ref[2];
  for (std::size_t i = 0; i < grid.size(); ++i) ok = ok && std::abs(scan.rows[i].bound - ref[i]) < 1e-12;
  for (std::size_t i = 3; i < grid.size(); ++i) ok = ok && scan.rows[i].bound == scan.rows[2].bound;
  return {ok, fmt::format("|C_t| 10,13,15: {:.4f}, {:.4f}, {:.4f}; 15..26 constant at {:.6f}",
                          scan.rows[0].bound, scan.rows[1].bound, scan.rows[2].bound,
                          scan.rows[5].bound)};
}

// 9. Bound vs α at γ = 1: strictly decreasing inside α ≥ e/(2m); verdicts
//    agree with an independent pairwise comparison.
Outcome bound_property_two() {
  ScanSetup setup;
  setup.gamma = 1.0;
  setup.m = 36;
  setup.vc_dim = 3;
  std::vector<double> grid;
  for (int i = 2; i <= 10; ++i) grid.push_back(i / 10.0);
  const auto scan = property_scan(setup, ScanMode::kVaryCommonClasses, grid);
  const double edge = std::numbers::e / (2.0 * 36.0);
  int agree = 0, decreasing = 0, compared = 0;
  bool ok = scan.holds;
  for (std::size_t i = 1; i < grid.size(); ++i) {
    const double prev = oracle::complexity(3, 1.0, grid[i - 1] * 36.0, 0.05);
    const double cur = oracle::complexity(3, 1.0, grid[i] * 36.0, 0.05);
    const bool inside = grid[i - 1] >= edge && grid[i] >= edge;
    Verdict expected = Verdict::kOutsideRegion;
    if (inside) {
      ++compared;
      expected = cur < prev ? Verdict::kDecreasing : Verdict::kViolated;
      if (cur < prev) ++decreasing;
    }
    if (scan.rows[i].verdict == expected) ++agree;
  }
  ok = ok && agree == static_cast<int>(grid.size()) - 1 && decreasing == compared;
  return {ok, fmt::format("{}/{} pairs strictly decreasing inside alpha >= {:.4f}; {}/{} verdicts "
                          "match the reference comparison",
                          decreasing, compared, edge, agree, grid.size() - 1)};
}

// 10. Without private classes and at threshold 0 the metric is closed-set accuracy.
Outcome closed_set_degeneration() {
  ExperimentConfig c = parse_config("");
  c.scenario.num_common = 5;
  c.scenario.num_source_private = 0;
  c.scenario.num_target_private = 0;
  c.train.max_steps = 300;
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const ExperimentConfig cs = with_seed(c, seed);
    const Scenario sc = build_scenario(cs.scenario);
    const FitResult r = fit(sc, cs.train);
    const Matrix probs = predict_proba(r.model, sc.target.features);
    std::vector<Prediction> preds;
    std::vector<std::size_t> argmax;
    for (std::size_t i = 0; i < probs.rows(); ++i) {
      preds.push_back(decide(probs.row(i), 0.0));
      argmax.push_back(oracle::argmax_first({probs.row(i).begin(), probs.row(i).end()}));
    }
    const double got = uda_accuracy(preds, sc.target.labels, sc.label_sets, 0.0).averaged_accuracy;
    worst = std::max(worst, std::abs(got - oracle::closed_set_accuracy(argmax, sc.target.labels)));
  }
  return {worst <= 1e-12, fmt::format("3 trained models, max difference {:.3g} (<= 1e-12)", worst)};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// 11. Same config and seed twice: every report file byte-identical.
Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / "suan_acceptance_determinism";
  fs::remove_all(root);
  std::vector<ExperimentConfig> configs;
  configs.push_back(seeded_default(3, TrainMode::kSuan));
  configs.push_back(seeded_default(5, TrainMode::kUanWeighting));
  ExperimentConfig sweep = seeded_default(1, TrainMode::kSuan);
  sweep.train.max_steps = 200;
  sweep.sweep = SweepSpec{"scenario.num_target_private", {0, 3}, {0, 1}};
  configs.push_back(sweep);
  // Both runs write to the same directory, so even config.yaml (which records
  // the output path) must repeat byte for byte.
  auto snapshot = [](const fs::path& dir) {
    std::map<std::string, std::string> files;
    for (const auto& e : fs::recursive_directory_iterator(dir))
      if (e.is_regular_file()) files[fs::relative(e.path(), dir).string()] = slurp(e.path());
    return files;
  };
  std::size_t files = 0, differing = 0;
  for (std::size_t i = 0; i < configs.size(); ++i) {
    ExperimentConfig c = configs[i];
    c.out = (root / fmt::format("c{}", i)).string();
    run_experiment(c);
    const auto first = snapshot(c.out);
    fs::remove_all(c.out);
    run_experiment(c);
    const auto second = snapshot(c.out);
    for (const auto& [name, bytes] : first) {
      ++files;
      const auto it = second.find(name);
      if (it == second.end() || it->second != bytes) ++differing;
    }
    if (second.size() != first.size()) ++differing;
  }
  fs::remove_all(root);
  return {files > 0 && differing == 0,
          fmt::format("3 configs, {} files compared, {} differ", files, differing)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  std::vector<int> only, known_red;
  app.add_option("--only", only, "run just these criteria");
  app.add_option("--known-red", known_red, "criteria whose failure is expected and analysed");
  CLI11_PARSE(app, argc, argv);

  auto wanted = [&](int id) {
    return only.empty() || std::find(only.begin(), only.end(), id) != only.end();
  };
  std::vector<TrainedRun> suan_runs;
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"gradient correctness", gradient_correctness},
      {"gradient reversal exactness", grl_exactness},
      {"margin register equals brute-force mean", register_oracle},
      {"weight normalisation invariants", normalization_invariants},
      {"weight separation", [&] { return weight_separation(suan_runs); }},
      {"negative-transfer avoidance",
       [&] {
         if (suan_runs.empty()) weight_separation(suan_runs);
         return negative_transfer(suan_runs);
       }},
      {"overlap ratio consistency", jaccard_consistency},
      {"bound property: target class count", bound_property_one},
      {"bound property: common class fraction", bound_property_two},
      {"closed-set degeneration", closed_set_degeneration},
      {"determinism", determinism},
  };

  int unexpected = 0, red = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!wanted(id)) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, fmt::format("threw: {}", e.what())};
    }
    const bool expected_red =
        std::find(known_red.begin(), known_red.end(), id) != known_red.end();
    fmt::print("[{}] {:>2} {}: {}{}\n", o.passed ? "PASS" : "FAIL", id, criteria[i].first,
               o.detail, !o.passed && expected_red ? " (known red)" : "");
    std::fflush(stdout);
    if (!o.passed) {
      ++red;
      if (!expected_red) ++unexpected;
    }
  }
  fmt::print("{} failing, {} of them unexpected\n", red, unexpected);
  return unexpected == 0 ? 0 : 1;
}
