#include "suan/eval.hpp"

#include <fmt/format.h>

#include "suan/errors.hpp"
#include "suan/weighting.hpp"

namespace suan {

Prediction decide(std::span<const double> probs, double threshold) {
  if (probs.empty()) throw ArgumentError("empty probability row");
  std::size_t best = 0;
  for (std::size_t c = 1; c < probs.size(); ++c) {
    if (probs[c] > probs[best]) best = c;
  }
  Prediction p{std::nullopt, probs[best]};
  if (probs[best] >= threshold) p.label = best;
  return p;
}

Prediction infer(const SuanModel& model, std::span<const double> features, double threshold) {
  const Matrix x(1, features.size(), std::vector<double>(features.begin(), features.end()));
  return decide(predict_proba(model, x).row(0), threshold);
}

std::vector<Prediction> infer_batch(const SuanModel& model, const Matrix& inputs,
                                    double threshold) {
  const Matrix probs = predict_proba(model, inputs);
  std::vector<Prediction> out;
  out.reserve(probs.rows());
  for (std::size_t r = 0; r < probs.rows(); ++r) out.push_back(decide(probs.row(r), threshold));
  return out;
}

EvalReport uda_accuracy(std::span<const Prediction> predictions,
                        std::span<const std::size_t> true_labels, const LabelSets& sets,
                        double threshold) {
  if (predictions.size() != true_labels.size()) {
    throw ShapeError(fmt::format("{} predictions for {} labels", predictions.size(),
                                 true_labels.size()));
  }
  const auto& common = sets.common();
  std::vector<std::size_t> hits(common.size() + 1, 0);
  std::vector<std::size_t> counts(common.size() + 1, 0);
  const std::size_t unknown_slot = common.size();
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const std::size_t y = true_labels[i];
    const Prediction& p = predictions[i];
    if (sets.is_target_private(y)) {
      ++counts[unknown_slot];
      if (!p.known()) ++hits[unknown_slot];
      continue;
    }
    const auto it = std::lower_bound(common.begin(), common.end(), y);
    if (it == common.end() || *it != y) {
      throw DataError(fmt::format("evaluation sample labelled {} is not a target class", y));
    }
    const auto slot = static_cast<std::size_t>(it - common.begin());
    ++counts[slot];
    if (p.known() && *p.label == y) ++hits[slot];
  }

  EvalReport report;
  report.threshold = threshold;
  double total = 0.0;
  std::size_t present = 0;
  for (std::size_t k = 0; k <= common.size(); ++k) {
    if (counts[k] == 0) continue;
    ClassAccuracy acc;
    if (k < common.size()) acc.label = common[k];
    acc.count = counts[k];
    acc.accuracy = static_cast<double>(hits[k]) / static_cast<double>(counts[k]);
    total += acc.accuracy;
    ++present;
    report.per_class.push_back(acc);
  }
  report.averaged_accuracy = present == 0 ? 0.0 : total / static_cast<double>(present);
  return report;
}

WeightGroups weight_density_groups(std::span<const TaggedWeight> weights,
                                   const LabelSets& sets) {
  WeightGroups g;
  for (const auto& w : weights) {
    const bool common = sets.is_common(w.true_label);
    if (w.domain == Domain::kSource) {
      if (common) {
        g.source_common.push_back(w.weight);
      } else if (sets.is_source_private(w.true_label)) {
        g.source_private.push_back(w.weight);
      } else {
        throw DataError(fmt::format("source weight with non-source label {}", w.true_label));
      }
    } else {
      if (common) {
        g.target_common.push_back(w.weight);
      } else if (sets.is_target_private(w.true_label)) {
        g.target_private.push_back(w.weight);
      } else {
        throw DataError(fmt::format("target weight with non-target label {}", w.true_label));
      }
    }
  }
  return g;
}

std::vector<ClassGain> per_class_gain(const EvalReport& method, const EvalReport& baseline) {
  if (method.per_class.size() != baseline.per_class.size()) {
    throw ArgumentError("reports cover different class sets");
  }
  std::vector<ClassGain> gains;
  gains.reserve(method.per_class.size());
  for (std::size_t k = 0; k < method.per_class.size(); ++k) {
    if (method.per_class[k].label != baseline.per_class[k].label) {
      throw ArgumentError("reports cover different class sets");
    }
    gains.push_back({method.per_class[k].label,
                     method.per_class[k].accuracy - baseline.per_class[k].accuracy});
  }
  return gains;
}

std::vector<TaggedWeight> model_sample_weights(const SuanModel& model,
                                               const MarginRegister& reg, TrainMode mode,
                                               const Dataset& source, const Dataset& target) {
  std::vector<double> ws;
  std::vector<double> wt;
  switch (mode) {
    case TrainMode::kSuan:
      ws = source_weights(reg, source.labels);
      wt = target_weights(predict_proba(model, target.features));
      break;
    case TrainMode::kUanWeighting: {
      auto raw = uan_baseline_weights(model, source.features, target.features);
      ws = std::move(raw.source);
      wt = std::move(raw.target);
      break;
    }
    case TrainMode::kSourceOnly:
    case TrainMode::kUnweightedAdversarial:
      ws.assign(source.size(), 1.0);
      wt.assign(target.size(), 1.0);
      break;
  }
  std::vector<TaggedWeight> out;
  out.reserve(ws.size() + wt.size());
  if (!ws.empty()) {
    ws = normalize_weights(ws, {0});
    for (std::size_t i = 0; i < ws.size(); ++i) {
      out.push_back({ws[i], Domain::kSource, source.labels[i]});
    }
  }
  if (!wt.empty()) {
    wt = normalize_weights(wt, {0});
    for (std::size_t i = 0; i < wt.size(); ++i) {
      out.push_back({wt[i], Domain::kTarget, target.labels[i]});
    }
  }
  return out;
}

}  // namespace suan
