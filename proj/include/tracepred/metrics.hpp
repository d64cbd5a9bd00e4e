#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tracepred/classifier.hpp"

namespace tracepred {

/// Fractions of all instances; tn + fp + fn + tp == 1.
struct ConfusionRates {
  double tn = 0.0;
  double fp = 0.0;
  double fn = 0.0;
  double tp = 0.0;
};

/// An instance is predicted positive when score >= threshold.
ConfusionRates confusion(std::span<const double> scores, std::span<const int> labels,
                         double threshold);

double accuracy(const ConfusionRates& cr) noexcept;

/// Probability that a random positive outranks a random negative, ties
/// counting one half (Mann-Whitney U / (n_pos * n_neg)). Computed from
/// average ranks in O(n log n).
double auc(std::span<const double> scores, std::span<const int> labels);

struct FeatureImportance {
  double auc_all = 0.0;
  // (feature name, AUC_all - AUC_without_feature), in column order.
  std::vector<std::pair<std::string, double>> delta_auc;
};

/// All-but-one analysis on arbitrary feature columns. Every model is trained
/// with the same config (and therefore the same seed) and scored on the
/// test rows. `seeds` > 1 averages over cfg.seed, cfg.seed + 1, ...
FeatureImportance feature_importance(const Matrix& x_train, std::span<const int> y_train,
                                     const Matrix& x_test, std::span<const int> y_test,
                                     const std::vector<std::string>& names,
                                     const NetConfig& cfg, int seeds = 1);

/// Same analysis over the eight trace features of a dataset.
FeatureImportance feature_importance(const LabeledDataset& dataset, const NetConfig& cfg,
                                     int seeds = 1);

struct MetricsReport {
  std::string algorithm;
  std::string project;
  double auc = 0.0;
  double acc = 0.0;
  ConfusionRates rates;
};

MetricsReport evaluate(const TraceClassifier& model, const LabeledDataset& dataset,
                       std::string algorithm, std::string project);

std::string metrics_to_json(const MetricsReport& report);
std::string importance_to_json(const FeatureImportance& fi);

}  // namespace tracepred
