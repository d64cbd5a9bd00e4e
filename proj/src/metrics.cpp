#include "tracepred/metrics.hpp"

#include <algorithm>
#include <numeric>

#include <json.hpp>

namespace tracepred {

ConfusionRates confusion(std::span<const double> scores, std::span<const int> labels,
                         double threshold) {
  if (scores.size() != labels.size())
    throw InvalidArgument("confusion: " + std::to_string(scores.size()) + " scores vs " +
                          std::to_string(labels.size()) + " labels");
  if (scores.empty()) throw InvalidArgument("confusion: empty input");
  std::size_t tn = 0, fp = 0, fn = 0, tp = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool predicted = scores[i] >= threshold;
    if (labels[i]) {
      (predicted ? tp : fn)++;
    } else {
      (predicted ? fp : tn)++;
    }
  }
  const double n = static_cast<double>(scores.size());
  return {static_cast<double>(tn) / n, static_cast<double>(fp) / n,
          static_cast<double>(fn) / n, static_cast<double>(tp) / n};
}

double accuracy(const ConfusionRates& cr) noexcept { return cr.tp + cr.tn; }

double auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw InvalidArgument("auc: length mismatch");
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  double rank_sum = 0.0;
  std::size_t n_pos = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    // Ranks i+1..j share their average.
    const double avg = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]]) {
        rank_sum += avg;
        ++n_pos;
      }
    }
    i = j;
  }
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) throw InvalidArgument("auc: both classes must be present");
  const double np = static_cast<double>(n_pos);
  const double u = rank_sum - np * (np + 1.0) / 2.0;
  return u / (np * static_cast<double>(n_neg));
}

namespace {

Matrix drop_column(const Matrix& x, std::size_t col) {
  Matrix out(x.rows, x.cols - 1);
  for (std::size_t r = 0; r < x.rows; ++r)
    for (std::size_t c = 0, k = 0; c < x.cols; ++c)
      if (c != col) out(r, k++) = x(r, c);
  return out;
}

double train_and_score(const Matrix& xtr, std::span<const int> ytr, const Matrix& xte,
                       std::span<const int> yte, const NetConfig& cfg) {
  const auto model = train(xtr, ytr, cfg);
  const auto scores = model.predict(xte);
  return auc(scores, yte);
}

}  // namespace

FeatureImportance feature_importance(const Matrix& x_train, std::span<const int> y_train,
                                     const Matrix& x_test, std::span<const int> y_test,
                                     const std::vector<std::string>& names,
                                     const NetConfig& cfg, int seeds) {
  if (names.size() != x_train.cols || x_test.cols != x_train.cols)
    throw InvalidArgument("feature_importance: column/name mismatch");
  if (x_train.cols < 2) throw InvalidArgument("feature_importance: need >= 2 features");
  if (seeds < 1) throw InvalidArgument("feature_importance: seeds must be >= 1");

  FeatureImportance fi;
  std::vector<double> delta(x_train.cols, 0.0);
  for (int s = 0; s < seeds; ++s) {
    NetConfig c = cfg;
    c.seed = cfg.seed + static_cast<std::uint64_t>(s);
    const double all = train_and_score(x_train, y_train, x_test, y_test, c);
    fi.auc_all += all / seeds;
    for (std::size_t f = 0; f < x_train.cols; ++f) {
      double without = 0.0;
      try {
        without = train_and_score(drop_column(x_train, f), y_train, drop_column(x_test, f),
                                  y_test, c);
      } catch (const Error& e) {
        throw TrainingError("feature_importance: without '" + names[f] + "': " + e.what());
      }
      delta[f] += (all - without) / seeds;
    }
  }
  for (std::size_t f = 0; f < names.size(); ++f) fi.delta_auc.emplace_back(names[f], delta[f]);
  return fi;
}

FeatureImportance feature_importance(const LabeledDataset& dataset, const NetConfig& cfg,
                                     int seeds) {
  const Matrix xtr = feature_matrix(dataset.instances, Split::Train);
  const Matrix xte = feature_matrix(dataset.instances, Split::Test);
  const auto ytr = label_vector(dataset.instances, Split::Train);
  const auto yte = label_vector(dataset.instances, Split::Test);
  const auto& n = feature_names();
  return feature_importance(xtr, ytr, xte, yte, {n.begin(), n.end()}, cfg, seeds);
}

MetricsReport evaluate(const TraceClassifier& model, const LabeledDataset& dataset,
                       std::string algorithm, std::string project) {
  std::vector<double> scores;
  std::vector<int> labels;
  for (const auto& inst : dataset.instances) {
    if (inst.split != Split::Test) continue;
    scores.push_back(predict_conf(model, inst.features));
    labels.push_back(inst.label);
  }
  MetricsReport r;
  r.algorithm = std::move(algorithm);
  r.project = std::move(project);
  r.rates = confusion(scores, labels, model.config().classification_threshold);
  r.acc = accuracy(r.rates);
  r.auc = auc(scores, labels);
  return r;
}

std::string metrics_to_json(const MetricsReport& report) {
  nlohmann::ordered_json j;
  j["algorithm"] = report.algorithm;
  j["project"] = report.project;
  j["auc"] = report.auc;
  j["acc"] = report.acc;
  j["tn"] = report.rates.tn;
  j["fp"] = report.rates.fp;
  j["fn"] = report.rates.fn;
  j["tp"] = report.rates.tp;
  return j.dump(2) + "\n";
}

std::string importance_to_json(const FeatureImportance& fi) {
  nlohmann::ordered_json j;
  j["auc_all"] = fi.auc_all;
  auto& d = j["delta_auc"] = nlohmann::ordered_json::object();
  for (const auto& [name, v] : fi.delta_auc) d[name] = v;
  return j.dump(2) + "\n";
}

}  // namespace tracepred
