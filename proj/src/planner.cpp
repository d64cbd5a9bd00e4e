#include "tracepred/planner.hpp"

#include <algorithm>

namespace tracepred {

const char* to_string(Strategy s) noexcept {
  switch (s) {
    case Strategy::Predicted:
      return "predicted";
    case Strategy::Oracle:
      return "oracle";
    case Strategy::Random:
      return "random";
  }
  return "?";
}

Strategy strategy_from_string(const std::string& s) {
  if (s == "predicted") return Strategy::Predicted;
  if (s == "oracle") return Strategy::Oracle;
  if (s == "random") return Strategy::Random;
  throw InvalidArgument("unknown planner '" + s + "' (expected predicted, oracle or random)");
}

RankedConfidence rank_confidence(const std::map<NodeId, double>& conf) {
  RankedConfidence ranked(conf.begin(), conf.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  return ranked;
}

double utility(const RankedConfidence& ranked, const HealthStateMap& health, int top_k) {
  if (top_k < 1) throw InvalidArgument("top_k must be >= 1");
  const std::size_t n = std::min(ranked.size(), static_cast<std::size_t>(top_k));
  double u = 0.0;
  for (std::size_t i = 0; i < n; ++i) u += ranked[i].second * health(ranked[i].first);
  return u;
}

double utility(const std::map<NodeId, double>& conf, const HealthStateMap& health, int top_k) {
  return utility(rank_confidence(conf), health, top_k);
}

double oracle_utility(const std::vector<NodeId>& trace, const HealthStateMap& health) {
  double u = 0.0;
  for (NodeId c : trace) u += health(c);
  return u;
}

ConfidenceCache::ConfidenceCache(const Project& project, const TraceClassifier& model)
    : project_(&project), model_(model), graph_(project) {}

const RankedConfidence& ConfidenceCache::ranked(NodeId test) {
  auto it = cache_.find(test);
  if (it != cache_.end()) return it->second;
  FeatureExtractor extract(*project_, graph_);
  RankedConfidence ranked;
  ranked.reserve(project_->functions().size());
  for (const auto& f : project_->functions())
    ranked.emplace_back(f.id, predict_conf(model_, extract(test, f.id)));
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  return cache_.emplace(test, std::move(ranked)).first->second;
}

void ConfidenceCache::reset(const TraceClassifier& model) {
  model_ = model;
  cache_.clear();
}

NodeId next_test(PlannerState& state, const PlanningContext& ctx, const HealthStateMap& health) {
  if (state.remaining.empty()) throw InvalidArgument("next_test: no tests left");
  if (state.strategy == Strategy::Random) {
    auto it = state.remaining.begin();
    std::advance(it, static_cast<std::ptrdiff_t>(state.rng.below(state.remaining.size())));
    return *it;
  }
  if (state.strategy == Strategy::Oracle && !ctx.traces)
    throw InvalidArgument("ORACLE planning needs the real traces");
  if (state.strategy == Strategy::Predicted && !ctx.confidences)
    throw InvalidArgument("PREDICTED planning needs a trace classifier");

  NodeId best = *state.remaining.begin();
  double best_u = -1.0;
  for (NodeId t : state.remaining) {
    const double u = state.strategy == Strategy::Oracle
                         ? oracle_utility(ctx.traces->trace(t), health)
                         : utility(ctx.confidences->ranked(t), health, state.top_k);
    if (u > best_u) {
      best_u = u;
      best = t;
    }
  }
  return best;
}

}  // namespace tracepred
