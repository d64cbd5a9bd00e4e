#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "tracepred/classifier.hpp"
#include "tracepred/diagnosis.hpp"
#include "tracepred/rng.hpp"

namespace tracepred {

enum class Strategy { Predicted, Oracle, Random };

const char* to_string(Strategy s) noexcept;
Strategy strategy_from_string(const std::string& s);

inline constexpr int kDefaultTopK = 40;

/// conf(c, t) for every component, sorted by descending confidence with
/// ties broken by ascending component id.
using RankedConfidence = std::vector<std::pair<NodeId, double>>;

RankedConfidence rank_confidence(const std::map<NodeId, double>& conf);

/// U(t) = sum over the top_k most confident components of conf(c,t) * H(c).
double utility(const RankedConfidence& ranked, const HealthStateMap& health, int top_k);
double utility(const std::map<NodeId, double>& conf, const HealthStateMap& health, int top_k);

/// Oracle utility: sum of H(c) over the real trace, untruncated.
double oracle_utility(const std::vector<NodeId>& trace, const HealthStateMap& health);

/// Ranked classifier confidences per test, computed on first use.
class ConfidenceCache {
 public:
  ConfidenceCache(const Project& project, const TraceClassifier& model);

  const RankedConfidence& ranked(NodeId test);
  // Drops every cached map; call after the model changes.
  void reset(const TraceClassifier& model);
  const TraceClassifier& model() const noexcept { return model_; }

 private:
  const Project* project_;
  TraceClassifier model_;
  CallGraph graph_;
  std::unordered_map<NodeId, RankedConfidence> cache_;
};

struct PlannerState {
  std::set<NodeId> remaining;  // T_left
  Strategy strategy = Strategy::Oracle;
  int top_k = kDefaultTopK;
  Rng rng{0};  // RANDOM only

  PlannerState(std::set<NodeId> left, Strategy s, int k = kDefaultTopK, std::uint64_t seed = 0)
      : remaining(std::move(left)), strategy(s), top_k(k), rng(seed) {}
};

/// What the planner may consult: real traces for ORACLE, classifier
/// confidences for PREDICTED.
struct PlanningContext {
  const TraceTable* traces = nullptr;
  ConfidenceCache* confidences = nullptr;
};

/// Picks the next test from state.remaining; ties go to the lowest test id.
/// The caller removes the returned test from state.remaining.
NodeId next_test(PlannerState& state, const PlanningContext& ctx, const HealthStateMap& health);

}  // namespace tracepred
