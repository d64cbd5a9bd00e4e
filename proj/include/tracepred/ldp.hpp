#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "tracepred/classifier.hpp"
#include "tracepred/diagnosis.hpp"
#include "tracepred/planner.hpp"

namespace tracepred {

struct LdpConfig {
  double score_threshold = 0.7;  // S
  int test_budget = 150;         // B, planner-chosen executions only
  int initial_tests = 5;
  int max_diag_cardinality = 3;
  int retrain_every = 0;  // 0 disables online retraining
  double prior_fault_prob = 0.01;
  int top_k = kDefaultTopK;
};

void validate(const LdpConfig& cfg);

enum class Terminal { Converged, TimedOut };

const char* to_string(Terminal t) noexcept;

struct StepState {
  std::vector<NodeId> top_components;
  double top_score = 0.0;
  std::size_t diagnoses = 0;
};

struct EpisodeRecord {
  FaultSet fault;
  Strategy planner = Strategy::Oracle;
  int budget = 0;
  int steps = 0;
  Terminal terminal = Terminal::TimedOut;
  std::optional<Diagnosis> converged_diagnosis;
  bool correct = false;  // top diagnosis equals the fault
  std::vector<NodeId> initial_tests;
  std::vector<NodeId> executed;     // planner choices in order
  std::vector<StepState> trajectory;  // diagnosis after 0, 1, ... steps
};

Outcome outcome_oracle(NodeId test, const TraceTable& traces, const FaultSet& fault);

/// k tests drawn uniformly, redrawn until at least one fails.
std::vector<NodeId> select_initial_tests(const TraceTable& traces, const FaultSet& fault,
                                         int k, std::uint64_t seed);

/// Extra context for opt-in online retraining: executed tests are labelled
/// with their real traces over the dataset's sampled functions and appended
/// to TRAIN before retraining.
struct OnlineTraining {
  const LabeledDataset* base = nullptr;
  NetConfig config;
};

// One JSON object per line.
using EventSink = std::function<void(const std::string&)>;

/// One troubleshooting episode. The diagnoser sees only real traces of
/// executed tests; predictions steer planning only. `confidences` is
/// required for PREDICTED and may be shared across episodes unless online
/// retraining is on (it is then retrained in place).
EpisodeRecord run_episode(const Project& project, const TraceTable& traces,
                          const FaultSet& fault, Strategy planner,
                          ConfidenceCache* confidences, const LdpConfig& cfg,
                          std::uint64_t seed, const EventSink& log = {},
                          const OnlineTraining* online = nullptr);

/// The record a run with a smaller budget would have produced. An episode
/// with budget b is a prefix of one with a larger budget, since every
/// decision depends only on earlier observations.
EpisodeRecord truncate_episode(const EpisodeRecord& full, int budget);

struct ExperimentRow {
  Strategy planner = Strategy::Oracle;
  int budget = 0;
  std::size_t fault_id = 0;
  EpisodeRecord record;
};

struct ExperimentReport {
  std::vector<Strategy> planners;
  std::vector<int> budgets;
  std::size_t fault_count = 0;
  std::vector<ExperimentRow> rows;

  int converged(Strategy planner, int budget) const;
  /// Steps of converged episodes, ascending.
  std::vector<int> step_curve(Strategy planner, int budget) const;
};

/// Every (fault, planner, budget). Each (fault, planner) episode runs once at
/// the largest budget; smaller budgets are its prefixes. All planners share
/// the initial tests of a fault.
ExperimentReport run_experiment(const Project& project, const TraceTable& traces,
                                const std::vector<FaultSet>& faults,
                                const std::vector<Strategy>& planners,
                                const std::vector<int>& budgets,
                                const TraceClassifier* classifier, const LdpConfig& cfg,
                                std::uint64_t seed, const EventSink& log = {});

std::uint64_t episode_seed(std::uint64_t seed, std::size_t fault_id);

// planner,budget,fault_id,steps,terminal,correct
std::string experiment_csv(const ExperimentReport& report);
// planner,budget,converged,total
std::string convergence_csv(const ExperimentReport& report);
// planner,budget,rank,steps
std::string step_curves_csv(const ExperimentReport& report);

}  // namespace tracepred
