#pragma once

#include <map>
#include <string>
#include <vector>

#include "tracepred/project.hpp"

namespace tracepred {

enum class Outcome { Passed, Failed };

const char* to_string(Outcome o) noexcept;

/// One executed test: its real trace and its outcome.
struct Observation {
  NodeId test = 0;
  std::vector<NodeId> trace;  // sorted
  Outcome outcome = Outcome::Passed;
};

struct Diagnosis {
  std::vector<NodeId> components;  // sorted, non-empty
  double score = 0.0;
};

/// Scored diagnoses, descending by score (ties in canonical order).
using DiagnosisSet = std::vector<Diagnosis>;

class DiagnosisError : public Error {
 public:
  using Error::Error;
};

/// All inclusion-minimal sets of at most max_cardinality components that
/// intersect every failed trace, ordered by size then lexicographically.
/// Throws DiagnosisError if a failed trace is empty.
std::vector<std::vector<NodeId>> minimal_hitting_sets(
    const std::vector<std::vector<NodeId>>& failed_traces, int max_cardinality);

/// Maximum over goodness values g in [0,1]^|candidate| of
///   prod_{passed t} prod_{c in cand ∩ trace(t)} g_c
/// * prod_{failed t} (1 - prod_{c in cand ∩ trace(t)} g_c).
double diagnosis_likelihood(const std::vector<NodeId>& candidate,
                            const std::vector<Observation>& observations);

/// Scores each candidate by likelihood * p^|w| (1-p)^(N-|w|), normalized.
/// N cancels in the normalization, so it is not needed.
DiagnosisSet score_diagnoses(const std::vector<std::vector<NodeId>>& candidates,
                             const std::vector<Observation>& observations,
                             double prior_fault_prob);

/// minimal_hitting_sets over the failed observations, then scoring.
DiagnosisSet diagnose(const std::vector<Observation>& observations, int max_cardinality,
                      double prior_fault_prob);

/// H(c) = sum of the scores of the diagnoses containing c. Components absent
/// from every diagnosis have health 0.
class HealthStateMap {
 public:
  HealthStateMap() = default;
  explicit HealthStateMap(std::map<NodeId, double> values) : values_(std::move(values)) {}

  double operator()(NodeId c) const noexcept {
    auto it = values_.find(c);
    return it == values_.end() ? 0.0 : it->second;
  }
  const std::map<NodeId, double>& nonzero() const noexcept { return values_; }
  double total() const noexcept;

 private:
  std::map<NodeId, double> values_;
};

HealthStateMap health_states(const DiagnosisSet& diagnoses);

std::string diagnosis_report_json(const DiagnosisSet& diagnoses, const HealthStateMap& health);

}  // namespace tracepred
