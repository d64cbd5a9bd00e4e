#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tracepred/project.hpp"

namespace tracepred {

struct IntRange {
  int lo = 0;
  int hi = 0;

  friend bool operator==(const IntRange&, const IntRange&) = default;
};

std::vector<std::string> default_word_pool();

/// Knobs of the synthetic corpus generator.
///
/// The call graph is layered: every class sits on one of `call_depth`
/// layers and calls only into its own class (higher method index) or into
/// a few dependency classes on deeper layers, so the graph is a DAG and
/// trace lengths stay bounded. Tests belong to a target class and call
/// 1..`entry_calls.hi` of its methods.
struct GenConfig {
  std::string name = "synthetic";
  int n_classes = 50;
  IntRange methods_per_class{6, 10};
  std::vector<std::string> word_pool = default_word_pool();
  IntRange static_out_degree{1, 2};
  double dynamic_edge_fraction = 0.15;
  int tests_per_class = 2;
  double naming_correlation = 0.8;  // q
  double branch_prob = 0.7;         // p_branch
  double dynamic_prob = 0.5;        // p_dyn
  int call_depth = 5;
  int deps_per_class = 2;
  IntRange entry_calls{1, 2};
  std::uint64_t seed = 1;

  friend bool operator==(const GenConfig&, const GenConfig&) = default;
};

/// Throws InvalidArgument describing the first violated constraint.
void validate(const GenConfig& cfg);

std::string gen_config_to_json(const GenConfig& cfg);
GenConfig gen_config_from_json(const std::string& text);

/// Deterministic in (cfg, cfg.seed). Function ids are 1..N, test ids follow.
Project generate_project(const GenConfig& cfg);

/// Coin for edge (caller -> callee) while tracing `test`. Counter based:
/// the value depends only on (seed, test, caller, callee), so a trace never
/// depends on traversal order and adding tests leaves other traces alone.
double edge_coin(std::uint64_t seed, NodeId test, NodeId caller,
                 NodeId callee) noexcept;

/// trace(t) = functions reachable from t over the edges whose coin falls
/// below branch_prob (static) or dynamic_prob (dynamic). t is excluded.
TraceTable generate_traces(const Project& project, const GenConfig& cfg);

/// n_faults distinct fault sets of the given cardinality drawn from the
/// functions covered by at least one trace. Throws InvalidArgument when the
/// request cannot be met.
std::vector<FaultSet> inject_faults(const Project& project,
                                    const TraceTable& traces, int cardinality,
                                    int n_faults, std::uint64_t seed);

// Functions appearing in at least one trace, ascending.
std::vector<NodeId> covered_functions(const TraceTable& traces);

}  // namespace tracepred
