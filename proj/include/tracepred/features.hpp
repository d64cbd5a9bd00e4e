#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "tracepred/project.hpp"

namespace tracepred {

/// Static call graph over T ∪ COMPS. Dynamic edges are never included.
class CallGraph {
 public:
  explicit CallGraph(const Project& project);

  bool has_node(NodeId id) const noexcept { return index_.count(id) != 0; }
  std::size_t node_count() const noexcept { return ids_.size(); }
  std::size_t edge_count() const noexcept { return edge_count_; }

  int in_degree(NodeId id) const { return in_degree_[index_of(id)]; }
  int out_degree(NodeId id) const {
    return static_cast<int>(adjacency_[index_of(id)].size());
  }
  std::vector<NodeId> successors(NodeId id) const;

  /// BFS edge counts from `source` to every node, -1 where unreachable.
  /// Indexed densely; use node_index() to look up a target.
  std::vector<int> distances_from(NodeId source) const;
  std::size_t node_index(NodeId id) const { return index_of(id); }

 private:
  std::size_t index_of(NodeId id) const;

  std::vector<NodeId> ids_;
  std::unordered_map<NodeId, std::size_t> index_;
  std::vector<std::vector<std::size_t>> adjacency_;
  std::vector<int> in_degree_;
  std::size_t edge_count_ = 0;
};

inline constexpr int kDefaultUnreachableLength = 20;

CallGraph build_call_graph(const Project& project);

// Throw ValidationError on unknown nodes.
int path_exists(const CallGraph& g, NodeId from, NodeId to);
int shortest_path_len(const CallGraph& g, NodeId from, NodeId to,
                      int unreachable = kDefaultUnreachableLength);

// Camel-case tokenizer: a capital letter starts a new word (so "CSV" gives
// three words), digits stay with the word before them and underscores
// separate words. Output is lowercase.
std::vector<std::string> camel_split(std::string_view name);

// Size of the intersection of the two camel word sets.
int common_words(std::string_view a, std::string_view b);

int levenshtein(std::string_view a, std::string_view b);

// levenshtein(a, b) / max(|a|, |b|), in [0, 1].
double name_distance(std::string_view a, std::string_view b);

inline constexpr std::size_t kFeatureCount = 8;

struct FeatureVector {
  int path_existence = 0;
  int shortest_path = kDefaultUnreachableLength;
  int target_in_degree = 0;
  int source_out_degree = 0;
  int class_common_words = 0;
  int method_common_words = 0;
  double class_name_distance = 0.0;
  double method_name_distance = 0.0;

  std::array<double, kFeatureCount> values() const noexcept {
    return {static_cast<double>(path_existence),
            static_cast<double>(shortest_path),
            static_cast<double>(target_in_degree),
            static_cast<double>(source_out_degree),
            static_cast<double>(class_common_words),
            static_cast<double>(method_common_words),
            class_name_distance,
            method_name_distance};
  }

  friend bool operator==(const FeatureVector&, const FeatureVector&) = default;
};

const std::array<std::string, kFeatureCount>& feature_names();

/// Computes the feature vector of one (test, function) pair from scratch.
FeatureVector extract_features(const CallGraph& g, const Project& project,
                               NodeId test, NodeId function,
                               int unreachable = kDefaultUnreachableLength);

/// Same features, with BFS results cached per test. Not thread safe.
class FeatureExtractor {
 public:
  FeatureExtractor(const Project& project, const CallGraph& graph,
                   int unreachable = kDefaultUnreachableLength)
      : project_(project), graph_(graph), unreachable_(unreachable) {}

  FeatureVector operator()(NodeId test, NodeId function);

 private:
  const std::vector<int>& distances(NodeId test);

  const Project& project_;
  const CallGraph& graph_;
  int unreachable_;
  std::unordered_map<NodeId, std::vector<int>> bfs_cache_;
};

enum class Split { Train, Test };

struct Instance {
  NodeId test = 0;
  NodeId function = 0;
  FeatureVector features;
  int label = 0;
  Split split = Split::Train;
};

struct LabeledDataset {
  std::vector<Instance> instances;
  std::vector<NodeId> sampled_functions;

  std::size_t count(Split s) const noexcept;
};

/// One instance per (test, sampled function), labels from the traces, and a
/// seeded instance-level split where round(split_ratio * n) go to TRAIN.
LabeledDataset build_dataset(const Project& project, const TraceTable& traces,
                             double sample_fraction, double split_ratio,
                             std::uint64_t seed,
                             int unreachable = kDefaultUnreachableLength);

/// Instances for the given tests over a fixed function list, all in `split`.
std::vector<Instance> make_instances(const Project& project,
                                     const TraceTable& traces,
                                     FeatureExtractor& extract,
                                     const std::vector<NodeId>& tests,
                                     const std::vector<NodeId>& functions,
                                     Split split);

std::string dataset_to_csv(const LabeledDataset& dataset, char delimiter = ',');

}  // namespace tracepred
