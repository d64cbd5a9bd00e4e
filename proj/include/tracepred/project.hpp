#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "tracepred/error.hpp"

namespace tracepred {

using NodeId = std::int64_t;

struct FunctionRef {
  NodeId id = 0;
  std::string class_name;
  std::string method_name;

  friend bool operator==(const FunctionRef&, const FunctionRef&) = default;
};

struct TestRef {
  NodeId id = 0;
  std::string class_name;
  std::string method_name;

  friend bool operator==(const TestRef&, const TestRef&) = default;
};

struct Edge {
  NodeId caller = 0;
  NodeId callee = 0;

  friend auto operator<=>(const Edge&, const Edge&) = default;
};

/// The project universe: components (functions), tests and call edges.
///
/// Instances are always valid and canonical: functions, tests and both edge
/// lists are sorted ascending, ids are unique across functions and tests,
/// edges reference declared ids, there are no self loops or duplicates and
/// no edge is both static and dynamic. Tests are graph nodes; their
/// out-edges point at the entry methods they call.
class Project {
 public:
  Project() = default;

  /// Validates and canonicalizes. Throws ValidationError naming the
  /// offending entity.
  static Project create(std::string name, std::vector<FunctionRef> functions,
                        std::vector<TestRef> tests,
                        std::vector<Edge> static_edges,
                        std::vector<Edge> dynamic_edges);

  const std::string& name() const noexcept { return name_; }
  const std::vector<FunctionRef>& functions() const noexcept {
    return functions_;
  }
  const std::vector<TestRef>& tests() const noexcept { return tests_; }
  const std::vector<Edge>& static_edges() const noexcept {
    return static_edges_;
  }
  const std::vector<Edge>& dynamic_edges() const noexcept {
    return dynamic_edges_;
  }

  bool is_function(NodeId id) const noexcept;
  bool is_test(NodeId id) const noexcept;
  bool has_node(NodeId id) const noexcept {
    return is_function(id) || is_test(id);
  }

  // Throw ValidationError for unknown ids.
  const FunctionRef& function(NodeId id) const;
  const TestRef& test(NodeId id) const;

  // Position of a function in functions(), for dense per-component arrays.
  std::size_t function_index(NodeId id) const;

  std::vector<NodeId> function_ids() const;
  std::vector<NodeId> test_ids() const;

  friend bool operator==(const Project& a, const Project& b) {
    return a.name_ == b.name_ && a.functions_ == b.functions_ &&
           a.tests_ == b.tests_ && a.static_edges_ == b.static_edges_ &&
           a.dynamic_edges_ == b.dynamic_edges_;
  }

 private:
  std::string name_;
  std::vector<FunctionRef> functions_;
  std::vector<TestRef> tests_;
  std::vector<Edge> static_edges_;
  std::vector<Edge> dynamic_edges_;
  std::unordered_map<NodeId, std::size_t> function_pos_;
  std::unordered_map<NodeId, std::size_t> test_pos_;
};

/// trace(t) for every test: the sorted set of functions it invokes.
class TraceTable {
 public:
  TraceTable() = default;

  /// Validates against the project: every test has an entry and every
  /// traced id is a declared function. Traces are sorted and deduplicated.
  static TraceTable create(const Project& project,
                           std::map<NodeId, std::vector<NodeId>> traces);

  const std::vector<NodeId>& trace(NodeId test) const;
  bool contains(NodeId test, NodeId function) const;
  bool has_test(NodeId test) const noexcept {
    return traces_.count(test) != 0;
  }
  const std::map<NodeId, std::vector<NodeId>>& all() const noexcept {
    return traces_;
  }
  std::size_t size() const noexcept { return traces_.size(); }
  double mean_length() const noexcept;

  friend bool operator==(const TraceTable&, const TraceTable&) = default;

 private:
  std::map<NodeId, std::vector<NodeId>> traces_;
};

/// Sorted, non-empty set of functions assumed faulty.
using FaultSet = std::vector<NodeId>;

// Corpus I/O. The on-disk form is canonical (ascending ids, sorted edges),
// so load -> save is byte-stable.
Project load_project(const std::filesystem::path& path);
Project parse_project(const std::string& text);
std::string dump_project(const Project& project);
void save_project(const Project& project, const std::filesystem::path& path);

TraceTable load_traces(const std::filesystem::path& path,
                       const Project& project);
TraceTable parse_traces(const std::string& text, const Project& project);
std::string dump_traces(const TraceTable& traces);
void save_traces(const TraceTable& traces, const std::filesystem::path& path);

std::vector<FaultSet> load_faults(const std::filesystem::path& path,
                                  const Project& project);
std::vector<FaultSet> parse_faults(const std::string& text,
                                   const Project& project);
std::string dump_faults(const std::vector<FaultSet>& faults);
void save_faults(const std::vector<FaultSet>& faults,
                 const std::filesystem::path& path);

// Shared file helpers.
std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& text);

}  // namespace tracepred
