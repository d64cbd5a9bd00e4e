#include "tracepred/features.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <deque>
#include <set>

#include "tracepred/rng.hpp"

namespace tracepred {

CallGraph::CallGraph(const Project& project) {
  for (const auto& t : project.tests()) ids_.push_back(t.id);
  for (const auto& f : project.functions()) ids_.push_back(f.id);
  std::sort(ids_.begin(), ids_.end());
  for (std::size_t i = 0; i < ids_.size(); ++i) index_.emplace(ids_[i], i);
  adjacency_.resize(ids_.size());
  in_degree_.assign(ids_.size(), 0);
  for (const auto& e : project.static_edges()) {
    std::size_t u = index_.at(e.caller);
    std::size_t v = index_.at(e.callee);
    adjacency_[u].push_back(v);
    ++in_degree_[v];
  }
  edge_count_ = project.static_edges().size();
}

std::size_t CallGraph::index_of(NodeId id) const {
  auto it = index_.find(id);
  if (it == index_.end())
    throw ValidationError("unknown call graph node " + std::to_string(id));
  return it->second;
}

std::vector<NodeId> CallGraph::successors(NodeId id) const {
  std::vector<NodeId> out;
  for (std::size_t v : adjacency_[index_of(id)]) out.push_back(ids_[v]);
  return out;
}

std::vector<int> CallGraph::distances_from(NodeId source) const {
  std::vector<int> dist(ids_.size(), -1);
  std::deque<std::size_t> queue;
  const std::size_t s = index_of(source);
  dist[s] = 0;
  queue.push_back(s);
  while (!queue.empty()) {
    std::size_t u = queue.front();
    queue.pop_front();
    for (std::size_t v : adjacency_[u]) {
      if (dist[v] < 0) {
        dist[v] = dist[u] + 1;
        queue.push_back(v);
      }
    }
  }
  return dist;
}

CallGraph build_call_graph(const Project& project) { return CallGraph(project); }

int path_exists(const CallGraph& g, NodeId from, NodeId to) {
  const std::size_t target = g.node_index(to);
  return g.distances_from(from)[target] >= 0 ? 1 : 0;
}

int shortest_path_len(const CallGraph& g, NodeId from, NodeId to, int unreachable) {
  const std::size_t target = g.node_index(to);
  const int d = g.distances_from(from)[target];
  return d >= 0 ? d : unreachable;
}

std::vector<std::string> camel_split(std::string_view name) {
  std::vector<std::string> words;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) words.push_back(std::move(current));
    current.clear();
  };
  for (char ch : name) {
    auto u = static_cast<unsigned char>(ch);
    if (ch == '_') {
      flush();
    } else if (std::isupper(u)) {
      flush();
      current.push_back(static_cast<char>(std::tolower(u)));
    } else {
      current.push_back(ch);
    }
  }
  flush();
  return words;
}

int common_words(std::string_view a, std::string_view b) {
  auto wa = camel_split(a);
  auto wb = camel_split(b);
  std::set<std::string> sa(wa.begin(), wa.end());
  std::set<std::string> sb(wb.begin(), wb.end());
  int n = 0;
  for (const auto& w : sa) n += static_cast<int>(sb.count(w));
  return n;
}

int levenshtein(std::string_view a, std::string_view b) {
  std::vector<int> prev(b.size() + 1);
  std::vector<int> cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = static_cast<int>(j);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = static_cast<int>(i);
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const int sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

double name_distance(std::string_view a, std::string_view b) {
  const std::size_t longest = std::max(a.size(), b.size());
  if (longest == 0) return 0.0;
  return static_cast<double>(levenshtein(a, b)) / static_cast<double>(longest);
}

const std::array<std::string, kFeatureCount>& feature_names() {
  static const std::array<std::string, kFeatureCount> names = {
      "path_existence",      "shortest_path",       "target_in_degree",
      "source_out_degree",   "class_common_words",  "method_common_words",
      "class_name_distance", "method_name_distance"};
  return names;
}

namespace {

FeatureVector assemble(const CallGraph& g, const Project& project, NodeId test,
                       NodeId function, int distance, int unreachable) {
  const TestRef& t = project.test(test);
  const FunctionRef& c = project.function(function);
  FeatureVector fv;
  fv.path_existence = distance >= 0 ? 1 : 0;
  fv.shortest_path = distance >= 0 ? distance : unreachable;
  fv.target_in_degree = g.in_degree(function);
  fv.source_out_degree = g.out_degree(test);
  fv.class_common_words = common_words(t.class_name, c.class_name);
  fv.method_common_words = common_words(t.method_name, c.method_name);
  fv.class_name_distance = name_distance(t.class_name, c.class_name);
  fv.method_name_distance = name_distance(t.method_name, c.method_name);
  return fv;
}

}  // namespace

FeatureVector extract_features(const CallGraph& g, const Project& project,
                               NodeId test, NodeId function, int unreachable) {
  const auto dist = g.distances_from(project.test(test).id);
  return assemble(g, project, test, function,
                  dist[g.node_index(project.function(function).id)], unreachable);
}

const std::vector<int>& FeatureExtractor::distances(NodeId test) {
  auto it = bfs_cache_.find(test);
  if (it == bfs_cache_.end())
    it = bfs_cache_.emplace(test, graph_.distances_from(project_.test(test).id)).first;
  return it->second;
}

FeatureVector FeatureExtractor::operator()(NodeId test, NodeId function) {
  const auto& dist = distances(test);
  return assemble(graph_, project_, test, function,
                  dist[graph_.node_index(project_.function(function).id)], unreachable_);
}

std::size_t LabeledDataset::count(Split s) const noexcept {
  return static_cast<std::size_t>(std::count_if(
      instances.begin(), instances.end(), [s](const Instance& i) { return i.split == s; }));
}

std::vector<Instance> make_instances(const Project& project, const TraceTable& traces,
                                     FeatureExtractor& extract,
                                     const std::vector<NodeId>& tests,
                                     const std::vector<NodeId>& functions, Split split) {
  std::vector<Instance> out;
  out.reserve(tests.size() * functions.size());
  for (NodeId t : tests) {
    (void)project.test(t);
    for (NodeId c : functions) {
      out.push_back({t, c, extract(t, c), traces.contains(t, c) ? 1 : 0, split});
    }
  }
  return out;
}

LabeledDataset build_dataset(const Project& project, const TraceTable& traces,
                             double sample_fraction, double split_ratio,
                             std::uint64_t seed, int unreachable) {
  if (!(sample_fraction > 0.0 && sample_fraction <= 1.0))
    throw InvalidArgument("sample_fraction must be in (0, 1]");
  if (!(split_ratio > 0.0 && split_ratio < 1.0))
    throw InvalidArgument("split_ratio must be in (0, 1)");
  if (project.functions().empty() || project.tests().empty())
    throw InvalidArgument("cannot build a dataset from an empty project");

  Rng rng(derive_seed(seed, "dataset"));
  auto functions = project.function_ids();
  const auto n_sample = static_cast<std::size_t>(
      std::ceil(sample_fraction * static_cast<double>(functions.size()) - 1e-9));
  for (std::size_t k = 0; k < n_sample; ++k) {
    std::size_t j = k + static_cast<std::size_t>(rng.below(functions.size() - k));
    std::swap(functions[k], functions[j]);
  }
  functions.resize(n_sample);
  std::sort(functions.begin(), functions.end());

  const CallGraph graph(project);
  FeatureExtractor extract(project, graph, unreachable);
  LabeledDataset ds;
  ds.sampled_functions = functions;
  ds.instances = make_instances(project, traces, extract, project.test_ids(), functions,
                                Split::Test);

  std::vector<std::size_t> order(ds.instances.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(order);
  const auto n_train = static_cast<std::size_t>(
      std::llround(split_ratio * static_cast<double>(order.size())));
  for (std::size_t k = 0; k < n_train; ++k) ds.instances[order[k]].split = Split::Train;
  return ds;
}

std::string dataset_to_csv(const LabeledDataset& dataset, char delimiter) {
  std::string out = "test_id";
  out += delimiter;
  out += "function_id";
  for (const auto& name : feature_names()) {
    out += delimiter;
    out += name;
  }
  out += delimiter;
  out += "label\n";
  char buf[64];
  for (const auto& inst : dataset.instances) {
    out += std::to_string(inst.test);
    out += delimiter;
    out += std::to_string(inst.function);
    const auto& f = inst.features;
    for (int v : {f.path_existence, f.shortest_path, f.target_in_degree, f.source_out_degree,
                  f.class_common_words, f.method_common_words}) {
      out += delimiter;
      out += std::to_string(v);
    }
    for (double v : {f.class_name_distance, f.method_name_distance}) {
      std::snprintf(buf, sizeof buf, "%.17g", v);
      out += delimiter;
      out += buf;
    }
    out += delimiter;
    out += std::to_string(inst.label);
    out += '\n';
  }
  return out;
}

}  // namespace tracepred
