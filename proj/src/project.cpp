#include "tracepred/project.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace tracepred {

namespace {

using ordered_json = nlohmann::ordered_json;

bool is_identifier(const std::string& s) {
  if (s.empty()) return false;
  if (!std::isalpha(static_cast<unsigned char>(s[0])) && s[0] != '_')
    return false;
  return std::all_of(s.begin(), s.end(), [](char ch) {
    auto u = static_cast<unsigned char>(ch);
    return u < 0x80 && (std::isalnum(u) || ch == '_');
  });
}

template <typename Ref>
void check_names(const Ref& ref, const char* kind) {
  if (!is_identifier(ref.class_name) || !is_identifier(ref.method_name)) {
    throw ValidationError(std::string(kind) + " " + std::to_string(ref.id) +
                          ": class and method must be non-empty ASCII "
                          "identifiers");
  }
}

std::string edge_str(const Edge& e) {
  return "[" + std::to_string(e.caller) + "," + std::to_string(e.callee) + "]";
}

ordered_json parse_json(const std::string& text, const char* what) {
  try {
    return ordered_json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string(what) + ": " + e.what());
  }
}

template <typename T>
T field(const ordered_json& obj, const char* key, const char* what) {
  if (!obj.is_object() || !obj.contains(key))
    throw ParseError(std::string(what) + ": missing key '" + key + "'");
  try {
    return obj.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string(what) + ": bad value for '" + key +
                     "': " + e.what());
  }
}

std::vector<Edge> parse_edges(const ordered_json& doc, const char* key) {
  std::vector<Edge> edges;
  if (!doc.contains(key)) throw ParseError(std::string("corpus: missing key '") + key + "'");
  const auto& arr = doc.at(key);
  if (!arr.is_array()) throw ParseError(std::string("corpus: '") + key + "' must be an array");
  for (const auto& e : arr) {
    if (!e.is_array() || e.size() != 2 || !e[0].is_number_integer() ||
        !e[1].is_number_integer()) {
      throw ParseError(std::string("corpus: malformed edge in '") + key +
                       "': " + e.dump());
    }
    edges.push_back({e[0].get<NodeId>(), e[1].get<NodeId>()});
  }
  return edges;
}

ordered_json edges_json(const std::vector<Edge>& edges) {
  ordered_json arr = ordered_json::array();
  for (const auto& e : edges) arr.push_back({e.caller, e.callee});
  return arr;
}

}  // namespace

Project Project::create(std::string name, std::vector<FunctionRef> functions,
                        std::vector<TestRef> tests,
                        std::vector<Edge> static_edges,
                        std::vector<Edge> dynamic_edges) {
  Project p;
  p.name_ = std::move(name);
  std::sort(functions.begin(), functions.end(),
            [](const auto& a, const auto& b) { return a.id < b.id; });
  std::sort(tests.begin(), tests.end(),
            [](const auto& a, const auto& b) { return a.id < b.id; });

  for (std::size_t i = 0; i < functions.size(); ++i) {
    check_names(functions[i], "function");
    if (!p.function_pos_.emplace(functions[i].id, i).second)
      throw ValidationError("duplicate function id " +
                            std::to_string(functions[i].id));
  }
  for (std::size_t i = 0; i < tests.size(); ++i) {
    check_names(tests[i], "test");
    if (p.function_pos_.count(tests[i].id))
      throw ValidationError("id " + std::to_string(tests[i].id) +
                            " declared as both test and function");
    if (!p.test_pos_.emplace(tests[i].id, i).second)
      throw ValidationError("duplicate test id " + std::to_string(tests[i].id));
  }
  p.functions_ = std::move(functions);
  p.tests_ = std::move(tests);

  auto check_edges = [&p](std::vector<Edge>& edges, const char* kind) {
    std::sort(edges.begin(), edges.end());
    for (std::size_t i = 0; i < edges.size(); ++i) {
      const Edge& e = edges[i];
      for (NodeId id : {e.caller, e.callee}) {
        if (!p.has_node(id))
          throw ValidationError(std::string(kind) + " edge " + edge_str(e) +
                                " references undeclared id " +
                                std::to_string(id));
      }
      if (e.caller == e.callee)
        throw ValidationError(std::string(kind) + " edge " + edge_str(e) +
                              " is a self-loop");
      if (p.is_test(e.callee))
        throw ValidationError(std::string(kind) + " edge " + edge_str(e) +
                              " calls test " + std::to_string(e.callee));
      if (i > 0 && edges[i - 1] == e)
        throw ValidationError(std::string("duplicate ") + kind + " edge " +
                              edge_str(e));
    }
  };
  check_edges(static_edges, "static");
  check_edges(dynamic_edges, "dynamic");

  std::vector<Edge> both;
  std::set_intersection(static_edges.begin(), static_edges.end(),
                        dynamic_edges.begin(), dynamic_edges.end(),
                        std::back_inserter(both));
  if (!both.empty())
    throw ValidationError("edge " + edge_str(both.front()) +
                          " is both static and dynamic");

  p.static_edges_ = std::move(static_edges);
  p.dynamic_edges_ = std::move(dynamic_edges);
  return p;
}

bool Project::is_function(NodeId id) const noexcept {
  return function_pos_.count(id) != 0;
}

bool Project::is_test(NodeId id) const noexcept {
  return test_pos_.count(id) != 0;
}

const FunctionRef& Project::function(NodeId id) const {
  auto it = function_pos_.find(id);
  if (it == function_pos_.end())
    throw ValidationError("unknown function id " + std::to_string(id));
  return functions_[it->second];
}

const TestRef& Project::test(NodeId id) const {
  auto it = test_pos_.find(id);
  if (it == test_pos_.end())
    throw ValidationError("unknown test id " + std::to_string(id));
  return tests_[it->second];
}

std::size_t Project::function_index(NodeId id) const {
  auto it = function_pos_.find(id);
  if (it == function_pos_.end())
    throw ValidationError("unknown function id " + std::to_string(id));
  return it->second;
}

std::vector<NodeId> Project::function_ids() const {
  std::vector<NodeId> ids;
  ids.reserve(functions_.size());
  for (const auto& f : functions_) ids.push_back(f.id);
  return ids;
}

std::vector<NodeId> Project::test_ids() const {
  std::vector<NodeId> ids;
  ids.reserve(tests_.size());
  for (const auto& t : tests_) ids.push_back(t.id);
  return ids;
}

TraceTable TraceTable::create(const Project& project,
                              std::map<NodeId, std::vector<NodeId>> traces) {
  for (const auto& [test, fns] : traces) {
    if (!project.is_test(test))
      throw ValidationError("trace entry for unknown test " +
                            std::to_string(test));
  }
  for (const auto& t : project.tests()) {
    auto it = traces.find(t.id);
    if (it == traces.end())
      throw ValidationError("missing trace entry for test " +
                            std::to_string(t.id));
    auto& fns = it->second;
    for (NodeId f : fns) {
      if (!project.is_function(f))
        throw ValidationError("trace of test " + std::to_string(t.id) +
                              " references unknown function " +
                              std::to_string(f));
    }
    std::sort(fns.begin(), fns.end());
    fns.erase(std::unique(fns.begin(), fns.end()), fns.end());
  }
  TraceTable table;
  table.traces_ = std::move(traces);
  return table;
}

const std::vector<NodeId>& TraceTable::trace(NodeId test) const {
  auto it = traces_.find(test);
  if (it == traces_.end())
    throw ValidationError("unknown test " + std::to_string(test));
  return it->second;
}

bool TraceTable::contains(NodeId test, NodeId function) const {
  const auto& tr = trace(test);
  return std::binary_search(tr.begin(), tr.end(), function);
}

double TraceTable::mean_length() const noexcept {
  if (traces_.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& [_, tr] : traces_) sum += static_cast<double>(tr.size());
  return sum / static_cast<double>(traces_.size());
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path())
    std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("failed writing " + path.string());
}

Project parse_project(const std::string& text) {
  const auto doc = parse_json(text, "corpus");
  if (!doc.is_object()) throw ParseError("corpus: top level must be an object");

  auto refs = [&doc](const char* key) {
    if (!doc.contains(key) || !doc.at(key).is_array())
      throw ParseError(std::string("corpus: '") + key + "' must be an array");
    std::vector<FunctionRef> out;
    for (const auto& item : doc.at(key)) {
      FunctionRef r;
      r.id = field<NodeId>(item, "id", key);
      r.class_name = field<std::string>(item, "class", key);
      r.method_name = field<std::string>(item, "method", key);
      out.push_back(std::move(r));
    }
    return out;
  };

  auto functions = refs("functions");
  std::vector<TestRef> tests;
  for (auto& r : refs("tests"))
    tests.push_back({r.id, std::move(r.class_name), std::move(r.method_name)});

  return Project::create(field<std::string>(doc, "name", "corpus"),
                         std::move(functions), std::move(tests),
                         parse_edges(doc, "static_edges"),
                         parse_edges(doc, "dynamic_edges"));
}

Project load_project(const std::filesystem::path& path) {
  return parse_project(read_file(path));
}

std::string dump_project(const Project& project) {
  ordered_json doc;
  doc["name"] = project.name();
  auto& fns = doc["functions"] = ordered_json::array();
  for (const auto& f : project.functions())
    fns.push_back({{"id", f.id}, {"class", f.class_name}, {"method", f.method_name}});
  auto& tests = doc["tests"] = ordered_json::array();
  for (const auto& t : project.tests())
    tests.push_back({{"id", t.id}, {"class", t.class_name}, {"method", t.method_name}});
  doc["static_edges"] = edges_json(project.static_edges());
  doc["dynamic_edges"] = edges_json(project.dynamic_edges());
  return doc.dump(1) + "\n";
}

void save_project(const Project& project, const std::filesystem::path& path) {
  write_file(path, dump_project(project));
}

TraceTable parse_traces(const std::string& text, const Project& project) {
  const auto doc = parse_json(text, "traces");
  if (!doc.is_object() || !doc.contains("traces") ||
      !doc.at("traces").is_object())
    throw ParseError("traces: expected {\"traces\": {test-id: [...]}}");
  std::map<NodeId, std::vector<NodeId>> traces;
  for (const auto& [key, value] : doc.at("traces").items()) {
    NodeId test = 0;
    try {
      std::size_t used = 0;
      test = std::stoll(key, &used);
      if (used != key.size()) throw std::invalid_argument(key);
    } catch (const std::exception&) {
      throw ParseError("traces: test key '" + key + "' is not an integer id");
    }
    if (!value.is_array())
      throw ParseError("traces: entry for test " + key + " must be an array");
    std::vector<NodeId> fns;
    for (const auto& v : value) {
      if (!v.is_number_integer())
        throw ParseError("traces: non-integer function id in test " + key);
      fns.push_back(v.get<NodeId>());
    }
    if (!traces.emplace(test, std::move(fns)).second)
      throw ParseError("traces: duplicate entry for test " + key);
  }
  return TraceTable::create(project, std::move(traces));
}

TraceTable load_traces(const std::filesystem::path& path,
                       const Project& project) {
  return parse_traces(read_file(path), project);
}

std::string dump_traces(const TraceTable& traces) {
  ordered_json doc;
  auto& map = doc["traces"] = ordered_json::object();
  for (const auto& [test, fns] : traces.all()) map[std::to_string(test)] = fns;
  return doc.dump(1) + "\n";
}

void save_traces(const TraceTable& traces, const std::filesystem::path& path) {
  write_file(path, dump_traces(traces));
}

std::vector<FaultSet> parse_faults(const std::string& text,
                                   const Project& project) {
  const auto doc = parse_json(text, "faults");
  if (!doc.is_object() || !doc.contains("faults") ||
      !doc.at("faults").is_array())
    throw ParseError("faults: expected {\"faults\": [[...], ...]}");
  std::vector<FaultSet> faults;
  for (const auto& arr : doc.at("faults")) {
    if (!arr.is_array()) throw ParseError("faults: each fault must be an array");
    FaultSet f;
    for (const auto& v : arr) {
      if (!v.is_number_integer()) throw ParseError("faults: non-integer id");
      NodeId id = v.get<NodeId>();
      if (!project.is_function(id))
        throw ValidationError("fault references unknown function " +
                              std::to_string(id));
      f.push_back(id);
    }
    std::sort(f.begin(), f.end());
    f.erase(std::unique(f.begin(), f.end()), f.end());
    if (f.empty()) throw ValidationError("faults: empty fault set");
    faults.push_back(std::move(f));
  }
  return faults;
}

std::vector<FaultSet> load_faults(const std::filesystem::path& path,
                                  const Project& project) {
  return parse_faults(read_file(path), project);
}

std::string dump_faults(const std::vector<FaultSet>& faults) {
  ordered_json doc;
  doc["faults"] = faults;
  return doc.dump(1) + "\n";
}

void save_faults(const std::vector<FaultSet>& faults,
                 const std::filesystem::path& path) {
  write_file(path, dump_faults(faults));
}

}  // namespace tracepred
