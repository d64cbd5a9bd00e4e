#include "tracepred/synthesis.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <set>

#include <json.hpp>

#include "tracepred/rng.hpp"

namespace tracepred {

namespace {

std::string capitalize(std::string w) {
  if (!w.empty()) w[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(w[0])));
  return w;
}

struct ClassPlan {
  std::string name;
  std::vector<std::string> words;
  int layer = 0;
  std::vector<int> deps;
  std::vector<NodeId> methods;  // ids in method-index order
  std::vector<std::vector<std::string>> method_words;
};

// Distinct words drawn from the pool, no repeats within one name.
std::vector<std::string> draw_words(Rng& rng, const std::vector<std::string>& pool,
                                    int count) {
  std::vector<std::size_t> idx(pool.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::vector<std::string> out;
  for (int k = 0; k < count && k < static_cast<int>(pool.size()); ++k) {
    std::size_t j = k + static_cast<std::size_t>(rng.below(idx.size() - k));
    std::swap(idx[k], idx[j]);
    out.push_back(pool[idx[k]]);
  }
  return out;
}

std::string join_camel(const std::vector<std::string>& words, bool upper_first) {
  std::string s;
  for (std::size_t i = 0; i < words.size(); ++i)
    s += (i == 0 && !upper_first) ? words[i] : capitalize(words[i]);
  return s;
}

}  // namespace

std::vector<std::string> default_word_pool() {
  return {"string", "utils",  "array",   "number", "date",   "time",
          "random", "builder", "parser", "format", "math",   "matrix",
          "vector", "range",  "char",    "set",    "map",    "list",
          "queue",  "stack",  "tree",    "node",   "graph",  "path",
          "value",  "field",  "method",  "type",   "class",  "object",
          "reflect", "event", "system",  "locale", "escape", "text",
          "word",   "token",  "split",   "join",   "compare", "hash",
          "equals", "clone",  "serial",  "stream", "buffer", "cache",
          "solver", "root",   "linear",  "integer", "fraction", "complex",
          "stat",   "sample", "distance", "function", "point", "interval"};
}

void validate(const GenConfig& cfg) {
  auto prob = [](double p, const char* what) {
    if (!(p >= 0.0 && p <= 1.0))
      throw InvalidArgument(std::string(what) + " must be in [0,1]");
  };
  prob(cfg.dynamic_edge_fraction, "dynamic_edge_fraction");
  prob(cfg.naming_correlation, "naming_correlation");
  prob(cfg.branch_prob, "branch_prob");
  prob(cfg.dynamic_prob, "dynamic_prob");
  if (cfg.dynamic_edge_fraction >= 1.0)
    throw InvalidArgument("dynamic_edge_fraction must be < 1");
  auto range = [](const IntRange& r, int min_lo, const char* what) {
    if (r.lo < min_lo || r.hi < r.lo)
      throw InvalidArgument(std::string(what) + " must be a non-empty range with lo >= " +
                            std::to_string(min_lo));
  };
  range(cfg.methods_per_class, 1, "methods_per_class");
  range(cfg.static_out_degree, 0, "static_out_degree");
  range(cfg.entry_calls, 1, "entry_calls");
  if (cfg.n_classes < 1) throw InvalidArgument("n_classes must be >= 1");
  if (cfg.tests_per_class < 0) throw InvalidArgument("tests_per_class must be >= 0");
  if (cfg.call_depth < 1) throw InvalidArgument("call_depth must be >= 1");
  if (cfg.deps_per_class < 0) throw InvalidArgument("deps_per_class must be >= 0");
  std::set<std::string> uniq;
  for (const auto& w : cfg.word_pool) {
    if (w.empty() || !std::all_of(w.begin(), w.end(), [](char c) {
          return c >= 'a' && c <= 'z';
        }))
      throw InvalidArgument("word_pool entries must be lowercase ASCII words: '" + w + "'");
    if (w == "test") throw InvalidArgument("word_pool must not contain 'test'");
    uniq.insert(w);
  }
  if (uniq.size() != cfg.word_pool.size())
    throw InvalidArgument("word_pool contains duplicates");
  if (uniq.size() < 8) throw InvalidArgument("word_pool needs at least 8 words");
  // Class names are two distinct words and must be unique.
  const double pairs = static_cast<double>(uniq.size()) * (uniq.size() - 1);
  if (pairs < cfg.n_classes)
    throw InvalidArgument("word_pool too small for n_classes unique class names");
}

std::string gen_config_to_json(const GenConfig& cfg) {
  nlohmann::ordered_json j;
  j["name"] = cfg.name;
  j["n_classes"] = cfg.n_classes;
  j["methods_per_class"] = {cfg.methods_per_class.lo, cfg.methods_per_class.hi};
  j["word_pool"] = cfg.word_pool;
  j["static_out_degree"] = {cfg.static_out_degree.lo, cfg.static_out_degree.hi};
  j["dynamic_edge_fraction"] = cfg.dynamic_edge_fraction;
  j["tests_per_class"] = cfg.tests_per_class;
  j["naming_correlation"] = cfg.naming_correlation;
  j["branch_prob"] = cfg.branch_prob;
  j["dynamic_prob"] = cfg.dynamic_prob;
  j["call_depth"] = cfg.call_depth;
  j["deps_per_class"] = cfg.deps_per_class;
  j["entry_calls"] = {cfg.entry_calls.lo, cfg.entry_calls.hi};
  j["seed"] = cfg.seed;
  return j.dump(1);
}

GenConfig gen_config_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("generator config: ") + e.what());
  }
  if (!j.is_object()) throw ParseError("generator config must be an object");
  GenConfig cfg;
  try {
    auto range = [&j](const char* key, IntRange& r) {
      if (j.contains(key)) {
        const auto& v = j.at(key);
        if (!v.is_array() || v.size() != 2)
          throw ParseError(std::string("generator config: '") + key + "' must be [lo, hi]");
        r = {v[0].get<int>(), v[1].get<int>()};
      }
    };
    if (j.contains("name")) cfg.name = j.at("name").get<std::string>();
    if (j.contains("n_classes")) cfg.n_classes = j.at("n_classes").get<int>();
    range("methods_per_class", cfg.methods_per_class);
    if (j.contains("word_pool")) cfg.word_pool = j.at("word_pool").get<std::vector<std::string>>();
    range("static_out_degree", cfg.static_out_degree);
    if (j.contains("dynamic_edge_fraction"))
      cfg.dynamic_edge_fraction = j.at("dynamic_edge_fraction").get<double>();
    if (j.contains("tests_per_class")) cfg.tests_per_class = j.at("tests_per_class").get<int>();
    if (j.contains("naming_correlation"))
      cfg.naming_correlation = j.at("naming_correlation").get<double>();
    if (j.contains("branch_prob")) cfg.branch_prob = j.at("branch_prob").get<double>();
    if (j.contains("dynamic_prob")) cfg.dynamic_prob = j.at("dynamic_prob").get<double>();
    if (j.contains("call_depth")) cfg.call_depth = j.at("call_depth").get<int>();
    if (j.contains("deps_per_class")) cfg.deps_per_class = j.at("deps_per_class").get<int>();
    range("entry_calls", cfg.entry_calls);
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("generator config: ") + e.what());
  }
  validate(cfg);
  return cfg;
}

Project generate_project(const GenConfig& cfg) {
  validate(cfg);
  Rng rng(derive_seed(cfg.seed, "project"));

  // Classes: unique two-word names, spread evenly over the layers.
  std::vector<ClassPlan> classes(cfg.n_classes);
  std::set<std::string> used_names;
  for (int c = 0; c < cfg.n_classes; ++c) {
    auto& cls = classes[c];
    do {
      cls.words = draw_words(rng, cfg.word_pool, 2);
      cls.name = join_camel(cls.words, true);
    } while (!used_names.insert(cls.name).second);
    cls.layer = static_cast<int>(static_cast<long long>(c) * cfg.call_depth / cfg.n_classes);
  }
  for (int c = 0; c < cfg.n_classes; ++c) {
    std::vector<int> deeper;
    std::vector<int> next;
    for (int d = 0; d < cfg.n_classes; ++d) {
      if (classes[d].layer > classes[c].layer) deeper.push_back(d);
      if (classes[d].layer == classes[c].layer + 1) next.push_back(d);
    }
    // Prefer the adjacent layer, fall back to anything deeper.
    for (int k = 0; k < cfg.deps_per_class && !deeper.empty(); ++k) {
      const auto& src = (!next.empty() && rng.bernoulli(0.7)) ? next : deeper;
      int d = src[rng.below(src.size())];
      if (std::find(classes[c].deps.begin(), classes[c].deps.end(), d) ==
          classes[c].deps.end())
        classes[c].deps.push_back(d);
    }
    std::sort(classes[c].deps.begin(), classes[c].deps.end());
  }

  std::vector<FunctionRef> functions;
  std::vector<int> class_of;
  NodeId next_id = 1;
  for (int c = 0; c < cfg.n_classes; ++c) {
    auto& cls = classes[c];
    int n = static_cast<int>(rng.range(cfg.methods_per_class.lo, cfg.methods_per_class.hi));
    std::set<std::string> method_names;
    for (int m = 0; m < n; ++m) {
      std::vector<std::string> words;
      std::string name;
      int attempts = 0;
      do {
        words = draw_words(rng, cfg.word_pool, 1 + static_cast<int>(rng.below(2)));
        name = join_camel(words, false);
        // Small pools can run out of distinct names; disambiguate.
        if (++attempts > 50) name += std::to_string(m);
      } while (!method_names.insert(name).second);
      cls.methods.push_back(next_id);
      cls.method_words.push_back(words);
      class_of.push_back(c);
      functions.push_back({next_id, cls.name, name});
      ++next_id;
    }
  }
  const NodeId n_functions = next_id - 1;
  auto class_index = [&](NodeId f) { return class_of[static_cast<std::size_t>(f - 1)]; };
  auto method_pos = [&](NodeId f) {
    const auto& ms = classes[class_index(f)].methods;
    return static_cast<int>(std::find(ms.begin(), ms.end(), f) - ms.begin());
  };

  // Candidate callees keep the graph acyclic: later methods of the own
  // class, or any method of a dependency class.
  auto callees_of = [&](NodeId f, bool intra) {
    std::vector<NodeId> out;
    const auto& cls = classes[class_index(f)];
    if (intra) {
      for (std::size_t k = method_pos(f) + 1; k < cls.methods.size(); ++k)
        out.push_back(cls.methods[k]);
    } else {
      for (int d : cls.deps)
        for (NodeId g : classes[d].methods) out.push_back(g);
    }
    return out;
  };

  std::set<Edge> static_set;
  for (NodeId f = 1; f <= n_functions; ++f) {
    int degree = static_cast<int>(rng.range(cfg.static_out_degree.lo, cfg.static_out_degree.hi));
    auto intra = callees_of(f, true);
    auto inter = callees_of(f, false);
    for (int k = 0; k < degree; ++k) {
      bool use_intra = !intra.empty() && (inter.empty() || rng.bernoulli(0.4));
      const auto& pool = use_intra ? intra : inter;
      if (pool.empty()) break;
      static_set.insert({f, pool[rng.below(pool.size())]});
    }
  }

  std::vector<TestRef> tests;
  std::set<std::string> test_names;
  for (int c = 0; c < cfg.n_classes; ++c) {
    const auto& cls = classes[c];
    for (int k = 0; k < cfg.tests_per_class; ++k) {
      NodeId id = next_id++;
      int n_entry = static_cast<int>(rng.range(cfg.entry_calls.lo, cfg.entry_calls.hi));
      n_entry = std::min<int>(n_entry, static_cast<int>(cls.methods.size()));
      std::vector<NodeId> entries = cls.methods;
      rng.shuffle(entries);
      entries.resize(n_entry);
      for (NodeId e : entries) static_set.insert({id, e});

      const bool correlated = rng.bernoulli(cfg.naming_correlation);
      std::string test_class;
      std::string test_method;
      if (correlated) {
        test_class = join_camel(cls.words, true) + "Test";
        auto first = std::min_element(entries.begin(), entries.end());
        auto words = cls.method_words[static_cast<std::size_t>(method_pos(*first))];
        test_method = "test" + join_camel(words, true);
      } else {
        test_class = join_camel(draw_words(rng, cfg.word_pool, 2), true) + "Test";
        test_method = "test" + join_camel(
            draw_words(rng, cfg.word_pool, 1 + static_cast<int>(rng.below(2))), true);
      }
      // Same entry method twice in one test class: extend with another word.
      while (!test_names.insert(test_class + "." + test_method).second)
        test_method += capitalize(cfg.word_pool[rng.below(cfg.word_pool.size())]);
      tests.push_back({id, std::move(test_class), std::move(test_method)});
    }
  }

  // Dynamic edges: extra calls invisible to the static graph, sized so that
  // they make up dynamic_edge_fraction of all edges.
  std::set<Edge> dynamic_set;
  const double frac = cfg.dynamic_edge_fraction;
  const auto target = static_cast<std::size_t>(
      std::llround(frac / (1.0 - frac) * static_cast<double>(static_set.size())));
  std::size_t attempts = 0;
  while (dynamic_set.size() < target && attempts < 100 * (target + 1)) {
    ++attempts;
    NodeId f = 1 + static_cast<NodeId>(rng.below(static_cast<std::uint64_t>(n_functions)));
    const auto& cls = classes[class_index(f)];
    std::vector<NodeId> pool;
    for (int d = 0; d < cfg.n_classes; ++d)
      if (classes[d].layer > cls.layer)
        for (NodeId g : classes[d].methods) pool.push_back(g);
    if (pool.empty()) continue;
    Edge e{f, pool[rng.below(pool.size())]};
    if (static_set.count(e)) continue;
    dynamic_set.insert(e);
  }

  return Project::create(cfg.name, std::move(functions), std::move(tests),
                         {static_set.begin(), static_set.end()},
                         {dynamic_set.begin(), dynamic_set.end()});
}

double edge_coin(std::uint64_t seed, NodeId test, NodeId caller,
                 NodeId callee) noexcept {
  const std::uint64_t stream = derive_seed(seed, "trace", static_cast<std::uint64_t>(test));
  const std::uint64_t key = mix64(static_cast<std::uint64_t>(caller)) ^
                            (static_cast<std::uint64_t>(callee) * 0xD6E8FEB86659FD93ull);
  return to_unit(mix64(stream ^ key));
}

TraceTable generate_traces(const Project& project, const GenConfig& cfg) {
  validate(cfg);
  std::map<NodeId, std::vector<std::pair<NodeId, bool>>> adj;  // bool: dynamic
  for (const auto& e : project.static_edges()) adj[e.caller].push_back({e.callee, false});
  for (const auto& e : project.dynamic_edges()) adj[e.caller].push_back({e.callee, true});

  std::map<NodeId, std::vector<NodeId>> traces;
  for (const auto& t : project.tests()) {
    std::set<NodeId> visited{t.id};
    std::vector<NodeId> stack{t.id};
    while (!stack.empty()) {
      NodeId u = stack.back();
      stack.pop_back();
      auto it = adj.find(u);
      if (it == adj.end()) continue;
      for (const auto& [v, dynamic] : it->second) {
        const double p = dynamic ? cfg.dynamic_prob : cfg.branch_prob;
        if (edge_coin(cfg.seed, t.id, u, v) < p && visited.insert(v).second)
          stack.push_back(v);
      }
    }
    visited.erase(t.id);
    traces[t.id] = {visited.begin(), visited.end()};
  }
  return TraceTable::create(project, std::move(traces));
}

std::vector<NodeId> covered_functions(const TraceTable& traces) {
  std::set<NodeId> covered;
  for (const auto& [_, tr] : traces.all()) covered.insert(tr.begin(), tr.end());
  return {covered.begin(), covered.end()};
}

std::vector<FaultSet> inject_faults(const Project& project,
                                    const TraceTable& traces, int cardinality,
                                    int n_faults, std::uint64_t seed) {
  (void)project;
  if (cardinality < 1) throw InvalidArgument("fault cardinality must be >= 1");
  if (n_faults < 0) throw InvalidArgument("n_faults must be >= 0");
  const auto covered = covered_functions(traces);
  const auto n = static_cast<double>(covered.size());
  if (covered.size() < static_cast<std::size_t>(cardinality))
    throw InvalidArgument("infeasible fault request: only " +
                          std::to_string(covered.size()) +
                          " covered functions for cardinality " +
                          std::to_string(cardinality));
  // Number of distinct sets, computed in floating point to avoid overflow.
  double combos = 1.0;
  for (int k = 0; k < cardinality; ++k) combos = combos * (n - k) / (k + 1);
  if (combos + 0.5 < n_faults)
    throw InvalidArgument("infeasible fault request: only " +
                          std::to_string(static_cast<long long>(combos + 0.5)) +
                          " distinct fault sets exist");

  Rng rng(derive_seed(seed, "faults"));
  std::set<FaultSet> seen;
  std::vector<FaultSet> faults;
  std::vector<NodeId> pool = covered;
  while (static_cast<int>(faults.size()) < n_faults) {
    for (int k = 0; k < cardinality; ++k) {
      std::size_t j = k + static_cast<std::size_t>(rng.below(pool.size() - k));
      std::swap(pool[k], pool[j]);
    }
    FaultSet f(pool.begin(), pool.begin() + cardinality);
    std::sort(f.begin(), f.end());
    if (seen.insert(f).second) faults.push_back(std::move(f));
  }
  return faults;
}

}  // namespace tracepred
