#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <map>
#include <numeric>
#include <set>

#include "helpers.hpp"
#include "tracepred/error.hpp"
#include "tracepred/features.hpp"
#include "tracepred/rng.hpp"

using namespace tracepred;

namespace {

// Random DAG-free graph over n function nodes 1..n plus one test node 100
// that calls a few of them. Cycles among functions are allowed.
Project random_graph(Rng& rng, int n, double density) {
  std::vector<Edge> edges;
  for (int a = 1; a <= n; ++a)
    for (int b = 1; b <= n; ++b)
      if (a != b && rng.bernoulli(density)) edges.push_back({a, b});
  for (int b = 1; b <= n; ++b)
    if (rng.bernoulli(0.2)) edges.push_back({100, b});
  return th::small_project(n, 1, edges);
}

}  // namespace

TEST_CASE("degrees") {
  const auto p = th::small_project(9, 1, {{100, 1}, {1, 2}}, {{100, 9}});
  const auto g = build_call_graph(p);
  CHECK(g.out_degree(100) == 1);
  CHECK(g.in_degree(2) == 1);
  CHECK(g.in_degree(9) == 0);  // dynamic edge is not part of the static graph
  CHECK(g.edge_count() == 2);
  CHECK(path_exists(g, 100, 9) == 0);
}

TEST_CASE("handshake identity on a generated corpus") {
  GenConfig cfg;
  cfg.seed = 4;
  const auto p = generate_project(cfg);
  const auto g = build_call_graph(p);
  long in = 0, out = 0;
  for (const auto& f : p.functions()) {
    in += g.in_degree(f.id);
    out += g.out_degree(f.id);
  }
  for (const auto& t : p.tests()) {
    in += g.in_degree(t.id);
    out += g.out_degree(t.id);
  }
  CHECK(in == static_cast<long>(p.static_edges().size()));
  CHECK(out == static_cast<long>(p.static_edges().size()));
}

TEST_CASE("path existence and shortest paths by hand") {
  // t -> a -> c, t -> b -> a, d disconnected
  const auto p = th::small_project(4, 1, {{100, 1}, {1, 3}, {100, 2}, {2, 1}});
  const auto g = build_call_graph(p);
  CHECK(path_exists(g, 100, 3) == 1);
  CHECK(path_exists(g, 100, 4) == 0);
  CHECK(shortest_path_len(g, 100, 1) == 1);
  CHECK(shortest_path_len(g, 100, 3) == 2);
  CHECK(shortest_path_len(g, 100, 4) == kDefaultUnreachableLength);
  CHECK(shortest_path_len(g, 100, 4, 7) == 7);
  CHECK_THROWS_AS(path_exists(g, 100, 55), ValidationError);
}

TEST_CASE("reachability equals matrix closure and distances equal Floyd-Warshall") {
  Rng rng(2024);
  for (int trial = 0; trial < 60; ++trial) {
    const int n = 11;  // plus the test node: 12 nodes
    const auto p = random_graph(rng, n, 0.12);
    const auto g = build_call_graph(p);
    std::vector<NodeId> ids{100};
    for (int i = 1; i <= n; ++i) ids.push_back(i);
    const std::size_t m = ids.size();
    auto idx = [&](NodeId id) {
      return static_cast<std::size_t>(std::find(ids.begin(), ids.end(), id) - ids.begin());
    };
    std::vector<std::vector<int>> adj(m, std::vector<int>(m, 0));
    for (const auto& e : p.static_edges()) adj[idx(e.caller)][idx(e.callee)] = 1;

    // closure: R = A + A^2 + ... + A^m over booleans
    auto reach = adj;
    auto power = adj;
    for (std::size_t k = 1; k < m; ++k) {
      std::vector<std::vector<int>> next(m, std::vector<int>(m, 0));
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j)
          for (std::size_t l = 0; l < m; ++l)
            if (power[i][l] && adj[l][j]) next[i][j] = 1;
      power = next;
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j) reach[i][j] |= power[i][j];
    }

    const int inf = 1 << 20;
    std::vector<std::vector<int>> d(m, std::vector<int>(m, inf));
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < m; ++j)
        if (adj[i][j]) d[i][j] = 1;
    for (std::size_t k = 0; k < m; ++k)
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j) d[i][j] = std::min(d[i][j], d[i][k] + d[k][j]);

    for (NodeId a : ids)
      for (NodeId b : ids) {
        if (a == b) continue;
        CHECK(path_exists(g, a, b) == reach[idx(a)][idx(b)]);
        const int fw = d[idx(a)][idx(b)];
        CHECK(shortest_path_len(g, a, b) == (fw >= inf ? kDefaultUnreachableLength : fw));
      }
  }
}

TEST_CASE("camel splitting") {
  CHECK(camel_split("StringUtilsTest") == std::vector<std::string>{"string", "utils", "test"});
  CHECK(camel_split("capitalize") == std::vector<std::string>{"capitalize"});
  CHECK(camel_split("toCSV2") == std::vector<std::string>{"to", "c", "s", "v2"});
  CHECK(camel_split("snake_caseName") == std::vector<std::string>{"snake", "case", "name"});
  CHECK(camel_split("").empty());
}

TEST_CASE("common words") {
  CHECK(common_words("StringUtilsTest", "StringUtils") == 2);
  CHECK(common_words("ArrayListHelper", "ArrayListHelper") == 3);
  CHECK(common_words("alphaBeta", "GammaDelta") == 0);
  CHECK(common_words("fooFoo", "Foo") == 1);  // sets, not multisets
}

TEST_CASE("levenshtein distance") {
  CHECK(name_distance("abc", "abc") == 0.0);
  CHECK(name_distance("abc", "abd") == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(name_distance("a", "xyz") == 1.0);
  CHECK(levenshtein("kitten", "sitting") == 3);
  CHECK(levenshtein("", "abc") == 3);
  CHECK(name_distance("", "") == 0.0);
}

TEST_CASE("feature vectors") {
  std::vector<FunctionRef> fns{th::fn(1, "StringUtils", "capitalize"),
                               th::fn(2, "NumberParser", "parseDouble")};
  std::vector<TestRef> tests{th::tst(10, "StringUtilsTest", "testCapitalize")};
  const auto p = Project::create("f", fns, tests, {{10, 1}}, {});
  const auto g = build_call_graph(p);

  const auto far = extract_features(g, p, 10, 2);
  CHECK(far.path_existence == 0);
  CHECK(far.shortest_path == kDefaultUnreachableLength);
  CHECK(far.target_in_degree == 0);
  CHECK(far.source_out_degree == 1);
  CHECK(far.class_common_words == 0);
  CHECK(far.method_common_words == 0);
  CHECK(far.class_name_distance > 0.0);
  CHECK(far.method_name_distance > 0.0);

  const auto near = extract_features(g, p, 10, 1);
  CHECK(near.path_existence == 1);
  CHECK(near.shortest_path == 1);
  CHECK(near.target_in_degree == 1);
  CHECK(near.class_common_words == 2);
  CHECK(near.method_common_words == 1);
  CHECK(near.class_name_distance == doctest::Approx(4.0 / 15.0));

  CHECK(feature_names().size() == kFeatureCount);
  CHECK(feature_names()[0] == "path_existence");
}

TEST_CASE("cached extraction equals recomputation") {
  GenConfig cfg;
  cfg.seed = 12;
  const auto p = generate_project(cfg);
  const auto g = build_call_graph(p);
  FeatureExtractor fx(p, g);
  Rng rng(5);
  const auto tests = p.test_ids();
  const auto fns = p.function_ids();
  for (int i = 0; i < 500; ++i) {
    const NodeId t = tests[rng.below(tests.size())];
    const NodeId f = fns[rng.below(fns.size())];
    CHECK(fx(t, f) == extract_features(g, p, t, f));
  }
}

TEST_CASE("dataset construction") {
  SUBCASE("instance counts: 100 tests x 2000 methods") {
    std::vector<FunctionRef> fns;
    for (int i = 1; i <= 2000; ++i)
      fns.push_back(th::fn(i, "Unit" + std::to_string(i % 37), "work" + std::to_string(i)));
    std::vector<TestRef> tests;
    std::vector<Edge> edges;
    for (int j = 0; j < 100; ++j) {
      tests.push_back(th::tst(5000 + j, "Case" + std::to_string(j) + "Test", "testIt"));
      edges.push_back({5000 + j, 1 + j});
    }
    const auto p = Project::create("big", fns, tests, edges, {});
    REQUIRE(p.functions().size() == 2000);
    std::map<NodeId, std::vector<NodeId>> tr;
    for (const auto& t : p.tests()) tr[t.id] = {};
    tr[5000] = {1};
    const auto tt = TraceTable::create(p, tr);
    CHECK(build_dataset(p, tt, 1.0, 0.5, 1).instances.size() == 200000);
    CHECK(build_dataset(p, tt, 0.1, 0.5, 1).instances.size() == 20000);
  }
  SUBCASE("split balance and labels") {
    GenConfig cfg;
    cfg.seed = 9;
    const auto p = generate_project(cfg);
    const auto tt = generate_traces(p, cfg);
    const auto ds = build_dataset(p, tt, 0.1, 0.5, 33);
    const auto ntr = static_cast<long>(ds.count(Split::Train));
    const auto nte = static_cast<long>(ds.count(Split::Test));
    CHECK(std::labs(ntr - nte) <= 1);
    Rng rng(1);
    for (int i = 0; i < 1000; ++i) {
      const auto& inst = ds.instances[rng.below(ds.instances.size())];
      CHECK(inst.label == (tt.contains(inst.test, inst.function) ? 1 : 0));
    }
    // determinism
    const auto again = build_dataset(p, tt, 0.1, 0.5, 33);
    CHECK(dataset_to_csv(again) == dataset_to_csv(ds));
    const auto csv = dataset_to_csv(ds);
    CHECK(csv.rfind("test_id,function_id,path_existence,", 0) == 0);
  }
}
