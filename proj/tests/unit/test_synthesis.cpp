#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <set>

#include "helpers.hpp"
#include "tracepred/error.hpp"
#include "tracepred/features.hpp"
#include "tracepred/ldp.hpp"

using namespace tracepred;

namespace {

// Breadth-first re-implementation of the stochastic traversal.
std::vector<NodeId> bfs_trace(const Project& p, NodeId test, const GenConfig& g) {
  std::multimap<NodeId, std::pair<NodeId, double>> out;
  for (const auto& e : p.static_edges()) out.insert({e.caller, {e.callee, g.branch_prob}});
  for (const auto& e : p.dynamic_edges()) out.insert({e.caller, {e.callee, g.dynamic_prob}});
  std::set<NodeId> seen{test};
  std::deque<NodeId> q{test};
  while (!q.empty()) {
    const NodeId u = q.front();
    q.pop_front();
    auto [lo, hi] = out.equal_range(u);
    for (auto it = lo; it != hi; ++it) {
      const auto [v, prob] = it->second;
      if (edge_coin(g.seed, test, u, v) < prob && seen.insert(v).second) q.push_back(v);
    }
  }
  seen.erase(test);
  return {seen.begin(), seen.end()};
}

std::set<NodeId> reachable(const Project& p, NodeId from, bool with_dynamic) {
  std::set<NodeId> seen;
  std::vector<NodeId> stack{from};
  while (!stack.empty()) {
    const NodeId u = stack.back();
    stack.pop_back();
    auto visit = [&](const std::vector<Edge>& edges) {
      for (const auto& e : edges)
        if (e.caller == u && seen.insert(e.callee).second) stack.push_back(e.callee);
    };
    visit(p.static_edges());
    if (with_dynamic) visit(p.dynamic_edges());
  }
  return seen;
}

}  // namespace

TEST_CASE("generation is deterministic") {
  const auto g = th::small_gen(5);
  CHECK(dump_project(generate_project(g)) == dump_project(generate_project(g)));
  auto g2 = g;
  g2.seed = 6;
  CHECK(dump_project(generate_project(g)) != dump_project(generate_project(g2)));
}

TEST_CASE("config validation") {
  GenConfig g;
  g.dynamic_edge_fraction = 1.5;
  CHECK_THROWS_AS(validate(g), InvalidArgument);
  g = GenConfig{};
  g.word_pool = {"a", "b", "c"};
  CHECK_THROWS_AS(validate(g), InvalidArgument);
  g = GenConfig{};
  g.methods_per_class = {5, 3};
  CHECK_THROWS_AS(validate(g), InvalidArgument);
  g = GenConfig{};
  CHECK(gen_config_from_json(gen_config_to_json(g)) == g);
}

TEST_CASE("corpus shape") {
  GenConfig g;
  g.seed = 3;
  const auto p = generate_project(g);
  CHECK(p.tests().size() == 100);
  CHECK(p.functions().size() >= 300);
  CHECK(p.functions().size() <= 500);
  const double dyn = static_cast<double>(p.dynamic_edges().size());
  const double all = dyn + static_cast<double>(p.static_edges().size());
  CHECK(dyn / all == doctest::Approx(g.dynamic_edge_fraction).epsilon(0.02));
}

TEST_CASE("q=1: every test shares a word with its target class") {
  auto g = th::small_gen(2);
  g.naming_correlation = 1.0;
  const auto p = generate_project(g);
  for (const auto& t : p.tests()) {
    // the target class is the class of any entry method
    const auto& e = *std::find_if(p.static_edges().begin(), p.static_edges().end(),
                                  [&](const Edge& x) { return x.caller == t.id; });
    CHECK(common_words(t.class_name, p.function(e.callee).class_name) >= 1);
  }
}

TEST_CASE("q=0: shared words match the pool collision rate") {
  GenConfig g;
  g.n_classes = 20;
  g.tests_per_class = 50;  // 1000 tests
  g.naming_correlation = 0.0;
  g.seed = 17;
  const auto p = generate_project(g);
  double total = 0.0;
  for (const auto& t : p.tests()) {
    const auto& e = *std::find_if(p.static_edges().begin(), p.static_edges().end(),
                                  [&](const Edge& x) { return x.caller == t.id; });
    total += common_words(t.class_name, p.function(e.callee).class_name);
  }
  // two random distinct words against a two-word class name out of W
  const double w = static_cast<double>(g.word_pool.size());
  const double expected = 2.0 * 2.0 / w;
  CHECK(p.tests().size() == 1000);
  // about 4 standard errors at 1000 samples
  CHECK(std::abs(total / 1000.0 - expected) <= 0.035);
}

TEST_CASE("full reachability traces") {
  auto g = th::small_gen(4);
  g.branch_prob = 1.0;
  g.dynamic_prob = 1.0;
  const auto p = generate_project(g);
  const auto tt = generate_traces(p, g);
  for (const auto& t : p.tests()) {
    const auto r = reachable(p, t.id, true);
    CHECK(tt.trace(t.id) == std::vector<NodeId>(r.begin(), r.end()));
  }
}

TEST_CASE("static-only traces stay on static paths") {
  auto g = th::small_gen(4);
  g.branch_prob = 1.0;
  g.dynamic_prob = 0.0;
  const auto p = generate_project(g);
  const auto tt = generate_traces(p, g);
  const auto cg = build_call_graph(p);
  for (const auto& t : p.tests()) {
    const auto r = reachable(p, t.id, false);
    CHECK(tt.trace(t.id) == std::vector<NodeId>(r.begin(), r.end()));
    for (NodeId c : tt.trace(t.id)) CHECK(path_exists(cg, t.id, c) == 1);
  }
}

TEST_CASE("stochastic traces match an independent traversal") {
  GenConfig g;
  g.seed = 21;
  const auto p = generate_project(g);
  const auto tt = generate_traces(p, g);
  for (const auto& t : p.tests()) CHECK(tt.trace(t.id) == bfs_trace(p, t.id, g));
}

TEST_CASE("fault injection") {
  SUBCASE("only one covered function") {
    const auto p = th::small_project(4, 2, {{100, 3}, {101, 3}});
    const auto tt = TraceTable::create(p, {{100, {3}}, {101, {}}});
    const auto faults = inject_faults(p, tt, 1, 1, 9);
    REQUIRE(faults.size() == 1);
    CHECK(faults[0] == FaultSet{3});
    CHECK_THROWS_AS(inject_faults(p, tt, 1, 2, 9), InvalidArgument);
    CHECK_THROWS_AS(inject_faults(p, tt, 2, 1, 9), InvalidArgument);
  }
  SUBCASE("deterministic and covered") {
    GenConfig g;
    g.seed = 8;
    const auto p = generate_project(g);
    const auto tt = generate_traces(p, g);
    const auto a = inject_faults(p, tt, 2, 10, 77);
    CHECK(a == inject_faults(p, tt, 2, 10, 77));
    CHECK(std::set<FaultSet>(a.begin(), a.end()).size() == 10);
    for (const auto& f : a) {
      CHECK(f.size() == 2);
      CHECK(std::is_sorted(f.begin(), f.end()));
      int failing = 0;
      for (NodeId t : p.test_ids())
        failing += outcome_oracle(t, tt, f) == Outcome::Failed;
      CHECK(failing >= 1);
    }
  }
}
