#include <doctest.h>

#include <cmath>
#include <map>

#include "helpers.hpp"
#include "tracepred/planner.hpp"
#include "tracepred/rng.hpp"

using namespace tracepred;

TEST_CASE("utility by hand") {
  const std::map<NodeId, double> conf{{1, 0.9}, {2, 0.5}};
  const HealthStateMap h({{1, 0.4}, {2, 0.6}});
  CHECK(std::abs(utility(conf, h, 40) - 0.66) <= 1e-12);
  CHECK(std::abs(utility(conf, h, 2) - 0.66) <= 1e-12);
  CHECK(std::abs(utility(conf, h, 1) - 0.36) <= 1e-12);
  CHECK(utility(conf, HealthStateMap{}, 40) == 0.0);
}

TEST_CASE("ranking ties go to the lower id") {
  const auto r = rank_confidence({{5, 0.2}, {3, 0.7}, {1, 0.2}, {4, 0.7}});
  REQUIRE(r.size() == 4);
  CHECK(r[0].first == 3);
  CHECK(r[1].first == 4);
  CHECK(r[2].first == 1);
  CHECK(r[3].first == 5);
}

TEST_CASE("truncation at |COMPS| equals the full sum") {
  Rng rng(3);
  std::map<NodeId, double> conf;
  std::map<NodeId, double> hv;
  double full = 0.0;
  for (NodeId c = 1; c <= 60; ++c) {
    conf[c] = rng.uniform();
    hv[c] = rng.uniform();
    full += conf[c] * hv[c];
  }
  const HealthStateMap h(hv);
  CHECK(std::abs(utility(conf, h, 60) - full) <= 1e-12);
  CHECK(utility(conf, h, 40) <= utility(conf, h, 60));
}

TEST_CASE("planner choices") {
  const auto p = th::small_project(3, 3, {{100, 1}, {101, 2}, {102, 3}});
  const auto tt = TraceTable::create(p, {{100, {1, 2}}, {101, {2}}, {102, {3}}});
  PlanningContext ctx{&tt, nullptr};

  SUBCASE("one test left") {
    for (Strategy s : {Strategy::Oracle, Strategy::Random}) {
      PlannerState st({101}, s, 40, 9);
      CHECK(next_test(st, ctx, HealthStateMap({{1, 0.9}})) == 101);
    }
  }
  SUBCASE("oracle prefers the test covering the suspect") {
    PlannerState st({101, 100, 102}, Strategy::Oracle);
    CHECK(next_test(st, ctx, HealthStateMap({{1, 0.9}})) == 100);
  }
  SUBCASE("oracle ties go to the lowest id") {
    PlannerState st({102, 101, 100}, Strategy::Oracle);
    CHECK(next_test(st, ctx, HealthStateMap{}) == 100);
  }
  SUBCASE("predicted needs a classifier") {
    PlannerState st({100}, Strategy::Predicted);
    CHECK_THROWS(next_test(st, ctx, HealthStateMap{}));
  }
  SUBCASE("random is seeded") {
    PlannerState a({100, 101, 102}, Strategy::Random, 40, 5);
    PlannerState b({100, 101, 102}, Strategy::Random, 40, 5);
    for (int i = 0; i < 10; ++i) CHECK(next_test(a, ctx, {}) == next_test(b, ctx, {}));
  }
}

TEST_CASE("indicator confidences reproduce the oracle utility table") {
  GenConfig g;
  g.seed = 5;
  const auto p = generate_project(g);
  const auto tt = generate_traces(p, g);
  Rng rng(6);
  std::map<NodeId, double> hv;
  for (const auto& f : p.functions())
    if (rng.bernoulli(0.1)) hv[f.id] = rng.uniform();
  const HealthStateMap h(hv);
  const int all = static_cast<int>(p.functions().size());

  NodeId best_pred = 0, best_oracle = 0;
  double up = -1, uo = -1;
  for (NodeId t : p.test_ids()) {
    std::map<NodeId, double> conf;
    for (const auto& f : p.functions()) conf[f.id] = tt.contains(t, f.id) ? 1.0 : 0.0;
    const double a = utility(conf, h, all);
    const double b = oracle_utility(tt.trace(t), h);
    CHECK(std::abs(a - b) <= 1e-12);
    if (a > up) up = a, best_pred = t;
    if (b > uo) uo = b, best_oracle = t;
  }
  CHECK(best_pred == best_oracle);
  const auto ids = p.test_ids();
  PlannerState st(std::set<NodeId>(ids.begin(), ids.end()), Strategy::Oracle);
  PlanningContext ctx{&tt, nullptr};
  CHECK(next_test(st, ctx, h) == best_oracle);
}
