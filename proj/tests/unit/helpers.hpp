#pragma once

#include <string>
#include <vector>

#include "tracepred/project.hpp"
#include "tracepred/synthesis.hpp"

namespace th {

using namespace tracepred;

inline FunctionRef fn(NodeId id, std::string cls, std::string method) {
  return {id, std::move(cls), std::move(method)};
}
inline TestRef tst(NodeId id, std::string cls, std::string method) {
  return {id, std::move(cls), std::move(method)};
}

// Functions 1..n named C<i>.m<i>, tests 100.. named T<j>Test.testRun<j>.
inline Project small_project(int n_functions, int n_tests, std::vector<Edge> edges,
                             std::vector<Edge> dynamic = {}) {
  std::vector<FunctionRef> fns;
  for (int i = 1; i <= n_functions; ++i)
    fns.push_back(fn(i, "Cls" + std::to_string(i), "method" + std::to_string(i)));
  std::vector<TestRef> tests;
  for (int j = 0; j < n_tests; ++j)
    tests.push_back(tst(100 + j, "Suite" + std::to_string(j) + "Test",
                        "testRun" + std::to_string(j)));
  return Project::create("small", fns, tests, std::move(edges), std::move(dynamic));
}

inline GenConfig small_gen(std::uint64_t seed = 1) {
  GenConfig g;
  g.n_classes = 12;
  g.methods_per_class = {4, 6};
  g.tests_per_class = 2;
  g.seed = seed;
  return g;
}

}  // namespace th
