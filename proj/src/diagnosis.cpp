#include "tracepred/diagnosis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <unordered_map>

#include <json.hpp>

namespace tracepred {

const char* to_string(Outcome o) noexcept { return o == Outcome::Failed ? "FAILED" : "PASSED"; }

namespace {

using Bits = std::vector<std::uint64_t>;

bool is_full(const Bits& b, const Bits& full) { return b == full; }

Bits or_bits(const Bits& a, const Bits& b) {
  Bits out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] | b[i];
  return out;
}

bool canonical_less(const std::vector<NodeId>& a, const std::vector<NodeId>& b) {
  if (a.size() != b.size()) return a.size() < b.size();
  return a < b;
}

}  // namespace

std::vector<std::vector<NodeId>> minimal_hitting_sets(
    const std::vector<std::vector<NodeId>>& failed_traces, int max_cardinality) {
  if (max_cardinality < 1) throw InvalidArgument("max_cardinality must be >= 1");
  const std::size_t m = failed_traces.size();
  for (std::size_t i = 0; i < m; ++i)
    if (failed_traces[i].empty())
      throw DiagnosisError("failed trace #" + std::to_string(i) +
                           " is empty and cannot be hit by any diagnosis");
  if (m == 0) return {};

  const std::size_t words = (m + 63) / 64;
  std::map<NodeId, Bits> mask_of;
  for (std::size_t i = 0; i < m; ++i)
    for (NodeId c : failed_traces[i]) {
      auto& b = mask_of.try_emplace(c, Bits(words, 0)).first->second;
      b[i / 64] |= std::uint64_t{1} << (i % 64);
    }
  Bits full(words, 0);
  for (std::size_t i = 0; i < m; ++i) full[i / 64] |= std::uint64_t{1} << (i % 64);

  // Components with equal masks are interchangeable, and a minimal set never
  // holds two of them, so enumerate over distinct masks and expand after.
  std::map<Bits, std::vector<NodeId>> groups;
  for (const auto& [c, b] : mask_of) groups[b].push_back(c);
  std::vector<const Bits*> masks;
  std::vector<const std::vector<NodeId>*> members;
  std::vector<std::vector<NodeId>> result;
  for (const auto& [b, cs] : groups) {
    if (is_full(b, full)) {
      for (NodeId c : cs) result.push_back({c});
    } else {
      masks.push_back(&b);
      members.push_back(&cs);
    }
  }

  // Depth-first over increasing mask indices. A partial selection is only
  // extended while its union is not yet full; at full union every element
  // must still be necessary.
  std::vector<std::size_t> chosen;
  std::vector<Bits> prefix_or{Bits(words, 0)};
  auto necessary_all = [&] {
    for (std::size_t skip = 0; skip < chosen.size(); ++skip) {
      Bits rest(words, 0);
      for (std::size_t k = 0; k < chosen.size(); ++k)
        if (k != skip) rest = or_bits(rest, *masks[chosen[k]]);
      if (is_full(rest, full)) return false;
    }
    return true;
  };
  auto emit = [&] {
    std::vector<std::vector<NodeId>> acc{{}};
    for (std::size_t idx : chosen) {
      std::vector<std::vector<NodeId>> next;
      for (const auto& partial : acc)
        for (NodeId c : *members[idx]) {
          auto p = partial;
          p.push_back(c);
          next.push_back(std::move(p));
        }
      acc = std::move(next);
    }
    for (auto& s : acc) {
      std::sort(s.begin(), s.end());
      result.push_back(std::move(s));
    }
  };
  auto recurse = [&](auto&& self, std::size_t start) -> void {
    for (std::size_t i = start; i < masks.size(); ++i) {
      Bits u = or_bits(prefix_or.back(), *masks[i]);
      if (u == prefix_or.back()) continue;  // adds nothing: never necessary
      chosen.push_back(i);
      if (is_full(u, full)) {
        if (necessary_all()) emit();
      } else if (static_cast<int>(chosen.size()) < max_cardinality) {
        prefix_or.push_back(u);
        self(self, i + 1);
        prefix_or.pop_back();
      }
      chosen.pop_back();
    }
  };
  if (max_cardinality >= 2) recurse(recurse, 0);

  std::sort(result.begin(), result.end(), canonical_less);
  return result;
}

namespace {

struct Pattern {
  std::uint32_t mask = 0;  // which candidate members the trace contains
  long passed = 0;
  long failed = 0;
};

// log L(g) for the given goodness values.
double log_likelihood(const std::vector<Pattern>& pats, const std::vector<double>& g) {
  double s = 0.0;
  for (const auto& p : pats) {
    double prod = 1.0;
    double logsum = 0.0;
    for (std::size_t c = 0; c < g.size(); ++c)
      if (p.mask & (1u << c)) {
        prod *= g[c];
        logsum += std::log(g[c]);
      }
    if (p.passed) s += static_cast<double>(p.passed) * logsum;
    if (p.failed) s += static_cast<double>(p.failed) * std::log1p(-prod);
  }
  return s;
}

// Coordinate ascent. Each one-dimensional problem
//   A log g + sum_j n_j log(1 - g K_j)
// is concave in g, so its maximizer is the root of the derivative (found
// by bisection) or a boundary.
double maximize_likelihood(std::size_t k, const std::vector<Pattern>& pats) {
  std::vector<double> passed_weight(k, 0.0);
  for (const auto& p : pats)
    for (std::size_t c = 0; c < k; ++c)
      if (p.mask & (1u << c)) passed_weight[c] += static_cast<double>(p.passed);

  // Members never seen in a passing run are set to 0: that satisfies every
  // failed run containing them at no cost.
  std::vector<double> g(k, 0.5);
  std::uint32_t zeroed = 0;
  for (std::size_t c = 0; c < k; ++c)
    if (passed_weight[c] == 0.0) {
      g[c] = 0.0;
      zeroed |= 1u << c;
    }
  std::vector<Pattern> active;
  for (const auto& p : pats)
    if (!(p.failed && (p.mask & zeroed))) active.push_back(p);

  // Members outside every remaining failed pattern only pay in passing
  // runs, so their optimum is g = 1.
  std::vector<std::size_t> free;
  for (std::size_t c = 0; c < k; ++c) {
    if (zeroed & (1u << c)) continue;
    bool in_failed = false;
    for (const auto& p : active) in_failed |= (p.failed && (p.mask & (1u << c)));
    if (in_failed) {
      free.push_back(c);
    } else {
      g[c] = 1.0;
    }
  }

  std::vector<std::pair<double, double>> terms;  // (n_j, K_j)
  for (int sweep = 0; sweep < 500 && !free.empty(); ++sweep) {
    double max_change = 0.0;
    for (std::size_t c : free) {
      const double a = passed_weight[c];
      terms.clear();
      bool blocked = false;
      for (const auto& p : active) {
        if (!p.failed || !(p.mask & (1u << c))) continue;
        double kprod = 1.0;
        for (std::size_t d = 0; d < k; ++d)
          if (d != c && (p.mask & (1u << d))) kprod *= g[d];
        terms.emplace_back(static_cast<double>(p.failed), kprod);
        blocked |= kprod >= 1.0;
      }
      auto deriv = [&](double x) {
        double s = a / x;
        for (const auto& [n, kk] : terms) s -= n * kk / (1.0 - x * kk);
        return s;
      };
      double next;
      if (!blocked && deriv(1.0) >= 0.0) {
        next = 1.0;
      } else {
        double lo = 0.0, hi = 1.0;
        for (int it = 0; it < 80; ++it) {
          const double mid = 0.5 * (lo + hi);
          (deriv(mid) > 0.0 ? lo : hi) = mid;
        }
        next = 0.5 * (lo + hi);
      }
      max_change = std::max(max_change, std::abs(next - g[c]));
      g[c] = next;
    }
    if (max_change < 1e-13) break;
  }
  return std::exp(log_likelihood(pats, g));
}

// Inverted index: component -> indices of observations containing it.
using ObservationIndex = std::unordered_map<NodeId, std::vector<std::size_t>>;

ObservationIndex index_observations(const std::vector<Observation>& obs) {
  ObservationIndex idx;
  for (std::size_t i = 0; i < obs.size(); ++i)
    for (NodeId c : obs[i].trace) idx[c].push_back(i);
  return idx;
}

std::vector<Pattern> patterns_for(const std::vector<NodeId>& cand,
                                  const std::vector<Observation>& obs,
                                  const ObservationIndex& idx) {
  if (cand.size() > 31) throw InvalidArgument("diagnosis candidates are limited to 31 members");
  std::map<std::size_t, std::uint32_t> masks;
  for (std::size_t c = 0; c < cand.size(); ++c) {
    auto it = idx.find(cand[c]);
    if (it == idx.end()) continue;
    for (std::size_t o : it->second) masks[o] |= 1u << c;
  }
  std::map<std::uint32_t, Pattern> by_mask;
  for (const auto& [o, m] : masks) {
    auto& p = by_mask[m];
    p.mask = m;
    (obs[o].outcome == Outcome::Failed ? p.failed : p.passed)++;
  }
  std::vector<Pattern> out;
  for (const auto& [m, p] : by_mask) out.push_back(p);
  return out;
}

bool hits_all_failed(const std::vector<NodeId>& cand, const std::vector<Observation>& obs) {
  for (const auto& o : obs) {
    if (o.outcome != Outcome::Failed) continue;
    bool hit = false;
    for (NodeId c : cand) hit |= std::binary_search(o.trace.begin(), o.trace.end(), c);
    if (!hit) return false;
  }
  return true;
}

double likelihood_with(const std::vector<NodeId>& cand, const std::vector<Observation>& obs,
                       const ObservationIndex& idx,
                       std::map<std::vector<long>, double>& memo) {
  // A failed run the candidate misses cannot be explained at all.
  if (!hits_all_failed(cand, obs)) return 0.0;
  const auto pats = patterns_for(cand, obs, idx);
  std::vector<long> key{static_cast<long>(cand.size())};
  for (const auto& p : pats) {
    key.push_back(p.mask);
    key.push_back(p.passed);
    key.push_back(p.failed);
  }
  auto it = memo.find(key);
  if (it != memo.end()) return it->second;
  const double l = maximize_likelihood(cand.size(), pats);
  memo.emplace(std::move(key), l);
  return l;
}

}  // namespace

double diagnosis_likelihood(const std::vector<NodeId>& candidate,
                            const std::vector<Observation>& observations) {
  std::vector<NodeId> cand = candidate;
  std::sort(cand.begin(), cand.end());
  std::map<std::vector<long>, double> memo;
  return likelihood_with(cand, observations, index_observations(observations), memo);
}

DiagnosisSet score_diagnoses(const std::vector<std::vector<NodeId>>& candidates,
                             const std::vector<Observation>& observations,
                             double prior_fault_prob) {
  if (candidates.empty()) throw DiagnosisError("no candidate diagnoses");
  if (!(prior_fault_prob > 0.0 && prior_fault_prob < 1.0))
    throw InvalidArgument("prior_fault_prob must be in (0,1)");
  const auto idx = index_observations(observations);
  std::map<std::vector<long>, double> memo;
  const double log_ratio = std::log(prior_fault_prob) - std::log1p(-prior_fault_prob);

  DiagnosisSet out;
  out.reserve(candidates.size());
  std::vector<double> log_w;
  for (const auto& cand : candidates) {
    if (cand.empty()) throw InvalidArgument("empty candidate diagnosis");
    std::vector<NodeId> sorted = cand;
    std::sort(sorted.begin(), sorted.end());
    const double l = likelihood_with(sorted, observations, idx, memo);
    log_w.push_back(l > 0.0 ? std::log(l) + static_cast<double>(sorted.size()) * log_ratio
                            : -INFINITY);
    out.push_back({std::move(sorted), 0.0});
  }
  const double top = *std::max_element(log_w.begin(), log_w.end());
  if (!std::isfinite(top)) throw DiagnosisError("no consistent diagnosis: all likelihoods are zero");
  double total = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i].score = std::exp(log_w[i] - top);
    total += out[i].score;
  }
  for (auto& d : out) d.score /= total;
  std::stable_sort(out.begin(), out.end(), [](const Diagnosis& a, const Diagnosis& b) {
    if (a.score != b.score) return a.score > b.score;
    return canonical_less(a.components, b.components);
  });
  return out;
}

DiagnosisSet diagnose(const std::vector<Observation>& observations, int max_cardinality,
                      double prior_fault_prob) {
  std::vector<std::vector<NodeId>> failed;
  for (const auto& o : observations)
    if (o.outcome == Outcome::Failed) failed.push_back(o.trace);
  if (failed.empty()) throw DiagnosisError("no failed observation to diagnose");
  return score_diagnoses(minimal_hitting_sets(failed, max_cardinality), observations,
                         prior_fault_prob);
}

double HealthStateMap::total() const noexcept {
  double s = 0.0;
  for (const auto& [_, h] : values_) s += h;
  return s;
}

HealthStateMap health_states(const DiagnosisSet& diagnoses) {
  std::map<NodeId, double> h;
  for (const auto& d : diagnoses)
    for (NodeId c : d.components) h[c] += d.score;
  return HealthStateMap(std::move(h));
}

std::string diagnosis_report_json(const DiagnosisSet& diagnoses, const HealthStateMap& health) {
  nlohmann::ordered_json j;
  auto& ds = j["diagnoses"] = nlohmann::ordered_json::array();
  for (const auto& d : diagnoses) ds.push_back({{"components", d.components}, {"score", d.score}});
  auto& hs = j["health"] = nlohmann::ordered_json::object();
  for (const auto& [c, h] : health.nonzero()) hs[std::to_string(c)] = h;
  return j.dump(1) + "\n";
}

}  // namespace tracepred
