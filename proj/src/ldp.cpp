#include "tracepred/ldp.hpp"

#include <algorithm>
#include <set>

#include <json.hpp>

namespace tracepred {

void validate(const LdpConfig& cfg) {
  if (!(cfg.score_threshold > 0.0 && cfg.score_threshold < 1.0))
    throw InvalidArgument("score threshold S must be in (0,1)");
  if (cfg.test_budget < 0) throw InvalidArgument("test budget must be >= 0");
  if (cfg.initial_tests < 1) throw InvalidArgument("initial_tests must be >= 1");
  if (cfg.max_diag_cardinality < 1) throw InvalidArgument("max_diag_cardinality must be >= 1");
  if (cfg.retrain_every < 0) throw InvalidArgument("retrain_every must be >= 0");
  if (cfg.top_k < 1) throw InvalidArgument("top_k must be >= 1");
}

const char* to_string(Terminal t) noexcept {
  return t == Terminal::Converged ? "CONVERGED" : "TIMED_OUT";
}

Outcome outcome_oracle(NodeId test, const TraceTable& traces, const FaultSet& fault) {
  const auto& tr = traces.trace(test);
  for (NodeId c : fault)
    if (std::binary_search(tr.begin(), tr.end(), c)) return Outcome::Failed;
  return Outcome::Passed;
}

std::vector<NodeId> select_initial_tests(const TraceTable& traces, const FaultSet& fault, int k,
                                         std::uint64_t seed) {
  if (k < 1) throw InvalidArgument("initial test count must be >= 1");
  std::vector<NodeId> all;
  bool any_fails = false;
  for (const auto& [t, _] : traces.all()) {
    all.push_back(t);
    any_fails |= outcome_oracle(t, traces, fault) == Outcome::Failed;
  }
  if (static_cast<std::size_t>(k) > all.size())
    throw InvalidArgument("cannot select " + std::to_string(k) + " initial tests from " +
                          std::to_string(all.size()));
  if (!any_fails) throw InvalidArgument("fault is not covered by any test");

  Rng rng(derive_seed(seed, "initial"));
  for (;;) {
    std::vector<NodeId> pool = all;
    for (int i = 0; i < k; ++i) {
      std::size_t j = static_cast<std::size_t>(i) +
                      static_cast<std::size_t>(rng.below(pool.size() - static_cast<std::size_t>(i)));
      std::swap(pool[static_cast<std::size_t>(i)], pool[j]);
    }
    pool.resize(static_cast<std::size_t>(k));
    std::sort(pool.begin(), pool.end());
    for (NodeId t : pool)
      if (outcome_oracle(t, traces, fault) == Outcome::Failed) return pool;
  }
}

namespace {

using ordered_json = nlohmann::ordered_json;

void emit(const EventSink& log, ordered_json j) {
  if (log) log(j.dump());
}

Observation observe(NodeId t, const TraceTable& traces, const FaultSet& fault) {
  return {t, traces.trace(t), outcome_oracle(t, traces, fault)};
}

}  // namespace

EpisodeRecord run_episode(const Project& project, const TraceTable& traces, const FaultSet& fault,
                          Strategy planner, ConfidenceCache* confidences, const LdpConfig& cfg,
                          std::uint64_t seed, const EventSink& log,
                          const OnlineTraining* online) {
  validate(cfg);
  if (planner == Strategy::Predicted && !confidences)
    throw InvalidArgument("PREDICTED planner requires a trace classifier");
  if (online && cfg.retrain_every > 0 && (!online->base || !confidences))
    throw InvalidArgument("online retraining needs a base dataset and a classifier");

  EpisodeRecord rec;
  rec.fault = fault;
  rec.planner = planner;
  rec.budget = cfg.test_budget;
  rec.initial_tests = select_initial_tests(traces, fault, cfg.initial_tests, seed);

  std::vector<Observation> obs;
  for (NodeId t : rec.initial_tests) obs.push_back(observe(t, traces, fault));
  {
    ordered_json j{{"event", "INIT"}, {"planner", to_string(planner)}, {"fault", fault},
                   {"tests", rec.initial_tests}};
    auto& outcomes = j["outcomes"] = ordered_json::array();
    for (const auto& o : obs) outcomes.push_back(to_string(o.outcome));
    emit(log, std::move(j));
  }

  std::set<NodeId> left;
  for (const auto& t : project.tests()) left.insert(t.id);
  for (NodeId t : rec.initial_tests) left.erase(t);
  PlannerState state(std::move(left), planner, cfg.top_k, derive_seed(seed, "planner"));
  PlanningContext ctx{&traces, confidences};

  LabeledDataset grown;
  if (online && cfg.retrain_every > 0) grown = *online->base;
  std::vector<NodeId> pending_training(rec.initial_tests);

  for (;;) {
    DiagnosisSet ds;
    try {
      ds = diagnose(obs, cfg.max_diag_cardinality, cfg.prior_fault_prob);
    } catch (const Error& e) {
      throw DiagnosisError("episode (planner " + std::string(to_string(planner)) + ", step " +
                           std::to_string(rec.steps) + "): " + e.what());
    }
    const Diagnosis& top = ds.front();
    rec.trajectory.push_back({top.components, top.score, ds.size()});
    emit(log, {{"event", "DIAGNOSE"}, {"step", rec.steps}, {"top_score", top.score},
               {"top", top.components}, {"diagnoses", ds.size()}});

    if (top.score >= cfg.score_threshold) {
      rec.terminal = Terminal::Converged;
      rec.converged_diagnosis = top;
      rec.correct = top.components == fault;
      emit(log, {{"event", "CONVERGE"}, {"steps", rec.steps}, {"diagnosis", top.components},
                 {"score", top.score}, {"correct", rec.correct}});
      return rec;
    }
    if (rec.steps >= cfg.test_budget || state.remaining.empty()) {
      rec.terminal = Terminal::TimedOut;
      rec.correct = top.components == fault;
      emit(log, {{"event", "TIMEOUT"}, {"steps", rec.steps}});
      return rec;
    }

    const NodeId t = next_test(state, ctx, health_states(ds));
    state.remaining.erase(t);
    obs.push_back(observe(t, traces, fault));
    rec.executed.push_back(t);
    ++rec.steps;
    emit(log, {{"event", "EXECUTE"}, {"step", rec.steps}, {"test", t},
               {"outcome", to_string(obs.back().outcome)}});

    if (online && cfg.retrain_every > 0) {
      pending_training.push_back(t);
      if (rec.steps % cfg.retrain_every == 0) {
        const CallGraph graph(project);
        FeatureExtractor extract(project, graph);
        auto extra = make_instances(project, traces, extract, pending_training,
                                    grown.sampled_functions, Split::Train);
        grown.instances.insert(grown.instances.end(), extra.begin(), extra.end());
        pending_training.clear();
        confidences->reset(train(grown, online->config, confidences->model().columns()));
        emit(log, {{"event", "RETRAIN"}, {"step", rec.steps},
                   {"train_rows", grown.count(Split::Train)}});
      }
    }
  }
}

EpisodeRecord truncate_episode(const EpisodeRecord& full, int budget) {
  if (budget < 0) throw InvalidArgument("budget must be >= 0");
  EpisodeRecord rec = full;
  rec.budget = budget;
  if (full.terminal == Terminal::Converged && full.steps <= budget) return rec;
  if (full.terminal == Terminal::TimedOut && full.steps < budget) return rec;
  // Cut at `budget` steps: the run stops there before converging.
  const auto cut = static_cast<std::size_t>(std::min(budget, full.steps));
  rec.steps = static_cast<int>(cut);
  rec.terminal = Terminal::TimedOut;
  rec.converged_diagnosis.reset();
  rec.executed.resize(cut);
  rec.trajectory.resize(cut + 1);
  rec.correct = rec.trajectory.back().top_components == full.fault;
  return rec;
}

std::uint64_t episode_seed(std::uint64_t seed, std::size_t fault_id) {
  return derive_seed(seed, "episode", fault_id);
}

int ExperimentReport::converged(Strategy planner, int budget) const {
  int n = 0;
  for (const auto& r : rows)
    if (r.planner == planner && r.budget == budget && r.record.terminal == Terminal::Converged) ++n;
  return n;
}

std::vector<int> ExperimentReport::step_curve(Strategy planner, int budget) const {
  std::vector<int> steps;
  for (const auto& r : rows)
    if (r.planner == planner && r.budget == budget && r.record.terminal == Terminal::Converged)
      steps.push_back(r.record.steps);
  std::sort(steps.begin(), steps.end());
  return steps;
}

ExperimentReport run_experiment(const Project& project, const TraceTable& traces,
                                const std::vector<FaultSet>& faults,
                                const std::vector<Strategy>& planners,
                                const std::vector<int>& budgets,
                                const TraceClassifier* classifier, const LdpConfig& cfg,
                                std::uint64_t seed, const EventSink& log) {
  if (faults.empty() || planners.empty() || budgets.empty())
    throw InvalidArgument("run_experiment needs faults, planners and budgets");
  for (int b : budgets)
    if (b < 0) throw InvalidArgument("budgets must be >= 0");
  const int max_budget = *std::max_element(budgets.begin(), budgets.end());

  std::optional<ConfidenceCache> shared;
  if (classifier) shared.emplace(project, *classifier);

  ExperimentReport report;
  report.planners = planners;
  report.budgets = budgets;
  report.fault_count = faults.size();
  for (std::size_t f = 0; f < faults.size(); ++f) {
    for (Strategy p : planners) {
      if (p == Strategy::Predicted && !classifier)
        throw InvalidArgument("PREDICTED planner requires a trace classifier");
      LdpConfig c = cfg;
      c.test_budget = max_budget;
      EventSink tagged;
      if (log)
        tagged = [&log, f](const std::string& line) {
          log("{\"fault_id\":" + std::to_string(f) + "," + line.substr(1));
        };
      ConfidenceCache* conf = shared ? &*shared : nullptr;
      const auto full = run_episode(project, traces, faults[f], p, conf, c, episode_seed(seed, f),
                                    tagged);
      for (int b : budgets) report.rows.push_back({p, b, f, truncate_episode(full, b)});
    }
  }
  return report;
}

std::string experiment_csv(const ExperimentReport& report) {
  std::string out = "planner,budget,fault_id,steps,terminal,correct\n";
  for (const auto& r : report.rows) {
    out += to_string(r.planner);
    out += ',' + std::to_string(r.budget) + ',' + std::to_string(r.fault_id) + ',' +
           std::to_string(r.record.steps) + ',' + to_string(r.record.terminal) + ',' +
           (r.record.correct ? "true" : "false") + '\n';
  }
  return out;
}

std::string convergence_csv(const ExperimentReport& report) {
  std::string out = "planner,budget,converged,total\n";
  for (Strategy p : report.planners)
    for (int b : report.budgets)
      out += std::string(to_string(p)) + ',' + std::to_string(b) + ',' +
             std::to_string(report.converged(p, b)) + ',' + std::to_string(report.fault_count) +
             '\n';
  return out;
}

std::string step_curves_csv(const ExperimentReport& report) {
  std::string out = "planner,budget,rank,steps\n";
  for (Strategy p : report.planners)
    for (int b : report.budgets) {
      const auto curve = report.step_curve(p, b);
      for (std::size_t i = 0; i < curve.size(); ++i)
        out += std::string(to_string(p)) + ',' + std::to_string(b) + ',' + std::to_string(i + 1) +
               ',' + std::to_string(curve[i]) + '\n';
    }
  return out;
}

}  // namespace tracepred
