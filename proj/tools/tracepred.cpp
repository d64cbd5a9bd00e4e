// tracepred command line: corpus generation, training, evaluation,
// diagnosis and troubleshooting simulation.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "tracepred/classifier.hpp"
#include "tracepred/diagnosis.hpp"
#include "tracepred/error.hpp"
#include "tracepred/features.hpp"
#include "tracepred/ldp.hpp"
#include "tracepred/metrics.hpp"
#include "tracepred/planner.hpp"
#include "tracepred/project.hpp"
#include "tracepred/rng.hpp"
#include "tracepred/synthesis.hpp"
#include "tracepred/version.hpp"

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;
using namespace tracepred;

namespace {

// Everything a subcommand may need, with defaults < config file < flags.
struct Settings {
  std::uint64_t seed = 1;
  fs::path out_dir = "out";

  GenConfig gen;
  int n_faults = 30;
  int fault_cardinality = 1;

  std::string arch = "nn";
  NetConfig net = NetConfig::nn();
  double sample_fraction = 0.10;
  double split_ratio = 0.50;
  int importance_seeds = 1;

  LdpConfig ldp;
  std::vector<std::string> planners{"predicted", "oracle", "random"};
  std::vector<int> budgets{50, 75, 100, 125, 150};
  int sim_faults = 0;  // 0: every fault in the fault file
};

// Stage seeds, all derived from --seed.
std::uint64_t stage_seed(const Settings& s, const char* stage) {
  return derive_seed(s.seed, stage, 0);
}

template <class T>
void take(const nlohmann::json& obj, const char* key, T& dst) {
  if (obj.contains(key)) dst = obj.at(key).get<T>();
}

void apply_config_file(Settings& s, const fs::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("config " + path.string() + ": " + e.what());
  }
  if (!j.is_object()) throw ParseError("config: top level must be an object");
  try {
    take(j, "seed", s.seed);
    if (j.contains("generator")) {
      auto g = j.at("generator");
      if (!g.contains("seed")) g["seed"] = s.seed;
      s.gen = gen_config_from_json(g.dump());
    }
    if (j.contains("faults")) {
      const auto& f = j.at("faults");
      take(f, "count", s.n_faults);
      take(f, "cardinality", s.fault_cardinality);
    }
    if (j.contains("train")) {
      const auto& t = j.at("train");
      take(t, "arch", s.arch);
      if (s.arch == "dnn") s.net = NetConfig::dnn();
      take(t, "hidden_layers", s.net.hidden_layers);
      take(t, "iterations", s.net.max_iterations);
      take(t, "learning_rate", s.net.learning_rate);
      take(t, "batch_size", s.net.batch_size);
      take(t, "threshold", s.net.classification_threshold);
      if (t.contains("undersample_negatives"))
        s.net.undersample_negatives = t.at("undersample_negatives").get<double>();
      take(t, "sample_fraction", s.sample_fraction);
      take(t, "split_ratio", s.split_ratio);
      take(t, "importance_seeds", s.importance_seeds);
    }
    if (j.contains("simulate")) {
      const auto& m = j.at("simulate");
      take(m, "threshold", s.ldp.score_threshold);
      take(m, "initial_tests", s.ldp.initial_tests);
      take(m, "max_cardinality", s.ldp.max_diag_cardinality);
      take(m, "prior", s.ldp.prior_fault_prob);
      take(m, "top_k", s.ldp.top_k);
      take(m, "planners", s.planners);
      take(m, "budgets", s.budgets);
      take(m, "faults", s.sim_faults);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("config " + path.string() + ": " + e.what());
  }
}

ojson gen_json(const GenConfig& g) { return ojson::parse(gen_config_to_json(g)); }

ojson net_json(const Settings& s) {
  ojson j;
  j["arch"] = s.arch;
  j["hidden_layers"] = s.net.hidden_layers;
  j["activation"] = s.net.activation;
  j["iterations"] = s.net.max_iterations;
  j["learning_rate"] = s.net.learning_rate;
  j["batch_size"] = s.net.batch_size;
  j["threshold"] = s.net.classification_threshold;
  j["undersample_negatives"] =
      s.net.undersample_negatives ? ojson(*s.net.undersample_negatives) : ojson(nullptr);
  j["sample_fraction"] = s.sample_fraction;
  j["split_ratio"] = s.split_ratio;
  return j;
}

ojson ldp_json(const Settings& s) {
  ojson j;
  j["threshold"] = s.ldp.score_threshold;
  j["initial_tests"] = s.ldp.initial_tests;
  j["max_cardinality"] = s.ldp.max_diag_cardinality;
  j["prior"] = s.ldp.prior_fault_prob;
  j["top_k"] = s.ldp.top_k;
  j["planners"] = s.planners;
  j["budgets"] = s.budgets;
  j["faults"] = s.sim_faults;
  return j;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

class Manifest {
 public:
  Manifest(std::string subcommand, const Settings& s) {
    j_["subcommand"] = std::move(subcommand);
    j_["tool_version"] = kVersion;
    j_["seed"] = s.seed;
    j_["out_dir"] = s.out_dir.generic_string();
    j_["config"] = ojson::object();
    j_["inputs"] = ojson::object();
    j_["outputs"] = ojson::array();
  }
  void config(const char* key, ojson value) { j_["config"][key] = std::move(value); }
  void input(const char* key, const fs::path& p) { j_["inputs"][key] = p.generic_string(); }
  void output(const fs::path& p) { j_["outputs"].push_back(p.filename().generic_string()); }

  // Outputs must all be declared before the first call. Locations are left out
  // so the same run in two directories hashes the same.
  std::string hash() const {
    ojson h = j_;
    h.erase("out_dir");
    for (auto& [k, v] : h["inputs"].items())
      v = fs::path(v.get<std::string>()).filename().generic_string();
    return hex64(hash_tag(h.dump()));
  }

  void save(const fs::path& dir) const {
    ojson out = j_;
    out["hash"] = hash();
    write_file(dir / (j_["subcommand"].get<std::string>() + ".manifest.json"),
               out.dump(1) + "\n");
  }

 private:
  ojson j_;
};

std::string with_hash(const std::string& json_text, const std::string& hash) {
  auto j = ojson::parse(json_text);
  j["manifest_hash"] = hash;
  return j.dump(1) + "\n";
}

std::string csv_with_hash(const std::string& csv, const std::string& hash) {
  return "# manifest " + hash + "\n" + csv;
}

struct Corpus {
  Project project;
  TraceTable traces;
};

Corpus load_corpus(const fs::path& corpus, const fs::path& traces) {
  Corpus c;
  c.project = load_project(corpus);
  c.traces = load_traces(traces, c.project);
  return c;
}

LabeledDataset dataset_for(const Settings& s, const Corpus& c) {
  return build_dataset(c.project, c.traces, s.sample_fraction, s.split_ratio,
                       stage_seed(s, "dataset"));
}

NetConfig net_for(const Settings& s) {
  NetConfig cfg = s.net;
  cfg.seed = stage_seed(s, "train");
  validate(cfg);
  return cfg;
}

// ---- subcommands ---------------------------------------------------------

int cmd_generate(const Settings& s) {
  GenConfig g = s.gen;
  validate(g);
  Manifest m("generate", s);
  m.config("generator", gen_json(g));
  m.config("faults", ojson{{"count", s.n_faults}, {"cardinality", s.fault_cardinality}});
  const auto corpus_path = s.out_dir / "corpus.json";
  const auto traces_path = s.out_dir / "traces.json";
  const auto faults_path = s.out_dir / "faults.json";
  const auto config_path = s.out_dir / "generator.json";
  for (const auto& p : {corpus_path, traces_path, faults_path, config_path}) m.output(p);
  const auto h = m.hash();

  const Project project = generate_project(g);
  const TraceTable traces = generate_traces(project, g);
  const auto faults = inject_faults(project, traces, s.fault_cardinality, s.n_faults,
                                    stage_seed(s, "faults"));

  write_file(corpus_path, with_hash(dump_project(project), h));
  write_file(traces_path, with_hash(dump_traces(traces), h));
  write_file(faults_path, with_hash(dump_faults(faults), h));
  write_file(config_path, with_hash(gen_config_to_json(g), h));
  m.save(s.out_dir);

  std::printf("tests %zu\nfunctions %zu\nstatic_edges %zu\ndynamic_edges %zu\n",
              project.tests().size(), project.functions().size(),
              project.static_edges().size(), project.dynamic_edges().size());
  std::printf("mean_trace_length %.3f\ncovered_functions %zu\nfaults %zu\n",
              traces.mean_length(), covered_functions(traces).size(), faults.size());
  return 0;
}

struct CorpusPaths {
  fs::path corpus, traces, faults, model;
  void defaults(const fs::path& dir) {
    if (corpus.empty()) corpus = dir / "corpus.json";
    if (traces.empty()) traces = dir / "traces.json";
    if (faults.empty()) faults = dir / "faults.json";
    if (model.empty()) model = dir / "model.json";
  }
};

int cmd_train(const Settings& s, const CorpusPaths& in, bool importance) {
  Manifest m("train", s);
  m.config("train", net_json(s));
  m.input("corpus", in.corpus);
  m.input("traces", in.traces);
  const auto model_path = s.out_dir / "model.json";
  const auto metrics_path = s.out_dir / "metrics.json";
  const auto importance_path = s.out_dir / "importance.json";
  m.output(model_path);
  m.output(metrics_path);
  if (importance) m.output(importance_path);
  const auto h = m.hash();

  const auto corpus = load_corpus(in.corpus, in.traces);
  const auto ds = dataset_for(s, corpus);
  const auto cfg = net_for(s);
  TrainingReport rep;
  const auto model = train(ds, cfg, {}, &rep);
  const auto metrics = evaluate(model, ds, s.arch == "dnn" ? "DNN" : "NN",
                                corpus.project.name());

  write_file(model_path, with_hash(model_to_json(model), h));
  write_file(metrics_path, with_hash(metrics_to_json(metrics), h));
  if (importance) {
    const auto fi = feature_importance(ds, cfg, s.importance_seeds);
    write_file(importance_path, with_hash(importance_to_json(fi), h));
  }
  m.save(s.out_dir);
  std::printf("train_rows %zu\npositives %zu\nfinal_loss %.6f\nauc %.4f\nacc %.4f\n",
              rep.train_rows, rep.positives,
              rep.loss_history.empty() ? 0.0 : rep.loss_history.back(), metrics.auc,
              metrics.acc);
  return 0;
}

int cmd_eval(const Settings& s, const CorpusPaths& in) {
  Manifest m("eval", s);
  m.config("train", net_json(s));
  m.input("corpus", in.corpus);
  m.input("traces", in.traces);
  m.input("model", in.model);
  const auto metrics_path = s.out_dir / "metrics.json";
  m.output(metrics_path);
  const auto h = m.hash();

  const auto corpus = load_corpus(in.corpus, in.traces);
  const auto model = load_model(in.model);
  const auto ds = dataset_for(s, corpus);
  const bool deep = model.config().hidden_layers.size() > 1;
  const auto metrics = evaluate(model, ds, deep ? "DNN" : "NN", corpus.project.name());
  write_file(metrics_path, with_hash(metrics_to_json(metrics), h));
  m.save(s.out_dir);
  std::printf("auc %.4f\nacc %.4f\n", metrics.auc, metrics.acc);
  return 0;
}

int cmd_importance(const Settings& s, const CorpusPaths& in) {
  Manifest m("importance", s);
  m.config("train", net_json(s));
  m.config("importance_seeds", s.importance_seeds);
  m.input("corpus", in.corpus);
  m.input("traces", in.traces);
  const auto path = s.out_dir / "importance.json";
  m.output(path);
  const auto h = m.hash();

  const auto corpus = load_corpus(in.corpus, in.traces);
  const auto ds = dataset_for(s, corpus);
  const auto fi = feature_importance(ds, net_for(s), s.importance_seeds);
  write_file(path, with_hash(importance_to_json(fi), h));
  m.save(s.out_dir);
  std::printf("auc_all %.4f\n", fi.auc_all);
  for (const auto& [name, d] : fi.delta_auc) std::printf("%-22s %+.4f\n", name.c_str(), d);
  return 0;
}

std::vector<Observation> parse_observations(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  std::vector<Observation> out;
  for (const auto& o : j.at("observations")) {
    Observation ob;
    ob.test = o.at("test").get<NodeId>();
    ob.trace = o.at("trace").get<std::vector<NodeId>>();
    std::sort(ob.trace.begin(), ob.trace.end());
    const auto outcome = o.at("outcome").get<std::string>();
    if (outcome == "FAIL" || outcome == "failed")
      ob.outcome = Outcome::Failed;
    else if (outcome == "PASS" || outcome == "passed")
      ob.outcome = Outcome::Passed;
    else
      throw ParseError("observation outcome must be PASS or FAIL, got " + outcome);
    out.push_back(std::move(ob));
  }
  return out;
}

int cmd_diagnose(const Settings& s, const CorpusPaths& in, const fs::path& observations,
                 int fault_index, const std::vector<NodeId>& tests) {
  Manifest m("diagnose", s);
  m.config("max_cardinality", s.ldp.max_diag_cardinality);
  m.config("prior", s.ldp.prior_fault_prob);
  std::vector<Observation> obs;
  if (!observations.empty()) {
    m.input("observations", observations);
  } else {
    m.input("corpus", in.corpus);
    m.input("traces", in.traces);
    m.input("faults", in.faults);
    m.config("fault_index", fault_index);
    m.config("tests", tests);
  }
  const auto path = s.out_dir / "diagnosis.json";
  m.output(path);
  const auto h = m.hash();

  if (!observations.empty()) {
    try {
      obs = parse_observations(read_file(observations));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError("observations: " + std::string(e.what()));
    }
  } else {
    const auto corpus = load_corpus(in.corpus, in.traces);
    const auto faults = load_faults(in.faults, corpus.project);
    if (fault_index < 0 || fault_index >= static_cast<int>(faults.size()))
      throw InvalidArgument("--fault-index out of range (faults: " +
                            std::to_string(faults.size()) + ")");
    const auto& fault = faults[static_cast<std::size_t>(fault_index)];
    const auto ids = tests.empty() ? corpus.project.test_ids() : tests;
    for (NodeId t : ids)
      obs.push_back({t, corpus.traces.trace(t), outcome_oracle(t, corpus.traces, fault)});
  }
  const auto diags = diagnose(obs, s.ldp.max_diag_cardinality, s.ldp.prior_fault_prob);
  const auto health = health_states(diags);
  write_file(path, with_hash(diagnosis_report_json(diags, health), h));
  m.save(s.out_dir);
  std::printf("observations %zu\ndiagnoses %zu\n", obs.size(), diags.size());
  for (std::size_t i = 0; i < std::min<std::size_t>(diags.size(), 5); ++i) {
    std::printf("  %.4f {", diags[i].score);
    for (std::size_t k = 0; k < diags[i].components.size(); ++k)
      std::printf(k ? ", %lld" : "%lld", static_cast<long long>(diags[i].components[k]));
    std::printf("}\n");
  }
  return 0;
}

int cmd_simulate(const Settings& s, const CorpusPaths& in) {
  std::vector<Strategy> planners;
  for (const auto& p : s.planners) planners.push_back(strategy_from_string(p));
  if (planners.empty()) throw InvalidArgument("--planners is empty");
  if (s.budgets.empty()) throw InvalidArgument("--budgets is empty");
  for (int b : s.budgets)
    if (b < 0) throw InvalidArgument("budgets must be non-negative");
  const bool predicted =
      std::find(planners.begin(), planners.end(), Strategy::Predicted) != planners.end();
  if (predicted && !fs::exists(in.model))
    throw InvalidArgument("planner 'predicted' needs a model file, " +
                          in.model.string() + " does not exist (run train or pass --model)");

  Manifest m("simulate", s);
  m.config("simulate", ldp_json(s));
  m.input("corpus", in.corpus);
  m.input("traces", in.traces);
  m.input("faults", in.faults);
  if (predicted) m.input("model", in.model);
  const auto experiment_path = s.out_dir / "experiment.csv";
  const auto convergence_path = s.out_dir / "convergence.csv";
  const auto curves_path = s.out_dir / "step_curves.csv";
  const auto log_path = s.out_dir / "episodes.jsonl";
  for (const auto& p : {experiment_path, convergence_path, curves_path, log_path}) m.output(p);
  const auto h = m.hash();

  const auto corpus = load_corpus(in.corpus, in.traces);
  auto faults = load_faults(in.faults, corpus.project);
  if (s.sim_faults > 0) {
    if (static_cast<std::size_t>(s.sim_faults) > faults.size())
      throw InvalidArgument("--faults " + std::to_string(s.sim_faults) + " but the fault file has " +
                            std::to_string(faults.size()));
    faults.resize(static_cast<std::size_t>(s.sim_faults));
  }
  std::optional<TraceClassifier> model;
  if (predicted) model = load_model(in.model);
  validate(s.ldp);

  std::string events;
  const auto report = run_experiment(
      corpus.project, corpus.traces, faults, planners, s.budgets, model ? &*model : nullptr,
      s.ldp, stage_seed(s, "simulate"), [&events](const std::string& line) {
        events += line;
        events += '\n';
      });

  write_file(experiment_path, csv_with_hash(experiment_csv(report), h));
  write_file(convergence_path, csv_with_hash(convergence_csv(report), h));
  write_file(curves_path, csv_with_hash(step_curves_csv(report), h));
  write_file(log_path, "{\"event\":\"MANIFEST\",\"hash\":\"" + h + "\"}\n" + events);
  m.save(s.out_dir);

  std::printf("%-10s", "budget");
  for (int b : report.budgets) std::printf(" %5d", b);
  std::printf("\n");
  for (Strategy p : report.planners) {
    std::printf("%-10s", to_string(p));
    for (int b : report.budgets) std::printf(" %5d", report.converged(p, b));
    std::printf("\n");
  }
  std::printf("faults %zu\n", report.fault_count);
  return 0;
}

// Strips the manifest comment and splits a CSV body into rows.
std::vector<std::vector<std::string>> read_csv(const fs::path& path) {
  std::istringstream in(read_file(path));
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    rows.push_back(std::move(cells));
  }
  return rows;
}

int cmd_report(const Settings& s) {
  Manifest m("report", s);
  const auto metrics_path = s.out_dir / "metrics.json";
  const auto importance_path = s.out_dir / "importance.json";
  const auto convergence_path = s.out_dir / "convergence.csv";
  const auto experiment_path = s.out_dir / "experiment.csv";
  std::vector<fs::path> found;
  for (const auto& p : {metrics_path, importance_path, convergence_path, experiment_path})
    if (fs::exists(p)) {
      found.push_back(p);
      m.input(p.filename().string().c_str(), p);
    }
  if (found.empty())
    throw InvalidArgument("nothing to report in " + s.out_dir.string() +
                          " (run train and/or simulate first)");
  const auto path = s.out_dir / "report.txt";
  m.output(path);
  // Inputs are hashed by content so the report tracks what it summarizes.
  std::string contents;
  for (const auto& p : found) contents += read_file(p);
  m.config("inputs_digest", hex64(hash_tag(contents)));
  const auto h = m.hash();

  std::ostringstream out;
  out << "manifest " << h << "\n";
  char buf[256];
  if (fs::exists(metrics_path)) {
    const auto j = nlohmann::json::parse(read_file(metrics_path));
    out << "\nPrediction results\n";
    std::snprintf(buf, sizeof buf, "%-10s %-14s %7s %7s %7s %7s %7s %7s\n", "algorithm",
                  "project", "auc", "acc", "tn", "fp", "fn", "tp");
    out << buf;
    std::snprintf(buf, sizeof buf, "%-10s %-14s %7.3f %7.3f %7.3f %7.3f %7.3f %7.3f\n",
                  j.at("algorithm").get<std::string>().c_str(),
                  j.at("project").get<std::string>().c_str(), j.at("auc").get<double>(),
                  j.at("acc").get<double>(), j.at("tn").get<double>(), j.at("fp").get<double>(),
                  j.at("fn").get<double>(), j.at("tp").get<double>());
    out << buf;
  }
  if (fs::exists(importance_path)) {
    const auto j = ojson::parse(read_file(importance_path));
    out << "\nFeature importance (AUC drop when the feature is removed)\n";
    std::snprintf(buf, sizeof buf, "%-24s %.4f\n", "all features", j.at("auc_all").get<double>());
    out << buf;
    for (const auto& [feature, delta] : j.at("delta_auc").items()) {
      std::snprintf(buf, sizeof buf, "%-24s %+.4f\n", feature.c_str(), delta.get<double>());
      out << buf;
    }
  }
  if (fs::exists(convergence_path)) {
    // planner,budget,converged,total
    std::map<std::string, std::map<int, std::string>> table;
    std::vector<int> budgets;
    std::string total;
    const auto rows = read_csv(convergence_path);
    for (std::size_t i = 1; i < rows.size(); ++i) {
      const auto& r = rows[i];
      if (r.size() < 4) continue;
      const int b = std::stoi(r[1]);
      table[r[0]][b] = r[2];
      if (std::find(budgets.begin(), budgets.end(), b) == budgets.end()) budgets.push_back(b);
      total = r[3];
    }
    std::sort(budgets.begin(), budgets.end());
    out << "\nConverged episodes per budget (of " << total << " faults)\n";
    std::snprintf(buf, sizeof buf, "%-10s", "planner");
    out << buf;
    for (int b : budgets) {
      std::snprintf(buf, sizeof buf, " %6d", b);
      out << buf;
    }
    out << "\n";
    for (const auto& [planner, cells] : table) {
      std::snprintf(buf, sizeof buf, "%-10s", planner.c_str());
      out << buf;
      for (int b : budgets) {
        auto it = cells.find(b);
        std::snprintf(buf, sizeof buf, " %6s", it == cells.end() ? "-" : it->second.c_str());
        out << buf;
      }
      out << "\n";
    }
  }
  if (fs::exists(experiment_path)) {
    // planner,budget,fault_id,steps,terminal,correct at the largest budget
    const auto rows = read_csv(experiment_path);
    int max_budget = -1;
    for (std::size_t i = 1; i < rows.size(); ++i)
      if (rows[i].size() >= 6) max_budget = std::max(max_budget, std::stoi(rows[i][1]));
    std::map<std::string, std::pair<double, int>> steps;
    std::map<std::string, int> correct;
    for (std::size_t i = 1; i < rows.size(); ++i) {
      const auto& r = rows[i];
      if (r.size() < 6 || std::stoi(r[1]) != max_budget || r[4] != "CONVERGED") continue;
      steps[r[0]].first += std::stod(r[3]);
      steps[r[0]].second += 1;
      if (r[5] == "true") correct[r[0]] += 1;
    }
    out << "\nAt budget " << max_budget << "\n";
    for (const auto& [planner, acc] : steps) {
      std::snprintf(buf, sizeof buf, "%-10s converged %3d  mean steps %7.2f  correct %3d\n",
                    planner.c_str(), acc.second, acc.first / acc.second, correct[planner]);
      out << buf;
    }
  }
  write_file(path, out.str());
  m.save(s.out_dir);
  std::cout << out.str();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tracepred: trace prediction and learn-diagnose-plan troubleshooting"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);
  app.fallthrough();

  Settings s;
  std::uint64_t seed = 1;
  std::string out_dir = "out";
  std::string config_path;
  app.add_option("--seed", seed, "base seed; every stage derives its own stream from it");
  app.add_option("--out-dir", out_dir, "directory for inputs and outputs")
      ->capture_default_str();
  app.add_option("--config", config_path, "JSON file with generator/faults/train/simulate sections")
      ->check(CLI::ExistingFile);

  // generator flags
  auto* gen = app.add_subcommand("generate", "synthesize a corpus, its traces and faults");
  std::optional<int> classes, tpc, mlo, mhi, n_faults, card;
  std::optional<double> dyn_frac, naming, pbranch, pdyn;
  std::optional<std::string> name;
  gen->add_option("--classes", classes, "number of classes")->check(CLI::PositiveNumber);
  gen->add_option("--methods-min", mlo, "fewest methods per class")->check(CLI::PositiveNumber);
  gen->add_option("--methods-max", mhi, "most methods per class")->check(CLI::PositiveNumber);
  gen->add_option("--tests-per-class", tpc, "tests per class")->check(CLI::NonNegativeNumber);
  gen->add_option("--dynamic-fraction", dyn_frac, "share of edges that are dynamic")
      ->check(CLI::Range(0.0, 1.0));
  gen->add_option("--naming-correlation", naming, "q, test/class name sharing probability")
      ->check(CLI::Range(0.0, 1.0));
  gen->add_option("--branch-prob", pbranch, "probability a static edge is taken")
      ->check(CLI::Range(0.0, 1.0));
  gen->add_option("--dynamic-prob", pdyn, "probability a dynamic edge is taken")
      ->check(CLI::Range(0.0, 1.0));
  gen->add_option("--faults", n_faults, "fault sets to inject")->check(CLI::PositiveNumber);
  gen->add_option("--fault-cardinality", card, "functions per fault set")
      ->check(CLI::PositiveNumber);
  gen->add_option("--name", name, "project name");

  CorpusPaths paths;
  std::string corpus_s, traces_s, faults_s, model_s;
  auto add_inputs = [&](CLI::App* sub, bool faults, bool model) {
    sub->add_option("--corpus", corpus_s, "corpus file (default <out-dir>/corpus.json)");
    sub->add_option("--traces", traces_s, "trace file (default <out-dir>/traces.json)");
    if (faults) sub->add_option("--fault-file", faults_s, "fault file (default <out-dir>/faults.json)");
    if (model) sub->add_option("--model", model_s, "model file (default <out-dir>/model.json)");
  };

  std::optional<std::string> arch;
  std::optional<double> sample_fraction, split;
  std::optional<int> iterations, imp_seeds;
  bool importance = false;
  auto add_train = [&](CLI::App* sub) {
    sub->add_option("--arch", arch, "nn (one hidden layer of 30) or dnn (5 x 30)")
        ->check(CLI::IsMember({"nn", "dnn"}));
    sub->add_option("--sample-fraction", sample_fraction, "share of functions sampled")
        ->check(CLI::Range(0.0, 1.0));
    sub->add_option("--split", split, "TRAIN share of the instances")->check(CLI::Range(0.0, 1.0));
    sub->add_option("--iterations", iterations, "training epochs")->check(CLI::PositiveNumber);
    sub->add_option("--importance-seeds", imp_seeds, "seeds averaged by the importance analysis")
        ->check(CLI::PositiveNumber);
  };

  auto* tr = app.add_subcommand("train", "train the trace classifier and report held-out metrics");
  add_inputs(tr, false, false);
  add_train(tr);
  tr->add_flag("--importance", importance, "also run the all-but-one feature analysis");

  auto* ev = app.add_subcommand("eval", "evaluate a saved model on the held-out partition");
  add_inputs(ev, false, true);
  add_train(ev);

  auto* imp = app.add_subcommand("importance", "all-but-one feature importance");
  add_inputs(imp, false, false);
  add_train(imp);

  auto* dg = app.add_subcommand("diagnose", "diagnose from test observations");
  add_inputs(dg, true, false);
  std::string observations;
  int fault_index = 0;
  std::vector<NodeId> diag_tests;
  std::optional<int> max_card;
  std::optional<double> prior;
  dg->add_option("--observations", observations,
                 "JSON {observations:[{test, trace, outcome}]}; otherwise outcomes are "
                 "simulated from the fault file")
      ->check(CLI::ExistingFile);
  dg->add_option("--fault-index", fault_index, "fault set used to simulate outcomes")
      ->capture_default_str();
  dg->add_option("--tests", diag_tests, "tests to observe (default: all)")->delimiter(',');
  dg->add_option("--max-cardinality", max_card, "largest diagnosis considered")
      ->check(CLI::PositiveNumber);
  dg->add_option("--prior", prior, "prior fault probability")->check(CLI::Range(0.0, 1.0));

  auto* sim = app.add_subcommand("simulate", "run troubleshooting episodes for every planner");
  add_inputs(sim, true, true);
  std::optional<std::vector<std::string>> planners;
  std::optional<std::vector<int>> budgets;
  std::optional<int> sim_faults, initial;
  std::optional<double> threshold;
  sim->add_option("--planners", planners, "comma separated: predicted,oracle,random")
      ->delimiter(',');
  sim->add_option("--budgets", budgets, "comma separated test budgets")->delimiter(',');
  sim->add_option("--faults", sim_faults, "use the first N faults of the fault file")
      ->check(CLI::PositiveNumber);
  sim->add_option("--threshold", threshold, "diagnosis score needed to stop")
      ->check(CLI::Range(0.0, 1.0));
  sim->add_option("--initial-tests", initial, "tests run before planning")
      ->check(CLI::PositiveNumber);
  sim->add_option("--max-cardinality", max_card, "largest diagnosis considered")
      ->check(CLI::PositiveNumber);

  auto* rp = app.add_subcommand("report", "summarize metrics and experiment outputs as text tables");

  CLI11_PARSE(app, argc, argv);

  try {
    if (!config_path.empty()) apply_config_file(s, config_path);
    if (app.count("--seed")) s.seed = seed;
    s.out_dir = out_dir;
    // The corpus seed follows --seed unless the config pins it.
    if (app.count("--seed") || config_path.empty()) s.gen.seed = s.seed;

    if (classes) s.gen.n_classes = *classes;
    if (mlo) s.gen.methods_per_class.lo = *mlo;
    if (mhi) s.gen.methods_per_class.hi = *mhi;
    if (tpc) s.gen.tests_per_class = *tpc;
    if (dyn_frac) s.gen.dynamic_edge_fraction = *dyn_frac;
    if (naming) s.gen.naming_correlation = *naming;
    if (pbranch) s.gen.branch_prob = *pbranch;
    if (pdyn) s.gen.dynamic_prob = *pdyn;
    if (name) s.gen.name = *name;
    if (n_faults) s.n_faults = *n_faults;
    if (card) s.fault_cardinality = *card;

    if (arch) {
      const auto keep_iter = s.net.max_iterations;
      s.arch = *arch;
      s.net = s.arch == "dnn" ? NetConfig::dnn() : NetConfig::nn();
      s.net.max_iterations = keep_iter;
    }
    if (sample_fraction) s.sample_fraction = *sample_fraction;
    if (split) s.split_ratio = *split;
    if (iterations) s.net.max_iterations = *iterations;
    if (imp_seeds) s.importance_seeds = *imp_seeds;

    if (planners) s.planners = *planners;
    if (budgets) s.budgets = *budgets;
    if (sim_faults) s.sim_faults = *sim_faults;
    if (threshold) s.ldp.score_threshold = *threshold;
    if (initial) s.ldp.initial_tests = *initial;
    if (max_card) s.ldp.max_diag_cardinality = *max_card;
    if (prior) s.ldp.prior_fault_prob = *prior;

    paths.corpus = corpus_s;
    paths.traces = traces_s;
    paths.faults = faults_s;
    paths.model = model_s;
    paths.defaults(s.out_dir);

    fs::create_directories(s.out_dir);
    if (*gen) return cmd_generate(s);
    if (*tr) return cmd_train(s, paths, importance);
    if (*ev) return cmd_eval(s, paths);
    if (*imp) return cmd_importance(s, paths);
    if (*dg) return cmd_diagnose(s, paths, observations, fault_index, diag_tests);
    if (*sim) return cmd_simulate(s, paths);
    if (*rp) return cmd_report(s);
  } catch (const std::exception& e) {
    std::cerr << "tracepred: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
