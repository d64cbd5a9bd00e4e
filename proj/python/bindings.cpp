#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "tracepred/classifier.hpp"
#include "tracepred/diagnosis.hpp"
#include "tracepred/error.hpp"
#include "tracepred/features.hpp"
#include "tracepred/ldp.hpp"
#include "tracepred/metrics.hpp"
#include "tracepred/planner.hpp"
#include "tracepred/project.hpp"
#include "tracepred/synthesis.hpp"
#include "tracepred/version.hpp"

namespace py = pybind11;
using namespace tracepred;

namespace {

using Ref = std::tuple<NodeId, std::string, std::string>;
using Pair = std::pair<NodeId, NodeId>;

std::vector<Pair> edges_of(const std::vector<Edge>& edges) {
  std::vector<Pair> out;
  out.reserve(edges.size());
  for (const auto& e : edges) out.emplace_back(e.caller, e.callee);
  return out;
}

std::vector<Edge> to_edges(const std::vector<Pair>& pairs) {
  std::vector<Edge> out;
  for (const auto& [a, b] : pairs) out.push_back({a, b});
  return out;
}

std::vector<Observation> to_observations(
    const std::vector<std::tuple<NodeId, std::vector<NodeId>, bool>>& obs) {
  std::vector<Observation> out;
  for (const auto& [t, trace, failed] : obs) {
    Observation o{t, trace, failed ? Outcome::Failed : Outcome::Passed};
    std::sort(o.trace.begin(), o.trace.end());
    out.push_back(std::move(o));
  }
  return out;
}

py::dict rates_dict(const ConfusionRates& cr) {
  py::dict d;
  d["tn"] = cr.tn;
  d["fp"] = cr.fp;
  d["fn"] = cr.fn;
  d["tp"] = cr.tp;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "tracepred core bindings";
  m.attr("__version__") = kVersion;

  // later registrations are tried first, so the base class goes first
  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);

  py::class_<GenConfig>(m, "GenConfig")
      .def(py::init<>())
      .def_readwrite("name", &GenConfig::name)
      .def_readwrite("n_classes", &GenConfig::n_classes)
      .def_property(
          "methods_per_class",
          [](const GenConfig& g) { return std::pair(g.methods_per_class.lo, g.methods_per_class.hi); },
          [](GenConfig& g, std::pair<int, int> r) { g.methods_per_class = {r.first, r.second}; })
      .def_readwrite("word_pool", &GenConfig::word_pool)
      .def_property(
          "static_out_degree",
          [](const GenConfig& g) { return std::pair(g.static_out_degree.lo, g.static_out_degree.hi); },
          [](GenConfig& g, std::pair<int, int> r) { g.static_out_degree = {r.first, r.second}; })
      .def_readwrite("dynamic_edge_fraction", &GenConfig::dynamic_edge_fraction)
      .def_readwrite("tests_per_class", &GenConfig::tests_per_class)
      .def_readwrite("naming_correlation", &GenConfig::naming_correlation)
      .def_readwrite("branch_prob", &GenConfig::branch_prob)
      .def_readwrite("dynamic_prob", &GenConfig::dynamic_prob)
      .def_readwrite("call_depth", &GenConfig::call_depth)
      .def_readwrite("deps_per_class", &GenConfig::deps_per_class)
      .def_property(
          "entry_calls",
          [](const GenConfig& g) { return std::pair(g.entry_calls.lo, g.entry_calls.hi); },
          [](GenConfig& g, std::pair<int, int> r) { g.entry_calls = {r.first, r.second}; })
      .def_readwrite("seed", &GenConfig::seed)
      .def("validate", [](const GenConfig& g) { validate(g); })
      .def("to_json", &gen_config_to_json)
      .def_static("from_json", &gen_config_from_json);

  py::class_<Project>(m, "Project")
      .def_static(
          "create",
          [](std::string name, const std::vector<Ref>& functions, const std::vector<Ref>& tests,
             const std::vector<Pair>& static_edges, const std::vector<Pair>& dynamic_edges) {
            std::vector<FunctionRef> fns;
            for (const auto& [id, c, mth] : functions) fns.push_back({id, c, mth});
            std::vector<TestRef> ts;
            for (const auto& [id, c, mth] : tests) ts.push_back({id, c, mth});
            return Project::create(std::move(name), fns, ts, to_edges(static_edges),
                                   to_edges(dynamic_edges));
          },
          py::arg("name"), py::arg("functions"), py::arg("tests"), py::arg("static_edges"),
          py::arg("dynamic_edges") = std::vector<Pair>{})
      .def_property_readonly("name", &Project::name)
      .def_property_readonly("functions",
                             [](const Project& p) {
                               std::vector<Ref> out;
                               for (const auto& f : p.functions())
                                 out.emplace_back(f.id, f.class_name, f.method_name);
                               return out;
                             })
      .def_property_readonly("tests",
                             [](const Project& p) {
                               std::vector<Ref> out;
                               for (const auto& t : p.tests())
                                 out.emplace_back(t.id, t.class_name, t.method_name);
                               return out;
                             })
      .def_property_readonly("static_edges", [](const Project& p) { return edges_of(p.static_edges()); })
      .def_property_readonly("dynamic_edges", [](const Project& p) { return edges_of(p.dynamic_edges()); })
      .def("function_ids", &Project::function_ids)
      .def("test_ids", &Project::test_ids)
      .def("to_json", &dump_project)
      .def_static("from_json", &parse_project)
      .def("__repr__", [](const Project& p) {
        return "<Project " + p.name() + ": " + std::to_string(p.functions().size()) +
               " functions, " + std::to_string(p.tests().size()) + " tests>";
      });

  py::class_<TraceTable>(m, "TraceTable")
      .def_static("create", &TraceTable::create, py::arg("project"), py::arg("traces"))
      .def("trace", &TraceTable::trace, py::arg("test"))
      .def("contains", &TraceTable::contains, py::arg("test"), py::arg("function"))
      .def("as_dict", &TraceTable::all)
      .def("mean_length", &TraceTable::mean_length)
      .def("__len__", &TraceTable::size)
      .def("to_json", &dump_traces)
      .def_static("from_json", &parse_traces, py::arg("text"), py::arg("project"));

  m.def("generate_project", &generate_project, py::arg("config"));
  m.def("generate_traces", &generate_traces, py::arg("project"), py::arg("config"));
  m.def("inject_faults", &inject_faults, py::arg("project"), py::arg("traces"),
        py::arg("cardinality") = 1, py::arg("n_faults") = 20, py::arg("seed") = 1);

  m.def("camel_split", [](const std::string& s) { return camel_split(s); });
  m.def("common_words", [](const std::string& a, const std::string& b) { return common_words(a, b); });
  m.def("name_distance", [](const std::string& a, const std::string& b) { return name_distance(a, b); });
  m.def("feature_names", [] {
    const auto& n = feature_names();
    return std::vector<std::string>(n.begin(), n.end());
  });

  py::class_<LabeledDataset>(m, "LabeledDataset")
      .def("__len__", [](const LabeledDataset& d) { return d.instances.size(); })
      .def_property_readonly("train_size", [](const LabeledDataset& d) { return d.count(Split::Train); })
      .def_property_readonly("test_size", [](const LabeledDataset& d) { return d.count(Split::Test); })
      .def_readonly("sampled_functions", &LabeledDataset::sampled_functions)
      .def_property_readonly("positive_rate",
                             [](const LabeledDataset& d) {
                               double pos = 0;
                               for (const auto& i : d.instances) pos += i.label;
                               return d.instances.empty() ? 0.0 : pos / d.instances.size();
                             })
      .def("to_csv", [](const LabeledDataset& d) { return dataset_to_csv(d); });

  m.def("build_dataset",
        [](const Project& p, const TraceTable& t, double fraction, double split, std::uint64_t seed) {
          return build_dataset(p, t, fraction, split, seed);
        },
        py::arg("project"), py::arg("traces"), py::arg("sample_fraction") = 0.10,
        py::arg("split_ratio") = 0.50, py::arg("seed") = 1);

  py::class_<NetConfig>(m, "NetConfig")
      .def(py::init<>())
      .def_static("nn", &NetConfig::nn)
      .def_static("dnn", &NetConfig::dnn)
      .def_readwrite("hidden_layers", &NetConfig::hidden_layers)
      .def_readwrite("max_iterations", &NetConfig::max_iterations)
      .def_readwrite("learning_rate", &NetConfig::learning_rate)
      .def_readwrite("batch_size", &NetConfig::batch_size)
      .def_readwrite("classification_threshold", &NetConfig::classification_threshold)
      .def_readwrite("undersample_negatives", &NetConfig::undersample_negatives)
      .def_readwrite("seed", &NetConfig::seed);

  py::class_<TraceClassifier>(m, "Model")
      .def_property_readonly("hidden_layers",
                             [](const TraceClassifier& c) { return c.config().hidden_layers; })
      .def("predict",
           [](const TraceClassifier& c, const std::vector<std::vector<double>>& rows) {
             std::vector<double> out;
             for (const auto& r : rows) out.push_back(c.predict(r));
             return out;
           })
      .def("to_json", &model_to_json)
      .def_static("from_json", &model_from_json);

  m.def("train",
        [](const LabeledDataset& d, const NetConfig& cfg) {
          py::gil_scoped_release nogil;
          return train(d, cfg);
        },
        py::arg("dataset"), py::arg("config") = NetConfig::nn());

  py::class_<MetricsReport>(m, "Metrics")
      .def_readonly("algorithm", &MetricsReport::algorithm)
      .def_readonly("project", &MetricsReport::project)
      .def_readonly("auc", &MetricsReport::auc)
      .def_readonly("acc", &MetricsReport::acc)
      .def_property_readonly("rates", [](const MetricsReport& r) { return rates_dict(r.rates); })
      .def("to_json", &metrics_to_json);

  m.def("evaluate", &evaluate, py::arg("model"), py::arg("dataset"), py::arg("algorithm") = "NN",
        py::arg("project") = "");
  m.def("auc", [](const std::vector<double>& s, const std::vector<int>& y) { return auc(s, y); },
        py::arg("scores"), py::arg("labels"));
  m.def("confusion",
        [](const std::vector<double>& s, const std::vector<int>& y, double thr) {
          return rates_dict(confusion(s, y, thr));
        },
        py::arg("scores"), py::arg("labels"), py::arg("threshold") = 0.5);
  m.def("feature_importance",
        [](const LabeledDataset& d, const NetConfig& cfg, int seeds) {
          FeatureImportance fi;
          {
            py::gil_scoped_release nogil;
            fi = feature_importance(d, cfg, seeds);
          }
          py::dict out;
          out["auc_all"] = fi.auc_all;
          py::dict delta;
          for (const auto& [name, v] : fi.delta_auc) delta[py::str(name)] = v;
          out["delta_auc"] = delta;
          return out;
        },
        py::arg("dataset"), py::arg("config") = NetConfig::nn(), py::arg("seeds") = 1);

  py::class_<Diagnosis>(m, "Diagnosis")
      .def_readonly("components", &Diagnosis::components)
      .def_readonly("score", &Diagnosis::score)
      .def("__repr__", [](const Diagnosis& d) {
        std::string s = "<Diagnosis {";
        for (std::size_t i = 0; i < d.components.size(); ++i)
          s += (i ? ", " : "") + std::to_string(d.components[i]);
        return s + "} " + std::to_string(d.score) + ">";
      });

  m.def("minimal_hitting_sets", &minimal_hitting_sets, py::arg("failed_traces"),
        py::arg("max_cardinality") = 3);
  m.def("diagnosis_likelihood",
        [](const std::vector<NodeId>& cand,
           const std::vector<std::tuple<NodeId, std::vector<NodeId>, bool>>& obs) {
          return diagnosis_likelihood(cand, to_observations(obs));
        },
        py::arg("candidate"), py::arg("observations"),
        "observations: (test, trace, failed) tuples");
  m.def("diagnose",
        [](const std::vector<std::tuple<NodeId, std::vector<NodeId>, bool>>& obs, int max_card,
           double prior) { return diagnose(to_observations(obs), max_card, prior); },
        py::arg("observations"), py::arg("max_cardinality") = 3, py::arg("prior") = 0.01,
        "observations: (test, trace, failed) tuples");
  m.def("health_states",
        [](const std::vector<std::pair<std::vector<NodeId>, double>>& diags) {
          DiagnosisSet set;
          for (const auto& [c, s] : diags) set.push_back({c, s});
          return health_states(set).nonzero();
        },
        py::arg("diagnoses"), "diagnoses: (components, score) pairs");
  m.def("utility",
        [](const std::map<NodeId, double>& conf, const std::map<NodeId, double>& health, int k) {
          return utility(conf, HealthStateMap(health), k);
        },
        py::arg("confidence"), py::arg("health"), py::arg("top_k") = kDefaultTopK);

  py::class_<LdpConfig>(m, "LdpConfig")
      .def(py::init<>())
      .def_readwrite("score_threshold", &LdpConfig::score_threshold)
      .def_readwrite("test_budget", &LdpConfig::test_budget)
      .def_readwrite("initial_tests", &LdpConfig::initial_tests)
      .def_readwrite("max_diag_cardinality", &LdpConfig::max_diag_cardinality)
      .def_readwrite("prior_fault_prob", &LdpConfig::prior_fault_prob)
      .def_readwrite("top_k", &LdpConfig::top_k);

  py::class_<EpisodeRecord>(m, "EpisodeRecord")
      .def_readonly("fault", &EpisodeRecord::fault)
      .def_property_readonly("planner", [](const EpisodeRecord& r) { return to_string(r.planner); })
      .def_readonly("budget", &EpisodeRecord::budget)
      .def_readonly("steps", &EpisodeRecord::steps)
      .def_property_readonly("terminal", [](const EpisodeRecord& r) { return to_string(r.terminal); })
      .def_readonly("correct", &EpisodeRecord::correct)
      .def_readonly("initial_tests", &EpisodeRecord::initial_tests)
      .def_readonly("executed", &EpisodeRecord::executed);

  m.def("run_episode",
        [](const Project& p, const TraceTable& t, const FaultSet& fault, const std::string& planner,
           const TraceClassifier* model, const LdpConfig& cfg, std::uint64_t seed) {
          const Strategy s = strategy_from_string(planner);
          std::optional<ConfidenceCache> cache;
          if (model) cache.emplace(p, *model);
          py::gil_scoped_release nogil;
          return run_episode(p, t, fault, s, cache ? &*cache : nullptr, cfg, seed);
        },
        py::arg("project"), py::arg("traces"), py::arg("fault"), py::arg("planner") = "oracle",
        py::arg("model") = nullptr, py::arg("config") = LdpConfig{}, py::arg("seed") = 1);

  m.def("run_experiment",
        [](const Project& p, const TraceTable& t, const std::vector<FaultSet>& faults,
           const std::vector<std::string>& planners, const std::vector<int>& budgets,
           const TraceClassifier* model, const LdpConfig& cfg, std::uint64_t seed) {
          std::vector<Strategy> ss;
          for (const auto& s : planners) ss.push_back(strategy_from_string(s));
          ExperimentReport r;
          {
            py::gil_scoped_release nogil;
            r = run_experiment(p, t, faults, ss, budgets, model, cfg, seed);
          }
          py::dict converged;
          for (Strategy s : ss) {
            py::dict row;
            for (int b : budgets) row[py::int_(b)] = r.converged(s, b);
            converged[py::str(to_string(s))] = row;
          }
          py::dict out;
          out["converged"] = converged;
          out["experiment_csv"] = experiment_csv(r);
          out["convergence_csv"] = convergence_csv(r);
          out["step_curves_csv"] = step_curves_csv(r);
          return out;
        },
        py::arg("project"), py::arg("traces"), py::arg("faults"),
        py::arg("planners") = std::vector<std::string>{"predicted", "oracle", "random"},
        py::arg("budgets") = std::vector<int>{50, 75, 100, 125, 150}, py::arg("model") = nullptr,
        py::arg("config") = LdpConfig{}, py::arg("seed") = 1);
}
