import math

import pytest

import tracepred as tp


@pytest.fixture(scope="module")
def corpus():
    cfg = tp.GenConfig()
    cfg.n_classes = 15
    cfg.seed = 4
    project = tp.generate_project(cfg)
    traces = tp.generate_traces(project, cfg)
    return cfg, project, traces


def test_generate_roundtrip(corpus):
    cfg, project, traces = corpus
    assert len(project.tests) == 30
    assert project.to_json() == tp.Project.from_json(project.to_json()).to_json()
    again = tp.TraceTable.from_json(traces.to_json(), project)
    assert again.as_dict() == traces.as_dict()
    assert tp.GenConfig.from_json(cfg.to_json()).seed == 4


def test_invalid_config():
    cfg = tp.GenConfig()
    cfg.dynamic_edge_fraction = 1.5
    with pytest.raises(ValueError):
        cfg.validate()


def test_features():
    assert tp.camel_split("StringUtilsTest") == ["string", "utils", "test"]
    assert tp.common_words("StringUtilsTest", "StringUtils") == 2
    assert tp.name_distance("abc", "abd") == pytest.approx(1 / 3)
    assert len(tp.feature_names()) == 8


def test_train_and_evaluate(corpus):
    _, project, traces = corpus
    ds = tp.build_dataset(project, traces, 0.2, 0.5, 3)
    assert abs(ds.train_size - ds.test_size) <= 1
    cfg = tp.NetConfig.nn()
    cfg.max_iterations = 200
    model = tp.train(ds, cfg)
    assert model.hidden_layers == [30]
    m = tp.evaluate(model, ds, "NN", project.name)
    assert 0.0 <= m.auc <= 1.0
    assert m.acc == pytest.approx(m.rates["tp"] + m.rates["tn"])
    clone = tp.Model.from_json(model.to_json())
    row = [[1, 2, 0, 1, 1, 0, 0.4, 0.5]]
    assert clone.predict(row) == model.predict(row)
    assert tp.NetConfig.dnn().hidden_layers == [30] * 5


def test_metrics():
    assert tp.auc([0.9, 0.8, 0.4, 0.3], [1, 0, 1, 0]) == 0.75
    r = tp.confusion([0.9, 0.1], [1, 0], 0.5)
    assert r == {"tn": 0.5, "fp": 0.0, "fn": 0.0, "tp": 0.5}


def test_diagnosis():
    assert tp.minimal_hitting_sets([[1, 2], [2, 3]], 3) == [[2], [1, 3]]
    obs = [(10, [1, 2], True), (11, [2, 3], True), (12, [2], False)]
    assert tp.diagnosis_likelihood([2], obs) == pytest.approx(4 / 27, abs=1e-12)
    diags = tp.diagnose(obs[:2])
    assert diags[0].components == [2]
    h = tp.health_states([([2], 0.6), ([1, 3], 0.4)])
    assert h == {1: 0.4, 2: 0.6, 3: 0.4}
    assert tp.utility({1: 0.9, 2: 0.5}, {1: 0.4, 2: 0.6}) == pytest.approx(0.66, abs=1e-12)


def test_troubleshooting(corpus):
    _, project, traces = corpus
    faults = tp.inject_faults(project, traces, 1, 5, 2)
    rec = tp.run_episode(project, traces, faults[0], "oracle", seed=3)
    assert rec.terminal in ("CONVERGED", "TIMED_OUT")
    out = tp.run_experiment(project, traces, faults, ["oracle", "random"], [10, 50])
    assert set(out["converged"]) == {"oracle", "random"}
    assert out["converged"]["oracle"][10] <= out["converged"]["oracle"][50]
    assert out["experiment_csv"].count("\n") == 1 + 2 * 2 * 5
    with pytest.raises(ValueError):
        tp.run_experiment(project, traces, faults, ["bogus"], [10])
