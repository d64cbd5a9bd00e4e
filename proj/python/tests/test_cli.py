import csv
import io
import json
import os
import subprocess

import pytest

CLI = os.environ.get("TRACEPRED_CLI")
pytestmark = pytest.mark.skipif(not CLI, reason="TRACEPRED_CLI not set")


def run(*args, check=True):
    return subprocess.run([CLI, *args], capture_output=True, text=True, check=check)


def rows(path):
    with open(path) as f:
        return list(csv.DictReader(line for line in f if not line.startswith("#")))


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    run("--out-dir", str(d), "--seed", "7", "generate", "--classes", "20", "--faults", "5")
    run("--out-dir", str(d), "--seed", "7", "train", "--iterations", "200")
    return d


def test_generate_is_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        run("--out-dir", str(d), "generate", "--classes", "50", "--seed", "7")
    for name in ("corpus.json", "traces.json", "faults.json", "generator.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    ma = json.loads((a / "generate.manifest.json").read_text())
    mb = json.loads((b / "generate.manifest.json").read_text())
    assert ma["hash"] == mb["hash"]


def test_dynamic_fraction_out_of_range(tmp_path):
    r = run("--out-dir", str(tmp_path), "generate", "--dynamic-fraction", "1.5", check=False)
    assert r.returncode != 0
    assert "dynamic-fraction" in r.stderr


def test_full_reachability_summary(tmp_path):
    r = run("--out-dir", str(tmp_path), "generate", "--classes", "10", "--branch-prob", "1",
            "--dynamic-prob", "1")
    summary = dict(line.split() for line in r.stdout.splitlines())
    corpus = json.loads((tmp_path / "corpus.json").read_text())
    adj = {}
    for a, b in corpus["static_edges"] + corpus["dynamic_edges"]:
        adj.setdefault(a, []).append(b)

    def reach(t):
        seen, stack = set(), [t]
        while stack:
            for v in adj.get(stack.pop(), []):
                if v not in seen:
                    seen.add(v)
                    stack.append(v)
        return len(seen)

    expected = sum(reach(t["id"]) for t in corpus["tests"]) / len(corpus["tests"])
    assert abs(float(summary["mean_trace_length"]) - expected) <= 0.5 * expected


def test_metrics_schema(workdir):
    m = json.loads((workdir / "metrics.json").read_text())
    for key in ("algorithm", "project", "auc", "acc", "tn", "fp", "fn", "tp", "manifest_hash"):
        assert key in m
    assert m["acc"] == pytest.approx(m["tp"] + m["tn"], abs=1e-12)
    manifest = json.loads((workdir / "train.manifest.json").read_text())
    assert manifest["hash"] == m["manifest_hash"]


def test_dnn_model(workdir, tmp_path):
    for f in ("corpus.json", "traces.json"):
        (tmp_path / f).write_bytes((workdir / f).read_bytes())
    run("--out-dir", str(tmp_path), "train", "--arch", "dnn", "--iterations", "20")
    model = json.loads((tmp_path / "model.json").read_text())
    assert model["config"]["hidden_layers"] == [30] * 5


def test_simulate_random_rows(workdir):
    run("--out-dir", str(workdir), "simulate", "--planners", "random", "--budgets", "50",
        "--faults", "3")
    assert len(rows(workdir / "experiment.csv")) == 3


def test_simulate_and_report(workdir):
    run("--out-dir", str(workdir), "--seed", "7", "simulate")
    curves = rows(workdir / "step_curves.csv")
    by_key = {}
    for r in curves:
        by_key.setdefault((r["planner"], r["budget"]), []).append(int(r["steps"]))
    for steps in by_key.values():
        assert steps == sorted(steps)
    conv = {(r["planner"], r["budget"]): int(r["converged"]) for r in rows(workdir / "convergence.csv")}
    assert conv[("oracle", "150")] >= conv[("random", "150")]
    first = (workdir / "experiment.csv").read_bytes()
    run("--out-dir", str(workdir), "--seed", "7", "simulate")
    assert (workdir / "experiment.csv").read_bytes() == first
    out = run("--out-dir", str(workdir), "report").stdout
    assert "Converged episodes per budget" in out
    events = (workdir / "episodes.jsonl").read_text().splitlines()
    assert all(json.loads(e) for e in events)


def test_simulate_without_model(tmp_path):
    run("--out-dir", str(tmp_path), "generate", "--classes", "10", "--faults", "2")
    r = run("--out-dir", str(tmp_path), "simulate", check=False)
    assert r.returncode != 0
    assert "model" in r.stderr


def test_diagnose(workdir):
    run("--out-dir", str(workdir), "diagnose", "--fault-index", "0")
    d = json.loads((workdir / "diagnosis.json").read_text())
    assert "manifest_hash" in d
