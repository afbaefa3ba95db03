import json
import math

import numpy as np
import pytest

import socialtrack as st


@pytest.fixture
def cycle():
    graph = st.Graph.named("cycle", 10)
    p = st.CommMatrix.metropolis(graph)
    params = st.ModelParams(a=0.9, noise="uniform_bounded")
    spec = st.EstimatorSpec("tilde", st.optimal_alpha_for_stability(p))
    return graph, p, params, spec


def test_graph_and_matrix(cycle):
    graph, p, _, _ = cycle
    assert graph.n == 10 and len(graph.edges) == 10 and graph.is_connected()
    m = p.matrix
    assert np.allclose(m, m.T)
    assert np.allclose(m.sum(axis=1), 1.0)
    assert p.eigenvalues[0] == pytest.approx(1.0)
    assert np.all(np.diff(p.eigenvalues) <= 1e-12)


def test_closed_form_matches_lyapunov(cycle):
    _, p, params, spec = cycle
    report = st.msd_closed_form(p, spec, params)
    sigma = st.steady_state_sigma(p, spec, params)
    assert report["total"] == pytest.approx(np.trace(sigma) / p.n, rel=1e-9)
    assert report["total"] == pytest.approx(report["r_msd"] + report["w_msd"], rel=1e-12)


def test_simulation_agrees_with_closed_form(cycle):
    _, p, params, spec = cycle
    exact = st.msd_closed_form(p, spec, params)["total"]
    sim = st.run_trials(p, spec, params, horizon=4000, trials=8, seed=5)
    assert abs(sim["empirical_msd"] - exact) < 5 * sim["stderr"] + 1e-3
    again = st.run_trials(p, spec, params, horizon=4000, trials=8, seed=5)
    assert again["empirical_msd"] == sim["empirical_msd"]


def test_kalman_is_lower(cycle):
    _, p, params, spec = cycle
    assert st.kalman_steady_state(params, p.n) < st.msd_closed_form(p, spec, params)["total"]


def test_edge_search_and_regret(cycle):
    _, p, params, spec = cycle
    candidates = st.optimal_edge_search(p, spec, params, top_k=3)
    assert len(candidates) == 35
    scores = [c["score_first_order"] for c in candidates]
    assert scores == sorted(scores) or max(abs(a - b) for a, b in zip(scores, sorted(scores))) < 1e-12
    assert candidates[0]["delta_msd_exact"] < 0
    table = st.verify_bound(p, spec, params, [64, 256], trials=20, seed=2)
    assert all(row["violation_rate"] <= table["allowed_violation_rate"] for row in table["summary"])


def test_errors():
    with pytest.raises(st.ValidationError):
        st.EstimatorSpec("tilde", 1.5)
    p = st.CommMatrix.metropolis(st.Graph.named("cycle", 6))
    with pytest.raises(st.InstabilityError):
        st.msd_closed_form(p, st.EstimatorSpec("tilde", 1.0), st.ModelParams(a=3.0))


def test_scenario_and_subcommand(tmp_path):
    text = """
seed = 4
[graph]
family = "complete"
n = 5
[model]
a = 0.7
"""
    scenario = st.parse_scenario(text)
    assert scenario["seed"] == 4 and scenario["graph"]["n"] == 5
    path = tmp_path / "s.toml"
    path.write_text(text)
    code, err = st.run_subcommand("analyze", str(path), str(tmp_path / "out"))
    assert code == 0, err
    report = json.loads((tmp_path / "out" / "msd_report.json").read_text())
    assert math.isfinite(report["report"]["total"])
    assert "analyze" in st.subcommands
