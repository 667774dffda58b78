"""End-to-end acceptance checks, one test per criterion.

Each test records a PASS/FAIL line; the lines are repeated in the pytest
terminal summary under "acceptance criteria".
"""

import itertools
import math
import time
from pathlib import Path

import numpy as np
import pytest

from exrot.cli import main
from exrot.errors import Infeasible
from exrot.experiments import ExperimentConfig, monotonicity_summary, render_results, run_threshold_sweep
from exrot.geometry import enumerate_sign_patterns, schlaffli_count
from exrot.metrics import clique_number, is_connected, is_proper_coloring, matula_omega
from exrot.model import canonical_direction, edge_index, edge_list, realize_graph, sample_ensemble, threshold_from_density
from exrot.search import force_clique_direction, force_coloring_direction
from exrot.shatter import ShatterRequest, path_tree, realize_spanning_tree, solve_sign_pattern
from exrot.verify import (
    cap_area_check,
    domination_check,
    gaussian_tail_sandwich_check,
    isolated_prob_exact,
    isolated_prob_mc,
)

pytestmark = pytest.mark.slow

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def test_c01_schlaffli_exactness(acceptance_log):
    rng = np.random.default_rng(1)
    start = time.perf_counter()
    mismatches = 0
    for _ in range(20):
        N, d = int(rng.integers(3, 11)), int(rng.integers(1, 5))
        pts = rng.standard_normal((N, d))
        mismatches += len(enumerate_sign_patterns(pts)) != schlaffli_count(N, d)
    elapsed = time.perf_counter() - start
    ok = mismatches == 0 and elapsed < 10
    assert acceptance_log(1, ok, f"Schlaffli count exact on 20 sets, {mismatches} mismatches, {elapsed:.2f}s")


def test_c02_shattering_completeness(acceptance_log):
    n, d, t = 10, 32, 1.0
    start = time.perf_counter()
    good = 0
    for seed in range(100):
        ens = sample_ensemble(n, d, seed)
        pick = np.random.default_rng(seed).choice(len(edge_list(n)), 4, replace=False)
        edges = [edge_list(n)[i] for i in sorted(pick)]
        idx = [edge_index(i, j, n) for i, j in edges]
        try:
            all_ok = True
            for r in range(5):
                for F in itertools.combinations(edges, r):
                    cert = solve_sign_pattern(ens, ShatterRequest(edges, F, t))
                    got = realize_graph(ens, cert.s, t).edge_indicators()[idx]
                    all_ok &= cert.verify(ens) and list(got) == [e in F for e in edges]
            good += all_ok
        except Infeasible:
            pass
    elapsed = time.perf_counter() - start
    ok = good >= 99 and elapsed < 30
    assert acceptance_log(2, ok, f"all 16 patterns realized on {good}/100 ensembles, {elapsed:.1f}s")


def test_c03_forced_clique(acceptance_log):
    t = threshold_from_density(0.5)
    start = time.perf_counter()
    good = 0
    for seed in range(100):
        ens = sample_ensemble(40, 45, seed)
        res = force_clique_direction(ens, t, 10)
        good += clique_number(realize_graph(ens, res.best_s, t)) >= 10
    elapsed = time.perf_counter() - start
    typical = round(matula_omega(40))
    ok = good == 100 and typical == 8 and elapsed < 60
    assert acceptance_log(3, ok, f"clique >= 10 on {good}/100 seeds vs typical {typical}, {elapsed:.1f}s")


def test_c04_forced_coloring(acceptance_log):
    good = 0
    for seed in range(100):
        ens = sample_ensemble(12, 24, seed)
        try:
            res = force_coloring_direction(ens, 0.0, 4)
        except Infeasible:
            continue
        g = realize_graph(ens, res.best_s, 0.0)
        good += is_proper_coloring(g, res.witness) and len(set(res.witness)) <= 4
    assert acceptance_log(4, good >= 95, f"proper 4-coloring verified on {good}/100 seeds")


def test_c05_spanning_tree(acceptance_log):
    n, d = 16, 400
    t = threshold_from_density(0.05)
    connected = baseline_disconnected = 0
    for seed in range(100):
        ens = sample_ensemble(n, d, seed)
        baseline_disconnected += not is_connected(realize_graph(ens, canonical_direction(d), t))
        try:
            cert = realize_spanning_tree(ens, path_tree(n), t)
        except Infeasible:
            continue
        connected += cert.verify(ens) and is_connected(realize_graph(ens, cert.s, t))
    ok = connected >= 95 and baseline_disconnected >= 95
    assert acceptance_log(5, ok, f"connected at witness {connected}/100, baseline disconnected {baseline_disconnected}/100")


def test_c06_tail_sandwich(acceptance_log):
    start = time.perf_counter()
    r = gaussian_tail_sandwich_check()
    elapsed = time.perf_counter() - start
    ok = r.satisfied and len(r.rows) == 1550 and elapsed < 1
    assert acceptance_log(6, ok, f"tail sandwich on 1550 grid points, min log slack {r.slack:.3g}, {elapsed:.3f}s")


def test_c07_cap_formula(acceptance_log):
    r = cap_area_check(trials=1_000_000, seed=0)
    worst = max(abs(row["estimate"] - row["exact"]) / row["se"] for row in r.rows if row["se"] > 0)
    assert acceptance_log(7, r.satisfied, f"cap areas on 12 (d, alpha) points, worst deviation {worst:.2f} se")


def test_c08_isolated_oracle(acceptance_log):
    grid = np.linspace(0.01, 0.99, 99)
    closed = max(abs(isolated_prob_exact(3, p) - (p**3 + 3 * p**2 * (1 - p))) for p in grid)
    exact = isolated_prob_exact(30, 0.1)
    est, se = isolated_prob_mc(30, 0.1, 100_000, seed=0)
    ok = closed <= 1e-12 and abs(est - exact) <= 4 * se
    detail = f"n=3 error {closed:.1e}; n=30 exact {exact:.5f} vs MC {est:.5f} ({abs(est - exact) / se:.2f} se)"
    assert acceptance_log(8, ok, detail)


def test_c09_domination(acceptance_log):
    r = domination_check(16, 0.2, 2.0, trials=1_000_000, seed=0, c=10.0)
    v = r.extra["violations"]
    ok = r.satisfied and v == 0
    detail = f"{v} inclusion violations, plus {r.observed['plus']:.5f} minus {r.observed['minus']:.5f}, smallest c {r.extra['c_min']:.3f}"
    assert acceptance_log(9, ok, detail)


@pytest.fixture(scope="module")
def connectivity_rows():
    cfg = ExperimentConfig.from_toml(CONFIGS / "connectivity_supercritical.toml")
    return cfg, run_threshold_sweep(cfg, jobs=4)


def test_c10_connectivity_monotonicity(acceptance_log, connectivity_rows):
    cfg, rows = connectivity_rows
    assert cfg.n == 50 and cfg.p == pytest.approx(1.5 * math.log(50) / 50) and len(cfg.seeds) == 50
    m = monotonicity_summary(rows)
    counts = [round(r * len(cfg.seeds)) for r in m.rates]
    ok = m.d_grid == (2, 4, 8, 12) and m.nondecreasing and m.strictly_increasing_ends
    assert acceptance_log(10, ok, f"disconnection found per d {dict(zip(m.d_grid, counts))} of 50")


def test_c11_determinism(acceptance_log, connectivity_rows, tmp_path):
    _, rows = connectivity_rows
    outputs = []
    cfg = CONFIGS / "connectivity_supercritical.toml"
    for k, jobs in enumerate(("4", "2")):
        out = tmp_path / f"conn{k}.csv"
        assert main(["sweep", "--config", str(cfg), "--jobs", jobs, "--out", str(out)]) == 0
        outputs.append(out.read_bytes())
    same_sweep = outputs[0] == outputs[1] == render_results(rows).encode()
    verify = []
    for k in range(2):
        out = tmp_path / f"verify{k}.json"
        assert main(["verify", "--config", str(CONFIGS / "verify_fast.toml"), "--format", "json", "--out", str(out)]) == 0
        verify.append(out.read_bytes())
    ok = same_sweep and verify[0] == verify[1]
    assert acceptance_log(11, ok, "sweep CSV and verify JSON byte-identical across reruns and worker counts")
