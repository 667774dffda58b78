import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from exrot.errors import InvalidArgument
from exrot.model import (
    DensitySpec,
    EdgeKey,
    as_direction,
    density_from_threshold,
    edge_index,
    edge_key,
    edge_list,
    edge_margin,
    edge_margins,
    ensemble_from_vectors,
    graph_from_edges,
    load_ensemble,
    normalize,
    realize_graph,
    realize_indicators,
    sample_ensemble,
    save_ensemble,
    threshold_from_density,
)
from exrot.special import norm_cdf


# reference quantiles from a 40-digit erfc evaluation
T_AT_P_0158655 = 0.9999999999999878
T_AT_P_09 = -1.2815515655446004


def test_sample_shapes_and_errors():
    ens = sample_ensemble(2, 3, 7)
    assert ens.vectors.shape == (1, 3)
    assert sample_ensemble(5, 4, 0).n_edges == 10
    with pytest.raises(InvalidArgument):
        sample_ensemble(1, 3, 0)
    with pytest.raises(InvalidArgument):
        sample_ensemble(3, 0, 0)


def test_sample_is_deterministic_and_immutable():
    a, b = sample_ensemble(5, 4, 0), sample_ensemble(5, 4, 0)
    assert a.vectors.tobytes() == b.vectors.tobytes()
    assert a.identical(b)
    assert not sample_ensemble(5, 4, 1).identical(a)
    with pytest.raises(ValueError):
        a.vectors[0, 0] = 1.0


def test_sample_mean_small_ensemble():
    v = sample_ensemble(5, 4, 0).vectors
    assert abs(v.mean()) <= 4 / math.sqrt(40)


def test_ensembles_are_nested_in_n_and_d():
    big = sample_ensemble(9, 7, 11)
    small = sample_ensemble(6, 4, 11)
    for i, j in edge_list(6):
        assert np.array_equal(small.vector((i, j)), big.vector((i, j))[:4])


def test_entries_look_standard_normal():
    v = sample_ensemble(60, 30, 5).vectors.ravel()
    assert stats.kstest(v, "norm").pvalue > 1e-4
    assert abs(v.mean()) < 4 / math.sqrt(v.size)
    assert abs(v.var() - 1) < 4 * math.sqrt(2 / v.size)


@pytest.mark.parametrize(
    "p, t, tol",
    [(0.5, 0.0, 0.0), (0.15865525393146, T_AT_P_0158655, 1e-9), (0.9, T_AT_P_09, 1e-8)],
)
def test_threshold_from_density(p, t, tol):
    got = threshold_from_density(p)
    assert abs(got - t) <= tol
    assert abs(norm_cdf(got) - (1 - p)) <= 1e-12


def test_threshold_half_is_positive_zero():
    assert math.copysign(1.0, threshold_from_density(0.5)) == 1.0


@pytest.mark.parametrize("p", [0.0, 1.0, -0.2, 1.5, float("nan")])
def test_threshold_rejects_bad_density(p):
    with pytest.raises(InvalidArgument):
        threshold_from_density(p)


@given(st.floats(min_value=1e-9, max_value=1 - 1e-9))
def test_density_threshold_round_trip(p):
    ds = DensitySpec.from_p(p)
    assert abs(norm_cdf(ds.t) - (1 - p)) <= 1e-12
    assert density_from_threshold(ds.t) == pytest.approx(p, rel=1e-9, abs=1e-15)


def test_edge_keys_and_indices():
    assert edge_key(3, 1) == EdgeKey(1, 3)
    with pytest.raises(InvalidArgument):
        edge_key(2, 2)
    n = 7
    assert [edge_index(i, j, n) for i, j in edge_list(n)] == list(range(21))
    with pytest.raises(InvalidArgument):
        edge_index(2, 7, n)


def test_direction_validation():
    assert np.allclose(as_direction([0.6, 0.8]), [0.6, 0.8])
    with pytest.raises(InvalidArgument):
        as_direction([1.0, 1.0])
    with pytest.raises(InvalidArgument):
        as_direction([1.0, 0.0], d=3)
    with pytest.raises(InvalidArgument):
        normalize([0.0, 0.0])


@settings(deadline=None)
@given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=40).filter(lambda v: np.linalg.norm(v) > 1e-6))
def test_normalize_gives_unit_norm(v):
    assert abs(np.linalg.norm(normalize(v)) - 1) <= 1e-12


def test_realize_single_edge_and_tie():
    tp = 0.7
    ens = ensemble_from_vectors(2, [[2 * tp, 0.0, 0.0]])
    assert realize_graph(ens, [1.0, 0.0, 0.0], tp).has_edge(0, 1)
    # exact equality counts as an edge
    ens = ensemble_from_vectors(2, [[0.5, 0.0]])
    assert realize_graph(ens, [1.0, 0.0], 0.5).has_edge(0, 1)


def test_realize_extreme_thresholds():
    ens = sample_ensemble(12, 5, 3)
    s = normalize(np.ones(5))
    assert np.abs(ens.vectors).max() * math.sqrt(5) < 1e9
    assert realize_graph(ens, s, 1e9).n_edges == 0
    assert realize_graph(ens, s, -1e9).n_edges == 66


def test_realize_dimension_mismatch():
    ens = sample_ensemble(4, 3, 0)
    with pytest.raises(InvalidArgument):
        realize_graph(ens, [1.0, 0.0], 0.0)


def test_graph_realization_is_symmetric_and_loopless():
    g = realize_graph(sample_ensemble(15, 6, 2), normalize(np.arange(1, 7)), 0.3)
    a = g.adjacency
    assert np.array_equal(a, a.T) and not a.diagonal().any()
    assert g.edges() == [e for e in edge_list(15) if g.has_edge(*e)]
    with pytest.raises(ValueError):
        a[0, 1] = not a[0, 1]


def test_edge_margin_examples():
    c = 1.7
    s = np.array([0.0, 1.0, 0.0])
    ens = ensemble_from_vectors(3, [s * c, [1.0, 0.0, 0.0], [0.0, 0.0, 2.0]])
    assert edge_margin(ens, s, (0, 1)) == pytest.approx(c)
    assert edge_margin(ens, s, (0, 2), t=1.0) == pytest.approx(-1.0)
    with pytest.raises(InvalidArgument):
        edge_margin(ens, s, (0, 5))
    with pytest.raises(InvalidArgument):
        edge_margin(ens, s, (1, 1))


@settings(deadline=None, max_examples=30)
@given(st.integers(2, 12), st.integers(1, 8), st.integers(0, 2**32), st.floats(-2, 2))
def test_margin_sign_matches_realization(n, d, seed, t):
    ens = sample_ensemble(n, d, seed)
    s = normalize(np.random.default_rng(seed).standard_normal(d))
    g = realize_graph(ens, s, t)
    m = edge_margins(ens, s, t)
    assert np.array_equal(m >= 0, g.edge_indicators())
    for e in edge_list(n)[:5]:
        assert (edge_margin(ens, s, e, t) >= 0) == g.has_edge(*e)
    assert np.array_equal(realize_indicators(ens, s[None, :], t)[0], g.edge_indicators())


def test_marginal_edge_frequency():
    p = 0.3
    t = threshold_from_density(p)
    s = normalize([1.0, -2.0, 0.5])
    hits = total = 0
    for seed in range(1000):
        g = realize_graph(sample_ensemble(46, 3, seed), s, t)
        hits += g.n_edges
        total += 1035
    assert total >= 10**6
    assert abs(hits / total - p) <= 4 * math.sqrt(p * (1 - p) / total)


def test_rotation_stationarity():
    t = threshold_from_density(0.2)
    s = normalize([1.0, 0.0, 0.0, 0.0])
    rng = np.random.default_rng(9)
    q, _ = np.linalg.qr(rng.standard_normal((4, 4)))
    a = [realize_graph(sample_ensemble(20, 4, k), s, t).n_edges for k in range(400)]
    b = [realize_graph(sample_ensemble(20, 4, k + 10_000), q @ s, t).n_edges for k in range(400)]
    res = stats.ks_2samp(a, b)
    assert res.pvalue > 1e-4


def test_edge_indicators_uncorrelated():
    t = threshold_from_density(0.4)
    s = normalize([0.3, 0.4, 0.5])
    x = np.array([realize_graph(sample_ensemble(6, 3, k), s, t).edge_indicators() for k in range(4000)], dtype=float)
    r = np.corrcoef(x.T)[np.triu_indices(15, 1)]
    # sample correlations have standard error about 1/sqrt(M)
    assert np.abs(r).max() <= 4 / math.sqrt(4000)


def test_binary_round_trip(tmp_path):
    ens = sample_ensemble(7, 5, 2**63 + 5)
    path = tmp_path / "e.bin"
    save_ensemble(ens, path)
    raw = path.read_bytes()
    assert raw[:4] == b"XGRE" and len(raw) == 24 + 21 * 5 * 8
    assert load_ensemble(path).identical(ens)


def test_binary_rejects_corrupt_files(tmp_path):
    ens = sample_ensemble(4, 2, 0)
    path = tmp_path / "e.bin"
    save_ensemble(ens, path)
    raw = path.read_bytes()
    for bad in (raw[:10], b"NOPE" + raw[4:], raw[:4] + b"\x02" + raw[5:], raw[:-8]):
        path.write_bytes(bad)
        with pytest.raises(InvalidArgument):
            load_ensemble(path)


def test_graph_from_edges():
    g = graph_from_edges(4, [(0, 1), (2, 3)])
    assert g.n_edges == 2 and g.has_edge(1, 0) and not g.has_edge(0, 2)
