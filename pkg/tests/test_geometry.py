import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from exrot.errors import ConstructionFailure, DegenerateInput, InvalidArgument
from exrot.geometry import (
    CoveringNet,
    SpherePacking,
    build_covering_net,
    build_packing,
    cap_area_fraction,
    enumerate_sign_patterns,
    net_from_json,
    packing_from_json,
    sample_directions,
    sample_uniform_direction,
    schlaffli_count,
)

# normalized cap areas from direct quadrature of sin^(d-2) at 40 digits
CAP_ORACLE = {
    (5, math.pi / 6): 0.01286071037125326,
    (10, math.pi / 3): 0.05865340150711908,
    (4, 2.0): 0.7570686304401191,
    (7, 0.4): 0.0005790440278340009,
}


def circle_oracle(points):
    """Patterns on S^1: one per arc between consecutive boundary angles."""
    ang = np.arctan2(points[:, 1], points[:, 0])
    cuts = np.sort(np.concatenate([ang + math.pi / 2, ang - math.pi / 2]) % (2 * math.pi))
    mids = (cuts + np.diff(np.append(cuts, cuts[0] + 2 * math.pi)) / 2) % (2 * math.pi)
    s = np.stack([np.cos(mids), np.sin(mids)], axis=1)
    return {tuple(int(x) for x in row) for row in (s @ points.T >= 0)}


@pytest.mark.parametrize(
    "N, d, count",
    [(5, 5, 32), (6, 3, 32), (4, 1, 2), (3, 2, 6), (5, 3, 22), (10, 3, 92), (12, 5, 1124)],
)
def test_schlaffli_values(N, d, count):
    assert schlaffli_count(N, d) == count


def test_schlaffli_rejects_bad_input():
    with pytest.raises(InvalidArgument):
        schlaffli_count(0, 2)


def test_sign_patterns_d1():
    pats = enumerate_sign_patterns([[0.3], [-2.0], [1.1]])
    assert set(pats) == {(1, 0, 1), (0, 1, 0)}


def test_sign_patterns_d2_match_circle_oracle():
    rng = np.random.default_rng(1)
    for _ in range(20):
        pts = rng.standard_normal((int(rng.integers(2, 9)), 2))
        assert set(enumerate_sign_patterns(pts)) == circle_oracle(pts)


@settings(deadline=None, max_examples=40)
@given(st.integers(1, 10), st.integers(1, 5), st.integers(0, 2**32))
def test_sign_patterns_count_and_witnesses(N, d, seed):
    pts = np.random.default_rng(seed).standard_normal((N, d))
    pats = enumerate_sign_patterns(pts)
    assert len(pats) == schlaffli_count(N, d)
    for bits, s in pats.items():
        assert abs(np.linalg.norm(s) - 1) < 1e-12
        assert tuple(int(x) for x in (pts @ s >= 0)) == bits
        # complementation closure
        assert tuple(1 - b for b in bits) in pats


def test_sign_patterns_reject_degenerate_input():
    with pytest.raises(DegenerateInput):
        enumerate_sign_patterns([[1.0, 0.0], [2.0, 0.0], [0.0, 1.0]])
    with pytest.raises(DegenerateInput):
        enumerate_sign_patterns([[0.0, 0.0], [1.0, 1.0]])


def test_covering_net_examples():
    assert np.array_equal(build_covering_net(1, 0.3).points, [[1.0], [-1.0]])
    rng = np.random.default_rng(77)
    for d, eta in ((2, 1.0), (3, 0.5)):
        net = build_covering_net(d, eta, seed=4)
        assert len(net) <= (4 / eta) ** d
        assert net.covers(sample_directions(d, 100_000, rng)).all()
        # greedy points are pairwise more than eta apart
        g = net.points @ net.points.T
        np.fill_diagonal(g, -1)
        assert g.max() < 1 - eta**2 / 2


def test_covering_net_validation():
    with pytest.raises(InvalidArgument):
        build_covering_net(3, 0.0)
    with pytest.raises(InvalidArgument):
        build_covering_net(0, 0.5)
    with pytest.raises(ConstructionFailure):
        build_covering_net(3, 0.5, budget=2000, max_rounds=0)


def test_packing_hexagon_is_maximal_on_circle():
    # six points at 60 degrees spacing are a valid pi/3-packing; seven are impossible
    ang = np.arange(6) * math.pi / 3
    hexagon = SpherePacking(2, math.pi / 3, np.stack([np.cos(ang), np.sin(ang)], axis=1))
    g = hexagon.points @ hexagon.points.T
    np.fill_diagonal(g, -1)
    assert g.max() <= math.cos(math.pi / 3) + 1e-12
    assert hexagon.meets_bound
    assert 7 * (math.pi / 3) > 2 * math.pi


def test_packing_examples():
    p = build_packing(2, math.pi / 3, attempts=10_000, seed=0)
    assert 1 <= len(p) <= 6
    assert p.size_bound == pytest.approx(2 / 16 * 3 / math.pi)
    assert p.meets_bound
    p8 = build_packing(8, 1.0, attempts=100_000, seed=0)
    assert p8.size_bound == pytest.approx(0.5) and p8.meets_bound


@settings(deadline=None, max_examples=25)
@given(st.integers(2, 6), st.floats(0.2, 1.5), st.integers(0, 1000))
def test_packing_separation(d, theta, seed):
    p = build_packing(d, theta, attempts=2000, seed=seed)
    diff = p.points[:, None, :] - p.points[None, :, :]
    dist = np.linalg.norm(diff, axis=2) + 10 * np.eye(len(p))
    assert dist.min() >= 2 * math.sin(theta / 2) - 1e-12


def test_packing_validation():
    with pytest.raises(InvalidArgument):
        build_packing(1, 0.5)
    with pytest.raises(InvalidArgument):
        build_packing(3, math.pi / 2)


def test_json_round_trip():
    net = build_covering_net(2, 0.5, budget=5000)
    back = net_from_json(net.to_json())
    assert isinstance(back, CoveringNet) and np.array_equal(back.points, net.points)
    pk = build_packing(3, 0.8, attempts=500)
    assert np.array_equal(packing_from_json(pk.to_json()).points, pk.points)


def test_cap_area_examples():
    for d in (2, 3, 7, 40):
        assert cap_area_fraction(d, math.pi / 2) == 0.5
    assert cap_area_fraction(2, math.pi / 3) == pytest.approx(1 / 3, abs=1e-14)
    assert cap_area_fraction(3, math.pi / 3) == pytest.approx(0.25, abs=1e-14)
    for (d, a), v in CAP_ORACLE.items():
        assert cap_area_fraction(d, a) == pytest.approx(v, rel=1e-12)
    with pytest.raises(InvalidArgument):
        cap_area_fraction(1, 0.5)
    with pytest.raises(InvalidArgument):
        cap_area_fraction(3, 4.0)


@given(st.integers(2, 60), st.floats(0.0, math.pi))
def test_cap_area_properties(d, a):
    assert abs(cap_area_fraction(d, a) + cap_area_fraction(d, math.pi - a) - 1) <= 1e-12
    if d == 3:
        assert abs(cap_area_fraction(3, a) - (1 - math.cos(a)) / 2) <= 1e-10
    b = min(math.pi, a + 0.1)
    assert cap_area_fraction(d, a) <= cap_area_fraction(d, b) + 1e-15
    if a < math.pi / 2:
        assert cap_area_fraction(d + 1, a) <= cap_area_fraction(d, a) + 1e-15


def test_uniform_direction_statistics():
    rng = np.random.default_rng(3)
    m = 100_000
    signs = sample_directions(1, m, rng)[:, 0]
    assert set(np.unique(signs)) == {-1.0, 1.0}
    assert abs((signs > 0).mean() - 0.5) <= 4 * math.sqrt(0.25 / m)
    x = sample_directions(3, m, rng)
    assert abs(x[:, 0].mean()) <= 4 * math.sqrt(1 / 3 / m)
    y = sample_directions(5, m, rng)
    q = cap_area_fraction(5, math.pi / 3)
    assert abs((y[:, 0] >= 0.5).mean() - q) <= 4 * math.sqrt(q * (1 - q) / m)
    assert sample_uniform_direction(4, rng).shape == (4,)
