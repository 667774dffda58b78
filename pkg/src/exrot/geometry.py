"""Sphere geometry: caps, covering nets, packings and halfspace dichotomies."""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from math import comb

import numpy as np

from .errors import ConstructionFailure, DegenerateInput, InvalidArgument
from .special import betainc

DEGENERACY_TOL = 1e-9


def schlaffli_count(N: int, d: int) -> int:
    """Number of dichotomies of N general-position points by central halfspaces."""
    if N < 1 or d < 1:
        raise InvalidArgument(f"need N >= 1 and d >= 1, got N={N}, d={d}")
    return 2 * sum(comb(N - 1, k) for k in range(d))


# -- directions ---------------------------------------------------------------


def sample_directions(d: int, m: int, rng: np.random.Generator) -> np.ndarray:
    """m independent uniform points on S^{d-1}, shape (m, d)."""
    if d < 1:
        raise InvalidArgument(f"d must be >= 1, got {d}")
    while True:
        g = rng.standard_normal((m, d))
        norms = np.linalg.norm(g, axis=1)
        if np.all(norms > 0):
            return g / norms[:, None]


def sample_uniform_direction(d: int, rng: np.random.Generator) -> np.ndarray:
    return sample_directions(d, 1, rng)[0]


def cap_area_fraction(d: int, alpha: float) -> float:
    """Normalized area of the cap of angular radius alpha on S^{d-1}."""
    if d < 2:
        raise InvalidArgument(f"cap area needs d >= 2, got {d}")
    if not (0.0 <= alpha <= math.pi):
        raise InvalidArgument(f"alpha must lie in [0, pi], got {alpha}")
    if alpha > math.pi / 2:
        return 1.0 - cap_area_fraction(d, math.pi - alpha)
    if alpha == math.pi / 2:
        return 0.5
    return 0.5 * float(betainc((d - 1) / 2.0, 0.5, math.sin(alpha) ** 2))


# -- covering nets ------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class CoveringNet:
    d: int
    eta: float
    points: np.ndarray = field(repr=False)

    def __len__(self):
        return self.points.shape[0]

    @property
    def size_bound(self) -> float:
        return (4.0 / self.eta) ** self.d

    def covers(self, samples: np.ndarray) -> np.ndarray:
        """Per-sample flag: within Euclidean distance eta of some net point."""
        return _nearest_inner(samples, self.points) >= 1.0 - self.eta**2 / 2 - 1e-12

    def to_json(self) -> str:
        return _geometry_json(self.d, self.eta, self.points)


@dataclass(frozen=True, eq=False)
class SpherePacking:
    d: int
    theta: float
    points: np.ndarray = field(repr=False)

    def __len__(self):
        return self.points.shape[0]

    @property
    def size_bound(self) -> float:
        return self.d / 16.0 * self.theta ** (-(self.d - 1))

    @property
    def meets_bound(self) -> bool:
        return len(self) >= self.size_bound

    def to_json(self) -> str:
        return _geometry_json(self.d, self.theta, self.points)


def _geometry_json(d, parameter, points) -> str:
    return json.dumps({"d": d, "parameter": parameter, "points": np.asarray(points).tolist()})


def net_from_json(text: str) -> CoveringNet:
    obj = json.loads(text)
    return CoveringNet(int(obj["d"]), float(obj["parameter"]), np.array(obj["points"], dtype=float).reshape(-1, obj["d"]))


def packing_from_json(text: str) -> SpherePacking:
    obj = json.loads(text)
    return SpherePacking(int(obj["d"]), float(obj["parameter"]), np.array(obj["points"], dtype=float).reshape(-1, obj["d"]))


def _nearest_inner(samples, points, chunk=4096):
    samples = np.atleast_2d(samples)
    if points.shape[0] == 0:
        return np.full(samples.shape[0], -np.inf)
    out = np.empty(samples.shape[0])
    for lo in range(0, samples.shape[0], chunk):
        out[lo : lo + chunk] = (samples[lo : lo + chunk] @ points.T).max(axis=1)
    return out


def _greedy_insert(points: list, candidates: np.ndarray, conflicts) -> None:
    """Stream candidates in order, appending those that do not conflict with any
    kept point; ``conflicts`` maps an array of inner products to flags."""
    d = candidates.shape[1]
    kept = np.array(points).reshape(-1, d)
    clash = conflicts(_nearest_inner(candidates, kept))
    new = np.empty_like(candidates)
    k = 0
    for idx in np.flatnonzero(~clash):
        c = candidates[idx]
        if k and conflicts((new[:k] @ c).max()):
            continue
        new[k] = c
        k += 1
    points.extend(new[:k])


def build_covering_net(d: int, eta: float, budget: int = 100_000, seed: int = 0, max_rounds: int = 64) -> CoveringNet:
    """Greedy eta-net: kept points are pairwise more than eta apart and every
    sample of the last verification batch is within eta of the net."""
    if d < 1:
        raise InvalidArgument(f"d must be >= 1, got {d}")
    if not (0.0 < eta <= 1.0):
        raise InvalidArgument(f"eta must lie in (0, 1], got {eta}")
    if d == 1:
        return CoveringNet(1, eta, np.array([[1.0], [-1.0]]))
    rng = np.random.default_rng(seed)
    cos_limit = 1.0 - eta**2 / 2
    bound = (4.0 / eta) ** d
    points: list = []
    # build, then re-verify on fresh batches until one batch is fully covered
    for _ in range(max_rounds + 1):
        batch = sample_directions(d, budget, rng)
        for lo in range(0, budget, 2048):
            _greedy_insert(points, batch[lo : lo + 2048], lambda ip: ip >= cos_limit)
            if len(points) > bound:
                raise ConstructionFailure(f"net size {len(points)} exceeds (4/eta)^d = {bound:.6g}")
        check = sample_directions(d, budget, rng)
        pts = np.array(points)
        if np.all(_nearest_inner(check, pts) >= cos_limit):
            return CoveringNet(d, eta, pts)
    raise ConstructionFailure(f"covering net for d={d}, eta={eta} did not stabilise in {max_rounds} rounds")


def build_packing(d: int, theta: float, attempts: int = 10_000, seed: int = 0) -> SpherePacking:
    """Rejection packing: a sampled direction is kept iff its inner product with
    every kept point is at most cos(theta)."""
    if d < 2:
        raise InvalidArgument(f"packing needs d >= 2, got {d}")
    if not (0.0 < theta < math.pi / 2):
        raise InvalidArgument(f"theta must lie in (0, pi/2), got {theta}")
    rng = np.random.default_rng(seed)
    cos_limit = math.cos(theta)
    points: list = []
    for lo in range(0, attempts, 2048):
        batch = sample_directions(d, min(2048, attempts - lo), rng)
        _greedy_insert(points, batch, lambda ip: ip > cos_limit)
    return SpherePacking(d, theta, np.array(points).reshape(-1, d))


# -- dichotomies ----------------------------------------------------------------


def _check_general_position(X: np.ndarray) -> None:
    N, d = X.shape
    norms = np.linalg.norm(X, axis=1)
    if np.any(norms <= DEGENERACY_TOL):
        raise DegenerateInput("zero vector among the points")
    U = X / norms[:, None]
    k = min(N, d)
    for sub in itertools.combinations(range(N), k):
        sv = np.linalg.svd(U[list(sub)], compute_uv=False)
        if sv[-1] < DEGENERACY_TOL:
            raise DegenerateInput(f"points {sub} are linearly dependent (sigma_min={sv[-1]:.3g})")


def enumerate_sign_patterns(points) -> dict[tuple[int, ...], np.ndarray]:
    """All realizable patterns (1[<x_k, s> >= 0])_k over s on the sphere.

    Returns a mapping from pattern to a unit witness direction.  Every cell of
    the central arrangement is a pointed cone whose extreme rays are cut out by
    d-1 of the hyperplanes, so visiting all 2^(d-1) local orthants around each
    such ray (both orientations) reaches every cell.
    """
    X = np.atleast_2d(np.asarray(points, dtype=np.float64))
    N, d = X.shape
    _check_general_position(X)
    found: dict[tuple[int, ...], np.ndarray] = {}

    def record(s):
        s = s / np.linalg.norm(s)
        ip = X @ s
        if np.min(np.abs(ip)) <= 1e-14 * np.max(np.abs(ip)):
            raise DegenerateInput("witness landed on a hyperplane; input too close to degenerate")
        found.setdefault(tuple(int(v) for v in (ip >= 0)), s)

    if N <= d:
        # independent points: every pattern, solve <x_k, s> = +-1 directly
        dual = np.linalg.pinv(X)
        for signs in itertools.product((-1.0, 1.0), repeat=N):
            record(dual @ np.array(signs))
        return dict(sorted(found.items()))

    if d == 1:
        record(np.ones(1))
        record(-np.ones(1))
        return dict(sorted(found.items()))

    sign_rows = np.array(list(itertools.product((-1.0, 1.0), repeat=d - 1)))
    for sub in itertools.combinations(range(N), d - 1):
        sub = list(sub)
        M = X[sub]
        u = np.linalg.svd(M)[2][-1]
        W = np.linalg.pinv(M)  # d x (d-1), <x_i, W[:, j]> = delta_ij
        rest = np.setdiff1d(np.arange(N), sub)
        a = np.abs(X[rest] @ u)
        b = np.abs(X[rest] @ W).sum(axis=1)
        # keeps every point outside the subset on the same side as at the ray
        eps = min(1.0, 0.5 * a.min() / max(b.max(), 1e-300))
        steps = eps * (sign_rows @ W.T)
        for orient in (1.0, -1.0):
            for step in steps:
                record(orient * u + step)
    return dict(sorted(found.items()))
