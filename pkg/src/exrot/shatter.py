"""Constructive shattering: directions realizing a prescribed edge pattern.

A request fixes an edge set E, a target subset F and a threshold t.  The
solver looks for the smallest vector s with

    <X_e, s> >= t + margin   for e in F,
    <X_e, s> <= t - margin   for e in E \\ F,

and, when that minimum norm is at most one, lifts it to the unit sphere by
adding a component orthogonal to every constrained edge vector.  The lift
leaves all constrained inner products unchanged, so the pattern survives.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import Infeasible, InvalidArgument, SolverFailure
from .model import EdgeKey, EdgeVectorEnsemble, edge_index, edge_key, normalize, realize_graph
from .metrics import connected_components
from .model import graph_from_edges


def default_margin(t: float) -> float:
    return 1e-6 * (1.0 + abs(t))


# -- min-norm point of a polyhedron ------------------------------------------------


def min_norm_point(A: np.ndarray, b: np.ndarray, max_iter: Optional[int] = None) -> np.ndarray:
    """argmin ||s|| subject to A s >= b.

    Dual active-set method (Goldfarb-Idnani with identity Hessian): start at
    the unconstrained minimiser s = 0 and repeatedly add the most violated
    constraint, dropping active ones whose multiplier would turn negative.
    Raises :class:`Infeasible` (min-norm inf) when the polyhedron is empty.
    """
    A = np.atleast_2d(np.asarray(A, dtype=np.float64))
    b = np.asarray(b, dtype=np.float64).reshape(-1)
    m, d = A.shape
    s = np.zeros(d)
    if m == 0:
        return s
    row_norm = np.linalg.norm(A, axis=1)
    if np.any(row_norm == 0):
        bad = b[row_norm == 0] > 0
        if np.any(bad):
            raise Infeasible(math.inf)
    active: list[int] = []
    lam: list[float] = []
    max_iter = max_iter or 50 * (m + d) + 100
    it = 0
    while True:
        slack = A @ s - b
        tol = 1e-12 * (1.0 + np.abs(b) + row_norm * np.linalg.norm(s))
        viol = np.where(slack < -tol, slack / np.maximum(row_norm, 1e-300), 0.0)
        j = int(np.argmin(viol))
        if viol[j] >= 0:
            return s
        a = A[j]
        lam_j = 0.0
        while True:
            it += 1
            if it > max_iter:
                raise SolverFailure(f"min-norm solver did not converge in {max_iter} steps")
            if active:
                N = A[active].T
                r = np.linalg.lstsq(N, a, rcond=None)[0]
                z = a - N @ r
            else:
                r = np.empty(0)
                z = a
            t1, drop = math.inf, -1
            for pos, (ri, li) in enumerate(zip(r, lam)):
                if ri > 1e-14 and li / ri < t1:
                    t1, drop = li / ri, pos
            zz = float(z @ z)
            if zz > (1e-11 * row_norm[j]) ** 2:
                t2 = (b[j] - a @ s) / zz
            else:
                t2 = math.inf
            if math.isinf(t1) and math.isinf(t2):
                raise Infeasible(math.inf)
            step = min(t1, t2)
            if not math.isinf(t2):
                s = s + step * z
            lam = [li - step * ri for li, ri in zip(lam, r)]
            lam_j += step
            if t2 <= t1:
                active.append(j)
                lam.append(lam_j)
                break
            del active[drop]
            del lam[drop]


# -- requests and certificates ------------------------------------------------------


@dataclass(frozen=True)
class ShatterRequest:
    edges: tuple
    target: frozenset
    t: float
    margin: Optional[float] = None

    def __init__(self, edges: Iterable, target: Iterable, t: float, margin: Optional[float] = None):
        e = tuple(edge_key(*x) for x in edges)
        f = frozenset(edge_key(*x) for x in target)
        if len(set(e)) != len(e):
            raise InvalidArgument("duplicate edges in request")
        if not f <= set(e):
            raise InvalidArgument("target must be a subset of the edge set")
        if margin is not None and margin < 0:
            raise InvalidArgument("margin must be non-negative")
        object.__setattr__(self, "edges", e)
        object.__setattr__(self, "target", f)
        object.__setattr__(self, "t", float(t))
        object.__setattr__(self, "margin", default_margin(t) if margin is None else float(margin))

    def pattern(self) -> list[bool]:
        return [e in self.target for e in self.edges]

    @classmethod
    def from_json(cls, text: str) -> "ShatterRequest":
        obj = json.loads(text)
        return cls(
            [tuple(x) for x in obj["edges"]],
            [tuple(x) for x in obj.get("target", [])],
            obj["t"],
            obj.get("margin"),
        )


@dataclass(frozen=True, eq=False)
class ShatterCertificate:
    s: np.ndarray = field(repr=False)
    t: float
    edges: tuple
    target: frozenset
    margins: np.ndarray = field(repr=False)
    min_norm_before_padding: float
    lift: str = "pad"  # "pad" (orthogonal padding) or "scale"
    s_min_norm: Optional[np.ndarray] = field(default=None, repr=False)

    def verify(self, ens: EdgeVectorEnsemble, margin: float = 0.0) -> bool:
        """Re-evaluate every constrained edge against the realized graph."""
        g = realize_graph(ens, self.s, self.t)
        idx = [edge_index(i, j, ens.n) for i, j in self.edges]
        fresh = ens.vectors[idx] @ self.s - self.t
        if not np.allclose(fresh, self.margins, rtol=0, atol=1e-9):
            return False
        for e, m in zip(self.edges, fresh):
            want = e in self.target
            if g.has_edge(*e) != want:
                return False
            if (m < margin) if want else (m > -margin):
                return False
        return abs(np.linalg.norm(self.s) - 1.0) <= 1e-12

    def to_json(self) -> str:
        return json.dumps(
            {
                "s": self.s.tolist(),
                "t": self.t,
                "edges": [list(e) for e in self.edges],
                "target": [list(e) for e in self.edges if e in self.target],
                "margins": self.margins.tolist(),
                "min_norm_before_padding": self.min_norm_before_padding,
            }
        )


def _orthogonal_unit(V: np.ndarray) -> Optional[np.ndarray]:
    """A unit vector orthogonal to every row of V, or None if the rows span R^d."""
    k, d = V.shape
    if k == 0:
        u = np.zeros(d)
        u[0] = 1.0
        return u
    _, sv, vt = np.linalg.svd(V, full_matrices=True)
    rank = int(np.sum(sv > sv[0] * max(k, d) * np.finfo(float).eps))
    if rank >= d:
        return None
    u = vt[rank]
    # one Gram-Schmidt pass against the rows to scrub rounding
    q = np.linalg.qr(V.T)[0][:, :rank]
    u = u - q @ (q.T @ u)
    return u / np.linalg.norm(u)


def solve_sign_pattern(ens: EdgeVectorEnsemble, req: ShatterRequest) -> ShatterCertificate:
    """Unit direction realizing exactly ``req.target`` on ``req.edges``.

    Raises :class:`Infeasible` when the min-norm point has norm > 1 (or the
    constraints are inconsistent), :class:`SolverFailure` on numerical trouble.
    """
    if not req.edges:
        s = np.zeros(ens.d)
        s[0] = 1.0
        return ShatterCertificate(s, req.t, (), frozenset(), np.empty(0), 0.0, "pad", np.zeros(ens.d))
    for i, j in req.edges:
        if j >= ens.n:
            raise InvalidArgument(f"edge ({i}, {j}) out of range for n={ens.n}")
    idx = [edge_index(i, j, ens.n) for i, j in req.edges]
    V = ens.vectors[idx]
    sign = np.array([1.0 if e in req.target else -1.0 for e in req.edges])
    # a sliver of extra slack absorbs rounding in the active constraints
    m_int = req.margin * (1 + 1e-6) + 1e-12 * (1.0 + abs(req.t))
    A = sign[:, None] * V
    b = sign * req.t + m_int
    s_tilde = min_norm_point(A, b)
    norm = float(np.linalg.norm(s_tilde))
    if norm > 1.0:
        raise Infeasible(norm)

    u = _orthogonal_unit(V)
    if u is not None:
        s = s_tilde + math.sqrt(max(0.0, 1.0 - norm**2)) * u
        lift = "pad"
    elif norm > 0 and np.all(b >= 0):
        s = s_tilde
        lift = "scale"
    else:
        raise SolverFailure("edge vectors span R^d and the pattern is not scale-invariant; no lift to the sphere")
    s = normalize(s)
    margins = V @ s - req.t
    ok = np.where(sign > 0, margins >= req.margin, margins <= -req.margin)
    if not np.all(ok):
        raise SolverFailure(f"certificate failed re-verification (worst slack {np.min(sign * margins - req.margin):.3g})")
    return ShatterCertificate(s, req.t, req.edges, req.target, margins, norm, lift, s_tilde)


def is_spanning_tree(n: int, edges: Sequence) -> bool:
    if len(edges) != n - 1:
        return False
    return connected_components(graph_from_edges(n, edges))[0] == 1


def realize_spanning_tree(ens: EdgeVectorEnsemble, tree_edges: Sequence, t: float, margin: Optional[float] = None) -> ShatterCertificate:
    """Direction whose realized graph contains every tree edge (hence is connected)."""
    tree = [edge_key(*e) for e in tree_edges]
    if not is_spanning_tree(ens.n, tree):
        raise InvalidArgument("tree_edges is not a spanning tree on all n vertices")
    return solve_sign_pattern(ens, ShatterRequest(tree, tree, t, margin))


def path_tree(n: int) -> list[EdgeKey]:
    return [EdgeKey(i, i + 1) for i in range(n - 1)]


# -- affine span distance ---------------------------------------------------------


@dataclass(frozen=True, eq=False)
class AffineSpanDistance:
    value: float
    minimizing_weights: np.ndarray = field(repr=False)


def affine_span_distance(vectors) -> AffineSpanDistance:
    """Distance from the origin to the affine hull of the given vectors."""
    V = np.atleast_2d(np.asarray(vectors, dtype=np.float64))
    k = V.shape[0]
    if k == 1:
        return AffineSpanDistance(float(np.linalg.norm(V[0])), np.ones(1))
    G = V @ V.T
    ones = np.ones(k)
    evals = np.linalg.eigvalsh(G)
    trace = float(np.trace(G))
    if evals[0] <= 1e-12 * max(trace, 1e-300):
        G = G + 1e-12 * max(trace, 1e-300) * np.eye(k)
    y = np.linalg.solve(G, ones)
    y = y / y.sum()
    return AffineSpanDistance(float(np.linalg.norm(V.T @ y)), y)


@dataclass(frozen=True, eq=False)
class LeastSingularStats:
    d: int
    k: int
    trials: int
    values: np.ndarray = field(repr=False)
    thresholds: tuple = ()
    frequencies: tuple = ()

    @property
    def minimum(self) -> float:
        return float(self.values.min())

    @property
    def mean(self) -> float:
        return float(self.values.mean())

    def quantiles(self, qs=(0.01, 0.1, 0.5, 0.9)) -> dict:
        return {q: float(np.quantile(self.values, q)) for q in qs}


def least_singular_experiment(d: int, k: int, trials: int, seed: int, x_values: Sequence[float] = ()) -> LeastSingularStats:
    """Empirical law of the affine span distance of k Gaussian vectors in R^d."""
    if d < 4 * k:
        raise InvalidArgument(f"need d >= 4k, got d={d}, k={k}")
    if trials < 1:
        raise InvalidArgument("trials must be >= 1")
    rng = np.random.default_rng(seed)
    vals = np.array([affine_span_distance(rng.standard_normal((k, d))).value for _ in range(trials)])
    xs = tuple(float(x) for x in x_values)
    freqs = tuple(float(np.mean(vals <= x)) for x in xs)
    return LeastSingularStats(d, k, trials, vals, xs, freqs)
