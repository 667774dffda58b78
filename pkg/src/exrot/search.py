"""Searching the sphere for exceptional rotations.

Every search returns a :class:`SearchResult` whose value is the functional
re-evaluated on the graph realized at the returned direction.  Ties are
broken by the lowest candidate index so that results depend only on the
ensemble, the threshold and the seeds.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from .errors import Infeasible, InvalidArgument, Unsupported
from .geometry import (
    CoveringNet,
    SpherePacking,
    build_covering_net,
    build_packing,
    enumerate_sign_patterns,
)
from .metrics import GraphFunctional, Kind, connected_components, is_proper_coloring, max_clique
from .model import (
    EdgeVectorEnsemble,
    GraphRealization,
    canonical_direction,
    edge_index,
    edge_list,
    graph_from_indicators,
    normalize,
    realize_graph,
)
from .shatter import ShatterCertificate, ShatterRequest, path_tree, realize_spanning_tree, solve_sign_pattern

EXACT_COST_LIMIT = 200_000
GAMMA_FLOOR = 1e-4


# -- budgets and results ------------------------------------------------------------


@dataclass(frozen=True)
class NetSweep:
    eta: float
    samples: int = 20_000


@dataclass(frozen=True)
class PackingSweep:
    theta: Optional[float] = None  # None: (log n)^(-1/2.5)
    attempts: Optional[int] = None  # None: the remaining evaluation budget


@dataclass(frozen=True)
class ExactCells:
    pass


@dataclass(frozen=True)
class SolverSeeded:
    k: Optional[int] = None


@dataclass(frozen=True)
class LocalRefine:
    steps: int = 200


Strategy = Union[NetSweep, PackingSweep, ExactCells, SolverSeeded, LocalRefine]


@dataclass(frozen=True)
class SearchBudget:
    max_evaluations: int = 2000
    strategies: tuple = (PackingSweep(), LocalRefine())
    seed: int = 0

    def __post_init__(self):
        if self.max_evaluations < 1:
            raise InvalidArgument("max_evaluations must be >= 1")
        object.__setattr__(self, "strategies", tuple(self.strategies))


@dataclass(eq=False)
class SearchResult:
    best_s: np.ndarray = field(repr=False)
    best_value: int
    evaluations: int
    strategy_used: str
    certificate: Optional[ShatterCertificate] = None
    witness: Optional[list] = None

    def to_json(self) -> str:
        out = {
            "best_s": self.best_s.tolist(),
            "best_value": self.best_value,
            "evaluations": self.evaluations,
            "strategy_used": self.strategy_used,
        }
        if self.certificate is not None:
            out["certificate"] = json.loads(self.certificate.to_json())
        return json.dumps(out)


def reevaluate(ens: EdgeVectorEnsemble, t: float, f: GraphFunctional, result: SearchResult) -> int:
    return f(realize_graph(ens, result.best_s, t))


# -- sweeps --------------------------------------------------------------------------


def _sweep(ens, t, f: GraphFunctional, points: np.ndarray, tag: str, limit: Optional[int] = None) -> SearchResult:
    points = np.atleast_2d(points)
    if points.shape[1] != ens.d:
        raise InvalidArgument(f"candidate dimension {points.shape[1]} != ensemble d={ens.d}")
    if limit is not None:
        points = points[:limit]
    if points.shape[0] == 0:
        raise InvalidArgument("no candidate directions")
    best_idx, best_val = -1, None
    if f.kind is Kind.ISOLATED:
        inc = np.zeros((ens.n_edges, ens.n), dtype=np.float32)
        rows = np.arange(ens.n_edges)
        for a in np.triu_indices(ens.n, 1):
            inc[rows, a] = 1.0
    for lo in range(0, points.shape[0], 256):
        block = (points[lo : lo + 256] @ ens.vectors.T) >= t
        if f.kind is Kind.ISOLATED:
            deg = block.astype(np.float32) @ inc
            vals = (deg == 0).sum(axis=1).tolist()
        else:
            vals = [f(graph_from_indicators(ens.n, row)) for row in block]
        for off, val in enumerate(vals):
            if best_val is None or f.better(val, best_val):
                best_idx, best_val = lo + off, val
    return SearchResult(points[best_idx].copy(), best_val, points.shape[0], tag)


def sweep_directions(ens, t, f, directions, tag="directions", limit=None) -> SearchResult:
    return _sweep(ens, t, f, np.asarray(directions, dtype=float), tag, limit)


def sweep_net(ens: EdgeVectorEnsemble, t: float, f: GraphFunctional, net: CoveringNet, limit=None) -> SearchResult:
    if net.d != ens.d:
        raise InvalidArgument(f"net dimension {net.d} != ensemble d={ens.d}")
    return _sweep(ens, t, f, net.points, "net-sweep", limit)


def sweep_packing(ens: EdgeVectorEnsemble, t: float, f: GraphFunctional, packing: SpherePacking, limit=None) -> SearchResult:
    if packing.d != ens.d:
        raise InvalidArgument(f"packing dimension {packing.d} != ensemble d={ens.d}")
    return _sweep(ens, t, f, packing.points, "packing-sweep", limit)


# -- exact search at t = 0 ---------------------------------------------------------


def exact_cost(N: int, d: int) -> int:
    if N <= d:
        return 2**N
    return math.comb(N, d - 1) * 2**d


def exact_extremes_small(ens: EdgeVectorEnsemble, f: GraphFunctional, t: float = 0.0) -> SearchResult:
    """True extremum of f over the whole sphere, by enumerating every cell of the
    central arrangement of edge vectors (one realizable graph per cell)."""
    if t != 0:
        raise Unsupported("exact search is restricted to t = 0")
    N = ens.n_edges
    if exact_cost(N, ens.d) > EXACT_COST_LIMIT:
        raise Unsupported(f"exact enumeration too large for C(n,2)={N}, d={ens.d}")
    patterns = enumerate_sign_patterns(ens.vectors)
    best_key, best_val = None, None
    for bits in patterns:
        val = f(graph_from_indicators(ens.n, bits))
        if best_val is None or f.better(val, best_val):
            best_key, best_val = bits, val
    return SearchResult(patterns[best_key].copy(), best_val, len(patterns), "exact-cells")


def realizable_graphs(ens: EdgeVectorEnsemble) -> dict:
    """Every graph realized at t = 0, keyed by its edge-indicator tuple."""
    return enumerate_sign_patterns(ens.vectors)


# -- solver-seeded constructions ----------------------------------------------------


def force_clique_direction(ens: EdgeVectorEnsemble, t: float, k: int, vertex_set: Optional[Sequence[int]] = None, margin=None) -> SearchResult:
    """Direction whose graph contains a clique on ``vertex_set`` (default 0..k-1)."""
    vs = sorted(vertex_set) if vertex_set is not None else list(range(k))
    if len(vs) != k or len(set(vs)) != k or (vs and (vs[0] < 0 or vs[-1] >= ens.n)):
        raise InvalidArgument(f"need {k} distinct vertices in [0, {ens.n})")
    if k < 1:
        raise InvalidArgument("k must be >= 1")
    pairs = [(vs[a], vs[b]) for a in range(k) for b in range(a + 1, k)]
    cert = solve_sign_pattern(ens, ShatterRequest(pairs, pairs, t, margin))
    g = realize_graph(ens, cert.s, t)
    f = GraphFunctional(Kind.CLIQUE, maximize=True)
    return SearchResult(cert.s, f(g), 1, "solver-clique", cert, vs)


def balanced_partition(n: int, k: int) -> list[int]:
    """Class label per vertex: k contiguous blocks of sizes differing by at most one."""
    if not (1 <= k <= n):
        raise InvalidArgument(f"need 1 <= k <= n, got k={k}, n={n}")
    return [int(c) for c, block in enumerate(np.array_split(np.arange(n), k)) for _ in block]


def force_coloring_direction(ens: EdgeVectorEnsemble, t: float, k: int, margin=None, exact_limit: int = 30) -> SearchResult:
    """Direction whose graph is properly coloured by a balanced k-partition."""
    labels = balanced_partition(ens.n, k)
    inside = [(i, j) for i in range(ens.n) for j in range(i + 1, ens.n) if labels[i] == labels[j]]
    cert = solve_sign_pattern(ens, ShatterRequest(inside, [], t, margin))
    g = realize_graph(ens, cert.s, t)
    if not is_proper_coloring(g, labels):
        raise AssertionError("partition is not a proper colouring of the certified graph")
    f = GraphFunctional(Kind.CHROMATIC, maximize=False, exact_limit=exact_limit)
    return SearchResult(cert.s, f(g), 1, "solver-coloring", cert, labels)


def force_isolated_vertex(ens: EdgeVectorEnsemble, t: float, v: int = 0, margin=None) -> SearchResult:
    """Direction in which vertex v has no edges (all n-1 incident pairs below t)."""
    pairs = [(min(v, u), max(v, u)) for u in range(ens.n) if u != v]
    cert = solve_sign_pattern(ens, ShatterRequest(pairs, [], t, margin))
    f = GraphFunctional(Kind.ISOLATED, maximize=True)
    return SearchResult(cert.s, f(realize_graph(ens, cert.s, t)), 1, "solver-isolate", cert, [v])


def force_spanning_tree(ens: EdgeVectorEnsemble, t: float, tree=None, margin=None) -> SearchResult:
    tree = path_tree(ens.n) if tree is None else tree
    cert = realize_spanning_tree(ens, tree, t, margin)
    f = GraphFunctional(Kind.CONNECTED, maximize=True)
    return SearchResult(cert.s, f(realize_graph(ens, cert.s, t)), 1, "solver-tree", cert, [list(e) for e in tree])


# -- local refinement --------------------------------------------------------------


def _incident(n: int) -> list[np.ndarray]:
    inc = [[] for _ in range(n)]
    for idx, (i, j) in enumerate(edge_list(n)):
        inc[i].append(idx)
        inc[j].append(idx)
    return [np.array(x, dtype=int) for x in inc]


def _bottleneck(f: GraphFunctional, g: GraphRealization, margins: np.ndarray, inc, width: int = 6):
    """Moves (edge index, sign) aimed at the functional's bottleneck, plus a
    continuous surrogate that ranks equal-valued directions (higher is better)."""
    n = g.n
    present = margins >= 0
    deg = np.array([int(present[e].sum()) for e in inc])
    kind, up = f.kind, f.maximize
    if (kind is Kind.ISOLATED and up) or (kind is Kind.CONNECTED and not up):
        # isolate the cheapest non-isolated vertex
        cand = np.flatnonzero(deg > 0)
        if cand.size == 0:
            return [], 0.0
        cost = np.array([np.clip(margins[inc[v]], 0, None).sum() + 1e-3 * deg[v] for v in cand])
        v = cand[int(np.argmin(cost))]
        es = inc[v][present[inc[v]]]
        es = es[np.argsort(margins[es])][:width]
        return [(int(e), -1.0) for e in es], -float(cost.min())
    if kind is Kind.ISOLATED or kind is Kind.CONNECTED:
        # join isolated vertices / components
        ncomp, labels = connected_components(g)
        labels = np.array(labels)
        edges = edge_list(n)
        cross = np.array([labels[i] != labels[j] for i, j in edges])
        if kind is Kind.ISOLATED:
            cross &= np.array([deg[i] == 0 or deg[j] == 0 for i, j in edges])
        idx = np.flatnonzero(cross)
        if idx.size == 0:
            return [], 0.0
        order = idx[np.argsort(-margins[idx])][:width]
        return [(int(e), 1.0) for e in order], float(margins[order[0]])
    # clique-type functionals
    Q = max_clique(g)
    if up:
        qmask = np.zeros(n, dtype=bool)
        qmask[Q] = True
        gaps = []
        for u in np.flatnonzero(~qmask):
            es = np.array([edge_index(u, q, n) for q in Q])
            missing = es[~present[es]]
            gaps.append((float(-margins[missing].sum()), int(u), missing))
        if not gaps:
            return [], 0.0
        gaps.sort(key=lambda g: (g[0], g[1]))
        # missing edges of the few vertices closest to extending the clique
        cand = np.concatenate([g[2] for g in gaps[:3]])
        order = cand[np.argsort(-margins[cand], kind="stable")][:width]
        return [(int(e), 1.0) for e in order], -gaps[0][0]
    es = np.array([edge_index(Q[a], Q[b], n) for a in range(len(Q)) for b in range(a + 1, len(Q))], dtype=int)
    if es.size == 0:
        return [], 0.0
    order = es[np.argsort(margins[es])][:width]
    return [(int(e), -1.0) for e in order], -float(margins[es].sum())


def local_refine(ens: EdgeVectorEnsemble, t: float, f: GraphFunctional, start, steps: int) -> SearchResult:
    """Hill climbing by moves s -> normalize(s +- gamma X_e) on bottleneck edges.

    A move is accepted when it improves the functional, or keeps it equal and
    improves the bottleneck surrogate; the value never gets worse.  gamma
    starts at 1/sqrt(d) and halves after a full round of rejected moves.
    """
    if steps < 0:
        raise InvalidArgument("steps must be >= 0")
    s = normalize(start)
    inc = _incident(ens.n)
    margins = ens.vectors @ s - t
    g = graph_from_indicators(ens.n, margins >= 0)
    val = f(g)
    moves, sur = _bottleneck(f, g, margins, inc)
    gamma = 1.0 / math.sqrt(ens.d)
    used = 0
    while used < steps and moves and gamma >= GAMMA_FLOOR:
        accepted = False
        for e, sign in moves:
            if used >= steps:
                break
            cand = s + sign * gamma * ens.vectors[e]
            if not np.any(cand):
                continue
            cand = normalize(cand)
            cm = ens.vectors @ cand - t
            cg = graph_from_indicators(ens.n, cm >= 0)
            cval = f(cg)
            used += 1
            if f.better(cval, val):
                ok = True
                cmoves, csur = _bottleneck(f, cg, cm, inc)
            elif cval == val:
                cmoves, csur = _bottleneck(f, cg, cm, inc)
                ok = csur > sur
            else:
                ok = False
            if ok:
                s, margins, g, val, moves, sur = cand, cm, cg, cval, cmoves, csur
                accepted = True
                break
        if not accepted:
            gamma /= 2
    return SearchResult(s, val, used, "local-refine")


# -- orchestration ------------------------------------------------------------------


def default_packing_theta(n: int, eps: float = 0.5) -> float:
    """theta = (log n)^(-1/(2+eps)), clipped into (0, pi/2)."""
    theta = math.log(max(n, 3)) ** (-1.0 / (2.0 + eps))
    return min(theta, math.pi / 2 - 1e-6)


def _seeded(ens, t, f: GraphFunctional, k):
    kind, up = f.kind, f.maximize
    if kind is Kind.CLIQUE and up or kind is Kind.CHROMATIC and up:
        return force_clique_direction(ens, t, k or min(ens.n, 3))
    if kind is Kind.CHROMATIC and not up:
        return force_coloring_direction(ens, t, k or max(1, ens.n // 3))
    if kind is Kind.CONNECTED and up:
        return force_spanning_tree(ens, t)
    if kind is Kind.ISOLATED and up or kind is Kind.CONNECTED and not up:
        return force_isolated_vertex(ens, t)
    raise Unsupported(f"no solver-seeded construction for {f.tag}")


def search(ens: EdgeVectorEnsemble, t: float, f: GraphFunctional, budget: SearchBudget) -> SearchResult:
    """Run the budget's strategies in order, sharing its evaluation count."""
    best: Optional[SearchResult] = None
    used = 0
    for strat in budget.strategies:
        left = budget.max_evaluations - used
        if left <= 0:
            break
        res = None
        if isinstance(strat, NetSweep):
            net = build_covering_net(ens.d, strat.eta, strat.samples, budget.seed)
            res = sweep_net(ens, t, f, net, limit=left)
        elif isinstance(strat, PackingSweep):
            theta = strat.theta or default_packing_theta(ens.n)
            pack = build_packing(ens.d, theta, strat.attempts or left, budget.seed) if ens.d >= 2 else None
            pts = pack.points if pack is not None else np.array([[1.0], [-1.0]])
            res = _sweep(ens, t, f, pts, "packing-sweep", left)
        elif isinstance(strat, ExactCells):
            res = exact_extremes_small(ens, f, t)
            if res.evaluations > left:
                raise Unsupported("exact enumeration exceeds the evaluation budget")
        elif isinstance(strat, SolverSeeded):
            try:
                res = _seeded(ens, t, f, strat.k)
            except Infeasible:
                used += 1
                continue
        elif isinstance(strat, LocalRefine):
            start = best.best_s if best is not None else canonical_direction(ens.d)
            res = local_refine(ens, t, f, start, min(strat.steps, left))
            if best is not None and not f.better(res.best_value, best.best_value):
                used += res.evaluations
                continue
        else:
            raise InvalidArgument(f"unknown strategy {strat!r}")
        used += res.evaluations
        if best is None or f.better(res.best_value, best.best_value):
            best = res
    if best is None:
        s = canonical_direction(ens.d)
        best = SearchResult(s, f(realize_graph(ens, s, t)), 1, "canonical")
        used += 1
    best.evaluations = used
    return best


def find_isolated_direction(ens: EdgeVectorEnsemble, t: float, budget: Optional[SearchBudget] = None) -> tuple[SearchResult, bool]:
    """Maximize the isolated-vertex count; success means some direction has
    an isolated vertex, so its graph is disconnected."""
    budget = budget or SearchBudget()
    f = GraphFunctional(Kind.ISOLATED, maximize=True)
    res = search(ens, t, f, budget)
    return res, res.best_value >= 1
