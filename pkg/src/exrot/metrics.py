"""Exact graph functionals on realized graphs.

Vertex neighbourhoods are held as Python ints used as bitsets; the clique
search is a colour-bounded branch and bound (MCQ style) and the exact
chromatic number is a DSATUR branch and bound seeded with a maximum clique.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import asdict, dataclass
from typing import NamedTuple, Optional

import numpy as np

from .errors import InvalidArgument
from .model import GraphRealization

DEFAULT_EXACT_LIMIT = 30


def neighbour_masks(g: GraphRealization) -> list[int]:
    masks = []
    for row in g.adjacency:
        m = 0
        for j in np.flatnonzero(row):
            m |= 1 << int(j)
        masks.append(m)
    return masks


def _bits(mask: int):
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


# -- clique -----------------------------------------------------------------


def max_clique(g: GraphRealization) -> list[int]:
    """A maximum clique (sorted vertex list); a single vertex when edgeless."""
    n = g.n
    if n == 0:
        return []
    nb = neighbour_masks(g)
    # relabel so low bit positions are high-degree vertices
    order = sorted(range(n), key=lambda v: (-nb[v].bit_count(), v))
    pos = {v: k for k, v in enumerate(order)}
    rn = [0] * n
    for v in range(n):
        m = 0
        for u in _bits(nb[v]):
            m |= 1 << pos[u]
        rn[pos[v]] = m

    best: list[int] = [0]
    current: list[int] = []

    def colour_sort(P: int):
        verts, bounds = [], []
        k = 0
        U = P
        while U:
            k += 1
            Q = U
            while Q:
                low = Q & -Q
                v = low.bit_length() - 1
                Q &= ~rn[v] & ~low
                U &= ~low
                verts.append(v)
                bounds.append(k)
        return verts, bounds

    def expand(P: int):
        nonlocal best
        verts, bounds = colour_sort(P)
        for idx in range(len(verts) - 1, -1, -1):
            if len(current) + bounds[idx] <= len(best):
                return
            v = verts[idx]
            current.append(v)
            NP = P & rn[v]
            if NP:
                expand(NP)
            elif len(current) > len(best):
                best = list(current)
            current.pop()
            P &= ~(1 << v)

    expand((1 << n) - 1)
    return sorted(order[v] for v in best)


def clique_number(g: GraphRealization) -> int:
    return len(max_clique(g))


# -- colouring --------------------------------------------------------------


class ChromaticBounds(NamedTuple):
    lower: int
    upper: int
    exact: Optional[int]


def dsatur_coloring(g: GraphRealization) -> list[int]:
    """Greedy DSATUR colouring; colours are 0-based."""
    n = g.n
    nb = neighbour_masks(g)
    colour = [-1] * n
    sat = [0] * n  # bitset of neighbour colours
    deg = [m.bit_count() for m in nb]
    for _ in range(n):
        v = max(
            (u for u in range(n) if colour[u] < 0),
            key=lambda u: (sat[u].bit_count(), deg[u], -u),
        )
        c = 0
        while sat[v] >> c & 1:
            c += 1
        colour[v] = c
        for u in _bits(nb[v]):
            sat[u] |= 1 << c
    return colour


def is_proper_coloring(g: GraphRealization, colour) -> bool:
    colour = np.asarray(colour)
    iu, ju = np.nonzero(np.triu(g.adjacency, 1))
    return bool(np.all(colour[iu] != colour[ju]))


def _exact_chromatic(g: GraphRealization, lower: int, upper: int, clique: list[int]) -> int:
    n = g.n
    nb = neighbour_masks(g)
    colour = [-1] * n
    sat = [0] * n
    best = upper
    for c, v in enumerate(clique):
        colour[v] = c
        for u in _bits(nb[v]):
            sat[u] |= 1 << c
    uncoloured = {v for v in range(n) if colour[v] < 0}
    used0 = len(clique)

    def solve(used: int) -> bool:
        nonlocal best
        if not uncoloured:
            best = used
            return best == lower
        free = _mask(uncoloured)
        v = max(
            uncoloured,
            key=lambda u: (sat[u].bit_count(), (nb[u] & free).bit_count(), -u),
        )
        uncoloured.discard(v)
        limit = min(used + 1, best - 1)
        for c in range(limit):
            if sat[v] >> c & 1:
                continue
            touched = [u for u in _bits(nb[v]) if not (sat[u] >> c & 1)]
            colour[v] = c
            for u in touched:
                sat[u] |= 1 << c
            done = solve(max(used, c + 1))
            for u in touched:
                sat[u] &= ~(1 << c)
            colour[v] = -1
            if done:
                uncoloured.add(v)
                return True
            if used >= best:
                break
        uncoloured.add(v)
        return False

    if best > lower:
        solve(used0)
    return best


def _mask(vs) -> int:
    m = 0
    for v in vs:
        m |= 1 << v
    return m


def chromatic_number(g: GraphRealization, exact_limit: int = DEFAULT_EXACT_LIMIT) -> ChromaticBounds:
    if g.n == 0:
        return ChromaticBounds(0, 0, 0)
    clique = max_clique(g)
    lower = len(clique)
    upper = max(dsatur_coloring(g)) + 1
    if g.n > exact_limit:
        return ChromaticBounds(lower, upper, None)
    exact = upper if upper == lower else _exact_chromatic(g, lower, upper, clique)
    return ChromaticBounds(lower, upper, exact)


# -- connectivity -------------------------------------------------------------


def connected_components(g: GraphRealization) -> tuple[int, list[int]]:
    """Component count and per-vertex labels, numbered by smallest member."""
    nb = neighbour_masks(g)
    labels = [-1] * g.n
    count = 0
    for v in range(g.n):
        if labels[v] >= 0:
            continue
        seen = frontier = 1 << v
        while frontier:
            nxt = 0
            for u in _bits(frontier):
                nxt |= nb[u]
            frontier = nxt & ~seen
            seen |= nxt
        for u in _bits(seen):
            labels[u] = count
        count += 1
    return count, labels


def is_connected(g: GraphRealization) -> bool:
    return connected_components(g)[0] == 1


def isolated_vertices(g: GraphRealization) -> int:
    return int(np.count_nonzero(~g.adjacency.any(axis=1)))


# -- reference scales ---------------------------------------------------------


def matula_omega(n: float) -> float:
    """Typical clique number scale 2 log2 n - 2 log2 log2 n + 2 log2 e - 1 of G(n, 1/2)."""
    if n < 3:
        raise InvalidArgument(f"matula_omega needs n >= 3, got {n}")
    l2 = math.log2(n)
    return 2 * l2 - 2 * math.log2(l2) + 2 * math.log2(math.e) - 1


def matula_omega_p(n: float, p: float) -> float:
    """The same scale for G(n, p), with logarithms to base 1/p."""
    b = 1.0 / p
    lb = math.log(n, b)
    return 2 * lb - 2 * math.log(lb, b) + 2 * math.log(math.e / 2, b) + 1


def bollobas_chromatic_scale(n: float) -> float:
    if n < 2:
        raise InvalidArgument(f"bollobas_chromatic_scale needs n >= 2, got {n}")
    return n / (2 * math.log2(n))


# -- functionals --------------------------------------------------------------


class Kind(str, enum.Enum):
    CLIQUE = "clique"
    CHROMATIC = "chromatic"
    CONNECTED = "connected"
    ISOLATED = "isolated"


@dataclass(frozen=True)
class GraphFunctional:
    """An integer graph functional together with the direction of optimisation.

    Chromatic number uses the exact value when the graph is small enough and
    the DSATUR upper bound otherwise; connectivity evaluates to 0 or 1.
    """

    kind: Kind
    maximize: bool = True
    exact_limit: int = DEFAULT_EXACT_LIMIT

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))

    def __call__(self, g: GraphRealization) -> int:
        if self.kind is Kind.CLIQUE:
            return clique_number(g)
        if self.kind is Kind.CHROMATIC:
            b = chromatic_number(g, self.exact_limit)
            return b.exact if b.exact is not None else b.upper
        if self.kind is Kind.CONNECTED:
            return int(is_connected(g))
        return isolated_vertices(g)

    def better(self, a, b) -> bool:
        """True when value ``a`` strictly improves on ``b``."""
        return a > b if self.maximize else a < b

    @property
    def tag(self) -> str:
        return f"{'max' if self.maximize else 'min'}-{self.kind.value}"


@dataclass(frozen=True)
class MetricReport:
    clique: int
    chromatic_lower: int
    chromatic_upper: int
    chromatic_exact: Optional[int]
    components: int
    isolated: int

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=False)


def metric_report(g: GraphRealization, exact_limit: int = DEFAULT_EXACT_LIMIT) -> MetricReport:
    chi = chromatic_number(g, exact_limit)
    return MetricReport(
        clique=chi.lower,
        chromatic_lower=chi.lower,
        chromatic_upper=chi.upper,
        chromatic_exact=chi.exact,
        components=connected_components(g)[0],
        isolated=isolated_vertices(g),
    )
