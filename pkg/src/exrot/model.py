"""The halfspace-indexed random graph process.

Every unordered vertex pair {i, j} carries a fixed standard Gaussian vector
X_ij in R^d.  For a unit direction s and threshold t the realized graph
keeps the pair as an edge iff <X_ij, s> >= t.  For a fixed s this is an
Erdos-Renyi graph G(n, p) with p = 1 - Phi(t).

Edge vectors are drawn from a counter-based generator keyed by
(seed, pair, coordinate).  The key of a pair does not depend on n, and the
key of a coordinate does not depend on d, so the ensemble for (n, d, seed)
is exactly the leading block of the ensemble for any (n', d', seed) with
n' >= n, d' >= d.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from math import comb
from typing import NamedTuple, Optional

import numpy as np

from .errors import InvalidArgument
from .special import check_probability, norm_cdf, norm_isf, norm_ppf

DIRECTION_TOL = 1e-12

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)


def _splitmix64(x):
    with np.errstate(over="ignore"):
        z = x + _GOLDEN
        z = (z ^ (z >> np.uint64(30))) * _MIX1
        z = (z ^ (z >> np.uint64(27))) * _MIX2
        return z ^ (z >> np.uint64(31))


def keyed_normals(seed: int, pair_keys, d: int) -> np.ndarray:
    """Standard normals for each (pair key, coordinate), shape (len(pair_keys), d).

    Uniforms are taken from the top 53 bits of a nested SplitMix64 hash and
    mapped through the normal quantile function, so every entry depends
    only on (seed, pair key, coordinate).
    """
    seed_h = _splitmix64(np.uint64(int(seed) & 0xFFFFFFFFFFFFFFFF))
    pk = np.asarray(pair_keys, dtype=np.uint64)
    rows = _splitmix64(seed_h ^ pk)
    coords = np.arange(d, dtype=np.uint64)
    out = np.empty((pk.shape[0], d))
    step = max(1, (1 << 21) // max(d, 1))
    for lo in range(0, pk.shape[0], step):
        h = _splitmix64(rows[lo : lo + step, None] ^ coords[None, :])
        u = ((h >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53
        out[lo : lo + step] = norm_ppf(u)
    return out


class EdgeKey(NamedTuple):
    i: int
    j: int


def edge_key(i: int, j: int) -> EdgeKey:
    i, j = int(i), int(j)
    if i == j:
        raise InvalidArgument(f"self-pair ({i}, {j}) is not an edge")
    return EdgeKey(i, j) if i < j else EdgeKey(j, i)


def edge_index(i: int, j: int, n: int) -> int:
    """Position of pair {i, j} in lexicographic (i, j) order on n vertices."""
    i, j = edge_key(i, j)
    if j >= n or i < 0:
        raise InvalidArgument(f"edge ({i}, {j}) out of range for n={n}")
    return i * n - i * (i + 1) // 2 + (j - i - 1)


def edge_list(n: int) -> list[EdgeKey]:
    return [EdgeKey(i, j) for i in range(n) for j in range(i + 1, n)]


def _colex_keys(n: int) -> np.ndarray:
    iu, ju = np.triu_indices(n, 1)
    return (ju * (ju - 1) // 2 + iu).astype(np.uint64)


@dataclass(frozen=True, eq=False)
class EdgeVectorEnsemble:
    """C(n, 2) Gaussian d-vectors, rows in lexicographic (i, j) order."""

    n: int
    d: int
    seed: int
    vectors: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = self.vectors
        if v.shape != (comb(self.n, 2), self.d):
            raise InvalidArgument(f"vectors shape {v.shape} != ({comb(self.n, 2)}, {self.d})")
        v.setflags(write=False)

    @property
    def n_edges(self) -> int:
        return self.vectors.shape[0]

    def vector(self, e) -> np.ndarray:
        return self.vectors[edge_index(e[0], e[1], self.n)]

    def identical(self, other: "EdgeVectorEnsemble") -> bool:
        return (
            (self.n, self.d, self.seed) == (other.n, other.d, other.seed)
            and self.vectors.tobytes() == other.vectors.tobytes()
        )


def sample_ensemble(n: int, d: int, seed: int) -> EdgeVectorEnsemble:
    if n < 2 or d < 1:
        raise InvalidArgument(f"need n >= 2 and d >= 1, got n={n}, d={d}")
    vecs = keyed_normals(seed, _colex_keys(n), d)
    return EdgeVectorEnsemble(int(n), int(d), int(seed), np.ascontiguousarray(vecs))


def ensemble_from_vectors(n: int, vectors, seed: int = 0) -> EdgeVectorEnsemble:
    """Wrap hand-built edge vectors (rows in lexicographic pair order)."""
    v = np.array(vectors, dtype=np.float64, ndmin=2)
    return EdgeVectorEnsemble(int(n), v.shape[1], int(seed), v)


# -- density and threshold ---------------------------------------------------


def threshold_from_density(p: float) -> float:
    """t with 1 - Phi(t) = p."""
    return float(norm_isf(check_probability(p))) + 0.0  # no negative zero


def density_from_threshold(t: float) -> float:
    return float(norm_cdf(-t))


@dataclass(frozen=True)
class DensitySpec:
    p: float
    t: float

    @classmethod
    def from_p(cls, p: float) -> "DensitySpec":
        return cls(float(p), threshold_from_density(p))

    @classmethod
    def from_t(cls, t: float) -> "DensitySpec":
        return cls(density_from_threshold(t), float(t))


# -- directions --------------------------------------------------------------


def as_direction(s, d: Optional[int] = None) -> np.ndarray:
    """Validate a unit vector; raises on wrong dimension or norm."""
    s = np.asarray(s, dtype=np.float64).reshape(-1)
    if d is not None and s.shape[0] != d:
        raise InvalidArgument(f"direction has dimension {s.shape[0]}, expected {d}")
    if abs(np.linalg.norm(s) - 1.0) > DIRECTION_TOL:
        raise InvalidArgument(f"direction is not unit norm (|s| = {np.linalg.norm(s)!r})")
    return s


def normalize(v) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64).reshape(-1)
    nrm = np.linalg.norm(v)
    if nrm == 0.0:
        raise InvalidArgument("cannot normalize the zero vector")
    out = v / nrm
    # one refinement pass keeps |out| within an ulp or two of 1
    return out / np.linalg.norm(out)


def canonical_direction(d: int) -> np.ndarray:
    e = np.zeros(d)
    e[0] = 1.0
    return e


# -- realizations ------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class GraphRealization:
    n: int
    adjacency: np.ndarray = field(repr=False)
    seed: Optional[int] = None
    s: Optional[np.ndarray] = field(default=None, repr=False)
    t: Optional[float] = None

    def __post_init__(self):
        a = self.adjacency
        if a.shape != (self.n, self.n) or a.dtype != bool:
            raise InvalidArgument("adjacency must be an n x n boolean matrix")
        if a.diagonal().any() or not np.array_equal(a, a.T):
            raise InvalidArgument("adjacency must be symmetric with zero diagonal")
        a.setflags(write=False)

    @property
    def n_edges(self) -> int:
        return int(self.adjacency.sum()) // 2

    def edges(self) -> list[EdgeKey]:
        iu, ju = np.nonzero(np.triu(self.adjacency, 1))
        return [EdgeKey(int(i), int(j)) for i, j in zip(iu, ju)]

    def has_edge(self, i: int, j: int) -> bool:
        return bool(self.adjacency[i, j])

    def edge_indicators(self) -> np.ndarray:
        """Presence flags in lexicographic pair order."""
        return self.adjacency[np.triu_indices(self.n, 1)]


def graph_from_edges(n: int, edges) -> GraphRealization:
    a = np.zeros((n, n), dtype=bool)
    for i, j in edges:
        a[i, j] = a[j, i] = True
    return GraphRealization(n, a)


def graph_from_indicators(n: int, present) -> GraphRealization:
    a = np.zeros((n, n), dtype=bool)
    iu = np.triu_indices(n, 1)
    a[iu] = np.asarray(present, dtype=bool)
    return GraphRealization(n, a | a.T)


def realize_graph(ens: EdgeVectorEnsemble, s, t: float) -> GraphRealization:
    s = np.asarray(s, dtype=np.float64).reshape(-1)
    if s.shape[0] != ens.d:
        raise InvalidArgument(f"direction has dimension {s.shape[0]}, ensemble has d={ens.d}")
    present = ens.vectors @ s >= t
    g = graph_from_indicators(ens.n, present)
    return GraphRealization(ens.n, g.adjacency, seed=ens.seed, s=s.copy(), t=float(t))


def realize_indicators(ens: EdgeVectorEnsemble, directions, t: float) -> np.ndarray:
    """Edge presence for many directions at once: shape (m, C(n, 2))."""
    S = np.atleast_2d(np.asarray(directions, dtype=np.float64))
    if S.shape[1] != ens.d:
        raise InvalidArgument(f"directions have dimension {S.shape[1]}, ensemble has d={ens.d}")
    return (S @ ens.vectors.T) >= t


def edge_margin(ens: EdgeVectorEnsemble, s, e, t: float = 0.0) -> float:
    """<X_e, s> - t; non-negative exactly when e is an edge of the realization."""
    s = np.asarray(s, dtype=np.float64).reshape(-1)
    if s.shape[0] != ens.d:
        raise InvalidArgument(f"direction has dimension {s.shape[0]}, ensemble has d={ens.d}")
    i, j = e
    if not (0 <= min(i, j) and max(i, j) < ens.n) or i == j:
        raise InvalidArgument(f"unknown edge key {tuple(e)!r} for n={ens.n}")
    return float(ens.vector(e) @ s - t)


def edge_margins(ens: EdgeVectorEnsemble, s, t: float = 0.0) -> np.ndarray:
    return ens.vectors @ np.asarray(s, dtype=np.float64) - t


# -- binary ensemble files ---------------------------------------------------

MAGIC = b"XGRE"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sIIIQ")


def save_ensemble(ens: EdgeVectorEnsemble, path) -> None:
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, FORMAT_VERSION, ens.n, ens.d, ens.seed & 0xFFFFFFFFFFFFFFFF))
        fh.write(np.ascontiguousarray(ens.vectors, dtype="<f8").tobytes())


def load_ensemble(path) -> EdgeVectorEnsemble:
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _HEADER.size:
        raise InvalidArgument(f"{path}: truncated header")
    magic, version, n, d, seed = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise InvalidArgument(f"{path}: bad magic {magic!r}")
    if version != FORMAT_VERSION:
        raise InvalidArgument(f"{path}: unsupported version {version}")
    body = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size)
    if body.size != comb(n, 2) * d:
        raise InvalidArgument(f"{path}: expected {comb(n, 2) * d} values, found {body.size}")
    return EdgeVectorEnsemble(n, d, seed, body.astype(np.float64).reshape(comb(n, 2), d))
