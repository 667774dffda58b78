"""Numerical and Monte Carlo checks of the probabilistic bounds behind the
graph process.

Each check returns a :class:`BoundCheckReport`.  Monte Carlo checks compare
estimates with their bounds at a uniform tolerance of four standard errors.
Trials are drawn in fixed-size blocks, each from its own generator seeded by
``(seed, block index)``, so the aggregate does not depend on scheduling.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Optional

import mpmath
import numpy as np
from scipy import integrate, stats

from .errors import InvalidArgument, Unsupported
from .geometry import cap_area_fraction
from .metrics import chromatic_number, clique_number, connected_components, isolated_vertices, matula_omega_p
from .special import betainc, log_norm_sf, norm_sf

SIGMAS = 4.0
BLOCK = 1 << 18
REL_TOL = 1e-12
ISOLATED_EXACT_MAX_N = 120


@dataclass
class BoundCheckReport:
    name: str
    grid_or_trials: str
    observed: object
    bound: object
    satisfied: bool
    slack: float
    assertable: bool = True
    config: dict = field(default_factory=dict)
    rows: list = field(default_factory=list, repr=False)
    extra: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(
            {"name": self.name, "satisfied": bool(self.satisfied), "slack": _finite(self.slack), "config": self.config}
        )

    def csv_rows(self) -> list[dict]:
        return self.rows


def _finite(x):
    x = float(x)
    return x if math.isfinite(x) else ("inf" if x > 0 else "-inf" if x < 0 else "nan")


def _blocks(trials: int, seed: int):
    """Yield (block index, generator, size) covering ``trials`` draws."""
    if trials < 1:
        raise InvalidArgument("trials must be >= 1")
    for b, lo in enumerate(range(0, trials, BLOCK)):
        yield b, np.random.default_rng([int(seed), b]), min(BLOCK, trials - lo)


def standard_error(p_hat: float, trials: int) -> float:
    return math.sqrt(max(p_hat * (1.0 - p_hat), 0.0) / trials)


def trial_seed(seed: int, trial: int) -> int:
    """Independent u64 seed for one trial of a seeded experiment."""
    return int(np.random.SeedSequence([int(seed), int(trial)]).generate_state(1, np.uint64)[0])


# -- Gaussian tail sandwich ------------------------------------------------------


def default_tail_grid():
    rs = np.round(np.arange(1, 51) * 0.1, 10)
    hs = np.round(np.arange(0, 31) * 0.1, 10)
    return [(float(r), float(h)) for r in rs for h in hs]


def gaussian_tail_sandwich_check(grid=None) -> BoundCheckReport:
    """exp(-hr - h/r - h^2/2) <= Q(r+h)/Q(r) <= exp(-hr - h^2/2) on a grid,
    Q the standard normal upper tail; compared in log space."""
    grid = default_tail_grid() if grid is None else list(grid)
    rows, worst = [], math.inf
    ok_all = True
    for r, h in grid:
        if r <= 0 or h < 0:
            raise InvalidArgument(f"need r > 0 and h >= 0, got r={r}, h={h}")
        log_ratio = float(log_norm_sf(r + h) - log_norm_sf(r))
        log_lo = -h * r - h / r - h * h / 2
        log_hi = -h * r - h * h / 2
        # relative tolerance on the ratio is an absolute one on its log
        ok = log_lo <= log_ratio + REL_TOL and log_ratio <= log_hi + REL_TOL
        slack = min(log_ratio - log_lo, log_hi - log_ratio)
        worst = min(worst, slack)
        ok_all &= ok
        rows.append({"r": r, "h": h, "ratio": math.exp(log_ratio), "lower": math.exp(log_lo), "upper": math.exp(log_hi), "ok": ok})
    return BoundCheckReport(
        "tailsgaussian",
        f"grid of {len(grid)} (r, h) points",
        [row["ratio"] for row in rows],
        [(row["lower"], row["upper"]) for row in rows],
        ok_all,
        worst,
        config={"points": len(grid), "rel_tol": REL_TOL},
        rows=rows,
    )


# -- caps ------------------------------------------------------------------------


def caps_half_exact(d: int, eta: float) -> float:
    """P{-eta~ < U_1 < 0} for U uniform on S^{d-1}, eta~ = eta sqrt(1 - eta^2/2)."""
    et = eta * math.sqrt(1.0 - eta * eta / 2)
    return 0.5 * float(betainc(0.5, (d - 1) / 2.0, et * et))


def _first_coordinate(rng, d: int, size: int) -> np.ndarray:
    x1 = rng.standard_normal(size)
    rest = rng.chisquare(d - 1, size)
    return x1 / np.sqrt(x1 * x1 + rest)


def caps_half_prob_check(d: int, eta: float, trials: int = 1_000_000, seed: int = 0) -> BoundCheckReport:
    if d < 12:
        raise InvalidArgument(f"caps_half needs d >= 12, got {d}")
    if not (0.0 < eta <= 1.0):
        raise InvalidArgument(f"eta must lie in (0, 1], got {eta}")
    et = eta * math.sqrt(1.0 - eta * eta / 2)
    hits = 0
    rows = []
    for b, rng, size in _blocks(trials, seed):
        u = _first_coordinate(rng, d, size)
        k = int(np.count_nonzero((u > -et) & (u < 0)))
        hits += k
        rows.append({"block": b, "trials": size, "hits": k})
    est = hits / trials
    se = standard_error(est, trials)
    bound = eta * math.sqrt(d / (2 * math.pi))
    bound_dm1 = eta * math.sqrt((d - 1) / (2 * math.pi))
    exact = caps_half_exact(d, eta)
    return BoundCheckReport(
        "caps_half",
        f"{trials} trials",
        est,
        bound,
        est <= bound + SIGMAS * se,
        bound + SIGMAS * se - est,
        config={"d": d, "eta": eta, "trials": trials, "seed": seed},
        rows=rows,
        extra={"se": se, "bound_d_minus_1": bound_dm1, "exact": exact, "exact_within_4se": abs(est - exact) <= SIGMAS * se},
    )


def cap_area_mc(d: int, alpha: float, trials: int = 1_000_000, seed: int = 0) -> tuple[float, float]:
    """Monte Carlo estimate (and standard error) of the normalized cap area."""
    c = math.cos(alpha)
    hits = 0
    for _, rng, size in _blocks(trials, seed):
        hits += int(np.count_nonzero(_first_coordinate(rng, d, size) >= c)) if d > 1 else 0
    est = hits / trials
    return est, standard_error(est, trials)


def cap_area_check(dims=(2, 3, 5, 10), alphas=(math.pi / 6, math.pi / 3, math.pi / 2), trials=1_000_000, seed=0) -> BoundCheckReport:
    rows, ok_all, worst = [], True, math.inf
    for d in dims:
        for a in alphas:
            exact = cap_area_fraction(d, a)
            est, se = cap_area_mc(d, a, trials, seed)
            ok = abs(est - exact) <= SIGMAS * se
            if d == 3:
                ok &= abs(exact - (1 - math.cos(a)) / 2) <= 1e-10
            worst = min(worst, SIGMAS * se - abs(est - exact))
            ok_all &= ok
            rows.append({"d": d, "alpha": a, "exact": exact, "estimate": est, "se": se, "ok": ok})
    return BoundCheckReport(
        "cap_area",
        f"{len(rows)} (d, alpha) points x {trials} trials",
        [r["estimate"] for r in rows],
        [r["exact"] for r in rows],
        ok_all,
        worst,
        config={"dims": list(dims), "alphas": list(alphas), "trials": trials, "seed": seed},
        rows=rows,
    )


# -- stochastic domination of the cap envelope -----------------------------------


def max_cap_alpha(d: int, eps: float, t: float) -> float:
    return math.atan(eps / (max(t, 1.0) * math.sqrt(d - 1)))


def eps_prime(eps: float, t: float, c: float) -> float:
    return eps + c * (eps * eps + eps / max(t * t, 1.0))


def cap_envelope(N: np.ndarray, chi: np.ndarray, alpha: float) -> tuple[np.ndarray, np.ndarray]:
    """Max and min of <X, s'> over the cap of angle alpha around s, where
    N = <X, s> and chi is the norm of the component of X orthogonal to s."""
    R = np.hypot(N, chi)
    phi = np.arctan2(chi, N)
    ca, sa = math.cos(alpha), math.sin(alpha)
    hi = np.where(phi <= alpha, R, N * ca + chi * sa)
    lo = np.where(phi + alpha >= math.pi, -R, N * ca - chi * sa)
    return hi, lo


def domination_check(d: int, eps: float, t: float, alpha: Optional[float] = None, trials: int = 1_000_000, seed: int = 0, c: float = 10.0) -> BoundCheckReport:
    """Edge frequencies of the union / intersection of all graphs over a cap
    against (1 +- eps') p, with the per-trial chain Gamma- <= Gamma <= Gamma+."""
    if not (0.0 < eps < 0.5):
        raise InvalidArgument(f"eps must lie in (0, 1/2), got {eps}")
    if d < 2:
        raise InvalidArgument("domination check needs d >= 2")
    a_max = max_cap_alpha(d, eps, t)
    alpha = a_max if alpha is None else float(alpha)
    if not (0.0 <= alpha <= math.pi / 2) or math.tan(alpha) > math.tan(a_max) * (1 + 1e-12):
        raise InvalidArgument(f"alpha={alpha} violates tan(alpha) <= eps/((t v 1) sqrt(d-1))")
    p = float(norm_sf(t))
    plus = single = minus = violations = 0
    rows = []
    for b, rng, size in _blocks(trials, seed):
        N = rng.standard_normal(size)
        chi = np.sqrt(rng.chisquare(d - 1, size))
        hi, lo = cap_envelope(N, chi, alpha)
        e_plus, e_one, e_minus = hi >= t, N >= t, lo >= t
        violations += int(np.count_nonzero(e_minus & ~e_one) + np.count_nonzero(e_one & ~e_plus))
        kp, k1, km = (int(np.count_nonzero(x)) for x in (e_plus, e_one, e_minus))
        plus, single, minus = plus + kp, single + k1, minus + km
        rows.append({"block": b, "trials": size, "plus": kp, "single": k1, "minus": km})
    fp, f1, fm = plus / trials, single / trials, minus / trials
    sp, sm = standard_error(fp, trials), standard_error(fm, trials)
    ep = eps_prime(eps, t, c)
    up, low = (1 + ep) * p, (1 - ep) * p
    ok = violations == 0 and fp <= up + SIGMAS * sp and fm >= low - SIGMAS * sm
    slack = min(up + SIGMAS * sp - fp, fm - low + SIGMAS * sm)
    # smallest constant for which both marginal checks would pass
    k = eps * eps + eps / max(t * t, 1.0)
    c_min = max(0.0, (fp - SIGMAS * sp - (1 + eps) * p) / (k * p), ((1 - eps) * p - SIGMAS * sm - fm) / (k * p))
    return BoundCheckReport(
        "capsandprobs",
        f"{trials} trials",
        {"plus": fp, "single": f1, "minus": fm},
        {"plus": up, "minus": low, "p": p},
        bool(ok),
        slack,
        config={"d": d, "eps": eps, "t": t, "alpha": alpha, "c": c, "trials": trials, "seed": seed},
        rows=rows,
        extra={"violations": violations, "eps_prime": ep, "c_min": c_min, "se_plus": sp, "se_minus": sm},
    )


# -- correlations between edge events ----------------------------------------------


def correlation_rhs(theta: float, t: float, C: float) -> float:
    """Right-hand side of the joint above-threshold bound (inf when gamma >= 1)."""
    p = float(norm_sf(t))
    xi = 1.0 - math.cos(theta)
    gamma = xi * xi / math.sin(theta)
    if gamma >= 1.0:
        return math.inf
    expo = gamma * (1 - gamma) * t * t + gamma / (1 - gamma) + gamma * gamma * t * t / 2
    if expo > 700:
        return math.inf
    return p * ((C * p * t) ** (2 * xi + xi * xi) + math.exp(expo) * p)


def joint_above_exact(theta: float, t: float) -> float:
    """P{N1 >= t, eta N1 + sqrt(1 - eta^2) N2 >= t}, eta = cos theta, by quadrature."""
    eta, st = math.cos(theta), math.sin(theta)
    if st < 1e-15:
        return float(norm_sf(t)) if eta > 0 else 0.0

    def integrand(x):
        return stats.norm.pdf(x) * float(norm_sf((t - eta * x) / st))

    val, _ = integrate.quad(integrand, t, math.inf, epsabs=1e-14, epsrel=1e-12, limit=200)
    return val


def correlation_bound_check(theta: float, t: float, trials: int = 10_000_000, seed: int = 0, C: float = 10.0) -> BoundCheckReport:
    if t < 1:
        raise InvalidArgument(f"correlation bound needs t >= 1, got {t}")
    if not (0.0 < theta < math.pi):
        raise InvalidArgument(f"theta must lie in (0, pi), got {theta}")
    eta, st = math.cos(theta), math.sin(theta)
    p = float(norm_sf(t))
    above = below = 0
    rows = []
    for b, rng, size in _blocks(trials, seed):
        n1 = rng.standard_normal(size)
        y = eta * n1 + st * rng.standard_normal(size)
        ka = int(np.count_nonzero((n1 >= t) & (y >= t)))
        kb = int(np.count_nonzero((n1 < t) & (y < t)))
        above, below = above + ka, below + kb
        rows.append({"block": b, "trials": size, "above": ka, "below": kb})
    fa, fb = above / trials, below / trials
    sa, sb = standard_error(fa, trials), standard_error(fb, trials)
    rhs = correlation_rhs(theta, t, C)
    rhs_b = 1 - 2 * p + rhs
    ok = fa <= rhs + SIGMAS * sa and fb <= rhs_b + SIGMAS * sb
    slack = min(rhs + SIGMAS * sa - fa, rhs_b + SIGMAS * sb - fb)
    exact = joint_above_exact(theta, t)
    return BoundCheckReport(
        "correlations",
        f"{trials} trials",
        {"above": fa, "below": fb},
        {"above": rhs, "below": rhs_b},
        bool(ok),
        slack,
        config={"theta": theta, "t": t, "C": C, "trials": trials, "seed": seed},
        rows=rows,
        extra={
            "p": p,
            "xi": 1 - eta,
            "gamma": (1 - eta) ** 2 / st,
            "exact_above": exact,
            "exact_below": 1 - 2 * p + exact,
            "se_above": sa,
            "se_below": sb,
            "C_min": correlation_c_min(theta, t, fa - SIGMAS * sa, fb - SIGMAS * sb),
        },
    )


def correlation_c_min(theta: float, t: float, above: float, below: float) -> float:
    """Smallest C making both bounds hold for the given (tolerance-adjusted) values."""
    p = float(norm_sf(t))
    xi = 1.0 - math.cos(theta)
    gamma = xi * xi / math.sin(theta)
    if gamma >= 1.0:
        return 0.0
    expo = gamma * (1 - gamma) * t * t + gamma / (1 - gamma) + gamma * gamma * t * t / 2
    if expo > 700:
        return 0.0
    need = max(above, below - (1 - 2 * p)) / p - math.exp(expo) * p
    if need <= 0:
        return 0.0
    return need ** (1.0 / (2 * xi + xi * xi)) / (p * t)


# -- isolated vertices --------------------------------------------------------------


def isolated_prob_exact(n: int, p: float) -> float:
    """P(G(n, p) has no isolated vertex) by inclusion-exclusion over the set of
    vertices forced to be isolated, summed at extended precision."""
    if not (0.0 < p < 1.0):
        raise InvalidArgument(f"p must lie in (0, 1), got {p}")
    if n < 1:
        raise InvalidArgument(f"n must be >= 1, got {n}")
    if n > ISOLATED_EXACT_MAX_N:
        raise Unsupported(f"alternating sum unsupported for n > {ISOLATED_EXACT_MAX_N}")
    with mpmath.workdps(30 + n):
        q = 1 - mpmath.mpf(p)
        total = mpmath.mpf(0)
        for j in range(n + 1):
            term = mpmath.binomial(n, j) * q ** (j * (n - j) + j * (j - 1) // 2)
            total += -term if j % 2 else term
        return float(total)


def isolated_prob_mc(n: int, p: float, trials: int, seed: int = 0) -> tuple[float, float]:
    """Monte Carlo P(no isolated vertex) over direct G(n, p) samples."""
    iu = np.triu_indices(n, 1)
    N = iu[0].size
    inc = np.zeros((N, n), dtype=np.float32)
    for a in iu:
        inc[np.arange(N), a] = 1.0
    ok = 0
    for _, rng, size in _blocks(trials, seed):
        for lo in range(0, size, 4096):
            m = min(4096, size - lo)
            present = rng.random((m, N)) < p
            deg = present.astype(np.float32) @ inc
            ok += int(np.count_nonzero((deg > 0).all(axis=1)))
    est = ok / trials
    return est, standard_error(est, trials)


def oconnell_bound_report(n: int, c: float) -> BoundCheckReport:
    """Observational comparison of P(no isolated vertex) at p = c log n / n
    with exp(-n^(1-c)/3); the bound is only claimed for large n."""
    if not (0.0 < c < 1.0):
        raise InvalidArgument(f"c must lie in (0, 1), got {c}")
    p = c * math.log(n) / n
    exact = isolated_prob_exact(n, p)
    bound = math.exp(-(n ** (1 - c)) / 3)
    return BoundCheckReport(
        "oconnell",
        f"n={n}",
        exact,
        bound,
        exact <= bound,
        bound - exact,
        assertable=False,
        config={"n": n, "c": c, "p": p},
        rows=[{"n": n, "c": c, "p": p, "exact": exact, "bound": bound, "holds": exact <= bound}],
    )


def oconnell_grid_report(ns=tuple(range(20, 121, 10)), c: float = 0.5) -> BoundCheckReport:
    rows = [oconnell_bound_report(n, c).rows[0] for n in ns]
    gaps = [r["bound"] - r["exact"] for r in rows]
    holds = [r["holds"] for r in rows]
    first = next((r["n"] for r in rows if r["holds"]), None)
    return BoundCheckReport(
        "oconnell",
        f"n in {list(ns)}",
        [r["exact"] for r in rows],
        [r["bound"] for r in rows],
        all(holds),
        min(gaps),
        assertable=False,
        config={"ns": list(ns), "c": c},
        rows=rows,
        extra={"first_n_holding": first, "holds_from_first_on": first is not None and all(holds[[r["n"] for r in rows].index(first):])},
    )


# -- clique number lower tail -----------------------------------------------------


def wilson_interval(k: int, n: int) -> tuple[float, float]:
    ci = stats.binomtest(k, n).proportion_ci(confidence_level=0.95, method="wilson")
    return float(ci.low), float(ci.high)


def _gnp(rng, n: int, p: float):
    from .model import graph_from_indicators

    return graph_from_indicators(n, rng.random(n * (n - 1) // 2) < p)


def clique_lowertail_sim(n: int, p: float, delta: float, trials: int, seed: int = 0) -> BoundCheckReport:
    """Frequency of {clique number < k}, k = floor(omega_p - delta); observational."""
    if delta <= 2:
        raise InvalidArgument(f"delta must exceed 2, got {delta}")
    if n > 80:
        raise Unsupported("clique lower-tail simulation is limited to n <= 80")
    k = math.floor(matula_omega_p(n, p) - delta)
    if k < 2:
        raise InvalidArgument(f"k = floor(omega - delta) = {k} < 2")
    fails = 0
    for i in range(trials):
        g = _gnp(np.random.default_rng(trial_seed(seed, i)), n, p)
        fails += clique_number(g) < k
    lo, hi = wilson_interval(fails, trials)
    return BoundCheckReport(
        "cliquenum",
        f"{trials} trials",
        fails / trials,
        None,
        True,
        math.nan,
        assertable=False,
        config={"n": n, "p": p, "delta": delta, "k": k, "trials": trials, "seed": seed},
        rows=[{"n": n, "p": p, "k": k, "failures": fails, "trials": trials, "wilson_low": lo, "wilson_high": hi}],
        extra={"k": k, "omega": matula_omega_p(n, p), "wilson": (lo, hi)},
    )


# -- fixed-direction baseline --------------------------------------------------------


@dataclass
class BaselineSummary:
    n: int
    p: float
    trials: int
    clique: Counter
    chromatic_lower: Counter
    chromatic_upper: Counter
    connected: int
    with_isolated: int

    @property
    def connected_frequency(self) -> float:
        return self.connected / self.trials

    @property
    def isolated_frequency(self) -> float:
        return self.with_isolated / self.trials

    @staticmethod
    def mode(hist: Counter) -> int:
        return min(hist, key=lambda v: (-hist[v], v))


def er_baseline(n: int, p: float, trials: int, seed: int = 0, chromatic: bool = True) -> BaselineSummary:
    """Functionals of the graph realized at s = e_1 over fresh ensembles.

    At s = e_1 only the first coordinate of each edge vector matters, and
    ensembles are nested in d, so a d = 1 ensemble gives the same graph as
    any larger d for the same seed.
    """
    from .model import canonical_direction, realize_graph, sample_ensemble, threshold_from_density

    t = threshold_from_density(p)
    cl, lo_h, up_h = Counter(), Counter(), Counter()
    conn = iso = 0
    for i in range(trials):
        g = realize_graph(sample_ensemble(n, 1, trial_seed(seed, i)), canonical_direction(1), t)
        if chromatic:
            b = chromatic_number(g, exact_limit=0)
            cl[b.lower] += 1
            lo_h[b.lower] += 1
            up_h[b.upper] += 1
        else:
            cl[clique_number(g)] += 1
        conn += connected_components(g)[0] == 1
        iso += isolated_vertices(g) > 0
    return BaselineSummary(n, p, trials, cl, lo_h, up_h, conn, iso)
