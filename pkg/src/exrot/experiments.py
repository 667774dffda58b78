"""Seeded experiment configurations, threshold-dimension sweeps and result files.

A sweep visits every (seed, d) pair of a config, searches for a direction at
which the chosen property is atypical, and records one row.  Rows are
returned in (seed index, d index) order whatever the number of workers.
"""

from __future__ import annotations

import csv
import io
import json
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from typing import Optional

from .errors import Infeasible, InvalidArgument, SolverFailure, Unsupported
from .metrics import (
    GraphFunctional,
    Kind,
    bollobas_chromatic_scale,
    matula_omega_p,
)
from .model import canonical_direction, realize_graph, sample_ensemble, threshold_from_density
from .search import (
    ExactCells,
    LocalRefine,
    NetSweep,
    PackingSweep,
    SearchBudget,
    SolverSeeded,
    find_isolated_direction,
    force_clique_direction,
    force_coloring_direction,
    force_spanning_tree,
    search,
)
from . import verify as V

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

PROPERTIES = ("clique", "chromatic", "connectivity")
REGIMES = ("subcritical", "supercritical")
CHROMATIC_EPS = 0.1


# -- configuration ----------------------------------------------------------------


def _strategy_from_dict(obj: dict):
    kind = obj.get("kind")
    if kind == "net":
        return NetSweep(float(obj["eta"]), int(obj.get("samples", 20_000)))
    if kind == "packing":
        th = obj.get("theta")
        at = obj.get("attempts")
        return PackingSweep(None if th is None else float(th), None if at is None else int(at))
    if kind == "exact":
        return ExactCells()
    if kind == "solver":
        k = obj.get("k")
        return SolverSeeded(None if k is None else int(k))
    if kind == "local":
        return LocalRefine(int(obj.get("steps", 200)))
    raise InvalidArgument(f"unknown strategy kind {kind!r}")


def budget_from_dict(obj: Optional[dict]) -> SearchBudget:
    if not obj:
        return SearchBudget()
    strategies = obj.get("strategies")
    kw = {"max_evaluations": int(obj.get("max_evaluations", 2000)), "seed": int(obj.get("seed", 0))}
    if strategies is not None:
        kw["strategies"] = tuple(_strategy_from_dict(s) for s in strategies)
    return SearchBudget(**kw)


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    property: str
    regime: str
    n: int
    p: float
    d_grid: tuple
    seeds: tuple
    budget: SearchBudget = field(default_factory=SearchBudget)
    output_path: Optional[str] = None
    target: Optional[int] = None
    timing: bool = False

    def __post_init__(self):
        if self.property not in PROPERTIES:
            raise InvalidArgument(f"property must be one of {PROPERTIES}, got {self.property!r}")
        if self.regime not in REGIMES:
            raise InvalidArgument(f"regime must be one of {REGIMES}, got {self.regime!r}")
        if self.n < 2:
            raise InvalidArgument("n must be >= 2")
        if not (0.0 < self.p < 1.0):
            raise InvalidArgument(f"p must lie in (0, 1) after resolution, got {self.p}")
        d = list(self.d_grid)
        if not d or any(x < 1 for x in d) or d != sorted(set(d)):
            raise InvalidArgument("d_grid must be a nonempty strictly ascending list of positive dimensions")
        if not self.seeds:
            raise InvalidArgument("seeds must be nonempty")

    @property
    def t(self) -> float:
        return threshold_from_density(self.p)

    @classmethod
    def from_dict(cls, obj: dict) -> "ExperimentConfig":
        try:
            n = int(obj["n"])
            if ("p" in obj) == ("c" in obj):
                raise InvalidArgument("config needs exactly one of p or c")
            p = float(obj["p"]) if "p" in obj else float(obj["c"]) * math.log(n) / n
            return cls(
                name=str(obj["name"]),
                property=str(obj["property"]),
                regime=str(obj["regime"]),
                n=n,
                p=p,
                d_grid=tuple(int(x) for x in obj["d_grid"]),
                seeds=tuple(int(x) for x in obj["seeds"]),
                budget=budget_from_dict(obj.get("budget")),
                output_path=obj.get("output_path"),
                target=None if obj.get("target") is None else int(obj["target"]),
                timing=bool(obj.get("timing", False)),
            )
        except KeyError as exc:
            raise InvalidArgument(f"config is missing key {exc.args[0]!r}") from None

    @classmethod
    def from_toml(cls, path) -> "ExperimentConfig":
        return cls.from_dict(load_toml(path))


def load_toml(path) -> dict:
    with open(path, "rb") as fh:
        try:
            return tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise InvalidArgument(f"{path}: {exc}") from None


# -- sweeps ---------------------------------------------------------------------


@dataclass
class ExperimentRow:
    config: str
    seed: int
    d: int
    value: Optional[int]
    baseline: int
    success: bool
    evaluations: int
    wall_ms: Optional[float]
    status: str


def default_target(cfg: ExperimentConfig) -> int:
    """Threshold of the exceptional event when the config does not set one."""
    n, p = cfg.n, cfg.p
    if cfg.property == "clique":
        omega = matula_omega_p(n, p) if n >= 3 else 1.0
        return max(2, math.ceil(omega) + 1) if cfg.regime == "supercritical" else max(1, math.floor(omega) - 1)
    if cfg.property == "chromatic":
        scale = bollobas_chromatic_scale(n)
        if cfg.regime == "subcritical":
            return max(1, math.floor((1 - CHROMATIC_EPS) * scale))
        return max(2, math.ceil((1 + CHROMATIC_EPS) * scale))
    return 1


def _functional(cfg) -> GraphFunctional:
    if cfg.property == "clique":
        return GraphFunctional(Kind.CLIQUE, maximize=cfg.regime == "supercritical")
    if cfg.property == "chromatic":
        return GraphFunctional(Kind.CHROMATIC, maximize=cfg.regime == "supercritical")
    return GraphFunctional(Kind.CONNECTED, maximize=cfg.regime == "subcritical")


def _run_cell(cfg: ExperimentConfig, seed: int, d: int) -> ExperimentRow:
    start = time.perf_counter()
    t = cfg.t
    ens = sample_ensemble(cfg.n, d, seed)
    f = _functional(cfg)
    base = f(realize_graph(ens, canonical_direction(d), t))
    target = cfg.target if cfg.target is not None else default_target(cfg)
    value, evals, status = None, 0, "ok"
    try:
        if cfg.property == "clique" and cfg.regime == "supercritical":
            res = force_clique_direction(ens, t, target)
        elif cfg.property == "chromatic" and cfg.regime == "subcritical":
            res = force_coloring_direction(ens, t, target)
        elif cfg.property == "chromatic":
            res = force_clique_direction(ens, t, target)
            res.best_value = f(realize_graph(ens, res.best_s, t))
        elif cfg.property == "connectivity" and cfg.regime == "subcritical":
            res = force_spanning_tree(ens, t)
        elif cfg.property == "connectivity":
            res, _ = find_isolated_direction(ens, t, cfg.budget)
            res.best_value = f(realize_graph(ens, res.best_s, t))
        else:
            res = search(ens, t, f, cfg.budget)
        value, evals = res.best_value, res.evaluations
    except Infeasible:
        status, evals = "infeasible", 1
    except SolverFailure:
        status, evals = "solver-failure", 1
    except Unsupported:
        status = "unsupported"
    if value is None:
        success = False
    elif cfg.property == "connectivity":
        success = value == (1 if cfg.regime == "subcritical" else 0)
    elif f.maximize:
        success = value >= target
    else:
        success = value <= target
    wall = round((time.perf_counter() - start) * 1000.0, 3) if cfg.timing else None
    return ExperimentRow(cfg.name, seed, d, value, int(base), bool(success), evals, wall, status)


def _run_cell_args(args):
    return _run_cell(*args)


def run_threshold_sweep(cfg: ExperimentConfig, jobs: int = 1) -> list[ExperimentRow]:
    tasks = [(cfg, s, d) for s in cfg.seeds for d in cfg.d_grid]
    if jobs <= 1 or len(tasks) <= 1:
        return [_run_cell(*a) for a in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_run_cell_args, tasks))


@dataclass(frozen=True)
class MonotonicitySummary:
    d_grid: tuple
    rates: tuple
    nondecreasing: bool
    strictly_increasing_ends: bool


def monotonicity_summary(rows: list[ExperimentRow]) -> MonotonicitySummary:
    """Aggregate success rate per d, and whether it is nondecreasing in d."""
    ds = sorted({r.d for r in rows})
    rates = tuple(sum(r.success for r in rows if r.d == d) / sum(1 for r in rows if r.d == d) for d in ds)
    nondec = all(a <= b for a, b in zip(rates, rates[1:]))
    return MonotonicitySummary(tuple(ds), rates, nondec, bool(rates) and rates[-1] > rates[0])


# -- verification suite ------------------------------------------------------------


def _isolated_exact_report(seed: int) -> V.BoundCheckReport:
    grid = [k / 20 for k in range(1, 20)]
    closed = max(abs(V.isolated_prob_exact(3, p) - (p**3 + 3 * p**2 * (1 - p))) for p in grid)
    exact = V.isolated_prob_exact(30, 0.1)
    est, se = V.isolated_prob_mc(30, 0.1, 100_000, seed)
    ok = closed <= 1e-12 and abs(est - exact) <= V.SIGMAS * se
    return V.BoundCheckReport(
        "isolated_exact",
        "n=3 closed form on a p-grid; n=30, p=0.1 against 100000 samples",
        {"mc": est, "n3_max_error": closed},
        exact,
        bool(ok),
        V.SIGMAS * se - abs(est - exact),
        config={"n": 30, "p": 0.1, "trials": 100_000, "seed": seed},
        rows=[{"n": 30, "p": 0.1, "exact": exact, "estimate": est, "se": se, "n3_max_error": closed}],
    )


def _correlation_independence(seed: int) -> V.BoundCheckReport:
    r = V.correlation_bound_check(math.pi / 2, 2.0, 1_000_000, seed)
    p = r.extra["p"]
    gap = abs(r.observed["above"] - p * p)
    tol = V.SIGMAS * r.extra["se_above"]
    r.name, r.satisfied, r.slack = "correlations_orthogonal", gap <= tol, tol - gap
    r.bound = p * p
    return r


SUITE = {
    "tailsgaussian": lambda seed: V.gaussian_tail_sandwich_check(),
    "cap_area": lambda seed: V.cap_area_check(seed=seed),
    "caps_half": lambda seed: V.caps_half_prob_check(12, 0.1, 1_000_000, seed),
    "caps_half_exact": lambda seed: V.caps_half_prob_check(100, 0.05, 1_000_000, seed),
    "capsandprobs": lambda seed: V.domination_check(16, 0.2, 2.0, trials=1_000_000, seed=seed),
    "correlations": lambda seed: V.correlation_bound_check(0.3, 2.0, 10_000_000, seed),
    "correlations_orthogonal": _correlation_independence,
    "isolated_exact": _isolated_exact_report,
    "oconnell": lambda seed: V.oconnell_grid_report(),
    "cliquenum": lambda seed: V.clique_lowertail_sim(40, 0.5, 2.5, 500, seed),
}


def run_verification_suite(selection, seed: int = 0) -> list[V.BoundCheckReport]:
    selection = list(SUITE) if selection is None else list(selection)
    unknown = [s for s in selection if s not in SUITE]
    if unknown:
        raise InvalidArgument(f"unknown check tag(s): {', '.join(unknown)}; known: {', '.join(SUITE)}")
    return [SUITE[tag](seed) for tag in selection]


def suite_passed(reports) -> bool:
    return all(r.satisfied for r in reports if r.assertable)


# -- output ---------------------------------------------------------------------

ROW_FIELDS = tuple(f.name for f in fields(ExperimentRow))
# one line per grid point or trial block; the per-check fields go in ``data``
REPORT_FIELDS = ("name", "row", "satisfied", "assertable", "data")


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (dict, list, tuple)):
        return json.dumps(v, sort_keys=True)
    return str(v)


def _report_dict(r: V.BoundCheckReport) -> dict:
    out = json.loads(r.to_json())
    out["assertable"] = r.assertable
    out["grid_or_trials"] = r.grid_or_trials
    out["rows"] = json.loads(json.dumps(r.rows, default=_cell))
    return out


def render_results(items, fmt: str = "csv", kind: Optional[str] = None) -> str:
    """Serialize experiment rows or check reports; identical inputs give identical text."""
    items = list(items)
    if kind is None:
        kind = "report" if items and isinstance(items[0], V.BoundCheckReport) else "row"
    if fmt == "json":
        objs = [_report_dict(x) for x in items] if kind == "report" else [asdict(x) for x in items]
        return json.dumps(objs, indent=1, sort_keys=False) + "\n"
    if fmt != "csv":
        raise InvalidArgument(f"format must be csv or json, got {fmt!r}")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if kind == "report":
        w.writerow(REPORT_FIELDS)
        for r in items:
            for i, data in enumerate(r.csv_rows()):
                w.writerow([r.name, i, _cell(bool(r.satisfied)), _cell(r.assertable), json.dumps(data, sort_keys=True, default=_cell)])
    else:
        w.writerow(ROW_FIELDS)
        for r in items:
            w.writerow([_cell(getattr(r, k)) for k in ROW_FIELDS])
    return buf.getvalue()


def emit_results(items, path, fmt: str = "csv", kind: Optional[str] = None) -> None:
    text = render_results(items, fmt, kind)
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write results to {path}: {exc.strerror or exc}") from exc
