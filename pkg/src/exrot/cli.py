"""Command-line entry point: ``exrot <command> [options]``.

Exit codes: 0 success, 1 a check or certificate failed, 2 usage or
configuration error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from typing import Optional

from .errors import Infeasible, InvalidArgument, ExrotError, SolverFailure
from .experiments import (
    ExperimentConfig,
    budget_from_dict,
    load_toml,
    render_results,
    run_threshold_sweep,
    run_verification_suite,
    suite_passed,
)
from .metrics import GraphFunctional, Kind, metric_report
from .model import (
    as_direction,
    canonical_direction,
    load_ensemble,
    realize_graph,
    sample_ensemble,
    save_ensemble,
    threshold_from_density,
)
from .search import search
from .shatter import ShatterRequest, solve_sign_pattern
from .verify import er_baseline

EXIT_OK, EXIT_CHECK, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="TOML configuration file")
    p.add_argument("--seed", type=int, default=None, help="u64 seed (overrides the config)")
    p.add_argument("--jobs", type=int, default=1, help="worker processes")
    p.add_argument("--out", help="output path (default: stdout)")
    p.add_argument("--format", choices=("csv", "json"), default=None)


def _ensemble_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--ensemble", help="ensemble file written by 'gen'")
    p.add_argument("--n", type=int)
    p.add_argument("--d", type=int)


def _threshold_args(p: argparse.ArgumentParser) -> None:
    g = p.add_mutually_exclusive_group()
    g.add_argument("--t", type=float, help="threshold")
    g.add_argument("--p", type=float, help="edge density, t = Phi^-1(1 - p)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="exrot", description="Exceptional rotations of halfspace-indexed random graphs.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="write an edge-vector ensemble file")
    _common(p)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--d", type=int, required=True)

    p = sub.add_parser("realize", help="graph metrics at a direction and threshold")
    _common(p)
    _ensemble_args(p)
    _threshold_args(p)
    p.add_argument("--s", help="comma-separated unit direction (default e1)")

    p = sub.add_parser("shatter", help="solve a sign-pattern request (JSON file)")
    _common(p)
    _ensemble_args(p)
    p.add_argument("--request", required=True)

    p = sub.add_parser("search", help="rotation search for an extremal direction")
    _common(p)
    _ensemble_args(p)
    _threshold_args(p)
    p.add_argument("--functional", choices=[k.value for k in Kind], default="clique")
    p.add_argument("--minimize", action="store_true")

    p = sub.add_parser("sweep", help="threshold-dimension sweep from a config")
    _common(p)
    p.add_argument("--timing", action="store_true", help="record wall time per row")

    p = sub.add_parser("verify", help="run bound checks")
    _common(p)
    p.add_argument("--tags", help="comma-separated check tags (default: all)")

    p = sub.add_parser("baseline", help="fixed-direction G(n, p) summaries")
    _common(p)
    p.add_argument("--n", type=int)
    p.add_argument("--p", type=float)
    p.add_argument("--trials", type=int)
    return ap


# -- helpers --------------------------------------------------------------------


def _config(args) -> dict:
    return load_toml(args.config) if args.config else {}


def _pick(args, cfg: dict, key: str, default=None):
    v = getattr(args, key, None)
    if v is not None:
        return v
    return cfg.get(key, default)


def _seed(args, cfg, default=0) -> int:
    return int(_pick(args, cfg, "seed", default))


def _ensemble(args, cfg):
    path = _pick(args, cfg, "ensemble")
    if path:
        return load_ensemble(path)
    n, d = _pick(args, cfg, "n"), _pick(args, cfg, "d")
    if n is None or d is None:
        raise UsageError("need --ensemble or both --n and --d")
    return sample_ensemble(int(n), int(d), _seed(args, cfg))


def _threshold(args, cfg) -> float:
    t, p = _pick(args, cfg, "t"), _pick(args, cfg, "p")
    if t is not None and p is not None:
        raise UsageError("give only one of t and p")
    if p is not None:
        return threshold_from_density(float(p))
    return float(t) if t is not None else 0.0


def _write(args, text: str, binary: Optional[bytes] = None) -> None:
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# -- commands -------------------------------------------------------------------


def cmd_gen(args, cfg) -> int:
    if not args.out:
        raise UsageError("gen needs --out")
    save_ensemble(sample_ensemble(args.n, args.d, _seed(args, cfg)), args.out)
    return EXIT_OK


def cmd_realize(args, cfg) -> int:
    ens = _ensemble(args, cfg)
    t = _threshold(args, cfg)
    s_raw = _pick(args, cfg, "s")
    if s_raw is None:
        s = canonical_direction(ens.d)
    else:
        vals = [float(x) for x in s_raw.split(",")] if isinstance(s_raw, str) else [float(x) for x in s_raw]
        s = as_direction(vals, ens.d)
    g = realize_graph(ens, s, t)
    out = json.loads(metric_report(g).to_json())
    out.update({"n": ens.n, "d": ens.d, "seed": ens.seed, "t": t, "edges": g.n_edges})
    _write(args, json.dumps(out) + "\n")
    return EXIT_OK


def cmd_shatter(args, cfg) -> int:
    ens = _ensemble(args, cfg)
    with open(args.request, encoding="utf-8") as fh:
        req = ShatterRequest.from_json(fh.read())
    try:
        cert = solve_sign_pattern(ens, req)
    except Infeasible as exc:
        _write(args, json.dumps({"infeasible": True, "min_norm": str(exc.min_norm) if math.isinf(exc.min_norm) else exc.min_norm}) + "\n")
        return EXIT_CHECK
    _write(args, cert.to_json() + "\n")
    return EXIT_OK if cert.verify(ens, req.margin * 0.5) else EXIT_CHECK


def cmd_search(args, cfg) -> int:
    sect = cfg.get("search", cfg)
    ens = _ensemble(args, sect)
    t = _threshold(args, sect)
    kind = sect.get("functional", args.functional)
    minimize = args.minimize or bool(sect.get("minimize", False))
    f = GraphFunctional(Kind(kind), maximize=not minimize)
    budget = budget_from_dict(sect.get("budget"))
    res = search(ens, t, f, budget)
    # soundness: the reported value must be reproduced at the returned direction
    ok = f(realize_graph(ens, res.best_s, t)) == res.best_value
    _write(args, res.to_json() + "\n")
    return EXIT_OK if ok else EXIT_CHECK


def cmd_sweep(args, cfg) -> int:
    if not args.config:
        raise UsageError("sweep needs --config")
    if args.seed is not None:
        cfg = dict(cfg, seeds=[args.seed])
    if args.timing:
        cfg = dict(cfg, timing=True)
    ec = ExperimentConfig.from_dict(cfg)
    rows = run_threshold_sweep(ec, jobs=args.jobs)
    fmt = args.format or cfg.get("format", "csv")
    if not args.out and ec.output_path:
        args.out = ec.output_path
    _write(args, render_results(rows, fmt, kind="row"))
    return EXIT_OK


def cmd_verify(args, cfg) -> int:
    tags = args.tags.split(",") if args.tags else cfg.get("tags")
    tags = [x for x in tags if x] if tags is not None else None
    reports = run_verification_suite(tags, _seed(args, cfg))
    _write(args, render_results(reports, args.format or cfg.get("format", "csv"), kind="report"))
    return EXIT_OK if suite_passed(reports) else EXIT_CHECK


def cmd_baseline(args, cfg) -> int:
    n, p, trials = _pick(args, cfg, "n"), _pick(args, cfg, "p"), _pick(args, cfg, "trials", 100)
    if n is None or p is None:
        raise UsageError("baseline needs n and p")
    b = er_baseline(int(n), float(p), int(trials), _seed(args, cfg))
    hist = lambda h: {str(k): h[k] for k in sorted(h)}  # noqa: E731
    out = {
        "n": b.n,
        "p": b.p,
        "trials": b.trials,
        "clique": hist(b.clique),
        "chromatic_upper": hist(b.chromatic_upper),
        "connected_frequency": b.connected_frequency,
        "isolated_frequency": b.isolated_frequency,
    }
    _write(args, json.dumps(out) + "\n")
    return EXIT_OK


COMMANDS = {
    "gen": cmd_gen,
    "realize": cmd_realize,
    "shatter": cmd_shatter,
    "search": cmd_search,
    "sweep": cmd_sweep,
    "verify": cmd_verify,
    "baseline": cmd_baseline,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = _config(args)
        return COMMANDS[args.command](args, cfg)
    except (UsageError, InvalidArgument, KeyError, ValueError, TypeError) as exc:
        print(f"exrot: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"exrot: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (SolverFailure, ExrotError) as exc:
        print(f"exrot: {exc}", file=sys.stderr)
        return EXIT_CHECK


if __name__ == "__main__":
    sys.exit(main())
