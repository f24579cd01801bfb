"""Command line: classify | solve | verify | sweep.

Every command reads a JSON config (``--config``) whose keys can be overridden
by flags.  Example::

    {"A": {"family": "power_law", "m": 3.0},
     "f": {"family": "power", "gamma": 1.5},
     "n": 5, "k": 2, "a": 1.0, "r_stop": 100.0}

Artifacts go to ``--out`` when given; the JSON result is always printed.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

import numpy as np

from .errors import HessianEntireError, StepCollapse, ValidationError
from .ko_classifier import (EXISTENCE, INCONCLUSIVE, NONEXISTENCE, GAMMA_EPS, classify,
                            classify_powerlaw, probe_ko_integral, validate_problem)
from .profiles import (Nonlinearity, Power, PowerLaw, Profile, nonlinearity_from_dict,
                       profile_from_dict)
from .radial_solver import (BLOW_UP, FLUX_SATURATED, GLOBAL, SCHEMA, RadialSolution, StepPolicy,
                            residuals, solve)
from .verifier import verify_report

EXIT_CLASSIFY = {EXISTENCE: 0, NONEXISTENCE: 1, INCONCLUSIVE: 2}
EXIT_SOLVE = {GLOBAL: 0, BLOW_UP: 1, FLUX_SATURATED: 2}
EXIT_STEP_COLLAPSE = 3
EXIT_CONFIG = 4

SWEEP_COLUMNS = ("m", "gamma", "k", "n", "boundary", "analytic", "probe", "solver", "R",
                 "agreement", "error")
SOLVER_VERDICT = {GLOBAL: EXISTENCE, BLOW_UP: NONEXISTENCE, FLUX_SATURATED: NONEXISTENCE}


@dataclass
class RunConfig:
    profile: Optional[Profile] = None
    nl: Optional[Nonlinearity] = None
    n: Optional[int] = None
    k: Optional[int] = None
    a: float = 1.0
    r_stop: float = 100.0
    policy: StepPolicy = field(default_factory=StepPolicy)
    cutoff_decades: int = 6
    s0: Optional[float] = None
    sample_count: int = 100
    seed: int = 0
    solution: Optional[str] = None
    grid: Optional[dict] = None
    raw: dict = field(default_factory=dict)

    def require_problem(self):
        if self.profile is None or self.nl is None or self.n is None or self.k is None:
            raise ValidationError("config needs A, f, n and k")
        validate_problem(self.profile, self.nl, self.n, self.k)


def _as_int(value, name):
    if isinstance(value, bool) or not float(value).is_integer():
        raise ValidationError(f"{name} must be an integer (got {value!r})")
    return int(value)


def load_config(args: argparse.Namespace) -> RunConfig:
    raw: dict[str, Any] = {}
    if args.config:
        try:
            raw = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ValidationError(f"cannot read config {args.config}: {exc}") from None
    for key in ("a", "r_stop", "seed", "cutoff_decades", "sample_count", "solution"):
        val = getattr(args, key, None)
        if val is not None:
            raw[key] = val
    cfg = RunConfig(raw=raw)
    if "A" in raw:
        cfg.profile = profile_from_dict(raw["A"])
    if "f" in raw:
        cfg.nl = nonlinearity_from_dict(raw["f"])
    if "n" in raw:
        cfg.n = _as_int(raw["n"], "n")
    if "k" in raw:
        cfg.k = _as_int(raw["k"], "k")
    if cfg.n is not None and cfg.k is not None and not 1 <= cfg.k <= cfg.n:
        raise ValidationError(f"Hessian order must satisfy 1 <= k <= n (got k={cfg.k}, n={cfg.n})")
    cfg.a = float(raw.get("a", cfg.a))
    cfg.r_stop = float(raw.get("r_stop", cfg.r_stop))
    if "policy" in raw:
        cfg.policy = StepPolicy.from_dict(raw["policy"])
    cfg.cutoff_decades = _as_int(raw.get("cutoff_decades", cfg.cutoff_decades), "cutoff_decades")
    cfg.s0 = raw.get("s0")
    cfg.sample_count = _as_int(raw.get("sample_count", cfg.sample_count), "sample_count")
    cfg.seed = _as_int(raw.get("seed", cfg.seed), "seed")
    cfg.solution = raw.get("solution")
    cfg.grid = raw.get("grid")
    return cfg


def _emit(obj: dict, out: Optional[Path], name: str) -> None:
    text = json.dumps(obj, indent=2, sort_keys=True, default=_json_default)
    print(text)
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        (out / name).write_text(text + "\n")


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (tuple, set)):
        return list(obj)
    raise TypeError(f"not serializable: {type(obj).__name__}")


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------

def cmd_classify(cfg: RunConfig, out: Optional[Path]) -> int:
    cfg.require_problem()
    verdict = classify(cfg.profile, cfg.nl, cfg.n, cfg.k, s0=cfg.s0,
                       cutoff_decades=cfg.cutoff_decades)
    _emit({"schema": SCHEMA, **verdict.to_dict()}, out, "verdict.json")
    return EXIT_CLASSIFY[verdict.outcome]


def cmd_solve(cfg: RunConfig, out: Optional[Path]) -> int:
    cfg.require_problem()
    try:
        sol = solve(cfg.profile, cfg.nl, cfg.n, cfg.k, cfg.a, cfg.r_stop, cfg.policy)
    except StepCollapse as exc:
        _emit({"schema": SCHEMA, "termination": {"kind": "StepCollapse", "radius": exc.r},
               "error": str(exc), "diagnostics": exc.diagnostics}, out, "termination.json")
        return EXIT_STEP_COLLAPSE
    meta = sol.termination_dict()
    meta["problem"] = {"A": cfg.profile.to_dict(), "f": cfg.nl.to_dict(), "n": cfg.n, "k": cfg.k}
    res = residuals(sol, cfg.nl)
    finite = res[np.isfinite(res)]
    meta["max_abs_residual"] = float(np.max(np.abs(finite))) if finite.size else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        (out / "solution.csv").write_text(sol.to_csv(res))
    _emit(meta, out, "termination.json")
    return EXIT_SOLVE[sol.termination.kind]


def load_solution(path: str) -> RadialSolution:
    csv_path = Path(path)
    meta_path = csv_path.with_name("termination.json")
    meta = json.loads(meta_path.read_text()) if meta_path.exists() else None
    return RadialSolution.from_csv(csv_path.read_text(), meta)


def cmd_verify(cfg: RunConfig, out: Optional[Path]) -> int:
    cfg.require_problem()
    if cfg.solution:
        sol = load_solution(cfg.solution)
        if (sol.n, sol.k) != (cfg.n, cfg.k):
            raise ValidationError(f"solution has n={sol.n}, k={sol.k}; config has n={cfg.n}, k={cfg.k}")
    else:
        sol = solve(cfg.profile, cfg.nl, cfg.n, cfg.k, cfg.a, cfg.r_stop, cfg.policy)
    report = verify_report(sol, cfg.profile, cfg.nl, cfg.n, cfg.k, cfg.sample_count, cfg.seed)
    doc = report.to_dict()
    doc["termination"] = sol.termination.to_dict()
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.json").write_text(json.dumps(doc, indent=2, default=_json_default) + "\n")
    print(json.dumps({"schema": SCHEMA, "passed": report.passed, "summary": report.summary},
                     indent=2, sort_keys=True))
    print(report.summary_line(), file=sys.stderr)
    return 0 if report.passed else 1


def sweep_cells(grid: dict) -> list[tuple]:
    """(m, gamma, k, n) in grid order; gamma from ``gamma`` or ``gamma_offsets`` about m-1."""
    try:
        ms = [float(v) for v in grid["m"]]
        ks = [_as_int(v, "k") for v in grid["k"]]
        ns = [_as_int(v, "n") for v in grid.get("n", [3])]
    except KeyError as exc:
        raise ValidationError(f"sweep grid is missing {exc}") from None
    if ("gamma" in grid) == ("gamma_offsets" in grid):
        raise ValidationError("sweep grid needs exactly one of gamma, gamma_offsets")
    cells = []
    for n in ns:
        for k in ks:
            for m in ms:
                gammas = (grid["gamma"] if "gamma" in grid
                          else [m - 1.0 + d for d in grid["gamma_offsets"]])
                for g in gammas:
                    cells.append((m, float(g), k, n))
    return cells


def run_cell(cell: tuple, a: float = 1.0, r_stop_interior: float = 1e3,
             r_stop_boundary: float = 1e2, policy: Optional[StepPolicy] = None,
             cutoff_decades: int = 6) -> dict:
    m, gamma, k, n = cell
    boundary = abs(gamma - (m - 1.0)) <= GAMMA_EPS
    row = {"m": m, "gamma": gamma, "k": k, "n": n, "boundary": boundary, "analytic": "",
           "probe": "", "solver": "", "R": "", "agreement": False, "error": ""}
    try:
        if k > n:
            raise ValidationError(f"Hessian order must satisfy 1 <= k <= n (got k={k}, n={n})")
        profile, nl = PowerLaw(m), Power(gamma)
        row["analytic"] = classify_powerlaw(m, k, nl.tail()).outcome
        row["probe"] = probe_ko_integral(profile, nl, k, cutoff_decades=cutoff_decades).outcome
        r_stop = r_stop_boundary if boundary else r_stop_interior
        sol = solve(profile, nl, n, k, a, r_stop, policy or StepPolicy())
        row["solver"] = sol.termination.kind
        row["R"] = sol.termination.radius
        row["agreement"] = (row["analytic"] == row["probe"]
                            == SOLVER_VERDICT[sol.termination.kind])
    except (HessianEntireError, ArithmeticError, ValueError) as exc:
        row["error"] = f"{type(exc).__name__}: {exc}"
    return row


def _run_cell_star(args):
    return run_cell(*args)


def cmd_sweep(cfg: RunConfig, out: Optional[Path], workers: int = 1) -> int:
    if not cfg.grid:
        raise ValidationError("sweep config needs a grid {m, gamma | gamma_offsets, k, n}")
    cells = sweep_cells(cfg.grid)
    r_int = float(cfg.raw.get("r_stop_interior", cfg.raw.get("r_stop", 1e3)))
    r_bnd = float(cfg.raw.get("r_stop_boundary", 1e2))
    jobs = [(c, cfg.a, r_int, r_bnd, cfg.policy, cfg.cutoff_decades) for c in cells]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_run_cell_star, jobs))
    else:
        rows = [_run_cell_star(j) for j in jobs]
    text = sweep_csv(rows)
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        (out / "sweep.csv").write_text(text)
    sys.stdout.write(text)
    interior = [r for r in rows if not r["boundary"]]
    return 0 if all(r["agreement"] for r in interior) and not any(r["error"] for r in rows) else 1


def sweep_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=SWEEP_COLUMNS, lineterminator="\n")
    w.writeheader()
    for row in rows:
        w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})
    return buf.getvalue()


# --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hessian-entire",
                                     description="Entire solutions of generalized Hessian inequalities")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (("classify", "existence verdict from the Keller-Osserman criterion"),
                            ("solve", "radial solution by the broken-line scheme"),
                            ("verify", "pointwise check of a radial solution"),
                            ("sweep", "phase table over a (m, gamma, k, n) grid")):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--out", help="output directory")
        p.add_argument("--r-stop", dest="r_stop", type=float)
        p.add_argument("--a", type=float, help="initial value phi(0)")
        p.add_argument("--seed", type=int)
        p.add_argument("--cutoff-decades", dest="cutoff_decades", type=int)
        if name == "verify":
            p.add_argument("--solution", help="solution CSV from a previous solve")
            p.add_argument("--samples", dest="sample_count", type=int)
        if name == "sweep":
            p.add_argument("--workers", type=int, default=1)
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    out = Path(args.out) if args.out else None
    try:
        cfg = load_config(args)
        if args.command == "classify":
            return cmd_classify(cfg, out)
        if args.command == "solve":
            return cmd_solve(cfg, out)
        if args.command == "verify":
            return cmd_verify(cfg, out)
        return cmd_sweep(cfg, out, workers=args.workers)
    except StepCollapse as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_STEP_COLLAPSE
    except (HessianEntireError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
