"""Command-line front end: ``polyhgm prob | table | check``."""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

from .errors import HgmError, InvalidSystem, NoApplicableMethod, NumericalFailure, ParseError
from .families import FAMILIES
from .geometry import load_system
from .hgm import probability
from .integrators import SolverConfig
from .oracles import mc_probability, quadrature_probability
from .verify import run_all

EXIT_PARSE = 2
EXIT_NO_METHOD = 3
EXIT_NUMERICAL = 4
D_LIMIT = 12
METHODS = ("hgm", "mc", "quad")


@dataclass(frozen=True)
class TableSpec:
    family: str
    d_min: int
    d_max: int
    methods: tuple = ("hgm", "mc")
    mc_samples: int = 10**6
    seed: int = 0
    rel_tol: float = SolverConfig.rel_tol
    abs_tol: float = SolverConfig.abs_tol

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"family must be one of {sorted(FAMILIES)}")
        if not 2 <= self.d_min <= self.d_max <= D_LIMIT:
            raise ValueError(f"need 2 <= d_min <= d_max <= {D_LIMIT}")
        unknown = set(self.methods) - set(METHODS)
        if unknown:
            raise ValueError(f"unknown methods {sorted(unknown)}")
        if self.mc_samples < 1:
            raise ValueError("mc_samples must be positive")


@dataclass
class TableRow:
    d: int
    hgm: float | None = None
    hgm_time_s: float | None = None
    mc: float | None = None
    mc_std_error: float | None = None
    quad: float | None = None
    flags: list = field(default_factory=list)


def table_row(spec: TableSpec, d: int) -> TableRow:
    """One row; failures become flags instead of exceptions."""
    system = FAMILIES[spec.family](d)
    row = TableRow(d)
    if "hgm" in spec.methods:
        try:
            res = probability(system, cfg=SolverConfig(rel_tol=spec.rel_tol, abs_tol=spec.abs_tol))
            row.hgm, row.hgm_time_s = res.probability, res.wall_time
            row.flags.extend(res.flags)
        except HgmError as exc:
            row.flags.append(f"hgm:{type(exc).__name__}")
    if "mc" in spec.methods:
        est = mc_probability(system, spec.mc_samples, spec.seed)
        row.mc, row.mc_std_error = est.mean, est.std_error
    if "quad" in spec.methods:
        if d <= 3:
            row.quad = quadrature_probability(system)
        else:
            row.flags.append("quad:DimensionTooLarge")
    return row


def _row_job(args):
    return table_row(*args)


def thread_count() -> int:
    """Worker count from HGM_THREADS; unset means 1, 0 means one per CPU."""
    raw = os.environ.get("HGM_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        return 1
    if n <= 0:
        return os.cpu_count() or 1
    return n


def build_table(spec: TableSpec, workers: int | None = None) -> list[TableRow]:
    dims = range(spec.d_min, spec.d_max + 1)
    workers = thread_count() if workers is None else workers
    if workers <= 1:
        return [table_row(spec, d) for d in dims]
    # map preserves input order, so rows come back sorted by d
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_row_job, [(spec, d) for d in dims]))


COLUMNS = ("d", "hgm", "hgm_time_s", "mc", "mc_std_error", "quad", "flags")


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, list):
        return ";".join(v)
    return str(v)


def format_csv(rows) -> str:
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(COLUMNS)
    for r in rows:
        w.writerow([_cell(getattr(r, c)) for c in COLUMNS])
    return out.getvalue()


def format_markdown(rows, spec: TableSpec) -> str:
    head = ["d", "HGM", "time of HGM (s)", "MC", "MC std. error"]
    if "quad" in spec.methods:
        head.append("quadrature")
    head.append("flags")
    lines = ["| " + " | ".join(head) + " |", "|" + "---|" * len(head)]

    def fmt(v, style):
        return "" if v is None else format(v, style)

    for r in rows:
        value_style = ".4e" if spec.family == "Q" else ".7f"
        cells = [str(r.d), fmt(r.hgm, value_style), fmt(r.hgm_time_s, ".2f"),
                 fmt(r.mc, value_style), fmt(r.mc_std_error, ".1e")]
        if "quad" in spec.methods:
            cells.append(fmt(r.quad, value_style))
        cells.append(", ".join(r.flags))
        lines.append("| " + " | ".join(cells) + " |")
    return "\n".join(lines) + "\n"


def format_json(rows) -> str:
    return json.dumps([{c: getattr(r, c) for c in COLUMNS} for r in rows], indent=2) + "\n"


# -- subcommands ---------------------------------------------------------------


def _fail(code: int, exc: Exception) -> int:
    print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
    return code


def cmd_prob(args) -> int:
    try:
        system = load_system(args.file)
    except (ParseError, InvalidSystem, OSError) as exc:
        return _fail(EXIT_PARSE, exc)
    try:
        cfg = SolverConfig(rel_tol=args.rel_tol, abs_tol=args.abs_tol, max_steps=args.max_steps)
    except ValueError as exc:
        return _fail(EXIT_PARSE, exc)
    try:
        res = probability(system, method=args.method, cfg=cfg)
    except NoApplicableMethod as exc:
        return _fail(EXIT_NO_METHOD, exc)
    except NumericalFailure as exc:
        return _fail(EXIT_NUMERICAL, exc)
    if args.quiet:
        print(repr(res.probability))
    else:
        print(res.to_json())
    return 0


def cmd_table(args) -> int:
    try:
        spec = TableSpec(
            family=args.family,
            d_min=args.d_min,
            d_max=args.d_max,
            methods=tuple(m.strip() for m in args.methods.split(",") if m.strip()),
            mc_samples=int(args.samples),
            seed=args.seed,
            rel_tol=args.rel_tol,
            abs_tol=args.abs_tol,
        )
    except ValueError as exc:
        return _fail(EXIT_PARSE, exc)
    rows = build_table(spec)
    if args.format == "csv":
        sys.stdout.write(format_csv(rows))
    elif args.format == "json":
        sys.stdout.write(format_json(rows))
    else:
        sys.stdout.write(format_markdown(rows, spec))
    return 0


def cmd_check(args) -> int:
    start = time.perf_counter()
    failed = 0
    total = 0
    print(f"{'suite':<9} {'system':<6} {'property':<18} result  detail")
    for r in run_all(d_max=args.d_max, perturb=args.perturb, n_samples=int(args.samples), seed=args.seed):
        total += 1
        failed += not r.passed
        mark = "PASS" if r.passed else "FAIL"
        print(f"{r.suite:<9} {r.system:<6} {r.prop:<18} {mark:<7} {r.detail}", flush=True)
    print(f"{total - failed}/{total} checks passed in {time.perf_counter() - start:.1f} s")
    return 1 if failed else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="polyhgm",
        description="Standard normal probability of polyhedra by the holonomic gradient method.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("prob", help="probability of the polyhedron in a JSON or CSV file")
    p.add_argument("file")
    p.add_argument("--method", choices=("auto", "bounded", "cone"), default="auto")
    p.add_argument("--rel-tol", type=float, default=SolverConfig.rel_tol)
    p.add_argument("--abs-tol", type=float, default=SolverConfig.abs_tol)
    p.add_argument("--max-steps", type=int, default=SolverConfig.max_steps)
    p.add_argument("--quiet", action="store_true", help="print only the probability")
    p.set_defaults(func=cmd_prob)

    t = sub.add_parser("table", help="sweep a test family over d")
    t.add_argument("--family", choices=sorted(FAMILIES), required=True)
    t.add_argument("--d-min", type=int, default=2)
    t.add_argument("--d-max", type=int, default=6)
    t.add_argument("--methods", default="hgm,mc", help="comma list from hgm, mc, quad")
    t.add_argument("--samples", type=float, default=1e6)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--rel-tol", type=float, default=SolverConfig.rel_tol)
    t.add_argument("--abs-tol", type=float, default=SolverConfig.abs_tol)
    t.add_argument("--format", choices=("md", "csv", "json"), default="md")
    t.set_defaults(func=cmd_table)

    c = sub.add_parser("check", help="run the identity, derivative and oracle suites")
    c.add_argument("--perturb", type=float, default=0.0, help="jitter half-spaces for the identity suite")
    c.add_argument("--d-max", type=int, default=6)
    c.add_argument("--samples", type=float, default=1e6)
    c.add_argument("--seed", type=int, default=0)
    c.set_defaults(func=cmd_check)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
