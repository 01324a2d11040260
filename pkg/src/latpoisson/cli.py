"""Command-line entry point: ``latpoisson <subcommand> ...``.

Exit codes: 0 success, 1 gated failure, 2 usage or configuration error,
3 numerical abort (determinant drift or enumeration cap), 130 interrupted.
"""

from __future__ import annotations

import argparse
import contextlib
import json
import logging
import sys
from pathlib import Path
from typing import Sequence, TextIO

import numpy as np

from . import __version__
from .config import ConfigError, load_suite, output_path
from .estimators import GuardError, aggregate, run_plan
from .lattice import (
    DEFAULT_BURNIN,
    DEFAULT_ENUM_CAP,
    DEFAULT_THIN,
    HaarChain,
    NumericalAbort,
    UnimodularLattice,
    enumerate_in_ball,
    haar_sample_exact_2d,
)
from .pointprocess import sample_poisson_batch
from .regions import half_ball_with_volume, region_from_dict
from .reports import csv_text, dumps_report, report_document, reports_from_document
from .sievecheck import run_battery

log = logging.getLogger("latpoisson")

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_ABORT, EXIT_INTERRUPT = 0, 1, 2, 3, 130


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _open_out(path: str | None):
    if path is None or path == "-":
        return contextlib.nullcontext(sys.stdout)
    p = output_path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    return open(p, "w", encoding="utf-8", newline="\n")


def _write_text(path: str, text: str) -> Path:
    p = output_path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    with open(p, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    return p


def _jsonl(fh: TextIO, obj: dict) -> None:
    fh.write(json.dumps(obj, sort_keys=True) + "\n")


def _basis_line(head: dict, basis: np.ndarray) -> str:
    # row-major basis entries at 17 significant digits, which round-trip exactly
    rows = ", ".join("[" + ", ".join(format(float(x), ".17g") for x in row) + "]" for row in basis)
    return json.dumps(head, sort_keys=True)[:-1] + f', "basis": [{rows}]}}\n'


# --- subcommands ----------------------------------------------------------

def cmd_sample_lattice(args) -> int:
    rng = np.random.default_rng(args.seed)
    if args.exact_2d:
        if args.n != 2:
            raise ConfigError("--exact-2d needs --n 2")
        bases = [lat.basis for lat in haar_sample_exact_2d(rng, args.count)]
        sampler = "exact-2d"
    else:
        bases = HaarChain(args.n, rng, args.burnin, args.thin).sample_bases(args.count)
        sampler = "mcmc"
    with _open_out(args.out) as fh:
        for i, b in enumerate(bases):
            fh.write(_basis_line({"index": i, "n": args.n, "sampler": sampler, "seed": args.seed}, b))
    return EXIT_OK


def cmd_enumerate(args) -> int:
    if args.input in (None, "-"):
        src = contextlib.nullcontext(sys.stdin)
    else:
        src = open(args.input, encoding="utf-8")
    with src as lines, _open_out(args.out) as fh:
        for i, line in enumerate(lines):
            if not line.strip():
                continue
            rec = json.loads(line)
            lat = UnimodularLattice(np.asarray(rec["basis"], dtype=float))
            if args.n is not None and lat.n != args.n:
                raise ConfigError(f"line {i + 1}: basis has dimension {lat.n}, expected {args.n}")
            pts = enumerate_in_ball(lat, args.radius, args.cap)
            _jsonl(fh, {"index": rec.get("index", i), "radius": args.radius, "count": len(pts),
                        "points": [{"coords": [float(x) for x in p.coords], "coeffs": list(p.coeffs)}
                                   for p in pts]})
    return EXIT_OK


def _region_from_args(args):
    if args.region:
        import tomli

        with open(args.region, "rb") as fh:
            params = tomli.load(fh)
        params = params.get("region", params)
        return region_from_dict(params, dim=args.n)
    if args.n is None or args.lam is None:
        raise ConfigError("give --region FILE or both --n and --lambda")
    return half_ball_with_volume(args.n, args.lam)


def cmd_sample_poisson(args) -> int:
    region = _region_from_args(args)
    rng = np.random.default_rng(args.seed)
    with _open_out(args.out) as fh:
        for i, cfg in enumerate(sample_poisson_batch(region, rng, args.count)):
            _jsonl(fh, {"index": i, "count": len(cfg), "points": [[float(x) for x in p] for p in cfg.points]})
    return EXIT_OK


def cmd_sieve_check(args) -> int:
    parts = tuple(args.parts.split(","))
    report = run_battery(args.trials, args.dim_max, args.set_max, args.seed, parts)
    text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    if args.report:
        _write_text(args.report, text)
    else:
        sys.stdout.write(text)
    print(f"sieve-check: {report['total_violations']} violations", file=sys.stderr)
    return EXIT_OK if report["ok"] else EXIT_FAIL


def cmd_verify(args) -> int:
    suite = load_suite(args.plan, guard=False if args.no_guard else None)
    if args.seed is not None:
        for p in suite.experiments:
            p.seed = args.seed
    workers = args.workers or suite.workers
    out = args.out or suite.output.get("json")
    csv_path = args.csv or suite.output.get("csv")
    seed = suite.seed if args.seed is None else args.seed
    entries = []
    complete = True
    try:
        for plan in suite.experiments:
            log.info("running %s (%s, n=%d, lambda=%g, %d trials)", plan.label, plan.kind, plan.n, plan.lam,
                     plan.trials)
            reps = run_plan(plan, workers)
            entries.append((plan.to_dict(), reps))
            for r in reps:
                log.info("  %s: mean=%.6g se=%.3g target=%s verdict=%s", r.label, r.mean, r.stderr, r.target,
                         r.verdict)
    except KeyboardInterrupt:
        complete = False
        log.error("interrupted; writing partial report")
    doc = report_document(entries, seed=seed, complete=complete)
    reports = reports_from_document(json.loads(dumps_report(doc)))
    if out:
        _write_text(out, dumps_report(doc))
    else:
        sys.stdout.write(dumps_report(doc))
    if csv_path:
        _write_text(csv_path, csv_text(reports))
    print(f"verify: {doc['summary']['message']}", file=sys.stderr)
    if not complete:
        return EXIT_INTERRUPT
    return doc["summary"]["exit_code"]


def cmd_report(args) -> int:
    reports = []
    incomplete = False
    for path in args.inputs:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
        incomplete |= not doc.get("complete", True)
        reports.extend(reports_from_document(doc))
    if args.csv:
        _write_text(args.csv, csv_text(reports))
    width = max([len(r.label) for r in reports] + [5])
    lines = [f"{'label':<{width}}  {'mean':>12}  {'stderr':>10}  {'target':>12}  {'z':>8}  verdict"]
    for r in reports:
        target = "" if r.target is None else f"{r.target:.6g}"
        z = "" if r.zscore is None else f"{r.zscore:.2f}"
        lines.append(f"{r.label:<{width}}  {r.mean:>12.6g}  {r.stderr:>10.3g}  {target:>12}  {z:>8}  {r.verdict}")
    summary = aggregate(reports)
    lines.append(summary.message + (" (incomplete run)" if incomplete else ""))
    sys.stdout.write("\n".join(lines) + "\n")
    return summary.exit_code


# --- parser ---------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="latpoisson", description="Random lattices versus Poisson point processes in a region.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--log-level", default="WARNING", choices=["DEBUG", "INFO", "WARNING", "ERROR"],
                        help="logging verbosity on standard error (default WARNING)")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("sample-lattice", help="draw covolume-one lattice bases (JSON lines)")
    p.add_argument("--n", type=int, required=True, help="dimension")
    p.add_argument("--count", type=int, default=1, help="number of lattices")
    p.add_argument("--seed", type=int, required=True, help="random seed")
    p.add_argument("--burnin", type=int, default=DEFAULT_BURNIN, help="walk steps before the first output")
    p.add_argument("--thin", type=int, default=DEFAULT_THIN, help="walk steps between outputs")
    p.add_argument("--exact-2d", action="store_true", help="exact sampler via the modular fundamental domain (n=2)")
    p.add_argument("--out", help="output file (default stdout)")
    p.set_defaults(func=cmd_sample_lattice)

    p = sub.add_parser("enumerate", help="list lattice points in a ball for bases read as JSON lines")
    p.add_argument("--n", type=int, help="expected dimension of every basis")
    p.add_argument("--radius", type=float, required=True, help="ball radius")
    p.add_argument("--cap", type=int, default=DEFAULT_ENUM_CAP, help="abort above this many points")
    p.add_argument("--in", dest="input", help="input JSON lines with a 'basis' key (default stdin)")
    p.add_argument("--seed", type=int, default=0, help="accepted for uniformity; enumeration is deterministic")
    p.add_argument("--out", help="output file (default stdout)")
    p.set_defaults(func=cmd_enumerate)

    p = sub.add_parser("sample-poisson", help="Poisson configurations in a region (JSON lines)")
    p.add_argument("--region", help="TOML file with the region table")
    p.add_argument("--n", type=int, help="dimension of a default half-ball")
    p.add_argument("--lambda", dest="lam", type=float, help="volume of a default half-ball")
    p.add_argument("--count", type=int, default=1, help="number of configurations")
    p.add_argument("--seed", type=int, required=True, help="random seed")
    p.add_argument("--out", help="output file (default stdout)")
    p.set_defaults(func=cmd_sample_poisson)

    p = sub.add_parser("sieve-check", help="randomised exact battery for the sieve inequalities")
    p.add_argument("--trials", type=int, default=10_000, help="instances per part")
    p.add_argument("--dim-max", type=int, default=6, help="largest ambient dimension")
    p.add_argument("--set-max", type=int, default=10, help="largest family size")
    p.add_argument("--seed", type=int, default=0, help="random seed")
    p.add_argument("--parts", default="lemma,prop,dk,classic", help="comma-separated parts to run")
    p.add_argument("--report", help="JSON report path (default stdout)")
    p.set_defaults(func=cmd_sieve_check)

    p = sub.add_parser("verify", help="run a Monte Carlo suite from a TOML plan")
    p.add_argument("--plan", required=True, help="suite TOML file")
    p.add_argument("--out", help="JSON report path (default: plan's output.json, else stdout)")
    p.add_argument("--csv", help="CSV report path (default: plan's output.csv)")
    p.add_argument("--workers", type=int, help="worker processes (default: plan's workers)")
    p.add_argument("--seed", type=int, help="override the suite seed for every experiment")
    p.add_argument("--no-guard", action="store_true", help="allow lambda > n/200")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("report", help="summarise JSON reports as a table and optional CSV")
    p.add_argument("inputs", nargs="+", help="JSON reports written by verify")
    p.add_argument("--csv", help="write the merged CSV here")
    p.add_argument("--seed", type=int, default=0, help="accepted for uniformity; reporting is deterministic")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=args.log_level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except (ConfigError, GuardError, FileNotFoundError, IsADirectoryError) as exc:
        print(f"latpoisson: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalAbort as exc:
        print(f"latpoisson: numerical abort: {exc}", file=sys.stderr)
        return EXIT_ABORT
    except (ValueError, KeyError, json.JSONDecodeError) as exc:
        print(f"latpoisson: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except KeyboardInterrupt:
        return EXIT_INTERRUPT


if __name__ == "__main__":
    sys.exit(main())
