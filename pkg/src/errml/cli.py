"""Command line entry point: ``errml {validate,compose,analyze,export,simulate} MODEL``.

Exit status: 0 on success, 1 on model or analysis errors (diagnostics on
stderr), 2 on usage errors. Only the requested artifact goes to stdout.
"""

from __future__ import annotations

import argparse
import json
import sys
import warnings
from pathlib import Path
from typing import Optional, Sequence

from .analyzer import MEASURES, TIMED_MEASURES, MeasureSpec, SolverConfig, measure
from .composer import Limits, compose
from .diagnostics import Diagnostic, ErrmlError, Severity, error
from .export import FORMATS, dot_text, export, read_explicit, transitions_text
from .instance import instantiate
from .parser import parse_file
from .resolve import validate_library
from .simulator import SIMULATED, SimConfig, simulate_measure


class UsageError(Exception):
    pass


def _params(text: Optional[str]) -> dict:
    if not text:
        return {}
    out = {}
    for item in text.split(","):
        key, sep, value = item.partition("=")
        if not sep or not key.strip():
            raise UsageError(f"--params expects k=v[,k=v...], got {item!r}")
        try:
            out[key.strip()] = float(value)
        except ValueError:
            raise UsageError(f"--params: value of {key.strip()} is not a number: {value!r}") from None
    return out


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("model", help="model file (.errml); analyze also accepts an explicit-state .tra file")
    common.add_argument("--iteration", type=int, metavar="N", help="modeling iteration (default: highest declared)")
    common.add_argument("--params", metavar="k=v,...", help="parameter bindings overriding the file's parameters block")
    common.add_argument("--json", action="store_true", help="machine-readable diagnostics on stderr")
    common.add_argument("--verbose", "-v", action="store_true", help="also report warnings and notes")
    common.add_argument("--max-states", type=int, default=Limits().max_states, metavar="N")
    common.add_argument("--max-depth", type=int, default=Limits().max_cascade_depth, metavar="N",
                        help="cascade and guard round limit")

    measured = argparse.ArgumentParser(add_help=False)
    measured.add_argument("--measure", required=True, metavar="KIND", choices=MEASURES)
    measured.add_argument("--time", type=float, metavar="T", help="hours; required for time-indexed measures")
    measured.add_argument("--failed", default="Failed", metavar="LABEL")
    measured.add_argument("--catastrophic", default="Catastrophic", metavar="LABEL")

    parser = argparse.ArgumentParser(prog="errml", description="Compose and evaluate architecture error models.")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    sub.add_parser("validate", parents=[common], help="parse and check a model")
    p = sub.add_parser("compose", parents=[common], help="build the CTMC")
    p.add_argument("--stats", action="store_true", help="print state-space statistics instead of the chain")
    p = sub.add_parser("analyze", parents=[common, measured], help="evaluate a dependability measure")
    p.add_argument("--tol", type=float, default=SolverConfig().tolerance, metavar="X")
    p = sub.add_parser("export", parents=[common], help="write the CTMC in explicit or DOT form")
    p.add_argument("--format", required=True, choices=FORMATS)
    p.add_argument("--out", metavar="PATH", help="output prefix (required for explicit)")
    p = sub.add_parser("simulate", parents=[common, measured], help="Monte Carlo estimate of a measure")
    p.add_argument("--reps", type=int, default=10_000, metavar="R")
    p.add_argument("--seed", type=int, default=0, metavar="S")
    p.add_argument("--horizon", type=float, metavar="T", help="run length for steady-state approximation")
    return parser


class _Reporter:
    def __init__(self, as_json: bool, verbose: bool):
        self.as_json = as_json
        self.verbose = verbose
        self.items: list = []

    def add(self, diags) -> None:
        for d in diags:
            if d.is_error or self.verbose:
                self.items.append(d)

    def flush(self) -> None:
        if not self.items:
            return
        if self.as_json:
            print(json.dumps({"diagnostics": [d.to_dict() for d in self.items]}, indent=2), file=sys.stderr)
        else:
            for d in self.items:
                print(d, file=sys.stderr)
        self.items = []


class _Failed(Exception):
    """Model-level failure already recorded by the reporter."""


def _dump(doc: dict) -> str:
    return json.dumps(doc, indent=2, allow_nan=False)


def _load(args, report: _Reporter):
    try:
        parsed = parse_file(args.model)
    except OSError as exc:
        report.add([error(f"{args.model}: cannot read ({exc.strerror or exc})", code="FileAccessError")])
        raise _Failed from None
    report.add(parsed.diagnostics)
    if any(d.is_error for d in parsed.diagnostics):
        raise _Failed
    lib_diags = validate_library(parsed.library)
    report.add(lib_diags)
    if any(d.is_error for d in lib_diags):
        raise _Failed
    inst = instantiate(parsed.architecture, parsed.library, args.iteration, _params(args.params))
    report.add(inst.diagnostics)
    return inst


def _limits(args) -> Limits:
    return Limits(max_states=args.max_states, max_cascade_depth=args.max_depth)


def _chain(args, report: _Reporter):
    if Path(args.model).suffix == ".tra":
        return read_explicit(args.model)
    return compose(_load(args, report), _limits(args))


def _spec(args) -> MeasureSpec:
    if args.measure in TIMED_MEASURES and args.time is None:
        raise UsageError(f"--time is required for --measure {args.measure}")
    return MeasureSpec(args.measure, args.time, args.failed, args.catastrophic)


def _run(args, report: _Reporter) -> None:
    cmd = args.command
    if args.iteration is not None and args.iteration < 1:
        raise UsageError("--iteration must be >= 1")
    _params(args.params)  # usage errors before any model work

    if cmd == "validate":
        _load(args, report)
        return
    if cmd == "compose":
        ctmc = compose(_load(args, report), _limits(args))
        if args.stats:
            stats = dict(ctmc.stats)
            if args.json:
                print(_dump(stats))
            else:
                for key, value in stats.items():
                    print(f"{key} {value}")
        else:
            sys.stdout.write(transitions_text(ctmc))
        return
    if cmd == "export":
        ctmc = compose(_load(args, report), _limits(args))
        if args.out:
            export(ctmc, args.format, args.out)
        elif args.format == "dot":
            sys.stdout.write(dot_text(ctmc))
        else:
            raise UsageError("--out is required for --format explicit")
        return
    if cmd == "analyze":
        spec = _spec(args)
        if not args.tol > 0:
            raise UsageError("--tol must be positive")
        result = measure(_chain(args, report), spec, SolverConfig(tolerance=args.tol))
        print(_dump(result.to_dict()))
        return
    if cmd == "simulate":
        spec = _spec(args)
        if spec.kind not in SIMULATED:
            raise UsageError(f"measure {spec.kind} cannot be simulated")
        if args.reps < 1:
            raise UsageError("--reps must be >= 1")
        cfg = SimConfig(args.reps, args.horizon, args.seed, spec)
        estimate = simulate_measure(_load(args, report), cfg, _limits(args))
        print(_dump(estimate.to_dict()))
        return
    raise UsageError(f"unknown command {cmd}")


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    report = _Reporter(args.json, args.verbose)
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            try:
                _run(args, report)
            finally:
                # solver warnings (infinite MTTF, approximations) are always shown
                report.items.extend(Diagnostic(Severity.WARNING, str(w.message), code="Solver") for w in caught)
    except UsageError as exc:
        report.flush()
        parser.print_usage(sys.stderr)
        print(f"errml: error: {exc}", file=sys.stderr)
        return 2
    except _Failed:
        report.flush()
        return 1
    except ErrmlError as exc:
        report.items.append(exc.diagnostic)
        report.flush()
        return 1
    except ValueError as exc:
        report.flush()
        print(f"errml: error: {exc}", file=sys.stderr)
        return 2
    report.flush()
    return 0


if __name__ == "__main__":
    sys.exit(main())
