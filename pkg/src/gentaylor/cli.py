"""``gt`` command-line front end.

Exit codes: 0 success, 1 verification failure, 2 input error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import catalogue, problem, verify
from .errors import (
    ArgumentError,
    CapabilityError,
    CatalogueLookupError,
    EvaluationError,
    ExpressionError,
    GridError,
    ProblemFileError,
    QuadratureError,
    StepBudgetError,
    StepSizeError,
)
from .expansion import GeneralizedTaylor, cauchy_solve
from .expressions import parse
from .ivp import fundamental_set, kernel_table
from .volterra import reduce, solve_ide_direct, solve_volterra

EXIT_OK, EXIT_VERIFY, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2, 3
INPUT_ERRORS = (ProblemFileError, ArgumentError, CatalogueLookupError, ExpressionError)
NUMERIC_ERRORS = (StepSizeError, StepBudgetError, QuadratureError, GridError, EvaluationError, CapabilityError)


class InputError(Exception):
    pass


def fmt(v: float) -> str:
    return format(float(v), ".17g")


def _number(text: str) -> float:
    try:
        return float(text)
    except ValueError:
        pass
    try:
        c = parse(text).constant_value()
    except ExpressionError:
        c = None
    if c is None:
        raise InputError(f"not a number: {text!r}")
    return float(c)


def parse_grid(text: str) -> np.ndarray:
    """``start:stop:count`` (inclusive, linear) or a single value."""
    parts = text.split(":")
    if len(parts) == 1:
        return np.array([_number(parts[0])])
    if len(parts) != 3:
        raise InputError(f"grid must look like start:stop:count, got {text!r}")
    start, stop = _number(parts[0]), _number(parts[1])
    try:
        count = int(parts[2])
    except ValueError:
        raise InputError(f"grid count must be an integer, got {parts[2]!r}") from None
    if count < 1:
        raise InputError("grid count must be at least 1")
    if count == 1:
        return np.array([start])
    return np.linspace(start, stop, count)


def write_csv(header, rows, out) -> None:
    lines = [",".join(header)] + [",".join(fmt(v) for v in row) for row in rows]
    text = "\n".join(lines) + "\n"
    if out is None or out == "-":
        sys.stdout.write(text)
        return
    target = Path(out)
    fd, tmp = tempfile.mkstemp(dir=target.parent or Path("."), prefix=f".{target.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, target)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_definition(args) -> problem.ProblemDefinition:
    if getattr(args, "problem", None) and getattr(args, "name", None):
        raise InputError("give either --problem or --name, not both")
    if getattr(args, "problem", None):
        defn = problem.load(args.problem)
    elif getattr(args, "name", None):
        defn = problem.from_catalogue(args.name)
    else:
        raise InputError("one of --problem or --name is required")
    defn = defn.with_tolerances(args.rtol, args.atol, args.qtol)
    if getattr(args, "x0", None) is not None:
        defn.operator.check_point(args.x0)
        defn = replace(defn, x0=float(args.x0))
    return defn


def _grid(args, defn, required=True):
    if args.grid is None:
        if required:
            raise InputError("--grid is required")
        return None
    g = parse_grid(args.grid)
    for v in (g.min(), g.max()):
        if not defn.operator.contains(v):
            raise InputError(f"grid point {v} is outside the interval {defn.operator.domain}")
    return g


# commands -------------------------------------------------------------------

def cmd_kernel(args) -> int:
    defn = load_definition(args)
    xs = _grid(args, defn)
    ss = parse_grid(args.s_grid) if args.s_grid else xs
    for v in (ss.min(), ss.max()):
        if not defn.operator.contains(v):
            raise InputError(f"source point {v} is outside the interval {defn.operator.domain}")
    table = kernel_table(defn.operator, xs, ss, defn.cfg)
    rows = [(x, s, table[i, j]) for i, x in enumerate(xs) for j, s in enumerate(ss)]
    write_csv(["x", "s", "K"], rows, args.out)
    return EXIT_OK


def cmd_fundamental(args) -> int:
    defn = load_definition(args)
    xs = _grid(args, defn)
    fs = fundamental_set(defn.operator, defn.x0, (float(xs.min()), float(xs.max())), defn.cfg)
    values = fs(xs)
    header = ["x"] + [f"y{i}" for i in range(1, defn.order + 1)]
    write_csv(header, [(x, *vals) for x, vals in zip(xs, values)], args.out)
    return EXIT_OK


def cmd_expand(args) -> int:
    defn = load_definition(args)
    if defn.test_function is None:
        raise InputError("the problem defines no test_function to expand")
    xs = _grid(args, defn)
    expander = GeneralizedTaylor(defn.operator, defn.x0, defn.cfg, defn.qtol,
                                 span=(float(xs.min()), float(xs.max())))
    rows = []
    for x in xs:
        r = expander.reconstruct(defn.test_function, float(x))
        rows.append((x, r.initial_data_part, r.remainder_part, r.total, r.reference_value, r.discrepancy))
    write_csv(["x", "initial_part", "remainder", "total", "reference", "discrepancy"], rows, args.out)
    return EXIT_OK


def cmd_solve(args) -> int:
    defn = load_definition(args)
    xs = _grid(args, defn)
    values = cauchy_solve(defn.operator, defn.forcing, defn.x0, defn.init, xs, defn.cfg, defn.qtol)
    write_csv(["x", "Y"], zip(xs, values), args.out)
    return EXIT_OK


def cmd_volterra(args) -> int:
    defn = load_definition(args)
    p = defn.ide()
    if p is None:
        raise InputError("the problem defines no memory_kernel")
    end = args.end
    if end is None:
        if defn.catalogue_name:
            end = catalogue.get(defn.catalogue_name).ide.end
        else:
            end = min(defn.operator.domain[1], defn.x0 + 1.0)
    if not defn.operator.contains(end) or end == defn.x0:
        raise InputError(f"--end={end} must lie in {defn.operator.domain} and differ from x0")
    vp = reduce(p, (min(defn.x0, end), max(defn.x0, end)), defn.cfg, defn.qtol)
    a = solve_volterra(vp, end, args.steps, estimate_error=False)
    b = solve_ide_direct(p, end, args.steps, estimate_error=False)
    rows = [(x, u, v, abs(u - v)) for x, u, v in zip(a.nodes, a.values, b.values)]
    write_csv(["x", "y_volterra", "y_direct", "diff"], rows, args.out)
    return EXIT_OK


def cmd_verify(args) -> int:
    target = args.target
    if target and (args.problem or args.name):
        raise InputError("give the target either positionally or with --problem/--name")
    if target:
        if Path(target).suffix == ".json" or Path(target).exists():
            args.problem = target
        else:
            args.name = target
    # Load everything before printing so malformed input yields no partial report.
    defn = load_definition(args)
    if defn.catalogue_name:
        sub = verify.subject_from_catalogue(catalogue.get(defn.catalogue_name))
        sub.cfg, sub.qtol = defn.cfg, defn.qtol
    else:
        sub = verify.subject_from_definition(defn)
    results = verify.run(sub, seed=args.seed)
    print(f"verify {defn.label}  (order {defn.order}, x0 = {fmt(defn.x0)}, seed {args.seed})")
    for r in results:
        print("  " + r.line())
    failed = sum(not r.passed for r in results)
    print(f"{len(results) - failed}/{len(results)} checks passed")
    return EXIT_OK if failed == 0 else EXIT_VERIFY


def cmd_examples(args) -> int:
    if args.write:
        out = Path(args.write)
        out.mkdir(parents=True, exist_ok=True)
        for name, doc in problem.EXAMPLE_DOCUMENTS.items():
            (out / f"{name}.json").write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
            print(out / f"{name}.json")
        return EXIT_OK
    for name in catalogue.names():
        entry = catalogue.get(name)
        print(f"{name:<20} {entry.description}")
    print("pure_derivative_<n>  y^(n) for any 1 <= n <= 12")
    return EXIT_OK


# parser ---------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gt", description="Generalized Taylor formula: kernels, expansions and Volterra reduction.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, grid=True):
        src = p.add_argument_group("problem source")
        src.add_argument("--problem", help="JSON problem file")
        src.add_argument("--name", help="catalogue problem name")
        if grid:
            p.add_argument("--grid", help="evaluation points, start:stop:count (inclusive)")
        p.add_argument("--x0", type=float, help="override the base point")
        p.add_argument("--out", help="output CSV path (default: standard output)")
        p.add_argument("--rtol", type=float, help="integrator relative tolerance")
        p.add_argument("--atol", type=float, help="integrator absolute tolerance")
        p.add_argument("--qtol", type=float, help="quadrature tolerance")

    p = sub.add_parser("kernel", help="tabulate K(x, s) as x,s,K")
    common(p)
    p.add_argument("--s-grid", help="source points (default: same as --grid)")
    p.set_defaults(func=cmd_kernel)

    p = sub.add_parser("fundamental", help="tabulate the fundamental set y_1..y_n")
    common(p)
    p.set_defaults(func=cmd_fundamental)

    p = sub.add_parser("expand", help="generalized Taylor reconstruction of the test function")
    common(p)
    p.set_defaults(func=cmd_expand)

    p = sub.add_parser("solve", help="solve F(y) = f with the Cauchy formula")
    common(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("volterra", help="integro-differential problem via Volterra reduction and directly")
    common(p, grid=False)
    p.add_argument("--end", type=float, help="right end of the solution grid")
    p.add_argument("--steps", type=int, default=200, help="grid intervals (default 200)")
    p.set_defaults(func=cmd_volterra)

    p = sub.add_parser("verify", help="run the invariant suites and print PASS/FAIL per check")
    p.add_argument("target", nargs="?", help="catalogue name or problem file")
    common(p, grid=False)
    p.add_argument("--seed", type=int, default=verify.SEED, help=f"sampling seed (default {verify.SEED})")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("examples", help="list catalogue problems or write example problem files")
    p.add_argument("--write", metavar="DIR", help="write example JSON problem files into DIR")
    p.set_defaults(func=cmd_examples)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (InputError, *INPUT_ERRORS) as exc:
        print(f"gt: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NUMERIC_ERRORS as exc:
        print(f"gt: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
