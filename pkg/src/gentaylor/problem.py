"""Problem definition files (JSON) and the catalogue adapter used by the CLI."""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from . import catalogue
from .errors import ExpressionError, ProblemFileError
from .expressions import Expr, compile_numeric, parse
from .ivp import SolveConfig
from .operator import LinearOperator, SmoothFunction
from .quad import DEFAULT_TOL
from .volterra import IntegroDifferentialProblem


@dataclass(frozen=True)
class ProblemDefinition:
    """Everything a CLI command needs, whether read from a file or the catalogue."""

    label: str
    operator: LinearOperator
    x0: float
    init: tuple
    forcing: object            # vectorised f(x)
    memory_kernel: object      # vectorised N(x, t) or None
    test_function: SmoothFunction | None
    cfg: SolveConfig
    qtol: float
    solution: Expr | None = None
    catalogue_name: str | None = None
    document: dict | None = None

    @property
    def order(self) -> int:
        return self.operator.order

    def ide(self) -> IntegroDifferentialProblem | None:
        if self.memory_kernel is None:
            return None
        return IntegroDifferentialProblem(self.operator, self.memory_kernel, self.forcing, self.x0, self.init)

    def with_tolerances(self, rtol=None, atol=None, qtol=None) -> "ProblemDefinition":
        cfg = SolveConfig(rel_tol=rtol or self.cfg.rel_tol, abs_tol=atol or self.cfg.abs_tol,
                          max_steps=self.cfg.max_steps, min_step=self.cfg.min_step)
        return replace(self, cfg=cfg, qtol=qtol or self.qtol)


def schema() -> dict:
    text = resources.files("gentaylor").joinpath("problem.schema.json").read_text(encoding="utf-8")
    return json.loads(text)


def _line_of(text: str, path) -> int | None:
    pos = 0
    found = None
    for key in path:
        if isinstance(key, str):
            i = text.find(f'"{key}"', pos)
            if i < 0:
                break
            pos = found = i
    if found is None:
        return 1
    return text.count("\n", 0, found) + 1


def _expr_text(v) -> str:
    return repr(v) if isinstance(v, (int, float)) else v


def parse_document(text: str, source: str = "<problem>") -> ProblemDefinition:
    """Validate and convert a problem document; errors carry a line number."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ProblemFileError(f"{source}: invalid JSON: {exc.msg}", exc.lineno) from None
    validator = jsonschema.Draft202012Validator(schema())
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        where = "/".join(str(p) for p in err.absolute_path) or "<root>"
        raise ProblemFileError(f"{source}: {where}: {err.message}", _line_of(text, err.absolute_path))

    def fail(message, *path):
        raise ProblemFileError(f"{source}: {message}", _line_of(text, path))

    n = doc["order"]
    a, b = doc["interval"]
    if not a < b:
        fail("interval must satisfy a < b", "interval")
    if len(doc["coefficients"]) != n:
        fail(f"expected {n} coefficients, got {len(doc['coefficients'])}", "coefficients")
    x0 = float(doc["x0"])
    if not a <= x0 <= b:
        fail(f"x0={x0} is outside the interval [{a}, {b}]", "x0")
    init = doc.get("init", [0.0] * n)
    if len(init) != n:
        fail(f"expected {n} initial values, got {len(init)}", "init")

    def expr(key, value):
        try:
            return parse(_expr_text(value))
        except ExpressionError as exc:
            fail(f"{key}: {exc}", key)

    coeffs = []
    for i, c in enumerate(doc["coefficients"]):
        try:
            coeffs.append(parse(_expr_text(c)))
        except ExpressionError as exc:
            fail(f"coefficients[{i}]: {exc}", "coefficients")
    op = LinearOperator.from_exprs(coeffs, (a, b), label=doc.get("name", source))
    forcing = expr("forcing", doc["forcing"]) if "forcing" in doc else Expr.const(0)
    memory = None
    if "memory_kernel" in doc:
        try:
            memory = compile_numeric(_expr_text(doc["memory_kernel"]), ("x", "t"))
        except ExpressionError as exc:
            fail(f"memory_kernel: {exc}", "memory_kernel")
    test_fn = None
    if "test_function" in doc:
        test_fn = SmoothFunction.from_expr(expr("test_function", doc["test_function"]), str(doc["test_function"]))
    solution = expr("solution", doc["solution"]) if "solution" in doc else None
    tol = doc.get("tolerances", {})
    cfg = SolveConfig(rel_tol=tol.get("rtol", 1e-10), abs_tol=tol.get("atol", 1e-12))
    return ProblemDefinition(
        label=doc.get("name", source), operator=op, x0=x0, init=tuple(float(v) for v in init),
        forcing=forcing, memory_kernel=memory, test_function=test_fn, cfg=cfg,
        qtol=tol.get("qtol", DEFAULT_TOL), solution=solution, document=doc,
    )


def load(path) -> ProblemDefinition:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ProblemFileError(f"{path}: cannot read file: {exc.strerror}") from None
    return parse_document(text, str(path))


def _zero(x):
    return np.zeros_like(np.asarray(x, dtype=float))


def from_catalogue(name: str) -> ProblemDefinition:
    entry = catalogue.get(name)
    op = entry.operator
    if entry.ide is not None:
        p = entry.ide.problem
        return ProblemDefinition(
            label=name, operator=op, x0=p.x0, init=p.init, forcing=p.forcing,
            memory_kernel=p.memory_kernel, test_function=entry.test_functions[0],
            cfg=SolveConfig(), qtol=DEFAULT_TOL, solution=entry.ide.solution, catalogue_name=name,
        )
    return ProblemDefinition(
        label=name, operator=op, x0=entry.x0, init=(0.0,) * op.order, forcing=_zero,
        memory_kernel=None, test_function=entry.test_functions[0], cfg=SolveConfig(),
        qtol=DEFAULT_TOL, catalogue_name=name,
    )


# Problem documents mirroring catalogue entries; also written by `gt examples --write`.
EXAMPLE_DOCUMENTS = {
    "harmonic": {
        "name": "harmonic", "order": 2, "interval": [-10, 10], "coefficients": ["0", "1"],
        "forcing": "1", "test_function": "exp(x)", "x0": 0, "init": [0, 0],
    },
    "hyperbolic": {
        "name": "hyperbolic", "order": 2, "interval": [-10, 10], "coefficients": ["0", "-1"],
        "forcing": "x", "test_function": "exp(0.5*x)", "x0": 0, "init": [1, 0],
    },
    "quartic": {
        "name": "quartic", "order": 4, "interval": [-10, 10], "coefficients": ["0", "5", "0", "4"],
        "forcing": "cos(3*x)", "test_function": "exp(x)", "x0": 0, "init": [0, 0, 0, 0],
    },
    "variable_coefficient": {
        "name": "variable_coefficient", "order": 2, "interval": [-3, 3],
        "coefficients": ["x", "1 + x^2/4"], "forcing": "sin(x)",
        "test_function": "exp(x/2) + x^3", "x0": 0.5, "init": [1, -1],
    },
    "cosh_ide": {
        "name": "cosh_ide", "order": 1, "interval": [-10, 10], "coefficients": ["0"],
        "forcing": "0", "memory_kernel": "1", "solution": "cosh(x)", "x0": 0, "init": [1],
    },
    "harmonic_ide": {
        "name": "harmonic_ide", "order": 2, "interval": [-10, 10], "coefficients": ["0", "1"],
        "forcing": "-sin(x)", "memory_kernel": "1", "solution": "cos(x)", "x0": 0, "init": [1, 0],
    },
}
