"""Built-in operators with closed-form kernels, fundamental sets and test data.

Closed forms are stored as expressions in the difference variable
``u = x - s`` (kernel, adjoint solution) or ``u = x - x0`` (fundamental set),
which suffices because every catalogue operator has constant coefficients.
Each closed form is checked against its defining jet when the entry is built.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .errors import CatalogueLookupError
from .expressions import Expr, parse
from .operator import LinearOperator, SmoothFunction
from .volterra import IntegroDifferentialProblem

DOMAIN = (-10.0, 10.0)
JET_TOL = 1e-12


@dataclass(frozen=True)
class ClosedForms:
    kernel: Expr       # K(x, s) = kernel(x - s)
    phi: Expr          # phi(x, s) = phi(x - s)
    fundamental: tuple  # y_i(x) = fundamental[i-1](x - x0)

    def K(self, x, s):
        return self.kernel(np.asarray(x, dtype=float) - s)

    def phi_value(self, x, s):
        return self.phi(np.asarray(x, dtype=float) - s)

    def y(self, i: int, x, x0):
        return self.fundamental[i - 1](np.asarray(x, dtype=float) - x0)


@dataclass(frozen=True)
class IDECase:
    problem: IntegroDifferentialProblem
    solution: Expr
    end: float
    steps: int
    tolerance: float


@dataclass(frozen=True)
class NamedProblem:
    name: str
    operator: LinearOperator
    closed_forms: ClosedForms | None = None
    test_functions: tuple = ()
    ide: IDECase | None = None
    x0: float = 0.0
    description: str = ""
    forcing: Expr | None = None
    init: tuple = field(default_factory=tuple)


def _fn(text: str) -> SmoothFunction:
    return SmoothFunction.from_expr(parse(text), text)


def check_closed_forms(n: int, cf: ClosedForms) -> None:
    """Verify the Kronecker jets of the closed forms at u = 0."""
    def jet_at_zero(e: Expr):
        return [float(v) for v in e.jet_values(0.0, n - 1)]

    target = [0.0] * (n - 1) + [1.0]
    k = jet_at_zero(cf.kernel)
    if max(abs(a - b) for a, b in zip(k, target)) > JET_TOL:
        raise ValueError(f"kernel closed form has jet {k} at x = s")
    # d^j/ds^j phi(x - s) = (-1)^j phi^(j)(u)
    p = [(-1) ** j * v for j, v in enumerate(jet_at_zero(cf.phi))]
    if max(abs(a - b) for a, b in zip(p, target)) > JET_TOL:
        raise ValueError(f"adjoint closed form has s-jet {p} at s = x")
    for i, y in enumerate(cf.fundamental, start=1):
        want = [1.0 if k == i - 1 else 0.0 for k in range(n)]
        got = jet_at_zero(y)
        if max(abs(a - b) for a, b in zip(got, want)) > JET_TOL:
            raise ValueError(f"y_{i} closed form has jet {got} at x0")


def _entry(name, coeffs, kernel, phi, fundamental, tests, description, **extra) -> NamedProblem:
    op = LinearOperator.constant(coeffs, DOMAIN, label=name)
    cf = ClosedForms(parse(kernel, "x"), parse(phi, "x"), tuple(parse(f) for f in fundamental))
    check_closed_forms(op.order, cf)
    return NamedProblem(name, op, cf, tuple(_fn(t) for t in tests), description=description, **extra)


def _harmonic(**extra):
    return _entry(
        "harmonic", [0, 1], "sin(x)", "-sin(x)", ["cos(x)", "sin(x)"],
        ["exp(x)", "sin(1.7*x)", "x^5/20 - x^3/3 + x^2/2 + 2*x - 1", "cos(x) + 2*sin(x)"],
        "y'' + y", **extra,
    )


def _hyperbolic():
    return _entry(
        "hyperbolic", [0, -1], "sinh(x)", "-sinh(x)", ["cosh(x)", "sinh(x)"],
        ["exp(0.5*x)", "sin(1.7*x)", "x^5/20 - x^3/3 + x^2/2 + 2*x - 1", "cosh(x) - 0.5*sinh(x)"],
        "y'' - y",
    )


def _quartic():
    return _entry(
        "quartic", [0, 5, 0, 4],
        "(2*sin(x) - sin(2*x))/6",
        "(sin(2*x) - 2*sin(x))/6",
        ["(4*cos(x) - cos(2*x))/3", "(8*sin(x) - sin(2*x))/6",
         "(cos(x) - cos(2*x))/3", "(2*sin(x) - sin(2*x))/6"],
        ["exp(x)", "sin(1.7*x)", "x^5/20 - x^3/3 + x^2/2 + 2*x - 1", "sin(2*x) + cos(x)"],
        "y'''' + 5 y'' + 4 y",
    )


def _pure_derivative(n: int, name: str | None = None, **extra):
    fact = math.factorial(n - 1)
    u = Expr.x()
    kernel = u ** (n - 1) / fact
    phi = kernel * (-1) ** (n - 1)
    fundamental = tuple(u**k / math.factorial(k) for k in range(n))
    cf = ClosedForms(kernel, phi, fundamental)
    check_closed_forms(n, cf)
    op = LinearOperator.constant([0] * n, DOMAIN, label=name or f"pure_derivative_{n}")
    solution = sum((Expr.x() ** k * Fraction(1, k + 1) for k in range(n)), Expr.const(0))
    tests = (
        _fn("exp(x)"),
        _fn("sin(1.7*x)"),
        _fn("x^5/20 - x^3/3 + x^2/2 + 2*x - 1"),
        SmoothFunction.from_expr(solution + 1, f"degree-{n - 1} polynomial"),
    )
    return NamedProblem(name or f"pure_derivative_{n}", op, cf, tests,
                        description=f"y^({n})", **extra)


def _cosh_ide():
    base = _pure_derivative(1, "cosh_ide")
    op = base.operator
    problem = IntegroDifferentialProblem(
        op, lambda x, t: np.ones(np.broadcast(np.asarray(x), np.asarray(t)).shape),
        lambda x: 0.0 * np.asarray(x, dtype=float), 0.0, (1.0,),
    )
    ide = IDECase(problem, parse("cosh(x)"), 1.0, 200, 1e-4)
    return NamedProblem("cosh_ide", op, base.closed_forms, base.test_functions, ide,
                        description="y' = int_0^x y dt, y(0) = 1")


def _harmonic_ide():
    base = _harmonic()
    problem = IntegroDifferentialProblem(
        base.operator, lambda x, t: np.ones(np.broadcast(np.asarray(x), np.asarray(t)).shape),
        lambda x: -np.sin(x), 0.0, (1.0, 0.0),
    )
    ide = IDECase(problem, parse("cos(x)"), 2.0, 400, 1e-3)
    return NamedProblem("harmonic_ide", base.operator, base.closed_forms, base.test_functions, ide,
                        description="y'' + y = int_0^x y dt - sin x, y(0) = 1, y'(0) = 0")


_BUILDERS = {
    "harmonic": _harmonic,
    "hyperbolic": _hyperbolic,
    "quartic": _quartic,
    "cosh_ide": _cosh_ide,
    "harmonic_ide": _harmonic_ide,
}
_PURE = re.compile(r"pure_derivative_(\d+)$")
DEFAULT_PURE_ORDERS = (1, 2, 3, 4)


def names() -> list[str]:
    """Names listed by the CLI; ``pure_derivative_<n>`` accepts any 1 <= n <= 12."""
    return ["harmonic", "hyperbolic", "quartic"] + [
        f"pure_derivative_{n}" for n in DEFAULT_PURE_ORDERS
    ] + ["cosh_ide", "harmonic_ide"]


@lru_cache(maxsize=None)
def get(name: str) -> NamedProblem:
    if name in _BUILDERS:
        return _BUILDERS[name]()
    m = _PURE.match(name)
    if m and 1 <= int(m.group(1)) <= 12:
        return _pure_derivative(int(m.group(1)))
    raise CatalogueLookupError(
        f"unknown problem {name!r}; available: {', '.join(names())} (pure_derivative_<n> for n = 1..12)"
    )
