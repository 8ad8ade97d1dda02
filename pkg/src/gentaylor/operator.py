"""Linear differential operators, their adjoints and the bilinear concomitant.

For ``F(y) = y^(n) + a_1 y^(n-1) + ... + a_n y`` the formal adjoint is

    G(z) = (-1)^n [ z^(n) - (a_1 z)^(n-1) + ... + (-1)^n a_n z ]

and the pair is tied together by the Lagrange identity
``z F(y) - y G(z) = d/dx U(y, z)`` with the concomitant

    U(y, z) = sum_{m=0}^{n-1} y^(n-1-m) B_m(z),
    B_m(z)  = sum_{j=0}^{m} (-1)^j (a_{m-j} z)^(j),   a_0 = 1.

Every product derivative ``(a_k z)^(m)`` is expanded with the Leibniz rule,
using exact integer binomials and the coefficient derivative oracles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import ArgumentError, CapabilityError, EvaluationError
from .expressions import Expr

MAX_ORDER = 12
_EPS = np.finfo(float).eps


def fd_step(x: float, order: int) -> float:
    """Central-difference step used by the derivative fallback for a given order."""
    return _EPS ** (1.0 / (2 + order)) * max(1.0, abs(x))


def central_difference(fn: Callable[[float], float], x: float, order: int) -> float:
    """Second-order central difference approximation of the ``order``-th derivative."""
    if order == 0:
        return float(fn(x))
    h = fd_step(x, order)
    total = 0.0
    for k in range(order + 1):
        total += (-1) ** k * math.comb(order, k) * fn(x + (order / 2 - k) * h)
    return total / h**order


@dataclass(frozen=True)
class Jet:
    """A point together with the values ``y(x), y'(x), ..., y^(m)(x)``."""

    point: float
    values: tuple

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        if not vals:
            raise ArgumentError("a jet needs at least the function value")
        if not all(math.isfinite(v) for v in vals):
            raise ArgumentError(f"non-finite jet entry at x={self.point}")
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "point", float(self.point))

    @property
    def order(self) -> int:
        return len(self.values) - 1

    def __getitem__(self, k):
        return self.values[k]


@dataclass(frozen=True)
class SmoothFunction:
    """A function with an exact jet oracle.

    ``jet_oracle(x, m)`` returns the sequence ``[y(x), ..., y^(m)(x)]``; ``x``
    may be a float or a numpy array (entries then are arrays).
    """

    jet_oracle: Callable[[object, int], Sequence]
    label: str = ""

    @classmethod
    def from_expr(cls, expr: Expr, label: str | None = None) -> "SmoothFunction":
        return cls(expr.jet_values, label if label is not None else str(expr))

    def jet(self, x: float, m: int) -> Jet:
        return Jet(x, self.jet_oracle(float(x), m))

    def __call__(self, x):
        return self.jet_oracle(x, 0)[0]


@dataclass(frozen=True)
class CoefficientBundle:
    """One coefficient ``a_k(x)`` of an operator together with its derivatives.

    Orders up to ``max_exact_order`` come from ``derivative_oracle``; higher
    orders use a central-difference fallback unless ``allow_fallback`` is off,
    in which case :class:`CapabilityError` is raised.
    """

    value_fn: Callable[[float], float]
    derivative_oracle: Callable[[float, int], float] | None = None
    max_exact_order: int = 0
    domain: tuple = (-math.inf, math.inf)
    allow_fallback: bool = True
    constant: float | None = None
    label: str = ""

    @classmethod
    def constant_value(cls, c: float, domain=(-math.inf, math.inf)) -> "CoefficientBundle":
        c = float(c)
        return cls(
            value_fn=lambda x: c,
            derivative_oracle=lambda x, j: c if j == 0 else 0.0,
            max_exact_order=10**6,
            domain=tuple(domain),
            constant=c,
            label=repr(c),
        )

    @classmethod
    def from_expr(cls, expr: Expr, domain=(-math.inf, math.inf)) -> "CoefficientBundle":
        c = expr.constant_value()
        if c is not None:
            return cls.constant_value(float(c), domain)
        return cls(
            value_fn=expr,
            derivative_oracle=lambda x, j: expr.derivative(j)(x),
            max_exact_order=10**6,
            domain=tuple(domain),
            label=str(expr),
        )

    def is_exact(self, order: int) -> bool:
        return order <= self.max_exact_order and (order == 0 or self.derivative_oracle is not None)

    def derivative(self, x: float, order: int) -> float:
        if order == 0:
            return self.value_fn(x)
        if self.constant is not None:
            return 0.0
        if self.is_exact(order):
            return self.derivative_oracle(x, order)
        if not self.allow_fallback:
            raise CapabilityError(
                f"coefficient {self.label or '?'} has no derivative of order {order} "
                f"and the finite-difference fallback is disabled"
            )
        return central_difference(self.value_fn, x, order)


@dataclass(frozen=True)
class LinearOperator:
    """``F(y) = y^(n) + a_1(x) y^(n-1) + ... + a_n(x) y`` on a closed interval."""

    coefficients: tuple
    domain: tuple = (-math.inf, math.inf)
    label: str = ""
    _const: tuple | None = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        coeffs = tuple(self.coefficients)
        object.__setattr__(self, "coefficients", coeffs)
        object.__setattr__(self, "domain", (float(self.domain[0]), float(self.domain[1])))
        n = len(coeffs)
        if n < 1:
            raise ArgumentError("operator order must be at least 1")
        if n > MAX_ORDER:
            raise ArgumentError(f"operator order {n} exceeds the supported maximum {MAX_ORDER}")
        if self.domain[0] > self.domain[1]:
            raise ArgumentError("domain must be an interval [a, b] with a <= b")
        for k, bundle in enumerate(coeffs, start=1):
            if tuple(bundle.domain) != self.domain and bundle.domain != (-math.inf, math.inf):
                raise ArgumentError(f"coefficient a_{k} has domain {bundle.domain}, operator has {self.domain}")
        if all(b.constant is not None for b in coeffs):
            object.__setattr__(self, "_const", tuple(b.constant for b in coeffs))

    @classmethod
    def constant(cls, coeffs: Sequence[float], domain=(-math.inf, math.inf), label: str = "") -> "LinearOperator":
        return cls(tuple(CoefficientBundle.constant_value(c, domain) for c in coeffs), domain, label)

    @classmethod
    def from_exprs(cls, exprs: Sequence[Expr], domain=(-math.inf, math.inf), label: str = "") -> "LinearOperator":
        return cls(tuple(CoefficientBundle.from_expr(e, domain) for e in exprs), domain, label)

    @property
    def order(self) -> int:
        return len(self.coefficients)

    @property
    def is_constant(self) -> bool:
        return self._const is not None

    def contains(self, x: float, slack: float = 0.0) -> bool:
        a, b = self.domain
        return a - slack <= x <= b + slack

    def check_point(self, x: float) -> None:
        if not self.contains(x):
            raise ArgumentError(f"x={x} lies outside the operator domain {self.domain}")

    def coefficient(self, k: int, x: float, j: int = 0) -> float:
        """``a_k^(j)(x)`` with the convention ``a_0 = 1``."""
        if k == 0:
            return 1.0 if j == 0 else 0.0
        v = self.coefficients[k - 1].derivative(x, j)
        if not math.isfinite(v):
            raise EvaluationError(f"coefficient a_{k} (derivative order {j}) is not finite at x={x}")
        return float(v)

    def adjoint_needs_fallback(self) -> bool:
        """True when some a_k lacks an exact derivative of order n-k."""
        n = self.order
        return any(not b.is_exact(n - k) for k, b in enumerate(self.coefficients, start=1))

    def check_adjoint_capability(self) -> None:
        n = self.order
        for k, b in enumerate(self.coefficients, start=1):
            if not b.is_exact(n - k) and not b.allow_fallback:
                raise CapabilityError(
                    f"adjoint needs derivative order {n - k} of a_{k}, which is unavailable"
                )

    # companion-form coefficients ----------------------------------------
    def forward_companion(self, x: float) -> np.ndarray:
        """``c`` with ``F(y) = y^(n) + sum_j c_j y^(j)``."""
        n = self.order
        if self._const is not None:
            return np.array(self._const[::-1])
        return np.array([self.coefficient(n - j, x) for j in range(n)])

    def adjoint_companion(self, x: float) -> np.ndarray:
        """``c`` with ``(-1)^n G(z) = z^(n) + sum_j c_j z^(j)``.

        ``c_j = sum_{k>=1} (-1)^k C(n-k, j) a_k^(n-k-j)``.
        """
        n = self.order
        c = np.zeros(n)
        for k in range(1, n + 1):
            m = n - k
            sign = -1.0 if k % 2 else 1.0
            for j in range(m + 1):
                c[j] += sign * math.comb(m, j) * self.coefficient(k, x, m - j)
        return c


def _check_jet(op: LinearOperator, jet: Jet, need: int, what: str) -> None:
    if jet.order < need:
        raise ArgumentError(f"{what} jet has order {jet.order}, at least {need} is required")
    op.check_point(jet.point)


def product_derivative(op: LinearOperator, k: int, z: Sequence[float], x: float, m: int) -> float:
    """``(a_k z)^(m)`` at x by the Leibniz rule; ``z`` holds z, z', ... up to order m."""
    total = 0.0
    for i in range(m + 1):
        total += math.comb(m, i) * op.coefficient(k, x, m - i) * z[i]
    return total


def apply_forward(op: LinearOperator, jet: Jet) -> float:
    """Evaluate ``F(y)`` at ``jet.point`` from the jet of y."""
    n = op.order
    _check_jet(op, jet, n, "y")
    x, y = jet.point, jet.values
    total = y[n]
    for k in range(1, n + 1):
        total += op.coefficient(k, x) * y[n - k]
    return total


def apply_adjoint(op: LinearOperator, z_jet: Jet) -> float:
    """Evaluate ``G(z)`` at ``z_jet.point`` with Leibniz-expanded products."""
    n = op.order
    _check_jet(op, z_jet, n, "z")
    x, z = z_jet.point, z_jet.values
    total = 0.0
    for k in range(n + 1):
        term = product_derivative(op, k, z, x, n - k)
        total += term if k % 2 == 0 else -term
    return total if n % 2 == 0 else -total


def concomitant_blocks(op: LinearOperator, z: Sequence[float], x: float) -> list[float]:
    """``[B_0(z), ..., B_{n-1}(z)]`` at x, where z holds z..z^(n-1)."""
    n = op.order
    blocks = []
    for m in range(n):
        b = 0.0
        for j in range(m + 1):
            term = product_derivative(op, m - j, z, x, j)
            b += term if j % 2 == 0 else -term
        blocks.append(b)
    return blocks


def concomitant(op: LinearOperator, y_jet: Jet, z_jet: Jet) -> float:
    """The bilinear concomitant ``U(y, z)`` at the common jet point."""
    n = op.order
    if y_jet.point != z_jet.point:
        raise ArgumentError(f"jets are at different points ({y_jet.point} vs {z_jet.point})")
    _check_jet(op, y_jet, n - 1, "y")
    _check_jet(op, z_jet, n - 1, "z")
    blocks = concomitant_blocks(op, z_jet.values, z_jet.point)
    return sum(y_jet.values[n - 1 - m] * blocks[m] for m in range(n))


def lagrange_residual(op: LinearOperator, y: SmoothFunction, z: SmoothFunction, x: float, h: float) -> float:
    """``|dU/dx - (z F(y) - y G(z))|`` at x, dU/dx by a centred difference of step h."""
    if h <= 0:
        raise ArgumentError("step h must be positive")
    op.check_point(x - h)
    op.check_point(x + h)
    n = op.order

    def upsilon(p):
        return concomitant(op, y.jet(p, n - 1), z.jet(p, n - 1))

    dU = (upsilon(x + h) - upsilon(x - h)) / (2 * h)
    yj, zj = y.jet(x, n), z.jet(x, n)
    rhs = zj[0] * apply_forward(op, yj) - yj[0] * apply_adjoint(op, zj)
    return abs(dU - rhs)
