"""Reduction of linear integro-differential equations to Volterra equations.

The problem

    F(y)(x) = int_{x0}^{x} N(x, t) y(t) dt + f(x),   y^(k)(x0) = init_k,

is equivalent to the second-kind Volterra equation

    y(x) = int_{x0}^{x} N1(x, t) y(t) dt + Y(x),
    N1(x, t) = int_{t}^{x} K(x, s) N(s, t) ds,

where Y solves ``F(y) = f`` with the same initial data.  :func:`reduce` builds
``N1`` and ``Y`` from the Cauchy kernel, :func:`solve_volterra` marches the
product trapezoidal rule, and :func:`solve_ide_direct` integrates the original
equation with RK4 and a stored history, as an independent check.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ArgumentError, EvaluationError, GridError
from .expansion import GeneralizedTaylor, as_vectorized
from .ivp import DEFAULT_CONFIG, SolveConfig
from .operator import LinearOperator
from .quad import DEFAULT_TOL, integrate_adaptive


@dataclass(frozen=True)
class IntegroDifferentialProblem:
    operator: LinearOperator
    memory_kernel: Callable  # N(x, t), numpy-vectorised in both arguments
    forcing: Callable        # f(x)
    x0: float
    init: tuple

    def __post_init__(self):
        object.__setattr__(self, "init", tuple(float(v) for v in self.init))
        object.__setattr__(self, "x0", float(self.x0))
        if len(self.init) != self.operator.order:
            raise ArgumentError(f"expected {self.operator.order} initial values, got {len(self.init)}")
        self.operator.check_point(self.x0)


@dataclass(frozen=True)
class VolterraProblem:
    """``y(x) = int_{x0}^{x} kernel(x, t) y(t) dt + free_term(x)`` on ``span``."""

    kernel: Callable
    free_term: Callable
    x0: float
    span: tuple
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def kernel_value(self, x: float, t: float) -> float:
        key = ("k", x, t)
        v = self._cache.get(key)
        if v is None:
            v = float(self.kernel(x, t))
            self._cache[key] = v
        return v

    def free_value(self, x: float) -> float:
        key = ("y", x)
        v = self._cache.get(key)
        if v is None:
            v = float(self.free_term(x))
            self._cache[key] = v
        return v


@dataclass(frozen=True)
class GridSolution:
    nodes: np.ndarray
    values: np.ndarray
    step: float
    error_estimate: float = float("nan")
    states: np.ndarray | None = None

    def __post_init__(self):
        if len(self.nodes) != len(self.values):
            raise ArgumentError("nodes and values must have equal length")


def uniform_nodes(x0: float, end: float, steps: int) -> np.ndarray:
    # k/steps is computed before scaling, so grids of 2*steps share every
    # other node bit-for-bit with grids of `steps`.
    return np.array([x0 + (end - x0) * (k / steps) for k in range(steps + 1)])


def reduce(p: IntegroDifferentialProblem, span=None, cfg: SolveConfig = DEFAULT_CONFIG,
           qtol: float = DEFAULT_TOL) -> VolterraProblem:
    """Build the Volterra kernel ``N1`` and free term ``Y`` for ``p``."""
    op = p.operator
    if span is None:
        span = op.domain
    lo, hi = float(min(span)), float(max(span))
    if not (lo <= p.x0 <= hi):
        raise ArgumentError("span must contain x0")
    expander = GeneralizedTaylor(op, p.x0, cfg, qtol, span=(lo, hi))
    memory = p.memory_kernel
    forcing = as_vectorized(p.forcing)

    def n1(x, t):
        x, t = float(x), float(t)
        if x == t:
            return 0.0
        k = expander.kernel_in_s(x)
        return integrate_adaptive(lambda s: k(s) * memory(s, t), t, x, qtol, vectorized=True).value

    def free(x):
        return expander.cauchy(forcing, p.init, float(x))

    return VolterraProblem(n1, free, p.x0, (lo, hi))


def _check_grid(x0, end, steps, span=None):
    if steps < 4:
        raise ArgumentError("at least 4 steps are required")
    if end == x0:
        raise ArgumentError("end must differ from x0")
    if span is not None and not (span[0] <= end <= span[1]):
        raise ArgumentError(f"end={end} lies outside the problem span {span}")


def _march_volterra(vp: VolterraProblem, end: float, steps: int) -> GridSolution:
    nodes = uniform_nodes(vp.x0, end, steps)
    h = (end - vp.x0) / steps
    y = np.empty(steps + 1)
    y[0] = vp.free_value(nodes[0])
    for k in range(1, steps + 1):
        xk = nodes[k]
        diag = 1.0 - 0.5 * h * vp.kernel_value(xk, xk)
        if abs(diag) < 1e-12:
            raise GridError(f"diagonal factor vanishes at x={xk}; use a finer grid")
        acc = 0.5 * vp.kernel_value(xk, nodes[0]) * y[0]
        for j in range(1, k):
            acc += vp.kernel_value(xk, nodes[j]) * y[j]
        y[k] = (vp.free_value(xk) + h * acc) / diag
        if not np.isfinite(y[k]):
            raise EvaluationError(f"non-finite Volterra solution at x={xk}")
    return GridSolution(nodes, y, abs(h))


def _halving_estimate(coarse: GridSolution, fine: GridSolution) -> float:
    return float(np.max(np.abs(fine.values[::2] - coarse.values)))


def solve_volterra(vp: VolterraProblem, end: float, steps: int, estimate_error: bool = True) -> GridSolution:
    """March the product trapezoidal rule on a uniform grid of ``steps`` intervals.

    The error estimate compares against a second solve with ``2 * steps``.
    """
    _check_grid(vp.x0, end, steps, vp.span)
    coarse = _march_volterra(vp, end, steps)
    if not estimate_error:
        return coarse
    fine = _march_volterra(vp, end, 2 * steps)
    return GridSolution(coarse.nodes, coarse.values, coarse.step, _halving_estimate(coarse, fine))


def _cubic_through(ts: np.ndarray, ys: np.ndarray, t: float) -> float:
    """Lagrange polynomial through (ts, ys) evaluated at t (at most cubic)."""
    total = 0.0
    for i in range(len(ts)):
        w = 1.0
        for j in range(len(ts)):
            if j != i:
                w *= (t - ts[j]) / (ts[i] - ts[j])
        total += w * ys[i]
    return total


def _march_direct(p: IntegroDifferentialProblem, end: float, steps: int) -> GridSolution:
    op = p.operator
    n = op.order
    nodes = uniform_nodes(p.x0, end, steps)
    h = (end - p.x0) / steps
    forcing = as_vectorized(p.forcing)
    states = np.empty((steps + 1, n))
    states[0] = p.init

    def memory(m: int, xs: float) -> float:
        """Trapezoidal ``int_{x0}^{xs} N(xs, t) y(t) dt`` with history up to node m."""
        ts, ys = nodes[: m + 1], states[: m + 1, 0]
        total = 0.0
        if m > 0:
            w = np.asarray(p.memory_kernel(np.full(m + 1, xs), ts), dtype=float) * ys
            total = h * (w.sum() - 0.5 * (w[0] + w[-1]))
        tail = xs - nodes[m]
        if tail != 0.0:
            lo = max(0, m - 3)
            y_tail = _cubic_through(ts[lo:], ys[lo:], xs)
            total += 0.5 * tail * (float(p.memory_kernel(xs, nodes[m])) * ys[-1]
                                   + float(p.memory_kernel(xs, xs)) * y_tail)
        return total

    def rhs(m: int, xs: float, state: np.ndarray) -> np.ndarray:
        out = np.empty(n)
        out[:-1] = state[1:]
        out[-1] = float(forcing(np.array([xs]))[0]) + memory(m, xs) - op.forward_companion(xs) @ state
        return out

    for m in range(steps):
        x, y = nodes[m], states[m]
        k1 = rhs(m, x, y)
        k2 = rhs(m, x + h / 2, y + h / 2 * k1)
        k3 = rhs(m, x + h / 2, y + h / 2 * k2)
        k4 = rhs(m, x + h, y + h * k3)
        states[m + 1] = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(states[m + 1])):
            raise EvaluationError(f"non-finite direct solution at x={nodes[m + 1]}")
    return GridSolution(nodes, states[:, 0].copy(), abs(h), states=states)


def solve_ide_direct(p: IntegroDifferentialProblem, end: float, steps: int,
                     estimate_error: bool = True) -> GridSolution:
    """Classical RK4 on the companion system with a trapezoidal memory term."""
    _check_grid(p.x0, end, steps)
    p.operator.check_point(end)
    coarse = _march_direct(p, end, steps)
    if not estimate_error:
        return coarse
    fine = _march_direct(p, end, 2 * steps)
    return GridSolution(coarse.nodes, coarse.values, coarse.step,
                        _halving_estimate(coarse, fine), coarse.states)


def cross_validate(p: IntegroDifferentialProblem, end: float, steps: int,
                   cfg: SolveConfig = DEFAULT_CONFIG, qtol: float = DEFAULT_TOL,
                   vp: VolterraProblem | None = None) -> float:
    """Max nodal gap between the reduced Volterra solution and the direct solution."""
    if vp is None:
        vp = reduce(p, (min(p.x0, end), max(p.x0, end)), cfg, qtol)
    a = solve_volterra(vp, end, steps, estimate_error=False)
    b = solve_ide_direct(p, end, steps, estimate_error=False)
    return float(np.max(np.abs(a.values - b.values)))
