"""Adaptive initial-value integration for an operator and its adjoint.

The nth-order equation is reduced to the companion system on the state
``(y, y', ..., y^(n-1))`` and advanced by the Dormand-Prince 5(4) pair with a
PI step controller and its fourth-order continuous extension.  Backward
integration substitutes ``u = -x`` so that a single forward code path covers
both directions.

On top of the integrator this module builds

* the fundamental set ``y_1..y_n`` with Kronecker data at ``x0``,
* the Cauchy kernel ``K(x, s)``, solved in ``x`` from ``x = s``,
* the adjoint solution ``phi(x, s)``, solved in ``s`` from ``s = x``,
* the fundamental set recovered from the s-jet of ``phi`` at ``x0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import ArgumentError, EvaluationError, StepBudgetError, StepSizeError
from .operator import LinearOperator, concomitant_blocks

# Dormand-Prince 5(4) tableau.
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
    np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]),
]
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40])
# Continuous extension: y(t + th*h) = y + h * K^T @ (_P @ [th, th^2, th^3, th^4]).
_P = np.array([
    [1.0, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
    [0.0, 0.0, 0.0, 0.0],
    [0.0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
    [0.0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
    [0.0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
    [0.0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
    [0.0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
])

_SAFETY = 0.9
_ALPHA = 0.7 / 5
_BETA = 0.4 / 5
_FAC_MIN, _FAC_MAX = 0.2, 10.0


@dataclass(frozen=True)
class SolveConfig:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    max_steps: int = 1_000_000
    min_step: float = 0.0

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ArgumentError("tolerances must be positive")
        if self.max_steps <= 0:
            raise ArgumentError("max_steps must be positive")
        if self.min_step < 0:
            raise ArgumentError("min_step must be non-negative")


DEFAULT_CONFIG = SolveConfig()


class _Companion:
    """Right-hand side of ``Y' = (Y_1, ..., Y_{n-1}, f(x) - c(x).Y)``."""

    def __init__(self, n: int, coeffs: Callable[[float], np.ndarray], forcing=None, constant: bool = False):
        self.n = n
        self.coeffs = coeffs
        self.forcing = forcing
        self._c = coeffs(0.0) if constant else None

    def top(self, x: float, y) -> float | np.ndarray:
        """Highest derivative ``y^(n)`` implied by the ODE (y may be (n,) or (m, n))."""
        y = np.asarray(y)
        if y.ndim == 1:
            c = self._c if self._c is not None else self.coeffs(x)
            v = -float(c @ y)
            if self.forcing is not None:
                v += self.forcing(x)
            return v
        xs = np.broadcast_to(np.asarray(x, dtype=float), y.shape[:1])
        if self._c is not None:
            v = -(y @ self._c)
        else:
            v = -np.array([self.coeffs(xi) @ yi for xi, yi in zip(xs, y)])
        if self.forcing is not None:
            v = v + np.array([self.forcing(xi) for xi in xs])
        return v

    def __call__(self, x: float, y: np.ndarray) -> np.ndarray:
        out = np.empty(self.n)
        out[:-1] = y[1:]
        out[-1] = self.top(x, y)
        return out


def forward_system(op: LinearOperator, forcing=None) -> _Companion:
    return _Companion(op.order, op.forward_companion, forcing, op.is_constant)


def adjoint_system(op: LinearOperator) -> _Companion:
    """Companion form of ``G(z) = 0`` (the (-1)^n prefactor is irrelevant for zero)."""
    op.check_adjoint_capability()
    return _Companion(op.order, op.adjoint_companion, None, op.is_constant)


@dataclass
class _Branch:
    """One-directional solution stored in the internal variable ``u = sign * x``."""

    sign: float
    u: np.ndarray
    states: np.ndarray
    dense: np.ndarray  # (steps, n, 4)

    def covers(self, x, slack=0.0):
        u = self.sign * np.asarray(x, dtype=float)
        return (u >= self.u[0] - slack) & (u <= self.u[-1] + slack)

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        u = self.sign * x
        last = len(self.u) - 2
        if last < 0:
            return np.repeat(self.states[:1], len(u), axis=0)
        idx = np.searchsorted(self.u, u, side="right") - 1
        idx[idx < 0] = 0
        idx[idx > last] = last
        u0 = self.u[idx]
        h = self.u[idx + 1] - u0
        th = ((u - u0) / h)[:, None]
        d = self.dense[idx]
        poly = (((d[:, :, 3] * th + d[:, :, 2]) * th + d[:, :, 1]) * th + d[:, :, 0]) * th
        out = self.states[idx] + h[:, None] * poly
        right = u == self.u[idx + 1]
        if right.any():
            out[right] = self.states[idx[right] + 1]
        return out


class Trajectory:
    """Dense solution of a companion system around ``base_point``.

    Holds one branch per direction that was integrated; ``state(x)`` returns
    ``(y, ..., y^(n-1))`` at x and ``jet(x, n)`` appends ``y^(n)`` from the ODE.
    """

    def __init__(self, base_point: float, branches: Sequence[_Branch], system: _Companion, metadata=None):
        self.base_point = float(base_point)
        self._branches = tuple(branches)
        self._system = system
        self.metadata = dict(metadata or {})
        ends = [b.sign * b.u[-1] for b in self._branches] + [self.base_point]
        self._interval = (float(min(ends)), float(max(ends)))

    @property
    def order(self) -> int:
        return self._system.n

    @property
    def direction(self) -> str:
        signs = {b.sign for b in self._branches if len(b.u) > 1}
        if signs == {1.0}:
            return "forward"
        if signs == {-1.0}:
            return "backward"
        return "both" if signs else "forward"

    @property
    def node_points(self) -> np.ndarray:
        parts = []
        for b in self._branches:
            pts = b.sign * b.u
            parts.append(pts[::-1] if b.sign < 0 else pts)
        return np.unique(np.concatenate(parts))

    @property
    def interval(self) -> tuple[float, float]:
        return self._interval

    @property
    def steps(self) -> int:
        return sum(len(b.u) - 1 for b in self._branches)

    def state(self, x):
        """State vector at x (float) or an (m, n) array of states (array x)."""
        scalar = np.ndim(x) == 0
        xs = np.atleast_1d(np.asarray(x, dtype=float))
        lo, hi = self.interval
        tol = 1e-12 * max(1.0, abs(lo), abs(hi))
        if xs.size and (xs.min() < lo - tol or xs.max() > hi + tol):
            raise ArgumentError(f"evaluation outside the integrated range [{lo}, {hi}]")
        plus = next((b for b in self._branches if b.sign > 0), None)
        minus = next((b for b in self._branches if b.sign < 0), None)
        if plus is None or minus is None:
            out = (plus or minus).evaluate(xs)
        else:
            out = np.empty((len(xs), self.order))
            right = xs >= self.base_point
            out[right] = plus.evaluate(xs[right])
            out[~right] = minus.evaluate(xs[~right])
        return out[0] if scalar else out

    def __call__(self, x):
        s = self.state(x)
        return s[..., 0]

    def jet(self, x, order: int):
        """Values ``y, ..., y^(order)`` at x; order may be at most n."""
        n = self.order
        if order > n:
            raise ArgumentError(f"trajectory jets are available up to order {n}")
        s = self.state(x)
        if order < n:
            return s[..., : order + 1]
        top = self._system.top(x, s)
        if s.ndim == 1:
            return np.append(s, top)
        return np.concatenate([s, np.asarray(top)[:, None]], axis=1)


def _rms(v: np.ndarray) -> float:
    return float(np.sqrt(np.mean(v * v)))


def _initial_step(fun, u0, y0, f0, span, cfg) -> float:
    scale = cfg.abs_tol + np.abs(y0) * cfg.rel_tol
    d0, d1 = _rms(y0 / scale), _rms(f0 / scale)
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h0 = min(h0, span)
    y1 = y0 + h0 * f0
    f1 = fun(u0 + h0, y1)
    d2 = _rms((f1 - f0) / scale) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1 / 5)
    return min(100 * h0, h1, span)


def _march(system: _Companion, start: float, y0: np.ndarray, end: float, cfg: SolveConfig) -> _Branch:
    sign = 1.0 if end >= start else -1.0

    def fun(u, y):
        return sign * system(sign * u, y)

    u, u_end = sign * start, sign * end
    y = np.array(y0, dtype=float)
    us, states, dense = [u], [y.copy()], []
    if u_end == u:
        return _Branch(sign, np.array(us), np.array(states), np.zeros((0, len(y), 4)))

    f = fun(u, y)
    if not np.all(np.isfinite(f)):
        raise EvaluationError(f"non-finite right-hand side at x={start}")
    h = _initial_step(fun, u, y, f, u_end - u, cfg)
    err_old = 1e-4
    rejected = False
    attempts = 0
    K = np.empty((7, len(y)))
    while u < u_end:
        attempts += 1
        if attempts > cfg.max_steps:
            raise StepBudgetError(f"step budget of {cfg.max_steps} exhausted at x={sign * u}")
        floor = max(cfg.min_step, 10 * np.spacing(abs(u) + abs(h)))
        if h < floor:
            raise StepSizeError(f"step size {h:.3e} fell below the minimum {floor:.3e} at x={sign * u}")
        if u + h > u_end or u_end - (u + h) < floor:
            h = u_end - u
        K[0] = f
        for i in range(1, 7):
            K[i] = fun(u + _C[i] * h, y + h * (_A[i] @ K[:i]))
        y_new = y + h * (_B @ K)
        err_vec = h * (_E @ K)
        scale = cfg.abs_tol + np.maximum(np.abs(y), np.abs(y_new)) * cfg.rel_tol
        err = _rms(err_vec / scale)
        if not math.isfinite(err):
            h *= _FAC_MIN
            rejected = True
            continue
        if err <= 1.0:
            u_new = u_end if u + h >= u_end else u + h
            dense.append(K.T @ _P)
            us.append(u_new)
            states.append(y_new)
            fac = _SAFETY * max(err, 1e-10) ** (-_ALPHA) * err_old**_BETA
            fac = min(_FAC_MAX, max(_FAC_MIN, fac))
            if rejected:
                fac = min(1.0, fac)
            err_old = max(err, 1e-4)
            u, y, f = u_new, y_new, K[6].copy()
            h *= fac
            rejected = False
        else:
            h *= max(_FAC_MIN, _SAFETY * err ** (-1 / 5))
            rejected = True
    return _Branch(sign, np.array(us), np.array(states), np.array(dense))


def _solve(system, start, y0, ends, cfg, metadata=None) -> Trajectory:
    """Integrate from start to every distinct end (at most one per side)."""
    y0 = np.asarray(y0, dtype=float)
    if y0.shape != (system.n,):
        raise ArgumentError(f"initial state must have {system.n} entries")
    if not np.all(np.isfinite(y0)):
        raise ArgumentError("initial state must be finite")
    branches = []
    lo, hi = min(ends), max(ends)
    if hi > start:
        branches.append(_march(system, start, y0, hi, cfg))
    if lo < start:
        branches.append(_march(system, start, y0, lo, cfg))
    if not branches:
        branches.append(_march(system, start, y0, start, cfg))
    return Trajectory(start, branches, system, metadata)


def _cover(op: LinearOperator, base: float, span) -> tuple[float, float]:
    op.check_point(base)
    if span is None:
        span = op.domain
    lo, hi = float(min(span)), float(max(span))
    if not (op.contains(lo) and op.contains(hi)):
        raise ArgumentError(f"span {span} is not inside the operator domain {op.domain}")
    return min(lo, base), max(hi, base)


def integrate(op: LinearOperator, start: float, initial_state, forcing=None,
              target_end: float | None = None, cfg: SolveConfig = DEFAULT_CONFIG) -> Trajectory:
    """Solve ``F(y) = f`` from ``start`` to ``target_end`` with the given state.

    ``target_end < start`` integrates backward.
    """
    if target_end is None:
        raise ArgumentError("target_end is required")
    op.check_point(start)
    op.check_point(target_end)
    meta = {"fd_fallback": False}
    return _solve(forward_system(op, forcing), start, initial_state, [target_end], cfg, meta)


def _unit(n: int, i: int) -> np.ndarray:
    e = np.zeros(n)
    e[i] = 1.0
    return e


@dataclass(frozen=True)
class FundamentalSet:
    """Solutions ``y_1..y_n`` of ``F(y) = 0`` with ``y_i^(k)(x0) = delta_{i,k+1}``."""

    operator: LinearOperator
    base_point: float
    trajectories: tuple
    metadata: dict = field(default_factory=dict)

    def __call__(self, x):
        """``[y_1(x), ..., y_n(x)]`` (shape (n,) or (m, n))."""
        return np.stack([t(x) for t in self.trajectories], axis=-1)

    def wronskian(self, x: float) -> np.ndarray:
        """Matrix ``W[k, i] = y_i^(k)(x)``."""
        return np.stack([t.state(x) for t in self.trajectories], axis=-1)

    def covers(self, x: float) -> bool:
        lo, hi = self.trajectories[0].interval
        return lo <= x <= hi


@dataclass(frozen=True)
class KernelSlice:
    """``x -> K(x, s)`` for a fixed source s."""

    operator: LinearOperator
    source: float
    trajectory: Trajectory

    def __call__(self, x):
        return self.trajectory(x)

    def jet(self, x, order: int):
        return self.trajectory.jet(x, order)


@dataclass(frozen=True)
class AdjointSlice:
    """``s -> phi(x, s)`` for a fixed observation point x."""

    operator: LinearOperator
    observation_point: float
    trajectory: Trajectory

    def phi(self, s):
        return self.trajectory(s)

    __call__ = phi

    def kernel(self, s):
        """``K(x, s) = (-1)^(n-1) phi(x, s)``."""
        sign = -1.0 if self.operator.order % 2 == 0 else 1.0
        return sign * self.trajectory(s)

    def jet(self, s, order: int):
        return self.trajectory.jet(s, order)

    @property
    def metadata(self):
        return self.trajectory.metadata


def fundamental_set(op: LinearOperator, x0: float, span=None, cfg: SolveConfig = DEFAULT_CONFIG) -> FundamentalSet:
    """Kronecker-normalised fundamental set at x0, dense over ``span`` (both sides of x0)."""
    lo, hi = _cover(op, x0, span)
    n = op.order
    system = forward_system(op)
    trajs = tuple(_solve(system, x0, _unit(n, i), [lo, hi], cfg, {"fd_fallback": False}) for i in range(n))
    return FundamentalSet(op, float(x0), trajs, {"fd_fallback": False})


def cauchy_kernel(op: LinearOperator, s: float, span=None, cfg: SolveConfig = DEFAULT_CONFIG) -> KernelSlice:
    """Kernel slice solving ``F(y) = 0`` in x from ``x = s`` with jet (0, ..., 0, 1)."""
    lo, hi = _cover(op, s, span)
    n = op.order
    traj = _solve(forward_system(op), s, _unit(n, n - 1), [lo, hi], cfg, {"fd_fallback": False})
    return KernelSlice(op, float(s), traj)


def adjoint_phi(op: LinearOperator, x: float, span=None, cfg: SolveConfig = DEFAULT_CONFIG) -> AdjointSlice:
    """Adjoint slice solving ``G(z) = 0`` in s with terminal jet (0, ..., 0, 1) at ``s = x``."""
    lo, hi = _cover(op, x, span)
    n = op.order
    meta = {"fd_fallback": op.adjoint_needs_fallback()}
    traj = _solve(adjoint_system(op), x, _unit(n, n - 1), [lo, hi], cfg, meta)
    return AdjointSlice(op, float(x), traj)


def fundamental_values_from_phi_jet(op: LinearOperator, phi_jet: Sequence[float], s: float,
                                    prefactor: float | None = None) -> np.ndarray:
    """``[lambda_1, ..., lambda_n]`` from the s-jet ``phi, d phi/ds, ...`` at ``s = x0``.

    ``lambda_{n-r} = prefactor * B_r(phi)`` with the concomitant blocks ``B_r``.
    The prefactor that reproduces the worked examples is ``(-1)^(n-1)``.
    """
    n = op.order
    if prefactor is None:
        prefactor = -1.0 if n % 2 == 0 else 1.0
    blocks = concomitant_blocks(op, phi_jet, s)
    return np.array([prefactor * blocks[n - i] for i in range(1, n + 1)])


def fundamental_from_adjoint(op: LinearOperator, x0: float, x: float, cfg: SolveConfig = DEFAULT_CONFIG,
                             slice_: AdjointSlice | None = None) -> np.ndarray:
    """``y_1(x)..y_n(x)`` recovered from one adjoint solve at observation point x."""
    if slice_ is None:
        slice_ = adjoint_phi(op, x, (x0, x), cfg)
    return fundamental_values_from_phi_jet(op, slice_.trajectory.state(x0), x0)


def kernel_table(op: LinearOperator, x_grid, s_grid, cfg: SolveConfig = DEFAULT_CONFIG) -> np.ndarray:
    """Matrix ``T[i, j] = K(x_i, s_j)``, one forward kernel solve per source point."""
    xs = np.asarray(x_grid, dtype=float)
    ss = np.asarray(s_grid, dtype=float)
    if xs.size == 0 or ss.size == 0:
        return np.zeros((xs.size, ss.size))
    span = (float(xs.min()), float(xs.max()))
    table = np.empty((xs.size, ss.size))
    for j, s in enumerate(ss):
        table[:, j] = cauchy_kernel(op, float(s), span, cfg)(xs)
    return table
