"""Closed-form scalar expressions with exact structural derivatives.

The grammar covers polynomials in ``x`` with rational or decimal coefficients
and the functions ``sin``, ``cos``, ``sinh``, ``cosh``, ``exp`` applied to
affine arguments ``c1*x + c0``, combined with ``+``, ``-``, ``*``, division by
constants and non-negative integer powers.

Internally an expression is a sum of terms ``c * x**k * f1(a1*x+b1) * ...``.
Differentiation maps that form to itself, so derivatives of any order stay
exact and the term count only grows linearly with the number of factors.

>>> e = parse("x^2/2 + sin(2*x)")
>>> e.derivative(1)(0.0)
2.0
"""

from __future__ import annotations

import ast
import math
from fractions import Fraction
from typing import Callable

import numpy as np

from .errors import ExpressionError

FUNCTIONS = ("sin", "cos", "sinh", "cosh", "exp")
CONSTANTS = {"pi": math.pi}

_MATH = {"sin": math.sin, "cos": math.cos, "sinh": math.sinh, "cosh": math.cosh, "exp": math.exp}
_NUMPY = {"sin": np.sin, "cos": np.cos, "sinh": np.sinh, "cosh": np.cosh, "exp": np.exp}

# d/dx f(a x + b) = sign * a * g(a x + b)
_DERIV = {
    "sin": ("cos", 1),
    "cos": ("sin", -1),
    "sinh": ("cosh", 1),
    "cosh": ("sinh", 1),
    "exp": ("exp", 1),
}


def _num(v):
    """Keep integers and fractions exact, everything else becomes float."""
    if isinstance(v, bool):
        raise ExpressionError("booleans are not numbers here")
    if isinstance(v, (int, Fraction)):
        return Fraction(v)
    return float(v)


class Expr:
    """Immutable sum of monomial-times-elementary-function terms in one variable."""

    __slots__ = ("_terms", "_compiled", "_derivs")

    def __init__(self, terms=None):
        merged: dict = {}
        for key, coef in (terms or {}).items():
            merged[key] = merged.get(key, 0) + coef
        self._terms = {k: c for k, c in merged.items() if c != 0}
        self._compiled = [
            (float(c), k[0], tuple((name, float(a), float(b)) for name, a, b in k[1]))
            for k, c in self._terms.items()
        ]
        self._derivs = [self]

    # construction -------------------------------------------------------
    @classmethod
    def const(cls, c) -> "Expr":
        return cls({(0, ()): _num(c)})

    @classmethod
    def x(cls, power: int = 1) -> "Expr":
        return cls({(power, ()): Fraction(1)})

    @classmethod
    def func(cls, name: str, a=1, b=0) -> "Expr":
        if name not in _DERIV:
            raise ExpressionError(f"unsupported function {name!r}")
        a, b = _num(a), _num(b)
        if a == 0:
            return cls.const(_MATH[name](float(b)))
        return cls({(0, ((name, a, b),)): Fraction(1)})

    # algebra ------------------------------------------------------------
    def __add__(self, other):
        other = _coerce(other)
        terms = dict(self._terms)
        for k, c in other._terms.items():
            terms[k] = terms.get(k, 0) + c
        return Expr(terms)

    __radd__ = __add__

    def __neg__(self):
        return Expr({k: -c for k, c in self._terms.items()})

    def __sub__(self, other):
        return self + (-_coerce(other))

    def __rsub__(self, other):
        return _coerce(other) - self

    def __mul__(self, other):
        other = _coerce(other)
        out: dict = {}
        for (p1, f1), c1 in self._terms.items():
            for (p2, f2), c2 in other._terms.items():
                key = (p1 + p2, tuple(sorted(f1 + f2)))
                out[key] = out.get(key, 0) + c1 * c2
        return Expr(out)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = _coerce(other)
        c = other.constant_value()
        if c is None:
            raise ExpressionError("division is only allowed by constants")
        if c == 0:
            raise ExpressionError("division by zero")
        inv = 1 / c if isinstance(c, Fraction) else 1.0 / c
        return Expr({k: v * inv for k, v in self._terms.items()})

    def __pow__(self, k):
        if not isinstance(k, int) or k < 0:
            raise ExpressionError("only non-negative integer powers are supported")
        out = Expr.const(1)
        for _ in range(k):
            out = out * self
        return out

    # inspection ---------------------------------------------------------
    def constant_value(self):
        """Return the value when the expression is a constant, else None."""
        if not self._terms:
            return Fraction(0)
        if set(self._terms) == {(0, ())}:
            return self._terms[(0, ())]
        return None

    def affine_parts(self):
        """Return (slope, intercept) when the expression is affine, else None."""
        if any(f or p > 1 for p, f in self._terms):
            return None
        return self._terms.get((1, ()), Fraction(0)), self._terms.get((0, ()), Fraction(0))

    @property
    def is_zero(self) -> bool:
        return not self._terms

    def __eq__(self, other):
        return isinstance(other, Expr) and self._terms == other._terms

    def __hash__(self):
        return hash(frozenset(self._terms.items()))

    def __repr__(self):
        return f"Expr({self})"

    def __str__(self):
        if not self._terms:
            return "0"
        parts = []
        for (p, funcs), c in sorted(self._terms.items(), key=lambda kv: (kv[0][0], str(kv[0][1]))):
            factors = [str(c)]
            if p == 1:
                factors.append("x")
            elif p > 1:
                factors.append(f"x^{p}")
            factors += [f"{name}({a}*x+{b})" for name, a, b in funcs]
            parts.append("*".join(factors))
        return " + ".join(parts)

    # calculus -----------------------------------------------------------
    def _diff_once(self) -> "Expr":
        out: dict = {}

        def add(key, c):
            out[key] = out.get(key, 0) + c

        for (p, funcs), c in self._terms.items():
            if p:
                add((p - 1, funcs), c * p)
            for i, (name, a, b) in enumerate(funcs):
                target, sign = _DERIV[name]
                rest = funcs[:i] + ((target, a, b),) + funcs[i + 1:]
                add((p, tuple(sorted(rest))), c * a * sign)
        return Expr(out)

    def derivative(self, order: int = 1) -> "Expr":
        if order < 0:
            raise ExpressionError("derivative order must be non-negative")
        while len(self._derivs) <= order:
            self._derivs.append(self._derivs[-1]._diff_once())
        return self._derivs[order]

    def __call__(self, x):
        if isinstance(x, np.ndarray):
            fns, total = _NUMPY, np.zeros_like(x, dtype=float)
        else:
            x = float(x)
            fns, total = _MATH, 0.0
        for c, p, funcs in self._compiled:
            term = c * x**p if p else c
            for name, a, b in funcs:
                term = term * fns[name](a * x + b)
            total = total + term
        return total

    def jet_values(self, x, order: int):
        """Values of the expression and its first ``order`` derivatives at x."""
        return [self.derivative(j)(x) for j in range(order + 1)]

    def shifted(self, delta) -> "Expr":
        """Return e(x - delta) as a new expression."""
        return self.compose_affine(1, -_num(delta))

    def compose_affine(self, m, q) -> "Expr":
        """Return e(m*x + q)."""
        m, q = _num(m), _num(q)
        inner = Expr.const(m) * Expr.x() + Expr.const(q)
        out = Expr()
        for (p, funcs), c in self._terms.items():
            term = Expr.const(c) * inner**p
            for name, a, b in funcs:
                term = term * Expr.func(name, a * m, a * q + b)
            out = out + term
        return out


def _coerce(v) -> Expr:
    if isinstance(v, Expr):
        return v
    if isinstance(v, (int, float, Fraction)) and not isinstance(v, bool):
        return Expr.const(v)
    raise ExpressionError(f"cannot combine an expression with {type(v).__name__}")


# parsing ------------------------------------------------------------------

def _parse_tree(text: str) -> ast.AST:
    if not isinstance(text, str) or not text.strip():
        raise ExpressionError("expression must be a non-empty string")
    try:
        return ast.parse(text.replace("^", "**"), mode="eval").body
    except SyntaxError as exc:
        raise ExpressionError(f"cannot parse {text!r}: {exc.msg}") from None


def parse(text: str, variable: str = "x") -> Expr:
    """Parse an expression string in one variable into an :class:`Expr`.

    Raises :class:`ExpressionError` for anything outside the grammar.
    """
    def walk(node):
        if isinstance(node, ast.Constant):
            if isinstance(node.value, bool) or not isinstance(node.value, (int, float)):
                raise ExpressionError(f"unsupported literal {node.value!r}")
            return Expr.const(node.value)
        if isinstance(node, ast.Name):
            if node.id == variable:
                return Expr.x()
            if node.id in CONSTANTS:
                return Expr.const(CONSTANTS[node.id])
            raise ExpressionError(f"unknown name {node.id!r}")
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            v = walk(node.operand)
            return -v if isinstance(node.op, ast.USub) else v
        if isinstance(node, ast.BinOp):
            left, right = walk(node.left), walk(node.right)
            if isinstance(node.op, ast.Add):
                return left + right
            if isinstance(node.op, ast.Sub):
                return left - right
            if isinstance(node.op, ast.Mult):
                return left * right
            if isinstance(node.op, ast.Div):
                return left / right
            if isinstance(node.op, ast.Pow):
                k = right.constant_value()
                if k is None or k != int(k) or k < 0:
                    raise ExpressionError("exponent must be a non-negative integer constant")
                return left ** int(k)
            raise ExpressionError(f"unsupported operator {type(node.op).__name__}")
        if isinstance(node, ast.Call):
            if not isinstance(node.func, ast.Name) or node.func.id not in FUNCTIONS:
                raise ExpressionError("only sin, cos, sinh, cosh and exp may be called")
            if len(node.args) != 1 or node.keywords:
                raise ExpressionError(f"{node.func.id} takes exactly one argument")
            arg = walk(node.args[0])
            parts = arg.affine_parts()
            if parts is None:
                raise ExpressionError(f"argument of {node.func.id} must be affine in {variable}")
            return Expr.func(node.func.id, *parts)
        raise ExpressionError(f"unsupported syntax {type(node).__name__}")

    return walk(_parse_tree(text))


def compile_numeric(text: str, variables=("x", "t")) -> Callable:
    """Compile an expression in several variables into a numpy-vectorised callable.

    Used for memory kernels, which are only ever evaluated, never differentiated.
    Same operators and functions as :func:`parse`; function arguments need not
    be affine.
    """
    index = {name: i for i, name in enumerate(variables)}

    def walk(node):
        if isinstance(node, ast.Constant):
            if isinstance(node.value, bool) or not isinstance(node.value, (int, float)):
                raise ExpressionError(f"unsupported literal {node.value!r}")
            v = float(node.value)
            return lambda args: v
        if isinstance(node, ast.Name):
            if node.id in index:
                i = index[node.id]
                return lambda args: args[i]
            if node.id in CONSTANTS:
                v = CONSTANTS[node.id]
                return lambda args: v
            raise ExpressionError(f"unknown name {node.id!r}")
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            inner = walk(node.operand)
            if isinstance(node.op, ast.USub):
                return lambda args: -inner(args)
            return inner
        if isinstance(node, ast.BinOp):
            left, right = walk(node.left), walk(node.right)
            op = node.op
            if isinstance(op, ast.Add):
                return lambda args: left(args) + right(args)
            if isinstance(op, ast.Sub):
                return lambda args: left(args) - right(args)
            if isinstance(op, ast.Mult):
                return lambda args: left(args) * right(args)
            if isinstance(op, ast.Div):
                if not _is_constant_tree(node.right):
                    raise ExpressionError("division is only allowed by constants")
                return lambda args: left(args) / right(args)
            if isinstance(op, ast.Pow):
                if not _is_constant_tree(node.right):
                    raise ExpressionError("exponent must be a non-negative integer constant")
                k = right(())
                if k != int(k) or k < 0:
                    raise ExpressionError("exponent must be a non-negative integer constant")
                k = int(k)
                return lambda args: left(args) ** k
            raise ExpressionError(f"unsupported operator {type(op).__name__}")
        if isinstance(node, ast.Call):
            if not isinstance(node.func, ast.Name) or node.func.id not in FUNCTIONS:
                raise ExpressionError("only sin, cos, sinh, cosh and exp may be called")
            if len(node.args) != 1 or node.keywords:
                raise ExpressionError(f"{node.func.id} takes exactly one argument")
            fn, inner = _NUMPY[node.func.id], walk(node.args[0])
            return lambda args: fn(inner(args))
        raise ExpressionError(f"unsupported syntax {type(node).__name__}")

    body = walk(_parse_tree(text))

    def evaluate(*args):
        if len(args) != len(variables):
            raise TypeError(f"expected {len(variables)} arguments")
        arrays = np.broadcast_arrays(*[np.asarray(a, dtype=float) for a in args])
        out = np.asarray(body(arrays), dtype=float)
        out = np.broadcast_to(out, arrays[0].shape).copy() if out.shape != arrays[0].shape else out
        return out if out.ndim else float(out)

    evaluate.source = text
    return evaluate


def _is_constant_tree(node) -> bool:
    return all(
        not (isinstance(n, ast.Name) and n.id not in CONSTANTS)
        for n in ast.walk(node)
    )
