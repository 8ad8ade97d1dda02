import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import fn, pure
from gentaylor import (
    ArgumentError,
    CapabilityError,
    CoefficientBundle,
    EvaluationError,
    Jet,
    LinearOperator,
    apply_adjoint,
    apply_forward,
    catalogue,
    concomitant,
    lagrange_residual,
    parse,
)
from gentaylor.ivp import adjoint_phi

CATALOGUE_OPS = ["harmonic", "hyperbolic", "quartic", "pure_derivative_1", "pure_derivative_3"]


def test_forward_harmonic_on_sin(harmonic):
    assert apply_forward(harmonic, Jet(0.0, [0, 1, 0])) == 0.0


def test_forward_pure_derivative_parabola():
    assert apply_forward(pure(2), Jet(3.0, [9, 6, 2])) == 2.0


def test_forward_quartic_on_sin2x(quartic):
    assert apply_forward(quartic, Jet(math.pi / 4, [1, 0, -4, 0, 16])) == 0.0


def test_forward_rejects_short_jet(harmonic):
    with pytest.raises(ArgumentError):
        apply_forward(harmonic, Jet(0.0, [0, 1]))


def test_non_finite_coefficient_named():
    op = LinearOperator((CoefficientBundle(lambda x: math.inf),))
    with pytest.raises(EvaluationError, match="a_1"):
        apply_forward(op, Jet(0.5, [1.0, 0.0]))


def test_adjoint_harmonic_on_cos(harmonic):
    assert apply_adjoint(harmonic, Jet(0.0, [1, 0, -1])) == 0.0


def test_adjoint_pure_derivative_linear():
    assert apply_adjoint(pure(2), Jet(5.0, [5, 1, 0])) == 0.0


def test_adjoint_variable_coefficient_first_order():
    # n = 1, a_1 = x: G(z) = -[z' - x z], so that z F(y) - y G(z) = (y z)'.
    # z = 1 at x = 2 gives 2.
    op = LinearOperator.from_exprs([parse("x")])
    assert apply_adjoint(op, Jet(2.0, [1.0, 0.0])) == pytest.approx(2.0, abs=1e-15)


def test_adjoint_variable_coefficient_leibniz():
    # n = 2, a_1 = x, a_2 = 0: G(z) = z'' - (x z)' = z'' - z - x z'
    op = LinearOperator.from_exprs([parse("x"), parse("0")])
    assert apply_adjoint(op, Jet(2.0, [1.0, 0.0, 0.0])) == pytest.approx(-1.0, abs=1e-15)
    assert apply_adjoint(op, Jet(2.0, [0.5, 3.0, 1.0])) == pytest.approx(1.0 - 0.5 - 6.0, abs=1e-14)


def test_adjoint_missing_derivative_raises_without_fallback():
    a1 = CoefficientBundle(math.sin, lambda x, j: math.cos(x) if j == 1 else math.sin(x),
                           max_exact_order=0, allow_fallback=False)
    op = LinearOperator((a1, CoefficientBundle.constant_value(1.0)))
    with pytest.raises(CapabilityError):
        apply_adjoint(op, Jet(0.3, [1.0, 0.0, 0.0]))
    with pytest.raises(CapabilityError):
        op.check_adjoint_capability()


def test_fd_fallback_is_accurate_and_flagged():
    exact = LinearOperator.from_exprs([parse("sin(x)"), parse("1")], (-3, 3))
    a1 = CoefficientBundle(math.sin, domain=(-3, 3))
    approx = LinearOperator((a1, CoefficientBundle.constant_value(1.0, (-3, 3))), (-3, 3))
    assert approx.adjoint_needs_fallback() and not exact.adjoint_needs_fallback()
    z = Jet(0.4, [0.3, -1.2, 0.7])
    assert apply_adjoint(approx, z) == pytest.approx(apply_adjoint(exact, z), abs=1e-7)
    assert adjoint_phi(approx, 0.5, (0, 0.5)).metadata["fd_fallback"] is True
    assert adjoint_phi(exact, 0.5, (0, 0.5)).metadata["fd_fallback"] is False


def test_concomitant_first_order():
    assert concomitant(pure(1), Jet(0.2, [3.0]), Jet(0.2, [2.0])) == 6.0


def test_concomitant_mismatched_points(harmonic):
    with pytest.raises(ArgumentError):
        concomitant(harmonic, Jet(0.0, [1, 0]), Jet(0.1, [1, 0]))


def test_order_limits():
    LinearOperator.constant([0] * 12)
    with pytest.raises(ArgumentError):
        LinearOperator.constant([0] * 13)
    with pytest.raises(ArgumentError):
        LinearOperator.constant([])


@pytest.mark.parametrize("name", CATALOGUE_OPS)
def test_leibniz_matches_naive_constant_formula(name):
    op = catalogue.get(name).operator
    n = op.order
    a = [1.0] + [op.coefficient(k, 0.0) for k in range(1, n + 1)]
    rng = np.random.default_rng(3)
    for _ in range(5):
        z = rng.normal(size=n + 1)
        naive = sum((-1) ** (n + k) * a[k] * z[n - k] for k in range(n + 1))
        assert apply_adjoint(op, Jet(0.7, z)) == naive


@pytest.mark.parametrize("name", CATALOGUE_OPS + ["variable"])
def test_concomitant_leading_term(name):
    op = (LinearOperator.from_exprs([parse("x"), parse("1 + x^2/4")])
          if name == "variable" else catalogue.get(name).operator)
    n = op.order
    y = Jet(0.3, np.arange(1.0, n + 1))
    e = Jet(0.3, [0.0] * (n - 1) + [1.0])
    assert concomitant(op, y, e) == pytest.approx((-1) ** (n - 1) * y[0], rel=1e-15)


def test_lagrange_harmonic_sin_cos(harmonic):
    assert lagrange_residual(harmonic, fn("sin(x)"), fn("cos(x)"), 0.8, 1e-4) < 1e-11


def test_lagrange_pure_derivative_polynomials():
    assert lagrange_residual(pure(2), fn("x^2"), fn("x"), 1.0, 1e-4) <= 1e-7


def test_lagrange_quartic_exp(quartic):
    y = fn("exp(x)")
    r1 = lagrange_residual(quartic, y, y, 0.5, 1e-4)
    r2 = lagrange_residual(quartic, y, y, 0.5, 5e-5)
    # y = z = exp makes the concomitant constant, so both residuals sit at roundoff
    assert r1 <= 1e-6
    assert r1 < 1e-9 or r1 / r2 >= 3.5


def test_lagrange_variable_coefficient_decay():
    op = LinearOperator.from_exprs([parse("x"), parse("1 + x^2/4")], (-3, 3))
    y, z = fn("exp(x/2) + x^2"), fn("sin(1.7*x)")
    r1 = lagrange_residual(op, y, z, 0.9, 1e-3)
    r2 = lagrange_residual(op, y, z, 0.9, 5e-4)
    assert r1 / r2 >= 3.5


def test_adjoint_solution_annihilated(quartic):
    sl = adjoint_phi(quartic, 1.2, (0, 1.2))
    for s in np.linspace(0, 1.2, 7):
        assert abs(apply_adjoint(quartic, Jet(s, sl.jet(s, 4)))) <= 1e-8


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-3, 3), min_size=3, max_size=3), st.floats(-1, 1))
def test_constant_adjoint_is_linear_in_z(coeffs, x):
    op = LinearOperator.constant(coeffs)
    z1, z2 = np.array([1.0, -2.0, 0.5, 3.0]), np.array([0.2, 0.1, -1.0, 0.4])
    lhs = apply_adjoint(op, Jet(x, z1 + z2))
    rhs = apply_adjoint(op, Jet(x, z1)) + apply_adjoint(op, Jet(x, z2))
    assert lhs == pytest.approx(rhs, abs=1e-12)
