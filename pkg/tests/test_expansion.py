import math

import numpy as np
import pytest

from conftest import fn, pure
from gentaylor import (
    ArgumentError,
    GeneralizedTaylor,
    SmoothFunction,
    cauchy_solve,
    classical_taylor,
    integrate,
    parse,
    reconstruct,
)


def test_harmonic_exp_at_one(harmonic):
    r = reconstruct(harmonic, fn("exp(x)"), 0.0, 1.0)
    assert r.initial_data_part == pytest.approx(math.cos(1) + math.sin(1), abs=1e-9)
    assert r.remainder_part == pytest.approx(math.e - math.sin(1) - math.cos(1), abs=1e-9)
    assert r.total == pytest.approx(math.e, abs=1e-8)
    assert r.discrepancy <= 1e-8
    assert r.kernel_path == "adjoint"


def test_solution_has_no_remainder(harmonic):
    r = reconstruct(harmonic, fn("cos(x)"), 0.0, 2.5)
    assert abs(r.remainder_part) <= 1e-12
    assert r.total == pytest.approx(math.cos(2.5), abs=1e-9)


def test_at_base_point(quartic):
    y = fn("exp(x)")
    r = reconstruct(quartic, y, 0.3, 0.3)
    assert r.initial_data_part == pytest.approx(math.exp(0.3), abs=1e-12)
    assert r.remainder_part == 0.0
    assert r.discrepancy <= 1e-12


def test_left_of_base_point(quartic):
    r = reconstruct(quartic, fn("sin(1.7*x)"), 0.0, -2.2)
    assert r.discrepancy <= 1e-7


def test_forward_and_adjoint_paths_agree(harmonic):
    y = fn("x^5/20 - x^3/3 + x^2/2 + 2*x - 1")
    a = reconstruct(harmonic, y, 0.0, 1.4, kernel_path="adjoint")
    b = reconstruct(harmonic, y, 0.0, 1.4, kernel_path="forward")
    assert a.remainder_part == pytest.approx(b.remainder_part, abs=1e-8)
    assert b.kernel_path == "forward"


def test_linearity(quartic):
    y, w = "exp(x)", "sin(1.7*x)"
    ex = GeneralizedTaylor(quartic, 0.0, span=(-2, 2))
    for x in (-1.3, 0.8, 1.9):
        dy, dw = ex.reconstruct(fn(y), x).discrepancy, ex.reconstruct(fn(w), x).discrepancy
        both = ex.reconstruct(fn(f"{y} + {w}"), x).discrepancy
        assert both <= dy + dw + 1e-9


def test_variable_coefficient_reconstruction():
    from gentaylor import LinearOperator
    op = LinearOperator.from_exprs([parse("x"), parse("1 + x^2/4")], (-3, 3))
    ex = GeneralizedTaylor(op, 0.5, span=(-2, 2.5))
    for x in (-1.5, 2.3):
        assert ex.reconstruct(fn("exp(x/2) + x^3"), x).discrepancy <= 1e-7


def test_classical_cubic():
    r = classical_taylor(fn("x^3"), 0.0, 2.0, 2)
    assert r.initial_data_part == 0.0
    assert r.remainder_part == pytest.approx(8.0, abs=1e-12)
    assert r.total == pytest.approx(8.0, abs=1e-12)


def test_classical_low_degree_polynomial():
    r = classical_taylor(fn("3*x^2 - x + 4"), 0.5, 2.0, 3)
    assert abs(r.remainder_part) <= 1e-13


def test_classical_exp_order_three():
    r = classical_taylor(fn("exp(x)"), 0.0, 1.0, 3)
    assert r.total == pytest.approx(math.e, abs=1e-10)


def test_classical_rejects_zero_order():
    with pytest.raises(ArgumentError):
        classical_taylor(fn("x"), 0.0, 1.0, 0)


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_pure_derivative_degenerates_to_taylor(n):
    for text in ("exp(x)", "x^5/20 - x^3/3 + x^2/2 + 2*x - 1"):
        for x in (-1.2, 1.6):
            a = reconstruct(pure(n), fn(text), 0.0, x)
            b = classical_taylor(fn(text), 0.0, x, n)
            assert a.total == pytest.approx(b.total, abs=1e-9)


def test_cauchy_harmonic_constant_forcing(harmonic):
    y = cauchy_solve(harmonic, lambda s: 1.0, 0.0, [0, 0], [math.pi / 2, 1.0, -1.0])
    np.testing.assert_allclose(y, [1.0, 1 - math.cos(1), 1 - math.cos(-1)], atol=1e-8)


def test_cauchy_homogeneous(quartic):
    xs = np.array([-1.0, 0.7, 2.0])
    init = [1.0, -0.5, 0.25, 2.0]
    got = cauchy_solve(quartic, lambda s: 0.0, 0.0, init, xs)
    traj_r = integrate(quartic, 0.0, init, target_end=2.0)
    traj_l = integrate(quartic, 0.0, init, target_end=-1.0)
    np.testing.assert_allclose(got, [traj_l(-1.0), traj_r(0.7), traj_r(2.0)], atol=1e-8)


def test_cauchy_pure_second_order():
    xs = np.array([0.5, 1.0, 2.5])
    np.testing.assert_allclose(cauchy_solve(pure(2), lambda s: 2.0, 0.0, [0, 0], xs), xs**2, atol=1e-10)


def test_cauchy_matches_forced_ivp(quartic):
    f = lambda s: np.cos(3 * s)  # noqa: E731
    got = cauchy_solve(quartic, f, 0.0, [0, 0, 0, 0], [1.5])[0]
    direct = integrate(quartic, 0.0, [0, 0, 0, 0], forcing=lambda s: math.cos(3 * s), target_end=1.5)(1.5)
    assert got == pytest.approx(direct, abs=1e-7)


def test_bad_init_length(harmonic):
    with pytest.raises(ArgumentError):
        cauchy_solve(harmonic, lambda s: 0.0, 0.0, [1.0], [1.0])


def test_jet_oracle_function():
    # A hand-written oracle, not an expression
    y = SmoothFunction(lambda x, m: [math.exp(2 * x) * 2**k for k in range(m + 1)], "exp(2x)")
    r = reconstruct(pure(2), y, 0.0, 1.0)
    assert r.total == pytest.approx(math.exp(2), abs=1e-8)


def test_scalar_oracle_in_classical_taylor():
    y = SmoothFunction(lambda x, m: [math.exp(2 * x) * 2**k for k in range(m + 1)], "exp(2x)")
    assert classical_taylor(y, 0.0, 1.0, 2).total == pytest.approx(math.exp(2), abs=1e-9)
