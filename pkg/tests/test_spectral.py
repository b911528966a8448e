import numpy as np
import pytest
import sympy
from pydantic import ValidationError

from qflag.errors import NoPolynomialSolution, SingularLinearSystem, TwistMismatch
from qflag.schemas import TwistedPolyModel
from qflag.spectral import (
    U,
    QQSolveOptions,
    TwistedPoly,
    TwistParams,
    relative_residual,
    sample_points,
    solve_first_order_qq,
    solve_first_order_qq_exact,
    to_twisted,
    wronskian,
    wronskian_exact,
)


@pytest.fixture
def params():
    return TwistParams.from_values([np.exp(0.4j), np.exp(-1.1j)], hbar=1.0)


@pytest.fixture
def untwisted():
    return TwistParams(logs=np.zeros(2), hbar=1.0)


def test_shift_matches_evaluation(params, rng):
    f = TwistedPoly([1, 0], [0.5 - 1j, 2, 1], params)
    u = sample_points(rng, 6)
    for n in (-3, -1, 0.5, 2):
        np.testing.assert_allclose(f.shift(n)(u), f(u + n * params.hbar / 2), rtol=1e-12)


def test_twistmismatch_on_addition(params):
    f = TwistedPoly([1, 0], [1.0], params)
    g = TwistedPoly([0, 1], [1.0], params)
    with pytest.raises(TwistMismatch):
        f + g


def test_two_by_two_wronskian(params, rng):
    f = TwistedPoly([0.5, 0.5], [1, -2, 1], params)
    g = TwistedPoly([-0.5, 0.5], [3j, 1], params)
    u = sample_points(rng, 5)
    expected = f.shift(1)(u) * g.shift(-1)(u) - f.shift(-1)(u) * g.shift(1)(u)
    np.testing.assert_allclose(wronskian([f, g])(u), expected, rtol=1e-10)


def test_wronskian_of_constant_and_linear(untwisted):
    one = TwistedPoly.constant(1.0, untwisted)
    u = TwistedPoly.from_roots([0.0], untwisted)
    assert np.allclose(wronskian([one, u]).coeffs, [-1])
    assert np.allclose(wronskian([u, one]).coeffs, [1])


def test_three_function_wronskian_is_antisymmetric(params, rng):
    fs = [TwistedPoly(np.eye(2)[i % 2], rng.normal(size=3) + 0j, params) for i in range(3)]
    u = sample_points(rng, 4)
    np.testing.assert_allclose(wronskian([fs[1], fs[0], fs[2]])(u), -wronskian(fs)(u), rtol=1e-9)


def test_solve_untwisted_qq_in_gauge(untwisted):
    a = TwistedPoly.from_roots([0.3], untwisted)
    x = TwistedPoly([0, 0], [0.7, 0.0, 1.0], untwisted)
    b = wronskian([a, x])
    solved = solve_first_order_qq(a, b)
    u = np.linspace(-1, 1, 5)
    np.testing.assert_allclose(solved(u), x(u), atol=1e-10)


def test_solve_twisted_qq(params):
    a = TwistedPoly([1, 0], [0.2, 1.0], params)
    x = TwistedPoly([0, 1], [1 - 1j, 0.5, 1.0], params)
    b = wronskian([a, x])
    solved = solve_first_order_qq(a, b)
    np.testing.assert_allclose(solved.weights, x.weights)
    u = np.linspace(-1, 1, 5)
    np.testing.assert_allclose(solved(u), x(u), atol=1e-9)


def test_qq_without_polynomial_solution(untwisted):
    a = TwistedPoly.from_roots([0.0, 0.0], untwisted)
    b = TwistedPoly.constant(1.0, untwisted)
    with pytest.raises(NoPolynomialSolution):
        solve_first_order_qq(a, b, QQSolveOptions())


def test_qq_with_vanishing_argument(untwisted):
    zero = TwistedPoly.constant(0.0, untwisted)
    with pytest.raises(SingularLinearSystem):
        solve_first_order_qq(zero, TwistedPoly.constant(1.0, untwisted))


def test_exact_mode():
    assert wronskian_exact([sympy.Integer(1), U]) == -1
    assert solve_first_order_qq_exact(U**2, 2 * U) == 1
    x = U**3 - sympy.Rational(1, 3)
    b = wronskian_exact([U - 2, x])
    assert sympy.expand(solve_first_order_qq_exact(U - 2, b) - x) == 0


def test_exact_matches_numeric(untwisted):
    x = U**2 - 3 * U + sympy.Rational(1, 2)
    numeric = wronskian([to_twisted(U + 1, untwisted), to_twisted(x, untwisted)])
    exact = to_twisted(wronskian_exact([U + 1, x]), untwisted)
    np.testing.assert_allclose(numeric.coeffs, exact.coeffs, atol=1e-12)


def test_divide(untwisted):
    f = TwistedPoly.from_roots([1.0, 2.0], untwisted)
    g = TwistedPoly.from_roots([1.0], untwisted)
    np.testing.assert_allclose(f.divide(g).coeffs, [-2, 1])
    with pytest.raises(NoPolynomialSolution):
        f.divide(TwistedPoly.from_roots([3.0], untwisted))


def test_model_rejects_non_half_integer_weights():
    with pytest.raises(ValidationError):
        TwistedPolyModel(twist_weights=[0.3], coeffs=[(1.0, 0.0)])
    TwistedPolyModel(twist_weights=[0.5, -1.5], coeffs=[(1.0, 0.0)])


def test_relative_residual():
    assert relative_residual(np.ones(3), np.ones(3)) == 0
    assert relative_residual(np.array([1.0]), np.array([2.0])) == pytest.approx(1 / 3)
