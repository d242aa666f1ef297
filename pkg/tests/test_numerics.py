import math
import warnings

import numpy as np
import pytest

from boundary_darboux.errors import (
    DomainError,
    MaxSubdivisions,
    NoBracket,
    NoConvergence,
    NonMonotoneDetected,
    SingularJacobian,
    TargetOutOfRange,
)
from boundary_darboux.numerics import (
    ToleranceConfig,
    fd_jacobian,
    fd_jacobian_batch,
    find_root_bracketed,
    integrate_1d,
    integrate_batch,
    invert_monotone,
    newton_invert_2d,
)


def test_tolerance_defaults_and_validation():
    t = ToleranceConfig()
    assert (t.quad_tol, t.root_tol, t.newton_max_iter, t.fd_step, t.verify_tol) == (1e-10, 1e-12, 50, 1e-5, 1e-6)
    with pytest.raises(ValueError):
        ToleranceConfig(quad_tol=0)
    with pytest.raises(ValueError):
        ToleranceConfig(fd_step=1e-9)


def test_integrate_examples():
    assert integrate_1d(lambda t: np.ones_like(t), -1, 1).value == pytest.approx(2, abs=1e-14)
    r = integrate_1d(np.exp, 0, 1)
    assert r.value == pytest.approx(math.e - 1, rel=1e-14)
    assert r.error_estimate <= 1e-10
    assert integrate_1d(lambda t: np.ones_like(t), 1, 0).value == pytest.approx(-1, abs=1e-15)


def test_integrate_scalar_only_callable():
    assert integrate_1d(lambda t: math.cos(t), 0, math.pi / 2).value == pytest.approx(1, rel=1e-13)


def test_random_polynomials_match_antiderivatives():
    rng = np.random.default_rng(7)
    for _ in range(50):
        coef = rng.uniform(-5, 5, rng.integers(1, 8))
        a, b = rng.uniform(-2, 2, 2)
        poly = np.polynomial.Polynomial(coef)
        exact = poly.integ()(b) - poly.integ()(a)
        got = integrate_1d(poly, a, b).value
        assert abs(got - exact) <= 1e-10 * max(1.0, abs(exact))


def test_batch_components_and_orientation():
    def g(t, idx):
        return np.stack([np.ones_like(t), t])
    vals, err, _ = integrate_batch(g, [0.0, 2.0], [1.0, 0.0], 1e-12)
    assert vals.shape == (2, 2)
    np.testing.assert_allclose(vals[0], [1.0, -2.0], atol=1e-14)
    np.testing.assert_allclose(vals[1], [0.5, -2.0], atol=1e-14)


def test_adaptive_refinement_on_peaked_integrand():
    r = integrate_1d(lambda t: 1.0 / (1e-4 + t * t), -1, 1, tol=1e-10)
    exact = 2 * math.atan(1 / 1e-2) / 1e-2
    assert r.value == pytest.approx(exact, rel=1e-9)


def test_quadrature_errors():
    with pytest.raises(MaxSubdivisions) as err:
        integrate_batch(lambda t, i: np.sin(1.0 / (t + 1e-9)), [0.0], [1.0], 1e-14, max_panels=20)
    assert err.value.error_estimate > 0
    with pytest.raises(DomainError):
        integrate_1d(lambda t: np.full_like(t, np.nan), 0, 1)


def test_root_examples():
    assert find_root_bracketed(lambda x: x - 0.5, 0, 1) == pytest.approx(0.5, abs=1e-12)
    assert find_root_bracketed(lambda x: x * x - 2, 1, 2) == pytest.approx(math.sqrt(2), abs=1e-12)
    with pytest.raises(NoBracket):
        find_root_bracketed(lambda x: 1.0, 0, 1)


def test_invert_monotone_examples():
    assert invert_monotone(lambda x: x ** 3, 8, 0, 3) == pytest.approx(2, abs=1e-12)
    assert invert_monotone(lambda x: 4 / 3 * x ** 1.5, 4 / 3, 0, 3) == pytest.approx(1, abs=1e-12)
    with pytest.raises(TargetOutOfRange):
        invert_monotone(lambda x: x, -1, 0, 1)


def test_invert_monotone_round_trip():
    rng = np.random.default_rng(3)
    for _ in range(20):
        a, b = rng.uniform(0.1, 3, 2)
        F = lambda v, a=a, b=b: a * v + b * v ** 3 + math.tanh(v)
        for x in rng.uniform(-1, 1, 5):
            assert invert_monotone(F, F(x), -1, 1, tol=1e-14) == pytest.approx(x, abs=1e-10)


def test_invert_monotone_warns_on_sampled_violation():
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        invert_monotone(lambda v: v + 0.3 * math.sin(20 * v), 0.5, 0, 1, check_samples=50)
    assert any(issubclass(w.category, NonMonotoneDetected) for w in caught)


def test_newton_examples():
    ident = lambda p: p
    assert newton_invert_2d(ident, lambda p: np.eye(2), (0.3, 0.4), (0, 0)) == pytest.approx((0.3, 0.4))
    lin = lambda p: np.array([2 * p[0], 3 * p[1]])
    assert newton_invert_2d(lin, lambda p: np.diag([2.0, 3.0]), (1, 3), (0, 0)) == pytest.approx((0.5, 1.0))
    sq = lambda p: np.array([p[0] ** 2, p[1]])
    with pytest.raises((SingularJacobian, NoConvergence)):
        newton_invert_2d(sq, lambda p: np.array([[2 * p[0], 0], [0, 1.0]]), (1, 0), (0, 0))


def test_newton_no_convergence():
    f = lambda p: np.array([math.atan(p[0]), p[1]])
    jac = lambda p: np.array([[1 / (1 + p[0] ** 2), 0], [0, 1.0]])
    with pytest.raises(NoConvergence):
        newton_invert_2d(f, jac, (1.5, 0), (3.0, 0), max_iter=5)


def test_fd_jacobian_examples():
    np.testing.assert_allclose(fd_jacobian(lambda p: p, (0.2, 0.3)), np.eye(2), atol=1e-10)
    J = fd_jacobian(lambda p: (p[0] + p[1], p[0] - p[1]), (0.1, 0.2))
    np.testing.assert_allclose(J, [[1, 1], [1, -1]], atol=1e-10)
    assert np.linalg.det(J) == pytest.approx(-2)
    J = fd_jacobian(lambda p: (p[0] ** 2, p[1]), (1, 0), h=1e-5)
    np.testing.assert_allclose(J, [[2, 0], [0, 1]], atol=1e-9)


def test_fd_jacobian_second_order():
    m = lambda p: (p[0] ** 3 + p[0] * p[1], math.sin(p[1]) * p[0])
    point = (0.7, 0.4)
    exact = np.array([[3 * 0.49 + 0.4, 0.7], [math.sin(0.4), 0.7 * math.cos(0.4)]])
    hs = [1e-2, 1e-3, 1e-4]
    errs = [np.max(np.abs(fd_jacobian(m, point, h) - exact)) for h in hs]
    orders = [math.log10(errs[i] / errs[i + 1]) for i in range(2)]
    assert min(orders) >= 1.9


def test_fd_jacobian_batch_matches_scalar():
    m = lambda x, y: (x * x * y, np.exp(x) - y)
    xs = np.array([0.1, -0.3])
    ys = np.array([0.5, 0.2])
    J = fd_jacobian_batch(m, xs, ys, 1e-5)
    for k in range(2):
        ref = fd_jacobian(lambda p: m(p[0], p[1]), (xs[k], ys[k]))
        np.testing.assert_allclose(J[k], ref, atol=1e-12)
