import math

import numpy as np
import pytest

from boundary_darboux.errors import (
    DegenerateCritical,
    NonPositiveDensity,
    NotCritical,
    NotRegular,
    OutsideChartDomain,
)
from boundary_darboux.expr import parse_expression as P
from boundary_darboux.morse import (
    check_and_normalize,
    check_hypotheses,
    hadamard_coefficients,
    morse_forward,
    morse_inverse,
    pushforward_density,
)

from conftest import F_CORPUS, problem_for


def test_check_examples():
    report, problem = check_and_normalize(P("x^2+y"), P("1"))
    assert report.admissible and not report.flip_f and not report.flip_y
    report, _ = check_and_normalize(P("-(x^2)-y"), P("1"))
    assert report.admissible and report.flip_f and not report.flip_y
    with pytest.raises(NotCritical) as err:
        check_and_normalize(P("x+y"), P("1"))
    assert err.value.report.failure == "NotCritical"


@pytest.mark.parametrize(
    "f, omega, exc",
    [("x^3+y", "1", DegenerateCritical), ("x^2+y^2", "1", NotRegular), ("x^2+y", "x-1", NonPositiveDensity)],
)
def test_hypothesis_failures(f, omega, exc):
    assert not check_hypotheses(P(f), P(omega)).admissible
    with pytest.raises(exc):
        check_and_normalize(P(f), P(omega))


@pytest.mark.parametrize(
    "f, flip_f, flip_y",
    [("x^2+y", False, False), ("-(x^2)-y", True, False), ("x^2-y", False, True), ("-(x^2)+y", True, True)],
)
def test_flips_normalize_signs(f, flip_f, flip_y):
    report, problem = check_and_normalize(P(f), P("1"))
    assert (report.flip_f, report.flip_y) == (flip_f, flip_y)
    j = problem.f.jet2(0, 0)
    assert j.dy > 0 and j.dxx > 0


def test_centering():
    _, problem = check_and_normalize(P("x^2+y+3"), P("1"))
    assert problem.f.evaluate(0.0, 0.0) == 0.0
    assert problem.f0 == 3.0


@pytest.mark.parametrize(
    "f, point, want",
    [
        ("x^2+y", (0.3, -0.2), (1, 0, 1)),
        ("x^2+y+x^3", (0.25, 0.1), (1.25, 0, 1)),
        ("2*y+x^2", (-0.2, 0.3), (1, 0, 2)),
    ],
)
def test_hadamard_examples(f, point, want):
    h = hadamard_coefficients(P(f), point)
    assert (h.f11, h.f12, h.f2) == pytest.approx(want, abs=1e-12)


@pytest.mark.parametrize("f", ["x^2+y+x^3", "x^2+y+x*y+y^2", "exp(x)-1-x+y+sin(x*y)"])
def test_hadamard_invariants(f):
    expr = P(f)
    j = expr.jet2(0, 0)
    h0 = hadamard_coefficients(expr, (0, 0))
    assert h0.f11 == pytest.approx(0.5 * j.dxx, rel=1e-8)
    assert h0.f2 == pytest.approx(j.dy, rel=1e-8)
    for x, y in [(0.1, 0.2), (-0.3, 0.05), (0.2, -0.1)]:
        h = hadamard_coefficients(expr, (x, y))
        assert h.f11 * x * x + (h.f12 * x + h.f2) * y == pytest.approx(expr.evaluate(x, y), abs=1e-9)


def test_forward_examples():
    assert morse_forward(P("x^2+y"), (0.3, 0.2)) == pytest.approx((0.3, 0.2), abs=1e-14)
    assert morse_forward(P("x^2+y+x^3"), (0.2, 0)) == pytest.approx((0.2 * math.sqrt(1.2), 0), abs=1e-12)
    assert morse_forward(P("2*y+x^2"), (0.1, 0.3)) == pytest.approx((0.1, 0.6), abs=1e-14)
    with pytest.raises(OutsideChartDomain):
        morse_forward(P("x^2+y+x^3"), (-1.5, 0))


def test_inverse_examples():
    assert morse_inverse(problem_for("x^2+y", "1"), (0.3, 0.2)) == pytest.approx((0.3, 0.2), abs=1e-13)
    assert morse_inverse(problem_for("2*y+x^2", "1"), (0.1, 0.6)) == pytest.approx((0.1, 0.3), abs=1e-13)


def test_inverse_round_trip_cubic():
    problem = problem_for("x^2+y+x^3", "1")
    r = problem.radius
    u, v = np.meshgrid(np.linspace(-r, r, 10), np.linspace(0, r * r, 10))
    x, y = problem.inverse(u.ravel(), v.ravel())
    xh, yh = problem.forward(x, y)
    assert np.max(np.abs(xh - u.ravel())) <= 1e-10
    assert np.max(np.abs(yh - v.ravel())) <= 1e-10


def test_pushforward_examples():
    assert pushforward_density(problem_for("x^2+y", "1"), (0.2, 0.1)) == pytest.approx(1, abs=1e-13)
    assert pushforward_density(problem_for("2*y+x^2", "1"), (0.2, 0.1)) == pytest.approx(0.5, abs=1e-13)
    assert pushforward_density(problem_for("x^2+y", "exp(x)"), (0.3, 0.1)) == pytest.approx(math.exp(0.3), rel=1e-13)


@pytest.mark.parametrize("f", F_CORPUS)
def test_morse_chart_normal_form_on_grid(f):
    problem = problem_for(f, "1")
    r = problem.radius
    u, v = np.meshgrid(np.linspace(-r, r, 21), np.linspace(0, r * r, 21))
    x, y = problem.inverse(u.ravel(), v.ravel())
    err = np.abs(problem.f.evaluate(x, y) - (u.ravel() ** 2 + v.ravel()))
    assert err.max() <= 1e-8


@pytest.mark.parametrize("f", F_CORPUS)
def test_jacobian_positive_at_origin(f):
    problem = problem_for(f, "1")
    _, _, J = problem.forward(0.0, 0.0, jacobian=True)
    det = np.linalg.det(J[0])
    assert det == pytest.approx(math.sqrt(problem.f11_0) * problem.fy0, rel=1e-12)
    assert det > 0


@pytest.mark.parametrize("f", F_CORPUS)
def test_boundary_preservation(f):
    problem = problem_for(f, "1")
    xs = np.linspace(-0.3, 0.3, 21)
    _, yh = problem.forward(xs, np.zeros_like(xs))
    assert np.max(np.abs(yh)) <= 1e-12
    ys = np.linspace(-0.05, 0.05, 21)
    ys = ys[ys != 0]
    _, yh = problem.forward(0.1 * np.ones_like(ys), ys)
    assert np.all(np.sign(yh) == np.sign(ys))


def test_forward_jacobian_matches_finite_differences():
    problem = problem_for("x^2+y+x^3", "exp(x)*(1+y)")
    pts = np.array([[0.1, 0.05], [-0.2, 0.1], [0.05, 0.0]])
    _, _, J = problem.forward(pts[:, 0], pts[:, 1], jacobian=True)
    h = 1e-6
    for k, (x, y) in enumerate(pts):
        a = np.array(problem.forward([x + h, x - h, x, x], [y, y, y + h, y - h]))
        fd = np.array([[a[0, 0] - a[0, 1], a[0, 2] - a[0, 3]], [a[1, 0] - a[1, 1], a[1, 2] - a[1, 3]]]) / (2 * h)
        np.testing.assert_allclose(J[k], fd, atol=1e-8)


def test_chart_radius_shrinks_for_cubic():
    assert problem_for("x^2+y", "1").radius == 0.5
    problem = problem_for("x^2+y+x^3", "1")
    # the chart cannot reach xh below the minimum of sqrt(1+x)*x, about -0.385
    assert problem.radius < 2 / 3 / math.sqrt(3)
    assert problem.density_hat(0.0, 0.0) == pytest.approx(1.0)
