"""Area invariant A_f(eps), its smoothed form A_f^(2/3) and the reparametrization alpha.

A_f(eps) is the omega-area of the cap {xh^2 + yh <= eps, yh >= 0} in the
Morse chart.  It is computed as the nested integral

    A_f(eps) = int_{-sqrt eps}^{sqrt eps} dx int_0^{eps - x^2} omega_hat(x, y) dy,

evaluated after the substitution x = sqrt(eps) u, y = eps v:

    A_f(eps) = eps^(3/2) B(eps),   B(eps) = int_{-1}^{1} du int_0^{1-u^2} omega_hat(sqrt(eps) u, eps v) dv.

B is O(1) with B(0) = 4/3 omega_hat(0, 0), so the quadrature tolerance is
relative at every level, including the tiny ones near the origin.  The
same scaling gives the transit time |t_f(eps)| = sqrt(eps) C(eps) with
C(eps) = int_{-1}^{1} omega_hat(sqrt(eps) u, eps (1 - u^2)) du.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from .errors import MonotonicityViolation, RegionOutsideDomain, TargetOutOfRange
from .flow import LevelChart
from .morse import NormalizedProblem
from .numerics import ToleranceConfig, integrate_batch, invert_monotone

log = logging.getLogger(__name__)

K43 = (4.0 / 3.0) ** (2.0 / 3.0)  # ((4/3) eps^(3/2))^(2/3) = K43 * eps
EPS_SWITCH = 1e-4
SMALL_EPS_RTOL = 0.05


def _check_range(problem: NormalizedProblem, eps) -> np.ndarray:
    eps = np.atleast_1d(np.asarray(eps, float))
    limit = problem.eps_limit
    if np.any(eps < 0) or np.any(eps > limit * (1 + 1e-12)):
        bad = eps[(eps < 0) | (eps > limit * (1 + 1e-12))][0]
        raise RegionOutsideDomain(
            f"eps={bad:.6g} outside [0, {limit:.6g}]: the cap leaves the Morse chart rectangle"
        )
    return eps


def scaled_integrals(problem: NormalizedProblem, eps, tol: float):
    """(B(eps), C(eps)) for an array of levels; see the module docstring."""
    eps = _check_range(problem, eps)
    root = np.sqrt(eps)
    n = eps.size

    def outer(u, idx):
        shape = u.shape
        uf = u.ravel()
        ef = np.repeat(eps[idx], shape[1])
        rf = np.repeat(root[idx], shape[1])

        def inner(v, jdx):
            return problem.density_hat(rf[jdx][:, None] * uf[jdx][:, None], ef[jdx][:, None] * v)

        b, _, _ = integrate_batch(inner, np.zeros(uf.size), 1.0 - uf * uf, tol)
        c = problem.density_hat(rf * uf, ef * (1.0 - uf * uf))
        return np.stack([b.reshape(shape), np.reshape(c, shape)])

    vals, _, _ = integrate_batch(outer, -np.ones(n), np.ones(n), tol)
    return vals[0], vals[1]


def area_below(problem: NormalizedProblem, eps, tol: ToleranceConfig | None = None):
    """A_f(eps); scalar in, float out.  Exactly 0 at eps = 0."""
    tol = tol or problem.tol
    arr = _check_range(problem, eps)
    out = np.zeros(arr.shape)
    pos = arr > 0
    if np.any(pos):
        b, _ = scaled_integrals(problem, arr[pos], tol.quad_tol)
        out[pos] = arr[pos] ** 1.5 * b
    return float(out[0]) if np.ndim(eps) == 0 else out.reshape(np.shape(eps))


@dataclass(frozen=True)
class AreaProfile:
    """A_f tabulated on eps_max (i/n)^2, with a Hermite interpolant of A_f^(2/3).

    The interpolant is built on the smooth function A_f^(2/3) (not on A_f,
    whose eps^(3/2) growth would spoil cubic accuracy near 0) with exact
    slopes (2/3) A_f^(-1/3) |t_f| at every node.
    """

    eps_grid: np.ndarray
    a_values: np.ndarray
    tf_abs: np.ndarray
    omega0: float
    interpolant: CubicHermiteSpline = field(repr=False)
    small_eps_ratio: float
    small_eps_ok: bool

    @property
    def eps_max(self) -> float:
        return float(self.eps_grid[-1])

    def a_tilde(self, eps):
        return self.interpolant(np.clip(eps, 0.0, self.eps_max))

    def a_tilde_prime(self, eps):
        return self.interpolant.derivative()(np.clip(eps, 0.0, self.eps_max))

    def area(self, eps):
        """A_f from the interpolant."""
        return np.maximum(self.a_tilde(eps), 0.0) ** 1.5


def build_profile(problem: NormalizedProblem, eps_max: float, n: int = 64, tol: ToleranceConfig | None = None) -> AreaProfile:
    if n < 16:
        raise ValueError(f"profile needs at least 16 intervals, got {n}")
    if not eps_max > 0:
        raise ValueError("eps_max must be positive")
    tol = tol or problem.tol
    _check_range(problem, eps_max)
    grid = eps_max * (np.arange(n + 1) / n) ** 2
    b, c = scaled_integrals(problem, grid, tol.quad_tol)
    a_values = grid ** 1.5 * b
    steps = np.diff(a_values)
    if np.any(steps <= 0):
        k = int(np.flatnonzero(steps <= 0)[0])
        raise MonotonicityViolation(
            f"A_f not increasing between eps={grid[k]:.6g} and {grid[k + 1]:.6g}; "
            "tighten quad_tol or use fewer profile points"
        )
    a_tilde = grid * np.cbrt(b) ** 2
    slope = (2.0 / 3.0) * c / np.cbrt(b)
    spline = CubicHermiteSpline(grid, a_tilde, slope)

    omega0 = problem.omega_hat0
    limit = (4.0 / 3.0) * omega0
    ratio = float(a_values[1] / grid[1] ** 1.5)
    ok = abs(ratio - limit) <= SMALL_EPS_RTOL * limit
    if not ok:
        log.warning("small-eps ratio %.6g deviates from 4/3 omega0 = %.6g by more than 5%%", ratio, limit)
    return AreaProfile(grid, a_values, np.sqrt(grid) * c, omega0, spline, ratio, ok)


def a_tilde(profile: AreaProfile, eps) -> float:
    if np.any(np.asarray(eps) < 0) or np.any(np.asarray(eps) > profile.eps_max * (1 + 1e-12)):
        raise RegionOutsideDomain(f"eps outside the profile range [0, {profile.eps_max:.6g}]")
    out = profile.a_tilde(eps)
    return float(out) if np.ndim(eps) == 0 else out


class AlphaFunction:
    """alpha = A_f^{-1}((4/3) eps^(3/2)) and its inverse beta = (3/4 A_f)^(2/3).

    In terms of A~ = A_f^(2/3): beta = A~ / (4/3)^(2/3), so beta and its
    derivative come straight from the Hermite interpolant, and alpha is the
    monotone inverse of beta.
    """

    def __init__(self, profile: AreaProfile, root_tol: float = 1e-14):
        self.profile = profile
        self.root_tol = root_tol
        self._d = profile.interpolant.derivative()
        self.beta_max = float(profile.interpolant(profile.eps_max)) / K43

    def alpha_inverse(self, eps):
        eps = np.asarray(eps, float)
        if np.any(eps < 0) or np.any(eps > self.profile.eps_max * (1 + 1e-12)):
            raise TargetOutOfRange(f"eps outside the profile range [0, {self.profile.eps_max:.6g}]")
        out = self.profile.interpolant(np.clip(eps, 0.0, self.profile.eps_max)) / K43
        out = np.where(eps == 0, 0.0, out)
        return float(out) if out.ndim == 0 else out

    def alpha_inverse_prime(self, eps):
        """beta'(eps) consistent with alpha_inverse (same interpolant)."""
        eps = np.clip(np.asarray(eps, float), 0.0, self.profile.eps_max)
        out = self._d(eps) / K43
        return float(out) if out.ndim == 0 else out

    def _alpha_scalar(self, e: float) -> float:
        if e == 0.0:
            return 0.0
        return invert_monotone(
            lambda s: float(self.profile.interpolant(s)) / K43, e, 0.0, self.profile.eps_max, self.root_tol
        )

    def alpha(self, eps):
        eps = np.asarray(eps, float)
        if np.any(eps < 0) or np.any(eps > self.beta_max * (1 + 1e-12)):
            raise TargetOutOfRange(f"alpha is tabulated on [0, {self.beta_max:.6g}]")
        out = np.vectorize(self._alpha_scalar, otypes=[float])(eps)
        return float(out) if out.ndim == 0 else out


def build_alpha(profile: AreaProfile) -> AlphaFunction:
    return AlphaFunction(profile)


def alpha(fn: AlphaFunction, eps):
    return fn.alpha(eps)


def alpha_inverse(fn: AlphaFunction, eps):
    return fn.alpha_inverse(eps)


def alpha_inverse_derivative(fn: AlphaFunction, problem: NormalizedProblem, eps: float, eps_switch: float = EPS_SWITCH) -> float:
    """(alpha^{-1})'(eps) = 1/2 (3/4 A_f)^(-1/3) |t_f|, from fresh quadratures.

    Below ``eps_switch`` the two factors behave like eps^(-1/2) and
    eps^(1/2) and their product loses digits; the exact limit
    omega_hat(0,0)^(2/3) is returned instead.
    """
    eps = float(eps)
    if eps < 0 or eps > fn.profile.eps_max * (1 + 1e-12):
        raise TargetOutOfRange(f"eps={eps:.6g} outside [0, {fn.profile.eps_max:.6g}]")
    if eps < eps_switch:
        return float(problem.omega_hat0 ** (2.0 / 3.0))
    area = area_below(problem, eps)
    tf = LevelChart(problem).transit_time(eps)
    return float(0.5 * (0.75 * area) ** (-1.0 / 3.0) * abs(tf))


def a_tilde_second_differences(problem: NormalizedProblem, eps_max: float, halvings: int = 2, tol: ToleranceConfig | None = None):
    """Max |second divided difference| of A_f^(2/3) on uniform grids of spacing eps_max/64, /128, ...

    A bounded sequence (no growth as the spacing halves) is the numerical
    footprint of A_f^(2/3) being smooth down to eps = 0.
    """
    tol = tol or problem.tol
    out = []
    for k in range(halvings + 1):
        m = 64 * 2 ** k
        grid = np.linspace(0.0, eps_max, m + 1)
        b, _ = scaled_integrals(problem, grid, tol.quad_tol)
        at = grid * np.cbrt(b) ** 2
        h = eps_max / m
        out.append(float(np.max(np.abs(np.diff(at, 2))) / h ** 2))
    return out
