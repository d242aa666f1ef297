"""Numerical kernels: adaptive Gauss-Kronrod quadrature (scalar and batched),
bracketed root finding, monotone inversion, 2-D Newton inversion and
central-difference Jacobians.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, fields
from typing import Callable

import numpy as np
from scipy.optimize import brentq

from .errors import (
    DomainError,
    MaxSubdivisions,
    NoBracket,
    NoConvergence,
    NonMonotoneDetected,
    SingularJacobian,
    TargetOutOfRange,
)

EPS = np.finfo(float).eps


@dataclass(frozen=True)
class ToleranceConfig:
    quad_tol: float = 1e-10
    root_tol: float = 1e-12
    newton_max_iter: int = 50
    fd_step: float = 1e-5
    verify_tol: float = 1e-6

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if not value > 0:
                raise ValueError(f"{f.name} must be strictly positive, got {value!r}")
        # Central differences lose digits like eps / h; h^2 below eps means
        # truncation is already swamped by roundoff.
        if self.fd_step ** 2 < EPS:
            raise ValueError(f"fd_step={self.fd_step} is too small: fd_step**2 < machine epsilon")


@dataclass(frozen=True)
class QuadratureResult:
    value: float
    error_estimate: float
    evaluations: int


# 15-point Kronrod rule with its embedded 7-point Gauss rule (QUADPACK qk15).
_XK_POS = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WK_POS = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG_POS = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

GK_NODES = np.concatenate([-_XK_POS[:-1], _XK_POS[::-1]])
GK_WEIGHTS = np.concatenate([_WK_POS[:-1], _WK_POS[::-1]])
GAUSS_WEIGHTS = np.concatenate([_WG_POS[:-1], _WG_POS[::-1]])  # at GK_NODES[1::2]


def integrate_batch(
    g: Callable,
    a,
    b,
    tol: float,
    *,
    max_panels: int = 2000,
):
    """Integrate many related integrands at once.

    ``g(t, idx)`` receives nodes ``t`` of shape (P, 15) and the integer
    array ``idx`` of shape (P,) naming which integral each panel belongs
    to; it returns values of shape (P, 15), or (C, P, 15) for C-component
    integrands.  Panels are bisected until each integral meets
    ``|error| <= max(tol, tol*|value|)``.

    Returns ``(values, error_estimates, evaluations)``; values have shape
    (n,) or (C, n), with the orientation convention that a > b flips sign.
    """
    a, b = np.broadcast_arrays(np.atleast_1d(np.asarray(a, float)), np.atleast_1d(np.asarray(b, float)))
    a = a.ravel()
    b = b.ravel()
    n = a.size
    sign = np.where(b < a, -1.0, 1.0)
    lo = np.minimum(a, b)
    hi = np.maximum(a, b)
    width_total = hi - lo

    idx = np.arange(n)
    plo, phi = lo, hi
    total = None
    err_total = np.zeros(n)
    panels = np.ones(n, dtype=int)
    tau = None
    evaluations = 0

    while idx.size:
        center = 0.5 * (plo + phi)
        half = 0.5 * (phi - plo)
        nodes = center[:, None] + half[:, None] * GK_NODES[None, :]
        vals = np.asarray(g(nodes, idx), dtype=float)
        if vals.shape[-2:] != nodes.shape:
            vals = np.broadcast_to(vals, nodes.shape)
        if not np.all(np.isfinite(vals)):
            raise DomainError("integrand returned a non-finite value")
        evaluations += nodes.size
        kron = (vals @ GK_WEIGHTS) * half
        gauss = (vals[..., 1::2] @ GAUSS_WEIGHTS) * half
        err = np.abs(kron - gauss)
        if err.ndim > 1:
            err = err.reshape(-1, err.shape[-1]).max(axis=0)

        if total is None:
            total = np.zeros(kron.shape[:-1] + (n,))
            scale = np.abs(kron)
            if scale.ndim > 1:
                scale = scale.reshape(-1, n).max(axis=0)
            tau = np.maximum(tol, tol * scale)

        share = np.where(width_total[idx] > 0, (phi - plo) / np.where(width_total[idx] > 0, width_total[idx], 1.0), 1.0)
        tiny = (phi - plo) <= 64 * EPS * np.maximum(1.0, np.abs(center))
        accept = (err <= tau[idx] * share) | tiny
        acc = np.flatnonzero(accept)
        np.add.at(total, (Ellipsis, idx[acc]), kron[..., acc])
        np.add.at(err_total, idx[acc], err[acc])

        rest = np.flatnonzero(~accept)
        if rest.size == 0:
            break
        ridx = idx[rest]
        np.add.at(panels, ridx, 1)
        if np.any(panels[ridx] > max_panels):
            bad = ridx[panels[ridx] > max_panels][0]
            partial = float(np.ravel(total[..., bad])[0] * sign[bad])
            raise MaxSubdivisions(
                f"subdivision budget of {max_panels} panels exhausted",
                value=partial,
                error_estimate=float(err_total[bad] + err[rest].max()),
            )
        mid = center[rest]
        idx = np.concatenate([ridx, ridx])
        plo, phi = np.concatenate([plo[rest], mid]), np.concatenate([mid, phi[rest]])

    return total * sign, err_total, evaluations


def _vectorized(g):
    def call(t, _idx):
        try:
            out = g(t)
        except TypeError:
            out = np.vectorize(g, otypes=[float])(t)
        return out
    return call


def integrate_1d(g: Callable[[float], float], a: float, b: float, tol: float = 1e-10) -> QuadratureResult:
    """Adaptive G7-K15 quadrature of ``g`` over [a, b].

    ``g`` should accept numpy arrays; scalar-only callables are vectorized.
    """
    if a == b:
        return QuadratureResult(0.0, 0.0, 0)
    value, err, evals = integrate_batch(_vectorized(g), a, b, tol)
    return QuadratureResult(float(value[0]), float(err[0]), evals)


def find_root_bracketed(g: Callable[[float], float], a: float, b: float, tol: float = 1e-12) -> float:
    """Brent's method on a sign-changing bracket."""
    ga, gb = g(a), g(b)
    if ga == 0:
        return float(a)
    if gb == 0:
        return float(b)
    if np.sign(ga) == np.sign(gb):
        raise NoBracket(f"g({a})={ga} and g({b})={gb} have the same sign")
    return float(brentq(g, a, b, xtol=tol, rtol=4 * EPS, maxiter=500))


def invert_monotone(
    F: Callable[[float], float],
    target: float,
    lo: float,
    hi: float,
    tol: float = 1e-12,
    check_samples: int = 0,
) -> float:
    """Solve F(x) = target for increasing F on [lo, hi]."""
    f_lo, f_hi = F(lo), F(hi)
    slack = 8 * EPS * max(abs(f_lo), abs(f_hi), abs(target))
    if target < f_lo - slack or target > f_hi + slack:
        raise TargetOutOfRange(f"target {target} outside [{f_lo}, {f_hi}]")
    if check_samples:
        samples = [F(v) for v in np.linspace(lo, hi, check_samples)]
        if np.any(np.diff(samples) < 0):
            warnings.warn(f"F is not increasing on [{lo}, {hi}]", NonMonotoneDetected, stacklevel=2)
    if target <= f_lo:
        return float(lo)
    if target >= f_hi:
        return float(hi)
    return float(brentq(lambda v: F(v) - target, lo, hi, xtol=tol, rtol=4 * EPS, maxiter=500))


def newton_invert_2d(
    fmap: Callable,
    jac: Callable,
    target,
    guess,
    tol: float = 1e-12,
    max_iter: int = 50,
):
    """Solve fmap(P) = target by Newton's method from ``guess``."""
    target = np.asarray(target, dtype=float)
    point = np.array(guess, dtype=float)
    for _ in range(max_iter + 1):
        residual = np.asarray(fmap(point), dtype=float) - target
        if np.max(np.abs(residual)) <= tol:
            return float(point[0]), float(point[1])
        J = np.asarray(jac(point), dtype=float)
        det = J[0, 0] * J[1, 1] - J[0, 1] * J[1, 0]
        if not np.isfinite(det) or abs(det) <= 1e-14 * max(1.0, np.max(np.abs(J)) ** 2):
            raise SingularJacobian(f"Jacobian is singular at {tuple(point)}")
        point = point - np.linalg.solve(J, residual)
    raise NoConvergence(f"Newton did not converge in {max_iter} iterations (residual {np.max(np.abs(residual)):.3e})")


def fd_jacobian(fmap: Callable, point, h: float = 1e-5) -> np.ndarray:
    """Central-difference Jacobian, ``J[i, j] = d fmap_i / d point_j``."""
    x, y = (float(v) for v in point)
    fx_p = np.asarray(fmap((x + h, y)), dtype=float)
    fx_m = np.asarray(fmap((x - h, y)), dtype=float)
    fy_p = np.asarray(fmap((x, y + h)), dtype=float)
    fy_m = np.asarray(fmap((x, y - h)), dtype=float)
    return np.column_stack([(fx_p - fx_m) / (2 * h), (fy_p - fy_m) / (2 * h)])


def fd_jacobian_batch(fmap: Callable, x, y, h) -> np.ndarray:
    """Vectorized central differences for a map taking/returning arrays.

    ``fmap(xs, ys) -> (u, v)``; ``h`` may be an array.  Returns shape (n, 2, 2).
    """
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    h = np.broadcast_to(np.asarray(h, float), x.shape)
    xs = np.concatenate([x + h, x - h, x, x])
    ys = np.concatenate([y, y, y + h, y - h])
    u, v = fmap(xs, ys)
    u = np.asarray(u).reshape(4, -1)
    v = np.asarray(v).reshape(4, -1)
    J = np.empty(x.shape + (2, 2))
    J[..., 0, 0] = (u[0] - u[1]) / (2 * h)
    J[..., 0, 1] = (u[2] - u[3]) / (2 * h)
    J[..., 1, 0] = (v[0] - v[1]) / (2 * h)
    J[..., 1, 1] = (v[2] - v[3]) / (2 * h)
    return J
