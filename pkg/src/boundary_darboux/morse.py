"""Hypothesis checks, sign normalization and the boundary Morse chart.

The chart is built from the integral form of the Taylor remainder along the
ray t -> (t x, t y).  With f(0,0) = 0 and f_x(0,0) = 0,

    f = f11 x^2 + (f12 x + f2) y,
    f11 = int_0^1 (1-t) f_xx(tx, ty) dt,
    f12 = 2 int_0^1 (1-t) f_xy(tx, ty) dt,
    f2  = f_y(0,0) + y int_0^1 (1-t) f_yy(tx, ty) dt,

and the chart (xh, yh) = (sqrt(f11) x, y (f12 x + f2)) satisfies
f = xh^2 + yh with yh = 0 exactly on y = 0.
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass

import numpy as np

from .errors import (
    DegenerateCritical,
    DomainError,
    NoConvergence,
    NonPositiveDensity,
    NotCritical,
    NotRegular,
    OutsideChartDomain,
    SingularJacobian,
)
from .expr import Neg, ScalarExpression, Var
from .numerics import ToleranceConfig, integrate_1d, integrate_batch

log = logging.getLogger(__name__)

HYPOTHESIS_TOL = 1e-9
DEFAULT_RADIUS = 0.5
SHRINK_FACTOR = 0.9
MAX_SHRINK = 1024.0  # give up below radius / MAX_SHRINK
_CHUNK = 4096


@dataclass(frozen=True)
class HypothesisReport:
    fx0: float
    fy0: float
    fxx0: float
    omega0: float
    flip_f: bool
    flip_y: bool
    admissible: bool
    failure: str | None = None
    message: str = ""

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class HadamardCoefficients:
    f11: float
    f12: float
    f2: float


def check_hypotheses(f: ScalarExpression, omega: ScalarExpression, tol: float = HYPOTHESIS_TOL) -> HypothesisReport:
    """Evaluate the hypotheses at the origin without raising."""
    j = f.jet2(0.0, 0.0)
    omega0 = omega.evaluate(0.0, 0.0)
    flip_f = j.dxx < 0
    flip_y = (-j.dy if flip_f else j.dy) < 0
    failure, message = None, ""
    if abs(j.dx) > tol:
        failure = "NotCritical"
        message = f"f_x(0,0) = {j.dx:.6g}: the origin is not a critical point of f on the boundary"
    elif abs(j.dxx) <= tol:
        failure = "DegenerateCritical"
        message = f"f_xx(0,0) = {j.dxx:.6g}: the boundary critical point is degenerate"
    elif abs(j.dy) <= tol:
        failure = "NotRegular"
        message = f"f_y(0,0) = {j.dy:.6g}: the origin is not a regular point of f"
    elif not omega0 > 0:
        failure = "NonPositiveDensity"
        message = f"omega(0,0) = {omega0:.6g} is not positive"
    return HypothesisReport(
        fx0=j.dx, fy0=j.dy, fxx0=j.dxx, omega0=omega0,
        flip_f=bool(flip_f), flip_y=bool(flip_y),
        admissible=failure is None, failure=failure, message=message,
    )


_FAILURES = {
    "NotCritical": NotCritical,
    "DegenerateCritical": DegenerateCritical,
    "NotRegular": NotRegular,
    "NonPositiveDensity": NonPositiveDensity,
}


def hadamard_coefficients(f: ScalarExpression, point, tol: float = 1e-10) -> HadamardCoefficients:
    """Hadamard coefficients of a centered f with f_x(0,0) = 0 at ``point``."""
    x, y = (float(v) for v in point)

    def second(i, j):
        def g(t):
            return (1.0 - t) * f.jet(t * x, t * y, 2).partial(i, j)
        return g

    f11 = integrate_1d(second(2, 0), 0.0, 1.0, tol).value
    f12 = 2.0 * integrate_1d(second(1, 1), 0.0, 1.0, tol).value
    fyy = integrate_1d(second(0, 2), 0.0, 1.0, tol).value
    fy0 = float(f.jet(0.0, 0.0, 1).partial(0, 1))
    return HadamardCoefficients(f11, f12, fy0 + y * fyy)


def morse_forward(f: ScalarExpression, point, tol: float = 1e-10):
    """(xh, yh) = (sqrt(f11) x, y (f12 x + f2)) for a centered f."""
    x, y = (float(v) for v in point)
    h = hadamard_coefficients(f, (x, y), tol)
    m = h.f12 * x + h.f2
    if h.f11 <= 0 or m <= 0:
        raise OutsideChartDomain(f"Morse chart undefined at {(x, y)}: f11={h.f11:.3g}, f12*x+f2={m:.3g}")
    return float(np.sqrt(h.f11) * x), float(y * m)


class NormalizedProblem:
    """A validated pair (f, omega) in the normalized frame, with its Morse chart.

    ``f`` and ``omega`` are the normalized expressions: f is centered and
    sign-flipped as recorded in ``report``; when ``report.flip_y`` is set
    the frame is the point reflection (x, y) -> (-x, -y) of the input
    frame, which flips the sign of f_y while keeping omega positive.
    """

    def __init__(self, f_input, omega_input, report: HypothesisReport, tol: ToleranceConfig, radius: float):
        self.f_input = f_input
        self.omega_input = omega_input
        self.report = report
        self.tol = tol
        self.f0 = f_input.evaluate(0.0, 0.0)
        f = f_input
        omega = omega_input
        if report.flip_y:
            reflect = {"x": Neg(Var("x")), "y": Neg(Var("y"))}
            f = f.substitute(reflect)
            omega = omega.substitute(reflect)
        if self.f0 != 0.0:
            f = f.shifted(self.f0)
        if report.flip_f:
            f = f.negated()
        self.f = f
        self.omega = omega
        j = f.jet2(0.0, 0.0)
        self.fy0 = j.dy
        self.f11_0 = 0.5 * j.dxx
        self.radius = self._validate_radius(radius)
        self.omega_hat0 = float(self.density_hat(0.0, 0.0))

    # -- frames -------------------------------------------------------------------

    @property
    def sign_f(self) -> float:
        return -1.0 if self.report.flip_f else 1.0

    def to_normalized(self, x, y):
        if self.report.flip_y:
            return -np.asarray(x, float), -np.asarray(y, float)
        return np.asarray(x, float), np.asarray(y, float)

    from_normalized = to_normalized  # the reflection is an involution

    @property
    def eps_limit(self) -> float:
        """Largest level whose cap {xh^2 + yh <= eps, yh >= 0} fits the chart rectangle."""
        return self.radius ** 2

    def in_rectangle(self, xh, yh, slack: float = 1e-9) -> np.ndarray:
        r = self.radius
        return (
            (np.abs(xh) <= r * (1 + slack))
            & (yh >= -0.1 * r * r - slack)
            & (yh <= 1.1 * r * r + slack)
        )

    # -- forward chart --------------------------------------------------------------

    def forward(self, x, y, jacobian: bool = False, strict: bool = True):
        """Batched Morse chart.  Returns (xh, yh) or (xh, yh, J) with J shape (n, 2, 2)."""
        x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
        x = np.atleast_1d(x).ravel()
        y = np.atleast_1d(y).ravel()
        outs = [self._forward_chunk(x[s], y[s], jacobian, strict) for s in _chunks(x.size)]
        if not outs:
            empty = np.zeros(0)
            return (empty, empty, np.zeros((0, 2, 2))) if jacobian else (empty, empty)
        return tuple(np.concatenate(parts) for parts in zip(*outs))

    def _forward_chunk(self, x, y, jacobian, strict):
        f = self.f
        order = 3 if jacobian else 2

        def g(t, idx):
            X = t * x[idx][:, None]
            Y = t * y[idx][:, None]
            jet = f.jet(X, Y, order)
            w = 1.0 - t
            comps = [w * jet.partial(2, 0), w * jet.partial(1, 1), w * jet.partial(0, 2)]
            if jacobian:
                wt = w * t
                comps += [wt * jet.partial(3, 0), wt * jet.partial(2, 1), wt * jet.partial(1, 2), wt * jet.partial(0, 3)]
            return np.stack(comps)

        n = x.size
        vals, _, _ = integrate_batch(g, np.zeros(n), np.ones(n), self.tol.quad_tol)
        f11, i_xy, i_yy = vals[0], vals[1], vals[2]
        f12 = 2.0 * i_xy
        f2 = self.fy0 + y * i_yy
        m = f12 * x + f2
        bad = (f11 <= 0) | (m <= 0)
        if strict and np.any(bad):
            k = int(np.flatnonzero(bad)[0])
            raise OutsideChartDomain(
                f"Morse chart undefined at ({x[k]:.6g}, {y[k]:.6g}): f11={f11[k]:.3g}, f12*x+f2={m[k]:.3g}"
            )
        root = np.sqrt(np.where(bad, np.nan, f11))
        xh = root * x
        yh = y * m
        if not jacobian:
            return xh, yh
        d_xxx, d_xxy, d_xyy, d_yyy = vals[3], vals[4], vals[5], vals[6]
        J = np.empty((n, 2, 2))
        J[:, 0, 0] = root + x * d_xxx / (2 * root)
        J[:, 0, 1] = x * d_xxy / (2 * root)
        J[:, 1, 0] = y * (f12 + x * 2.0 * d_xxy + y * d_xyy)
        J[:, 1, 1] = m + y * (x * 2.0 * d_xyy + i_yy + y * d_yyy)
        return xh, yh, J

    # -- inverse chart and density ---------------------------------------------------------

    def inverse(self, xh, yh, return_det: bool = False):
        """Batched Newton inversion of the Morse chart."""
        xh, yh = np.broadcast_arrays(np.asarray(xh, float), np.asarray(yh, float))
        xh = np.atleast_1d(xh).ravel()
        yh = np.atleast_1d(yh).ravel()
        outs = [self._inverse_chunk(xh[s], yh[s]) for s in _chunks(xh.size)]
        if not outs:
            empty = np.zeros(0)
            return (empty, empty, empty) if return_det else (empty, empty)
        x, y, det = (np.concatenate(p) for p in zip(*outs))
        return (x, y, det) if return_det else (x, y)

    def _inverse_chunk(self, xh, yh):
        n = xh.size
        x = xh / np.sqrt(self.f11_0)
        y = yh / self.fy0
        det = np.full(n, np.nan)
        active = np.arange(n)
        # Newton is quadratic here; the extra digits make the density smooth
        # enough for finite-difference checks downstream.
        tol = min(self.tol.root_tol, 1e-14)
        for _ in range(self.tol.newton_max_iter + 1):
            try:
                X, Y, J = self.forward(x[active], y[active], jacobian=True, strict=False)
            except DomainError as exc:
                raise NoConvergence(f"Morse chart inversion left the domain: {exc}") from None
            rx = X - xh[active]
            ry = Y - yh[active]
            finite = np.isfinite(rx) & np.isfinite(ry)
            if not np.all(finite):
                k = active[np.flatnonzero(~finite)[0]]
                raise NoConvergence(f"Morse chart inversion failed at ({xh[k]:.6g}, {yh[k]:.6g})")
            d = J[:, 0, 0] * J[:, 1, 1] - J[:, 0, 1] * J[:, 1, 0]
            done = np.maximum(np.abs(rx), np.abs(ry)) <= tol
            det[active[done]] = d[done]
            keep = ~done
            if not np.any(keep):
                return x, y, det
            if np.any(np.abs(d[keep]) <= 1e-14):
                raise SingularJacobian("singular Morse chart Jacobian during inversion")
            a, b, c, e = J[keep, 0, 0], J[keep, 0, 1], J[keep, 1, 0], J[keep, 1, 1]
            dk = d[keep]
            act = active[keep]
            x[act] -= (e * rx[keep] - b * ry[keep]) / dk
            y[act] -= (a * ry[keep] - c * rx[keep]) / dk
            active = act
        raise NoConvergence(f"Morse chart inversion did not converge for {active.size} point(s)")

    def density_hat(self, xh, yh):
        """Pushed-forward density omega(x, y) / det DPhi at the preimage of (xh, yh)."""
        scalar = np.ndim(xh) == 0 and np.ndim(yh) == 0
        shape = np.broadcast_shapes(np.shape(xh), np.shape(yh))
        x, y, det = self.inverse(xh, yh, return_det=True)
        if np.any(det <= 0):
            raise SingularJacobian("Morse chart Jacobian is not positive")
        out = self.omega.evaluate(x, y) / det
        return float(out[0]) if scalar else out.reshape(shape)

    # -- neighborhood policy -------------------------------------------------------------------

    def _validate_radius(self, radius: float) -> float:
        r = radius
        while r >= radius / MAX_SHRINK:
            ok, why = self._rectangle_ok(r)
            if ok:
                if r < radius:
                    log.warning("Morse chart rectangle shrunk from r=%.6g to r=%.6g", radius, r)
                return r
            log.debug("radius %.6g rejected: %s", r, why)
            r *= SHRINK_FACTOR
        raise OutsideChartDomain(f"no valid Morse chart rectangle down to r={radius / MAX_SHRINK:.3g}")

    def _rectangle_ok(self, r: float):
        u = np.linspace(-r, r, 11)
        v = np.linspace(0.0, r * r, 11)
        XH, YH = (a.ravel() for a in np.meshgrid(u, v))
        try:
            x, y, det = self.inverse(XH, YH, return_det=True)
            if np.any(~(det > 0)):
                return False, "Jacobian not positive"
            if np.any(y[YH == 0] != 0) or np.any(y[YH > 0] <= 0):
                return False, "boundary not preserved"
            if np.any(~(self.omega.evaluate(x, y) > 0)):
                return False, "density not positive"
            fx = self.f.evaluate(x, y)
            if np.max(np.abs(fx - (XH ** 2 + YH))) > 1e-8:
                return False, "f != xh^2 + yh"
        except (DomainError, NoConvergence, SingularJacobian) as exc:
            return False, str(exc)
        return True, ""


def _chunks(n: int):
    return [slice(i, min(i + _CHUNK, n)) for i in range(0, n, _CHUNK)]


def check_and_normalize(
    f: ScalarExpression,
    omega: ScalarExpression,
    tol: ToleranceConfig | None = None,
    radius: float = DEFAULT_RADIUS,
    hypothesis_tol: float = HYPOTHESIS_TOL,
):
    """Validate hypotheses, apply sign flips and build the Morse chart.

    Raises the matching HypothesisError (with the report attached) when the
    origin is not an admissible boundary critical point.
    """
    tol = tol or ToleranceConfig()
    report = check_hypotheses(f, omega, hypothesis_tol)
    if not report.admissible:
        raise _FAILURES[report.failure](report.message, report)
    return report, NormalizedProblem(f, omega, report, tol, radius)


def morse_inverse(problem: NormalizedProblem, hat_point):
    x, y = problem.inverse(hat_point[0], hat_point[1])
    return float(x[0]), float(y[0])


def pushforward_density(problem: NormalizedProblem, hat_point) -> float:
    return float(problem.density_hat(float(hat_point[0]), float(hat_point[1])))
