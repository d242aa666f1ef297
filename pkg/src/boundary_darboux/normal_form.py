"""The normal-form chart (p, q) with omega = dp^dq and f = alpha(p^2 + q), and its certification.

With beta = alpha^{-1} and z = xh^2 + yh, H = beta(z) and the H-flow runs
along the same level segments as the f-flow with density w / beta'(z).
The half-area bisector only depends on the density up to a constant
factor on each level, so it is shared, and

    T_H(xh, z) = T_f(xh, z) / beta'(z),   p = -T_H,   q = beta(z) - p^2.

Then dp^dq = beta'(z) dp^dz = beta'(z) (w / beta'(z)) dxh^dz = omega.
beta' is taken in its transit-time form |t_f| / (2 sqrt(beta)), so that
p = sqrt(beta) at the right end of every level segment and q vanishes
on the boundary to rounding.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .area import AlphaFunction, AreaProfile, area_below, build_profile
from .errors import OutsideChartDomain
from .expr import ScalarExpression
from .flow import LevelChart
from .morse import HypothesisReport, NormalizedProblem, check_and_normalize
from .numerics import ToleranceConfig, fd_jacobian_batch

log = logging.getLogger(__name__)

CHECKS = ("symplectic", "functional", "boundary", "area", "lemma5", "bisector")
# Per-check tolerance as a multiple of verify_tol.
TOL_FACTORS = {
    "symplectic": 10.0,
    "functional": 0.1,
    "boundary": 0.1,
    "area": 1.0,
    "lemma5": 100.0,
    "bisector": 0.1,
}
CAP_MARGIN = 0.95  # fraction of the chart's largest cap used by default
LEMMA5_STEP = 1e-4


class NormalFormChart:
    """Chart (p, q) assembled from the Morse chart, the level-set flow and alpha.

    ``p_scale`` multiplies p before q is formed; anything other than 1 is a
    deliberately corrupted chart, used to show that verification can fail.
    """

    def __init__(self, problem: NormalizedProblem, alpha_fn: AlphaFunction, p_scale: float = 1.0):
        self.problem = problem
        self.alpha_fn = alpha_fn
        self.level_chart = LevelChart(problem)
        self.p_scale = float(p_scale)
        self.eps_max = alpha_fn.profile.eps_max

    @property
    def flips(self) -> dict:
        r = self.problem.report
        return {"flip_f": bool(r.flip_f), "flip_y": bool(r.flip_y)}

    # -- evaluation ---------------------------------------------------------------

    def evaluate_hat(self, xh, yh):
        """(p, q) at Morse-chart points, normalized frame."""
        xh, yh = np.broadcast_arrays(np.asarray(xh, float), np.asarray(yh, float))
        z = xh * xh + yh
        if np.any(z < 0) or np.any(z > self.eps_max * (1 + 1e-12)):
            raise OutsideChartDomain(
                f"level z = xh^2 + yh outside [0, {self.eps_max:.6g}] covered by the chart"
            )
        left, right = self.level_chart.level_halves(xh, z)
        beta = np.asarray(self.alpha_fn.alpha_inverse(z))
        # T_f = (right - left)/2 and |t_f| = left + right; with
        # beta' = |t_f| / (2 sqrt(beta)) the H-time is T_f / beta'.
        total = left + right
        ratio = np.divide(left - right, total, out=np.zeros_like(total), where=total > 0)
        p = self.p_scale * np.sqrt(beta) * ratio
        q = beta - p * p
        return p, q

    def evaluate_normalized(self, x, y):
        x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
        xh, yh = self.problem.forward(x, y)
        p, q = self.evaluate_hat(xh, yh)
        return p.reshape(x.shape), q.reshape(x.shape)

    def report_flip(self, p, q):
        """Reported (p, q) for a normalized-frame pair: the reflection y -> -y
        puts the input half-plane on q <= 0, undone by (p, q) -> (-p, -q)."""
        if self.problem.report.flip_y:
            return -p, -q
        return p, q

    def evaluate(self, x, y):
        """(p, q) in the input frame, with the reporting flips applied."""
        xn, yn = self.problem.to_normalized(x, y)
        return self.report_flip(*self.evaluate_normalized(xn, yn))

    def alpha_of_s(self, p, q):
        """Input-frame f predicted by the normal form at reported (p, q)."""
        p = np.asarray(p, float)
        q = np.asarray(q, float)
        s = p * p - q if self.problem.report.flip_y else p * p + q
        return self.problem.f0 + self.problem.sign_f * self.alpha_fn.alpha(s)

    @property
    def s_form(self) -> str:
        return "p^2 - q" if self.problem.report.flip_y else "p^2 + q"


def build_chart(problem: NormalizedProblem, alpha_fn: AlphaFunction, p_scale: float = 1.0) -> NormalFormChart:
    return NormalFormChart(problem, alpha_fn, p_scale)


def evaluate_chart(chart: NormalFormChart, x: float, y: float):
    p, q = chart.evaluate(x, y)
    return float(p), float(q)


# -- verification ------------------------------------------------------------------------


@dataclass(frozen=True)
class GridSpec:
    n: int = 41
    m: int = 21

    def __post_init__(self):
        if self.n < 8 or self.m < 4:
            raise ValueError(f"grid must be at least 8x4, got {self.n}x{self.m}")

    @classmethod
    def parse(cls, text: str) -> "GridSpec":
        try:
            n, m = (int(v) for v in text.lower().split("x"))
        except ValueError:
            raise ValueError(f"grid must look like 41x21, got {text!r}") from None
        return cls(n, m)

    def __str__(self):
        return f"{self.n}x{self.m}"


@dataclass(frozen=True)
class CheckResult:
    max_err: float
    tol: float
    passed: bool

    def to_dict(self) -> dict:
        return {"max_err": self.max_err, "tol": self.tol, "pass": self.passed}


@dataclass
class VerificationReport:
    grid: dict
    flips: dict
    checks: dict = field(default_factory=dict)
    boundary_probe_min_q: float = math.nan

    @property
    def overall_pass(self) -> bool:
        return all(c.passed for c in self.checks.values())

    def to_dict(self) -> dict:
        out = {name: self.checks[name].to_dict() for name in CHECKS}
        out["overall_pass"] = self.overall_pass
        out["grid"] = self.grid
        out["flips"] = self.flips
        return out

    def failed(self) -> list:
        return [name for name in CHECKS if not self.checks[name].passed]


def check_tolerances(tol: ToleranceConfig, overrides: dict | None = None) -> dict:
    # rounded so that e.g. 10 * 1e-6 reads as 1e-05 in reports
    out = {name: float("%.12g" % (TOL_FACTORS[name] * tol.verify_tol)) for name in CHECKS}
    for name, value in (overrides or {}).items():
        if name not in out:
            raise KeyError(f"unknown check {name!r}")
        out[name] = float(value)
    return out


def hat_grid(chart: NormalFormChart, grid: GridSpec):
    """Grid over [-sqrt E, sqrt E] x [0, E] in (xh, yh), restricted to the cap xh^2 + yh <= E.

    Returns flattened (xh, yh) and boolean masks for the boundary row and the
    strict interior (room for finite-difference stencils).
    """
    E = chart.eps_max
    u = np.linspace(-math.sqrt(E), math.sqrt(E), grid.n)
    v = np.linspace(0.0, E, grid.m)
    XH, YH = np.meshgrid(u, v)
    XH, YH = XH.ravel(), YH.ravel()
    z = XH * XH + YH
    inside = z <= E * (1 + 1e-12)
    XH, YH, z = XH[inside], YH[inside], z[inside]
    boundary = YH == 0.0
    interior = (YH > 0) & (z < E * (1 - 1e-3))
    return XH, YH, boundary, interior


def _max(values) -> float:
    values = np.asarray(values, float)
    return float(np.max(values)) if values.size else 0.0


def verify(
    chart: NormalFormChart,
    grid: GridSpec | None = None,
    tol: ToleranceConfig | None = None,
    check_tols: dict | None = None,
) -> VerificationReport:
    """Certify omega = dp^dq, f = alpha(p^2 + q), the boundary {q = 0}, the
    model area law, A_f' = |t_f| and p = 0 on the bisector.

    Everything is evaluated in the normalized frame; the reporting flips
    are orientation preserving and do not change any of these quantities.
    Failures are recorded in the report, never raised.
    """
    grid = grid or GridSpec()
    problem = chart.problem
    tol = tol or problem.tol
    tols = check_tols or check_tolerances(tol)
    lc = chart.level_chart
    E = chart.eps_max

    xh, yh, boundary, interior = hat_grid(chart, grid)
    x, y = problem.inverse(xh, yh)
    p, q = chart.evaluate_hat(xh, yh)
    report = VerificationReport(
        grid={"n": grid.n, "m": grid.m, "eps_max": E, "points": int(xh.size), "frame": "morse"},
        flips=chart.flips,
    )

    def record(name, err):
        err = float(err)
        report.checks[name] = CheckResult(err, float(tols[name]), bool(err <= tols[name]))

    # symplectic: det D(p, q) against omega at interior points
    xi, yi = x[interior], y[interior]
    h = tol.fd_step * np.maximum(1.0, np.maximum(np.abs(xi), np.abs(yi)))
    J = fd_jacobian_batch(chart.evaluate_normalized, xi, yi, h)
    det = J[:, 0, 0] * J[:, 1, 1] - J[:, 0, 1] * J[:, 1, 0]
    omega = problem.omega.evaluate(xi, yi)
    record("symplectic", _max(np.abs(det - omega) / omega))

    # functional: f = alpha(p^2 + q)
    s = np.clip(p * p + q, 0.0, chart.alpha_fn.beta_max)
    record("functional", _max(np.abs(problem.f.evaluate(x, y) - chart.alpha_fn.alpha(s))))

    # boundary: q = 0 on y = 0, and q > 0 on the first row above it
    record("boundary", _max(np.abs(q[boundary])))
    above = yh == np.min(yh[yh > 0]) if np.any(yh > 0) else np.zeros_like(yh, bool)
    report.boundary_probe_min_q = float(np.min(q[above])) if np.any(above) else math.nan
    if not report.boundary_probe_min_q > 0:
        bc = report.checks["boundary"]
        report.checks["boundary"] = CheckResult(bc.max_err, bc.tol, False)

    # area: A_H(eps) = A_f(alpha(eps)) against the model (4/3) eps^(3/2)
    levels = chart.alpha_fn.beta_max * np.arange(1, 9) / 8.0
    a_h = area_below(problem, chart.alpha_fn.alpha(levels))
    record("area", _max(np.abs(0.75 * a_h - levels ** 1.5) / levels ** 1.5))

    # A_f' = |t_f| by a five-point central difference
    errs = []
    hstep = LEMMA5_STEP
    for e in lemma5_levels(E):
        if e + 2 * hstep > problem.eps_limit:
            continue
        a = area_below(problem, np.array([e - 2 * hstep, e - hstep, e + hstep, e + 2 * hstep]))
        d = (a[0] - 8 * a[1] + 8 * a[2] - a[3]) / (12 * hstep)
        tf = abs(lc.transit_time(e))
        errs.append(abs(d - tf) / tf)
    record("lemma5", _max(errs))

    # p vanishes on the bisector
    zs = E * np.arange(1, 9) / 8.0
    sb = np.array([lc.bisector(z) for z in zs])
    pb, _ = chart.evaluate_hat(sb, zs - sb * sb)
    record("bisector", _max(np.abs(pb)))
    return report


def lemma5_levels(eps_max: float):
    """Levels eps_max * (1/4, 9/16, 1); 0.04, 0.09, 0.16 for eps_max = 0.16."""
    return [eps_max / 4.0, eps_max * 9.0 / 16.0, eps_max]


# -- pipeline ------------------------------------------------------------------------------


@dataclass
class Pipeline:
    report: HypothesisReport
    problem: NormalizedProblem
    profile: AreaProfile
    alpha_fn: AlphaFunction
    chart: NormalFormChart


def effective_eps_max(problem: NormalizedProblem, eps_max: float) -> float:
    """Largest usable level: eps_max, capped below the chart's largest cap."""
    cap = CAP_MARGIN * problem.eps_limit
    if eps_max > cap:
        log.warning(
            "eps_max=%.6g does not fit the Morse chart (largest cap %.6g); using %.6g",
            eps_max,
            problem.eps_limit,
            cap,
        )
        return cap
    return eps_max


def run_pipeline(
    f: ScalarExpression,
    omega: ScalarExpression,
    eps_max: float = 0.16,
    profile_points: int = 64,
    tol: ToleranceConfig | None = None,
    radius: float | None = None,
    p_scale: float = 1.0,
) -> Pipeline:
    tol = tol or ToleranceConfig()
    kwargs = {} if radius is None else {"radius": radius}
    report, problem = check_and_normalize(f, omega, tol, **kwargs)
    eps = effective_eps_max(problem, eps_max)
    profile = build_profile(problem, eps, profile_points, tol)
    alpha_fn = AlphaFunction(profile)
    chart = build_chart(problem, alpha_fn, p_scale)
    return Pipeline(report, problem, profile, alpha_fn, chart)
