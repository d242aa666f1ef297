"""Hamiltonian flow of f in the level-set chart (x, z), z = xh^2 + yh.

In this chart f = z, the area density is w(x, z) = omega_hat(x, z - x^2)
(the change (xh, yh) -> (x, z) has unit Jacobian) and the Hamiltonian
field is (-1/w, 0).  Flow times are therefore 1-D integrals of w along
horizontal segments, which is how every quantity here is computed; the
RK4 oracle integrates the field directly as an independent check.
"""

from __future__ import annotations

import threading

import numpy as np

from .errors import OutsideChartDomain, RegionOutsideDomain, StepLimitExceeded
from .morse import NormalizedProblem
from .numerics import find_root_bracketed, integrate_batch


class LevelChart:
    def __init__(self, problem: NormalizedProblem):
        self.problem = problem
        self.tol = problem.tol
        self._bisector_cache: dict[float, float] = {}
        self._lock = threading.Lock()

    # -- density -----------------------------------------------------------------

    def density(self, x, z):
        """w(x, z) = omega_hat(x, z - x^2); scalars or broadcastable arrays."""
        x = np.asarray(x, float)
        z = np.asarray(z, float)
        yh = z - x * x
        if not np.all(self.problem.in_rectangle(x, yh)):
            raise OutsideChartDomain("(x, z) lies outside the Morse chart rectangle")
        return self.problem.density_hat(x, yh)

    def _check_level(self, z):
        z = np.asarray(z, float)
        limit = self.problem.eps_limit * (1 + 1e-9)
        if np.any(z < 0) or np.any(z > limit):
            raise RegionOutsideDomain(
                f"level outside [0, {self.problem.eps_limit:.6g}] covered by the Morse chart"
            )
        return z

    # -- integrals along a level set ---------------------------------------------------

    def level_integral(self, a, b, z):
        """int_a^b w(tau, z) dtau, batched over broadcast (a, b, z)."""
        a, b, z = np.broadcast_arrays(np.asarray(a, float), np.asarray(b, float), np.asarray(z, float))
        shape = a.shape
        zf = z.ravel()

        def g(t, idx):
            return self.density(t, zf[idx][:, None])

        vals, _, _ = integrate_batch(g, a.ravel(), b.ravel(), self.tol.quad_tol)
        return vals.reshape(shape) if shape else float(vals[0])

    def transit_time(self, eps):
        """Signed transit time -int_{-sqrt(eps)}^{sqrt(eps)} w(tau, eps) dtau."""
        eps = self._check_level(eps)
        root = np.sqrt(eps)
        return -self.level_integral(-root, root, eps)

    def bisector(self, z: float) -> float:
        """s(z): the point splitting the level segment into equal w-lengths."""
        z = float(self._check_level(z))
        if z == 0.0:
            return 0.0
        cached = self._bisector_cache.get(z)
        if cached is not None:
            return cached
        root = np.sqrt(z)
        half = 0.5 * self.level_integral(-root, root, z)
        s = find_root_bracketed(lambda s: self.level_integral(-root, s, z) - half, -root, root, self.tol.root_tol)
        with self._lock:
            self._bisector_cache[z] = s
        return s

    def bisector_mirror(self, z: float) -> float:
        """s(z) from the right-anchored half-length equation."""
        z = float(self._check_level(z))
        if z == 0.0:
            return 0.0
        root = np.sqrt(z)
        half = 0.5 * self.level_integral(-root, root, z)
        return find_root_bracketed(lambda s: self.level_integral(s, root, z) - half, -root, root, self.tol.root_tol)

    def time_from_bisector(self, x, z):
        """T_f(x, z) = int_x^{s(z)} w(tau, z) dtau, with s from the root finder."""
        x, z = np.broadcast_arrays(np.asarray(x, float), np.asarray(z, float))
        s = np.vectorize(self.bisector, otypes=[float])(z) if z.shape else self.bisector(float(z))
        return self.level_integral(x, s, z)

    def level_halves(self, x, z):
        """(int_{-sqrt z}^x w, int_x^{sqrt z} w): the w-lengths left and right of x."""
        x, z = np.broadcast_arrays(np.asarray(x, float), np.asarray(z, float))
        root = np.sqrt(np.maximum(z, 0.0))
        a = np.concatenate([-root.ravel(), x.ravel()])
        b = np.concatenate([x.ravel(), root.ravel()])
        zz = np.concatenate([z.ravel(), z.ravel()])
        left, right = np.asarray(self.level_integral(a, b, zz)).reshape(2, -1)
        return left.reshape(x.shape), right.reshape(x.shape)

    def time_from_bisector_halves(self, x, z):
        """T_f(x, z) written without s(z).

        With W(u) = int_{-sqrt z}^u w, the bisector solves W(s) = W(sqrt z)/2,
        hence T_f = W(s) - W(x) = (int_x^{sqrt z} w - int_{-sqrt z}^x w) / 2.
        """
        left, right = self.level_halves(x, z)
        out = 0.5 * (right - left)
        return out if out.shape else float(out)

    def hamiltonian_field_xz(self, x, z):
        return -1.0 / self.density(x, z), 0.0

    # -- independent dynamical oracle ------------------------------------------------------

    def transit_time_oracle(self, eps: float, dt: float = 1e-3, max_steps: int = 1_000_000) -> float:
        """Transit time by integrating dx/dt = -1/w(x, eps) with classical RK4.

        Starts at +sqrt(eps) and runs until the far endpoint -sqrt(eps) is
        crossed; the final partial step is located by root-finding on the
        RK4 step length.  Returns the signed time (negative, as transit_time).
        Intermediate RK4 stages may overshoot the endpoint by O(dt), so the
        density is evaluated there without the rectangle gate.
        """
        eps = float(self._check_level(eps))
        if eps == 0.0:
            return 0.0
        end = -np.sqrt(eps)

        def speed(x):
            return -1.0 / float(self.problem.density_hat(x, eps - x * x))

        def step(x, h):
            k1 = speed(x)
            k2 = speed(x + 0.5 * h * k1)
            k3 = speed(x + 0.5 * h * k2)
            k4 = speed(x + h * k3)
            return x + h * (k1 + 2 * k2 + 2 * k3 + k4) / 6.0

        x = np.sqrt(eps)
        elapsed = 0.0
        for _ in range(max_steps):
            nxt = step(x, dt)
            if nxt <= end:
                theta = find_root_bracketed(lambda h: step(x, h) - end, 0.0, dt, 1e-15)
                return -(elapsed + theta)
            x = nxt
            elapsed += dt
        raise StepLimitExceeded(f"far endpoint not reached within {max_steps} steps of dt={dt}")


def density_xz(chart: LevelChart, x, z):
    return chart.density(x, z)


def transit_time(chart: LevelChart, eps):
    return chart.transit_time(eps)


def bisector(chart: LevelChart, z: float) -> float:
    return chart.bisector(z)


def time_from_bisector(chart: LevelChart, x, z):
    return chart.time_from_bisector(x, z)


def hamiltonian_field_xz(chart: LevelChart, x, z):
    return chart.hamiltonian_field_xz(x, z)


def transit_time_oracle(chart: LevelChart, eps: float, dt: float = 1e-3) -> float:
    return chart.transit_time_oracle(eps, dt)
