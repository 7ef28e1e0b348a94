"""Brute-force verification helpers, independent of the series machinery.

Everything here works on plain float callables: iterated central
differences for derivatives, sign-change scanning plus bisection for fixed
points, and log-log least squares for order-of-accuracy estimates.  The
main pipeline never calls into this module; tests and the CLI ``verify``
command use it to cross-check the jet-based results, so the two routes
share no code.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NumericError

__all__ = ["FdEstimate", "RootScan", "SlopeEstimate",
           "fd_derivative", "isolate_fixed_points", "slope"]


def _as_callable(f):
    """Accept a MapSpec-like object (has .f) or a plain f(x, mu) callable."""
    return f.f if hasattr(f, "f") else f


@dataclass
class FdEstimate:
    value: float
    coarse: float
    fine: float
    flagged: bool  # the two raw estimates disagree by more than 10%

    def __float__(self):
        return self.value


def fd_derivative(f, i: int, j: int, at=(0.0, 0.0), step: float | None = None) -> FdEstimate:
    """Central-difference estimate of f_{x^i mu^j} at ``at``, Richardson-refined.

    The optional ``step`` applies to both axes; by default orders up to two
    use 1e-3 and higher orders 1e-2.
    """
    if i < 0 or j < 0 or i + j > 5:
        raise NumericError("finite differences support orders i + j <= 5")
    func = _as_callable(f)
    x0, mu0 = at
    if step is None:
        step = 1e-3 if i + j <= 2 else 1e-2
    if step <= 0:
        raise NumericError("step must be positive")

    def central(g, t, h, order):
        if order == 0:
            return g(t)
        return (central(g, t + h, h, order - 1) - central(g, t - h, h, order - 1)) / (2 * h)

    def estimate(h):
        if j == 0:
            return central(lambda x: func(x, mu0), x0, h, i)
        def x_deriv(mu):
            if i == 0:
                return func(x0, mu)
            return central(lambda x: func(x, mu), x0, h, i)
        return central(x_deriv, mu0, h, j)

    coarse = estimate(step)
    fine = estimate(step / 2)
    value = (4.0 * fine - coarse) / 3.0
    denom = max(abs(coarse), abs(fine), 1e-9)
    flagged = abs(fine - coarse) / denom > 0.10
    return FdEstimate(value, coarse, fine, flagged)


@dataclass
class RootScan:
    roots: list = field(default_factory=list)
    suspected_double: list = field(default_factory=list)

    def __iter__(self):
        return iter(self.roots)

    def __len__(self):
        return len(self.roots)


def _bisect(g, lo, hi, width=1e-13, max_iter=200):
    glo = g(lo)
    if glo == 0.0:
        return lo
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if hi - lo <= width:
            return mid
        gm = g(mid)
        if gm == 0.0:
            return mid
        if (gm > 0) == (glo > 0):
            lo, glo = mid, gm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def isolate_fixed_points(f, mu: float, interval, grid_n: int = 256,
                         tangency_tol: float = 1e-8) -> RootScan:
    """Locate the solutions of f(x, mu) = x on the interval.

    Sign changes of f - x on a uniform grid are bisected to width 1e-13.
    Grid points where |f - x| dips below ``tangency_tol`` without a sign
    change are reported as suspected double roots rather than roots.
    """
    if grid_n < 2:
        raise NumericError("grid_n must be at least 2")
    func = _as_callable(f)
    lo, hi = interval
    if not lo < hi:
        raise NumericError("empty interval")
    g = lambda x: func(x, mu) - x
    xs = np.linspace(lo, hi, grid_n + 1)
    vals = np.array([g(x) for x in xs])

    scan = RootScan()
    for k in range(grid_n):
        a, b = xs[k], xs[k + 1]
        va, vb = vals[k], vals[k + 1]
        if va == 0.0:
            if not scan.roots or abs(scan.roots[-1] - a) > 1e-12:
                scan.roots.append(float(a))
            continue
        if va * vb < 0:
            scan.roots.append(float(_bisect(g, a, b)))
    if vals[-1] == 0.0:
        scan.roots.append(float(xs[-1]))

    # tangency sweep: interior local minima of |g| with no nearby sign change
    absvals = np.abs(vals)
    for k in range(1, grid_n):
        if absvals[k] < tangency_tol and absvals[k] <= absvals[k - 1] \
                and absvals[k] <= absvals[k + 1] \
                and vals[k - 1] * vals[k + 1] > 0:
            x_here = float(xs[k])
            if all(abs(x_here - r) > 10 * (hi - lo) / grid_n for r in scan.roots):
                scan.suspected_double.append(x_here)
    return scan


@dataclass
class SlopeEstimate:
    scales: list
    errors: list
    slope: float


def slope(scales, errors, atol: float = 1e-14) -> SlopeEstimate:
    """Least-squares slope of log(error) against log(scale).

    Errors at or below ``atol`` count as exact agreement; if fewer than two
    informative points remain the slope is the +inf sentinel.
    """
    scales = [float(s) for s in scales]
    errors = [float(e) for e in errors]
    if len(scales) < 4:
        raise NumericError("slope estimation needs at least 4 scales")
    if any(s2 >= s1 for s1, s2 in zip(scales, scales[1:])):
        raise NumericError("scales must be strictly decreasing")
    if any(e < 0 for e in errors):
        raise NumericError("errors must be nonnegative")
    pts = [(s, e) for s, e in zip(scales, errors) if e > atol]
    if len(pts) < 2:
        return SlopeEstimate(scales, errors, math.inf)
    logs = np.log([p[0] for p in pts])
    loge = np.log([p[1] for p in pts])
    m, _ = np.polyfit(logs, loge, 1)
    return SlopeEstimate(scales, errors, float(m))
