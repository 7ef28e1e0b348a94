"""Extended-normal-form coefficients and finite-mu multiplier matching.

Each bifurcation kind has a polynomial normal form with one or two free
coefficients beyond the unfolding parameter nu:

    saddle-node      y + nu - y^2 + a y^3
    transcritical    y + nu y - y^2 + a y^3
    pitchfork        y + nu y - y^3 + a y^5 + b nu y^2
    period-doubling  -y - nu y + y^3 + a y^5

``leading_coefficients`` returns the closed-form limits nu'(0), a(0) (and
b(0) for the pitchfork) in terms of derivatives of the map at the origin.
``match_multipliers`` solves for (nu, a[, b]) at a finite mu so that the
normal form's fixed-point (or period-two) multipliers equal the map's,
computed from Newton-refined branch samples.  The normal-form multipliers
are evaluated at numerically located fixed points rather than through the
branch series, so the match carries no truncation error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .classify import Kind
from .errors import ClassificationMismatch, DomainError, NumericError
from .expr import MapSpec, NormalizedMap
from .jet import Jet2
from . import skeleton as sk

__all__ = [
    "Leading", "FitPoint", "NormalFormFit",
    "leading_coefficients", "takens_alpha",
    "normal_form_map", "normal_form_family",
    "sn_form_points", "sn_form_multipliers", "tc_form_multiplier",
    "pf_form_points", "pf_form_multipliers", "pd_form_multiplier",
    "match_multipliers", "fit_over_grid", "default_fit_grid",
]


@dataclass
class Leading:
    nu_prime_0: float
    a0: float
    b0: float | None = None   # pitchfork only


@dataclass
class FitPoint:
    mu: float
    nu: float
    a: float
    b: float | None           # pitchfork only
    residual: float           # max |multiplier mismatch| after the solve


@dataclass
class NormalFormFit:
    kind: Kind
    leading: Leading
    fitted: list
    validity: tuple           # (mu_min, mu_max) covered by the fits


def _as_kind(kind) -> Kind:
    return kind if isinstance(kind, Kind) else Kind(kind)


def leading_coefficients(j: Jet2, kind) -> Leading:
    """Closed-form nu'(0), a(0), and (pitchfork) b(0) of a normalized jet."""
    kind = _as_kind(kind)
    f_mu = j.deriv(0, 1)
    f2 = j.deriv(2, 0)
    f3 = j.deriv(3, 0)
    f4 = j.deriv(4, 0)
    f5 = j.deriv(5, 0)
    fxm = j.deriv(1, 1)
    if kind is Kind.SADDLE_NODE:
        _need(f2 < 0 and f_mu > 0, "saddle-node orientation")
        return Leading(-f_mu * f2 / 2.0, 2.0 * f3 / (3.0 * f2**2))
    if kind is Kind.TRANSCRITICAL:
        _need(f2 < 0 and fxm > 0, "transcritical orientation")
        return Leading(fxm, 2.0 * f3 / (3.0 * f2**2))
    if kind is Kind.PITCHFORK:
        _need(f3 < 0 and fxm > 0, "pitchfork orientation")
        a0 = 3.0 * f5 / (10.0 * f3**2) - 3.0 * f4**2 / (8.0 * f3**3)
        fxxm = j.deriv(2, 1)
        b0 = math.sqrt(6.0 / -f3) * (f4 / (4.0 * f3) + fxxm / (2.0 * fxm))
        return Leading(fxm, a0, b0)
    if kind is Kind.PERIOD_DOUBLING:
        quad = 3.0 * f2**2 + 2.0 * f3
        _need(quad > 0 and fxm < 0, "period-doubling orientation")
        a0 = (11.25 * f2**4 + 19.5 * f2**2 * f3 + 9.0 * f2 * f4
              + 1.2 * f5) / quad**2
        return Leading(-fxm, a0)
    raise ClassificationMismatch(f"no normal form for kind {kind.value}")


def _need(cond: bool, what: str):
    if not cond:
        raise ClassificationMismatch(f"jet does not satisfy {what}")


def takens_alpha(j: Jet2, p: int) -> float:
    """Takens' coefficient alpha_p at mu = 0, for p in {2, 3}.

    alpha_2 coincides with the saddle-node/transcritical a(0).
    """
    if p not in (2, 3):
        raise DomainError("p must be 2 or 3")
    _need(abs(j.deriv(0, 0)) <= 1e-9 and abs(j.deriv(1, 0) - 1) <= 1e-9,
          "f(0,0) = 0 and f_x(0,0) = 1")
    fp = j.deriv(p, 0)
    if abs(fp) <= 1e-9:
        raise DomainError(f"vanishing derivative of order {p}")
    fnext = j.deriv(p + 1, 0)
    return (math.factorial(p) / abs(fp)) ** (p / (p - 1)) \
        * fnext / math.factorial(p + 1)


# normal forms as maps ---------------------------------------------------------

_FORM_EXPR = {
    Kind.SADDLE_NODE: "x + nu - x^2 + a*x^3",
    Kind.TRANSCRITICAL: "x + nu*x - x^2 + a*x^3",
    Kind.PITCHFORK: "x + nu*x - x^3 + a*x^5 + b*nu*x^2",
    Kind.PERIOD_DOUBLING: "-x - nu*x + x^3 + a*x^5",
}


def normal_form_map(kind, nu: float, a: float, b: float = 0.0,
                    **spec_kwargs) -> MapSpec:
    """The normal form at frozen nu, as a mu-independent MapSpec."""
    kind = _as_kind(kind)
    params = {"nu": nu, "a": a}
    if kind is Kind.PITCHFORK:
        params["b"] = b
    return MapSpec(_FORM_EXPR[kind], params=params, **spec_kwargs)


def normal_form_family(kind, a: float, b: float = 0.0,
                       **spec_kwargs) -> MapSpec:
    """The normal form as a mu-family (nu identified with mu)."""
    kind = _as_kind(kind)
    params = {"a": a}
    if kind is Kind.PITCHFORK:
        params["b"] = b
    return MapSpec(_FORM_EXPR[kind].replace("nu", "mu"),
                   params=params, **spec_kwargs)


# normal-form fixed points and multipliers -------------------------------------

def _bisect_root(func, lo: float, hi: float) -> float:
    flo, fhi = func(lo), func(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if (flo > 0) == (fhi > 0):
        raise NumericError("normal-form fixed point not locatable "
                           f"in [{lo:g}, {hi:g}]")
    for _ in range(90):
        mid = 0.5 * (lo + hi)
        fm = func(mid)
        if fm == 0.0:
            return mid
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi, fhi = mid, fm
    return 0.5 * (lo + hi)


def sn_form_points(nu: float, a: float) -> tuple[float, float]:
    """Fixed points of y + nu - y^2 + a y^3 near -sqrt(nu) and +sqrt(nu)."""
    if nu <= 0:
        raise DomainError("saddle-node fixed points need nu > 0")
    r = math.sqrt(nu)
    fp = lambda y: nu - y * y + a * y**3
    lower = _bisect_root(fp, -2.2 * r, -0.4 * r)
    upper = _bisect_root(fp, 0.4 * r, 2.2 * r)
    return lower, upper


def sn_form_multipliers(nu: float, a: float) -> tuple[float, float]:
    lo, up = sn_form_points(nu, a)
    d = lambda y: 1.0 - 2.0 * y + 3.0 * a * y * y
    return d(lo), d(up)


def tc_form_multiplier(nu: float, a: float) -> float:
    """Multiplier at the nontrivial fixed point of y + nu y - y^2 + a y^3."""
    disc = 1.0 - 4.0 * a * nu
    if disc <= 0:
        raise NumericError("nontrivial transcritical fixed point "
                           "not locatable at this (nu, a)")
    y = 2.0 * nu / (1.0 + math.sqrt(disc))
    return 1.0 + nu - 2.0 * y + 3.0 * a * y * y


def pf_form_points(nu: float, a: float, b: float) -> tuple[float, float]:
    """Nontrivial fixed points of the pitchfork form near -/+ sqrt(nu)."""
    if nu <= 0:
        raise DomainError("pitchfork pair needs nu > 0")
    r = math.sqrt(nu)
    fp = lambda y: nu - y * y + a * y**4 + b * nu * y
    lower = _bisect_root(fp, -2.2 * r, -0.4 * r)
    upper = _bisect_root(fp, 0.4 * r, 2.2 * r)
    return lower, upper


def pf_form_multipliers(nu: float, a: float, b: float) -> tuple[float, float]:
    lo, up = pf_form_points(nu, a, b)
    d = lambda y: 1.0 + nu - 3.0 * y * y + 5.0 * a * y**4 + 2.0 * b * nu * y
    return d(lo), d(up)


def pd_form_multiplier(nu: float, a: float) -> float:
    """Multiplier of the period-two orbit of -y - nu y + y^3 + a y^5.

    The form is odd, so the orbit is (z, -z) with z^2 solving
    nu = z^2 + a z^4, and the multiplier is g'(z)^2.
    """
    disc = 1.0 + 4.0 * a * nu
    if disc <= 0:
        raise NumericError("period-two orbit of the normal form "
                           "not locatable at this (nu, a)")
    z2 = 2.0 * nu / (1.0 + math.sqrt(disc))
    gy = -1.0 - nu + 3.0 * z2 + 5.0 * a * z2 * z2
    return gy * gy


# damped Newton on the matching equations ---------------------------------------

def _damped_newton(residual, x0) -> np.ndarray:
    x = np.atleast_1d(np.asarray(x0, dtype=float)).copy()
    r = np.atleast_1d(np.asarray(residual(x), dtype=float))
    for _ in range(60):
        rmax = float(np.max(np.abs(r)))
        if rmax == 0.0:
            return x
        jac = _fd_jacobian(residual, x, r.size)
        dx = _solve_step(jac, r)
        lam, improved = 1.0, False
        while lam >= 2.0**-12:
            xt = x + lam * dx
            rt = np.atleast_1d(np.asarray(residual(xt), dtype=float))
            if float(np.max(np.abs(rt))) < rmax:
                improved = True
                break
            lam *= 0.5
        if not improved:
            break
        x, r = xt, rt
        if float(np.max(np.abs(lam * dx))) <= 1e-14 * (1.0 + float(np.max(np.abs(x)))):
            return x
    if float(np.max(np.abs(r))) <= 1e-10:
        return x
    raise NumericError("multiplier matching did not converge")


def _fd_jacobian(residual, x: np.ndarray, m: int) -> np.ndarray:
    jac = np.empty((m, x.size))
    for i in range(x.size):
        h = 1e-7 * max(abs(x[i]), 1e-3)
        xp, xm = x.copy(), x.copy()
        xp[i] += h
        xm[i] -= h
        rp = np.atleast_1d(np.asarray(residual(xp), dtype=float))
        rm = np.atleast_1d(np.asarray(residual(xm), dtype=float))
        jac[:, i] = (rp - rm) / (2.0 * h)
    return jac


def _solve_step(jac: np.ndarray, r: np.ndarray) -> np.ndarray:
    if jac.shape == (1, 1):
        d = jac[0, 0]
        if d == 0.0 or not math.isfinite(d):
            raise NumericError("singular derivative in multiplier matching")
        return np.array([-r[0] / d])
    det = jac[0, 0] * jac[1, 1] - jac[0, 1] * jac[1, 0]
    scale = float(np.max(np.abs(jac))) ** 2
    if not math.isfinite(det) or abs(det) < 1e-12 * max(scale, 1e-300):
        raise NumericError("singular Jacobian in multiplier matching")
    dx0 = (-r[0] * jac[1, 1] + r[1] * jac[0, 1]) / det
    dx1 = (r[0] * jac[1, 0] - r[1] * jac[0, 0]) / det
    return np.array([dx0, dx1])


# map-side multipliers -----------------------------------------------------------

def _polished_sample(nmap: NormalizedMap, branch: sk.Branch, mu: float):
    """(x, multiplier) of a branch at mu, Newton-polished past the 1e-12
    sample tolerance so the multiplier is accurate to rounding."""
    refined = sk.newton_branch(nmap, branch, [mu])
    s = refined.samples[0]
    if not s.valid:
        raise NumericError(f"branch sample at mu = {mu:g} is invalid: {s.note}")
    period_two = branch.label is sk.BranchLabel.PERIOD_TWO
    x = s.x
    for _ in range(3):
        if period_two:
            g, gp = nmap.f2(x, mu) - x, nmap.f2x(x, mu) - 1.0
        else:
            g, gp = nmap.f(x, mu) - x, nmap.fx(x, mu) - 1.0
        if gp == 0.0:
            break
        x -= g / gp
    mult = nmap.f2x(x, mu) if period_two else nmap.fx(x, mu)
    return x, mult


def _as_normalized(spec) -> NormalizedMap:
    return spec.normalized() if isinstance(spec, MapSpec) else spec


def match_multipliers(spec, kind, branches, mu: float,
                      leading: Leading | None = None) -> FitPoint:
    """Solve the multiplier-matching equations at one mu.

    ``branches`` is whatever the skeleton constructor for the kind returned.
    For transcritical/pitchfork/period-doubling nu comes from the trivial
    multiplier exactly; the remaining coefficients (and nu itself for the
    saddle-node) are solved by damped Newton seeded at the leading values.
    """
    kind = _as_kind(kind)
    nmap = _as_normalized(spec)
    if leading is None:
        leading = leading_coefficients(nmap.jet(), kind)
    if kind is Kind.SADDLE_NODE:
        lower, upper = branches
        d1 = _polished_sample(nmap, lower, mu)[1]
        d2 = _polished_sample(nmap, upper, mu)[1]

        def res(v):
            m1, m2 = sn_form_multipliers(v[0], v[1])
            return (m1 - d1, m2 - d2)

        nu, a = _damped_newton(res, [leading.nu_prime_0 * mu, leading.a0])
        m1, m2 = sn_form_multipliers(nu, a)
        return FitPoint(mu, nu, a, None, max(abs(m1 - d1), abs(m2 - d2)))
    if kind is Kind.TRANSCRITICAL:
        _, nontrivial = branches
        nu = nmap.fx(0.0, mu) - 1.0
        d1 = _polished_sample(nmap, nontrivial, mu)[1]
        a, = _damped_newton(lambda v: tc_form_multiplier(nu, v[0]) - d1,
                            [leading.a0])
        return FitPoint(mu, nu, a, None, abs(tc_form_multiplier(nu, a) - d1))
    if kind is Kind.PITCHFORK:
        _, lower, upper = branches
        nu = nmap.fx(0.0, mu) - 1.0
        d1 = _polished_sample(nmap, lower, mu)[1]
        d2 = _polished_sample(nmap, upper, mu)[1]

        def res(v):
            m1, m2 = pf_form_multipliers(nu, v[0], v[1])
            return (m1 - d1, m2 - d2)

        a, b = _damped_newton(res, [leading.a0, leading.b0])
        m1, m2 = pf_form_multipliers(nu, a, b)
        return FitPoint(mu, nu, a, b, max(abs(m1 - d1), abs(m2 - d2)))
    if kind is Kind.PERIOD_DOUBLING:
        branch = branches if isinstance(branches, sk.Branch) else branches[-1]
        nu = -1.0 - nmap.fx(0.0, mu)
        d = _polished_sample(nmap, branch, mu)[1]
        a, = _damped_newton(lambda v: pd_form_multiplier(nu, v[0]) - d,
                            [leading.a0])
        return FitPoint(mu, nu, a, None, abs(pd_form_multiplier(nu, a) - d))
    raise ClassificationMismatch(f"no matching equations for {kind.value}")


def default_fit_grid(trust_mu: float, n: int = 4) -> np.ndarray:
    """Geometric mu grid with ratio 8, from trust_mu/8^(n-1) up to trust_mu.

    The wide ratio keeps the smallest point large enough that the matching
    equations still determine a (their sensitivity to a vanishes rapidly
    with mu), while a(mu) - a0, decaying like sqrt(mu) or faster, at least
    halves between consecutive points.
    """
    return np.geomspace(trust_mu * 8.0 ** (1 - n), trust_mu, n)


def fit_over_grid(spec, kind, mu_grid=None) -> NormalFormFit:
    """Match multipliers over a decreasing-to-zero mu grid."""
    kind = _as_kind(kind)
    nmap = _as_normalized(spec)
    j = nmap.jet()
    leading = leading_coefficients(j, kind)
    if mu_grid is None:
        mu_grid = default_fit_grid(nmap.trust_mu)
    branches = {
        Kind.SADDLE_NODE: sk.sn_branches,
        Kind.TRANSCRITICAL: sk.tc_branches,
        Kind.PITCHFORK: sk.pf_branches,
        Kind.PERIOD_DOUBLING: sk.pd_branch,
    }[kind](j)
    fitted = [match_multipliers(nmap, kind, branches, float(mu),
                                leading=leading)
              for mu in mu_grid]
    lo = min(p.mu for p in fitted)
    hi = max(p.mu for p in fitted)
    return NormalFormFit(kind, leading, fitted, (lo, hi))
