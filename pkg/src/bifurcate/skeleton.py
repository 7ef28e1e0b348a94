"""Bifurcation skeletons: branch and multiplier series plus Newton samples.

For saddle-node, pitchfork, and period-doubling families the branches are
series in m = sqrt(mu); the transcritical branch is a series in mu itself.
Series coefficients are obtained by order-by-order substitution into the
defining equation (H = f - x, or its division by x, or the analogous G for
the second iterate), which stays exact to the jet degree.  Closed-form
expressions for the low-order coefficients are exposed separately so tests
can cross-check the solver against them and against Newton refinement.

Numeric samples are produced by Newton iteration on f(x, mu) - x (or on
f^2 - x for the period-two pair) seeded by the series prediction.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ClassificationMismatch, NumericError
from .expr import MapSpec, NormalizedMap
from .jet import Jet1, Jet2

__all__ = [
    "BranchLabel", "Branch", "BranchSample", "SecondIterate",
    "sn_branches", "tc_branches", "pf_branches",
    "pd_second_iterate", "pd_branch", "pd_pair_locations", "pd_trivial_branch",
    "newton_branch", "default_mu_grid", "solve_branch_series",
    "SnCoeffs", "TcCoeffs", "PfCoeffs", "PdCoeffs",
    "sn_coeffs", "tc_coeffs", "pf_coeffs", "pd_coeffs",
    "tc_mu2_coefficient", "pf_location_m3", "pf_multiplier_m3_m4",
    "pd_multiplier_m4",
]

_TOL = 1e-9


class BranchLabel(str, enum.Enum):
    TRIVIAL = "trivial"
    LOWER = "lower"            # k = 1: negative leading location coefficient
    UPPER = "upper"            # k = 2
    PERIOD_TWO = "period_two_pair"

    def __str__(self):
        return self.value


@dataclass
class BranchSample:
    mu: float
    x: float
    partner: float | None      # f(x) for the period-two pair, else None
    multiplier: float
    series_x: float
    abs_err: float
    valid: bool
    note: str = ""


@dataclass
class Branch:
    label: BranchLabel
    param: str                 # "m" (m^2 = mu) or "mu"
    location: Jet1
    multiplier: Jet1
    samples: list = field(default_factory=list)


# coefficient tables ----------------------------------------------------------

@dataclass
class SnCoeffs:
    """H = f - x = c2 mu + c3 x^2 + c4 x mu + c5 mu^2 + c6 x^3 + ..."""
    c2: float; c3: float; c4: float; c5: float; c6: float


@dataclass
class TcCoeffs:
    """H = (f - x)/x = c1 x + c2 mu + c3 x^2 + c4 x mu + c5 mu^2 + ..."""
    c1: float; c2: float; c3: float; c4: float; c5: float


@dataclass
class PfCoeffs:
    """K = (f - x)/x = c2 mu + c3 x^2 + c4 x mu + c5 mu^2 + c6 x^3
    + c7 x^2 mu + c8 x^4 + ..."""
    c2: float; c3: float; c4: float; c5: float
    c6: float; c7: float; c8: float


@dataclass
class PdCoeffs:
    """P = (f + x)/x = b1 x + b2 mu + b3 x^2 + b4 x mu + b5 mu^2 + b6 x^3
    + b7 x^2 mu + b8 x^4 + ..."""
    b1: float; b2: float; b3: float; b4: float; b5: float
    b6: float; b7: float; b8: float


def sn_coeffs(j: Jet2) -> SnCoeffs:
    h = j - Jet2.variable_x(j.degree)
    return SnCoeffs(h.c[0, 1], h.c[2, 0], h.c[1, 1], h.c[0, 2], h.c[3, 0])


def tc_coeffs(j: Jet2) -> TcCoeffs:
    h = (j - Jet2.variable_x(j.degree)).factor_x(_scaled_tol(j))
    return TcCoeffs(h.c[1, 0], h.c[0, 1], h.c[2, 0], h.c[1, 1], h.c[0, 2])


def pf_coeffs(j: Jet2) -> PfCoeffs:
    k = (j - Jet2.variable_x(j.degree)).factor_x(_scaled_tol(j))
    return PfCoeffs(k.c[0, 1], k.c[2, 0], k.c[1, 1], k.c[0, 2],
                    k.c[3, 0], k.c[2, 1], k.c[4, 0])


def pd_coeffs(j: Jet2) -> PdCoeffs:
    p = (j + Jet2.variable_x(j.degree)).factor_x(_scaled_tol(j))
    return PdCoeffs(p.c[1, 0], p.c[0, 1], p.c[2, 0], p.c[1, 1], p.c[0, 2],
                    p.c[3, 0], p.c[2, 1], p.c[4, 0])


def _scaled_tol(j: Jet2) -> float:
    return _TOL * max(1.0, float(np.max(np.abs(j.c))))


# closed-form low-order coefficients ------------------------------------------

def tc_mu2_coefficient(c: TcCoeffs, variant: str = "appendix") -> float:
    """mu^2 coefficient of the nontrivial transcritical branch.

    The "appendix" variant is the one validated against Newton refinement;
    "main_text" (which uses f_xmu in place of f_xmumu in the last term) is
    retained only as a diagnostic and fails that validation whenever the
    two mixed derivatives differ.
    """
    if variant == "appendix":
        return -c.c2**2 * c.c3 / c.c1**3 + c.c2 * c.c4 / c.c1**2 - c.c5 / c.c1
    if variant == "main_text":
        # last term uses c2/2 (i.e. f_xmu) where the appendix has c5 (f_xmumu/2)
        return -c.c2**2 * c.c3 / c.c1**3 + c.c2 * c.c4 / c.c1**2 \
            - (c.c2 / 2.0) / c.c1
    raise ValueError(f"unknown variant {variant!r}")


def pf_location_m3(c: PfCoeffs) -> float:
    """Coefficient L of (-1)^k m^3 in the pitchfork branch location."""
    root = math.sqrt(-c.c2 * c.c3)
    return (1.0 / (2.0 * root)) * (
        -5.0 * c.c2**2 * c.c6**2 / (4.0 * c.c3**3)
        + 3.0 * c.c2 * c.c4 * c.c6 / (2.0 * c.c3**2)
        - c.c4**2 / (4.0 * c.c3)
        + c.c5
        - c.c2 * c.c7 / c.c3
        + c.c2**2 * c.c8 / c.c3**2
    )


def pf_multiplier_m3_m4(c: PfCoeffs) -> tuple[float, float]:
    """(B, C): multiplier = 1 - 2 c2 m^2 + (-1)^k B m^3 + C m^4 + ..."""
    b = math.sqrt(-c.c2 / c.c3**3) * (c.c2 * c.c6 + c.c3 * c.c4)
    cc = (-3.0 * c.c2**2 * c.c6**2 / (2.0 * c.c3**3)
          + c.c2 * c.c4 * c.c6 / c.c3**2
          + c.c4**2 / (2.0 * c.c3)
          - 2.0 * c.c5
          + 2.0 * c.c2**2 * c.c8 / c.c3**2)
    return b, cc


def pd_multiplier_m4(b: PdCoeffs) -> float:
    """Coefficient M of m^4 in the period-two multiplier D(m)."""
    s = b.b1**2 + b.b3
    return 4.0 * b.b5 - (b.b2**2 / s**2) * (
        b.b1**4 + 5.0 * b.b1**2 * b.b3 - 4.0 * b.b3**2
        + 12.0 * b.b1 * b.b6 + 4.0 * b.b8)


def _second_iterate_c_from_b(b: PdCoeffs) -> dict:
    """c-coefficients of G = (f^2 - x)/x from the b-coefficients of f."""
    s = b.b1**2 + b.b3
    return {
        "c2": -2.0 * b.b2,
        "c3": -2.0 * s,
        "c4": -b.b1 * b.b2,
        "c5": b.b2**2 - 2.0 * b.b5,
        "c6": b.b1 * s,
        "c7": -2.0 * b.b7 - 4.0 * b.b1 * b.b4 + 2.0 * b.b1**2 * b.b2
              + 4.0 * b.b2 * b.b3,
        "c8": -2.0 * b.b8 - 6.0 * b.b1 * b.b6 - b.b1**2 * b.b3 + 3.0 * b.b3**2,
    }


# series solver ---------------------------------------------------------------

def solve_branch_series(eqn: Jet2, leading: float, degree: int,
                        mu_power: int = 2, order_shift: int = 1) -> Jet1:
    """Solve eqn(x(t), t^mu_power) = 0 order by order.

    ``leading`` is the coefficient of t in x(t), fixed by the lowest-order
    equation; each higher coefficient enters linearly with the factor
    [t^order_shift] of eqn_x along the branch (order_shift 1 for branches
    born at a fold of the t^2 substitution, 0 when eqn_x(0,0) != 0).
    """
    if degree < 1:
        raise NumericError("series degree must be at least 1")
    coeffs = np.zeros(degree + 1)
    coeffs[1] = leading
    ex = eqn.partial_x()
    lam = ex.substitute_series(Jet1(coeffs), mu_power,
                               out_degree=order_shift).c[order_shift]
    if abs(lam) < 1e-13 * max(1.0, float(np.max(np.abs(eqn.c)))):
        raise NumericError("branch linearization vanished; degenerate setup")
    for k in range(2, degree + 1):
        resid = eqn.substitute_series(Jet1(coeffs), mu_power,
                                      out_degree=k + order_shift)
        coeffs[k] = -resid.c[k + order_shift] / lam
    out = Jet1(coeffs)
    final = eqn.substitute_series(out, mu_power, out_degree=degree + order_shift)
    scale = max(1.0, float(np.max(np.abs(eqn.c)))) \
        * max(1.0, abs(leading)) ** (degree + 1)
    if np.max(np.abs(final.c)) > 1e-8 * scale:
        raise NumericError("branch series failed to satisfy its equation")
    return out


def _series_degree(j: Jet2) -> int:
    return min(j.degree - 2, 5)


def _require(cond: bool, msg: str):
    if not cond:
        raise ClassificationMismatch(msg)


# branch constructors ---------------------------------------------------------

def sn_branches(j: Jet2) -> tuple[Branch, Branch]:
    """Lower (k=1) and upper (k=2) fixed-point branches of a saddle-node jet."""
    c = sn_coeffs(j)
    _require(abs(j.deriv(0, 0)) <= _scaled_tol(j), "origin is not a fixed point")
    _require(abs(j.deriv(1, 0) - 1) <= _TOL, "f_x(0,0) must be 1")
    _require(c.c2 > _TOL, "saddle-node orientation requires f_mu > 0")
    _require(c.c3 < -_TOL, "saddle-node orientation requires f_xx < 0")
    h = j - Jet2.variable_x(j.degree)
    fx = j.partial_x()
    deg = _series_degree(j)
    lead = math.sqrt(-c.c2 / c.c3)
    out = []
    for k, sign in ((1, -1.0), (2, 1.0)):
        loc = solve_branch_series(h, sign * lead, deg)
        mult = fx.substitute_series(loc, mu_power=2, out_degree=deg)
        out.append(Branch(BranchLabel.LOWER if k == 1 else BranchLabel.UPPER,
                          "m", loc, mult))
    return out[0], out[1]


def tc_branches(j: Jet2) -> tuple[Branch, Branch]:
    """Trivial and nontrivial branches of a transcritical jet (in mu)."""
    c = tc_coeffs(j)
    _require(abs(j.deriv(1, 0) - 1) <= _TOL, "f_x(0,0) must be 1")
    _require(c.c1 < -_TOL, "transcritical orientation requires f_xx < 0")
    _require(c.c2 > _TOL, "transcritical orientation requires f_xmu > 0")
    fx = j.partial_x()
    deg = _series_degree(j)
    trivial = Branch(BranchLabel.TRIVIAL, "mu",
                     Jet1(np.zeros(deg + 1)),
                     fx.mu_profile(0).padded(deg))
    h = (j - Jet2.variable_x(j.degree)).factor_x(_scaled_tol(j))
    loc = solve_branch_series(h, -c.c2 / c.c1, deg, mu_power=1, order_shift=0)
    mult = fx.substitute_series(loc, mu_power=1, out_degree=deg)
    nontrivial = Branch(BranchLabel.UPPER, "mu", loc, mult)
    return trivial, nontrivial


def pf_branches(j: Jet2) -> tuple[Branch, Branch, Branch]:
    """Trivial, lower, and upper branches of a supercritical pitchfork jet."""
    c = pf_coeffs(j)
    _require(abs(j.deriv(1, 0) - 1) <= _TOL, "f_x(0,0) must be 1")
    _require(abs(j.deriv(2, 0)) <= _scaled_tol(j), "pitchfork requires f_xx = 0")
    _require(c.c3 < -_TOL, "supercritical pitchfork requires f_xxx < 0")
    _require(c.c2 > _TOL, "pitchfork orientation requires f_xmu > 0")
    fx = j.partial_x()
    deg = _series_degree(j)
    trivial = Branch(BranchLabel.TRIVIAL, "mu",
                     Jet1(np.zeros(deg + 1)),
                     fx.mu_profile(0).padded(deg))
    k_jet = (j - Jet2.variable_x(j.degree)).factor_x(_scaled_tol(j))
    lead = math.sqrt(-c.c2 / c.c3)
    nontrivial = []
    for sign in (-1.0, 1.0):
        loc = solve_branch_series(k_jet, sign * lead, deg)
        mult = fx.substitute_series(loc, mu_power=2, out_degree=deg)
        label = BranchLabel.LOWER if sign < 0 else BranchLabel.UPPER
        nontrivial.append(Branch(label, "m", loc, mult))
    return trivial, nontrivial[0], nontrivial[1]


@dataclass
class SecondIterate:
    """The composed second iterate of a period-doubling jet.

    ``c_coeffs`` are read from the composed jet; ``c_formula`` recomputes
    them from the b-coefficients.  Construction fails if the two disagree,
    which would indicate an inconsistency in the coefficient algebra.
    """
    jet: Jet2              # jet of f(f(x, mu), mu)
    g_jet: Jet2            # G = (f^2 - x)/x
    b_coeffs: PdCoeffs
    c_coeffs: dict
    c_formula: dict
    discrepancy: float


def pd_second_iterate(j: Jet2) -> SecondIterate:
    _require(abs(j.deriv(1, 0) + 1) <= _TOL, "f_x(0,0) must be -1")
    b = pd_coeffs(j)
    quad = 3.0 * j.deriv(2, 0) ** 2 + 2.0 * j.deriv(3, 0)
    _require(quad > _TOL, "supercritical period doubling requires "
             "3*f_xx^2 + 2*f_xxx > 0")
    _require(j.deriv(1, 1) < -_TOL, "period-doubling orientation requires "
             "f_xmu < 0")
    f2 = j.subs_x(j)
    g = (f2 - Jet2.variable_x(j.degree)).factor_x(_scaled_tol(f2))
    c_comp = {"c2": g.c[0, 1], "c3": g.c[2, 0], "c4": g.c[1, 1],
              "c5": g.c[0, 2], "c6": g.c[3, 0], "c7": g.c[2, 1],
              "c8": g.c[4, 0]}
    c_form = _second_iterate_c_from_b(b)
    scale = max(1.0, max(abs(v) for v in c_comp.values()))
    disc = max(abs(c_comp[k] - c_form[k]) for k in c_comp) / scale
    if disc > 1e-9:
        raise NumericError(
            f"second-iterate coefficients disagree with the b-form by {disc:.3e}; "
            "coefficient algebra inconsistency")
    if not g.deriv(0, 1) > 0:
        raise ClassificationMismatch("G_mu(0,0) must be positive")
    if not g.deriv(2, 0) < 0:
        raise ClassificationMismatch("G_xx(0,0) must be negative")
    return SecondIterate(f2, g, b, c_comp, c_form, disc)


def pd_pair_locations(si: SecondIterate, degree: int | None = None):
    """(lower, upper) location series of the period-two points in m."""
    g = si.g_jet
    deg = degree if degree is not None else min(g.degree - 2, 5)
    lead = math.sqrt(-si.c_coeffs["c2"] / si.c_coeffs["c3"])
    lower = solve_branch_series(g, -lead, deg)
    upper = solve_branch_series(g, lead, deg)
    return lower, upper


def pd_branch(j: Jet2) -> Branch:
    """Period-two pair branch: location of the upper point, multiplier D(m).

    The branch exists for mu >= 0 only; the pair's second point is f applied
    to the first (recorded in the samples as ``partner``).
    """
    si = pd_second_iterate(j)
    _, upper = pd_pair_locations(si)
    f2x = si.jet.partial_x()
    mult = f2x.substitute_series(upper, mu_power=2, out_degree=upper.degree)
    return Branch(BranchLabel.PERIOD_TWO, "m", upper, mult)


def pd_trivial_branch(j: Jet2) -> Branch:
    """Fixed-point branch x = 0 of a period-doubling jet, multiplier f_x(0, mu)."""
    fx = j.partial_x()
    deg = _series_degree(j)
    return Branch(BranchLabel.TRIVIAL, "mu", Jet1(np.zeros(deg + 1)),
                  fx.mu_profile(0).padded(deg))


# numeric refinement ----------------------------------------------------------

def default_mu_grid(trust_mu: float, n: int = 16) -> np.ndarray:
    """n log-spaced mu values from 1e-6 * trust_mu up to trust_mu."""
    return np.geomspace(1e-6 * trust_mu, trust_mu, n)


def newton_branch(nmap, branch: Branch, mu_grid) -> Branch:
    """Newton-refine a branch on a mu grid; returns a copy with samples.

    Accepts a MapSpec or a NormalizedMap.  Samples that fail to converge to
    |f - x| <= 1e-12 within 50 iterations, or that land away from the seeded
    branch, are flagged invalid instead of raising.
    """
    if isinstance(nmap, MapSpec):
        nmap = nmap.normalized()
    period_two = branch.label is BranchLabel.PERIOD_TWO
    samples = []
    lead = abs(branch.location.c[1]) if branch.location.degree >= 1 else 0.0
    for mu in mu_grid:
        mu = float(mu)
        if branch.param == "m":
            if mu < 0:
                samples.append(BranchSample(mu, math.nan, None, math.nan,
                                            math.nan, math.nan, False,
                                            "branch does not exist for mu < 0"))
                continue
            t = math.sqrt(mu)
        else:
            t = mu
        seed = branch.location.eval(t)
        if period_two:
            g = lambda x, mu=mu: nmap.f2(x, mu) - x
            gp = lambda x, mu=mu: nmap.f2x(x, mu) - 1.0
        else:
            g = lambda x, mu=mu: nmap.f(x, mu) - x
            gp = lambda x, mu=mu: nmap.fx(x, mu) - 1.0
        x, ok, note = _newton_1d(g, gp, seed)
        drift_tol = 0.5 * max(abs(seed), lead * abs(t), 1e-6)
        if ok and abs(x - seed) > drift_tol:
            ok, note = False, "converged away from the seeded branch"
        if ok:
            if period_two:
                partner = nmap.f(x, mu)
                multiplier = nmap.fx(x, mu) * nmap.fx(partner, mu)
            else:
                partner = None
                multiplier = nmap.fx(x, mu)
            samples.append(BranchSample(mu, x, partner, multiplier, seed,
                                        abs(x - seed), True))
        else:
            samples.append(BranchSample(mu, x, None, math.nan, seed,
                                        math.nan, False, note))
    return replace(branch, samples=samples)


def _newton_1d(g, gp, x0, tol=1e-12, max_iter=50):
    x = float(x0)
    for _ in range(max_iter):
        val = g(x)
        if abs(val) <= tol:
            return _newton_polish(g, gp, x, val), True, ""
        d = gp(x)
        if not math.isfinite(d) or abs(d) < 1e-14:
            return x, False, "singular derivative in Newton iteration"
        step = val / d
        x -= step
        if not math.isfinite(x):
            return x, False, "Newton iteration diverged"
    if abs(g(x)) <= tol:
        return _newton_polish(g, gp, x, g(x)), True, ""
    return x, False, "Newton iteration did not converge"


def _newton_polish(g, gp, x, val):
    """Push a converged root to machine precision.

    A residual bound of tol still allows x to be off by tol/|g'|, which is
    visible in multiplier comparisons near the bifurcation where g' is
    small.  Extra steps are kept only while the residual improves.
    """
    best_x, best = x, abs(val)
    for _ in range(4):
        d = gp(x)
        if not math.isfinite(d) or abs(d) < 1e-14:
            break
        x = x - val / d
        val = g(x)
        if not (math.isfinite(val) and abs(val) < best):
            break
        best_x, best = x, abs(val)
        if val == 0.0:
            break
    return best_x
