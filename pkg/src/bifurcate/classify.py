"""Classification of elementary bifurcations at the origin.

The decision tree tests jet derivatives of f at (x, mu) = (0, 0) against a
degeneracy tolerance, applies the orientation normalizations x -> -x and
mu -> -mu where the conventions require them, and reports the margins (the
genericity quantities and their values).  Input maps are expected to place
the bifurcation at the origin; maps are assumed scaled to O(1) magnitudes,
and the default tolerance of 1e-9 acts on raw derivative values.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

from .errors import ClassificationMismatch
from .expr import MapSpec
from .jet import Jet2

__all__ = ["Kind", "Classification", "check_origin_fixed", "normalize_signs",
           "classify", "DEFAULT_TOL"]

DEFAULT_TOL = 1e-9


class Kind(str, enum.Enum):
    SADDLE_NODE = "SaddleNode"
    TRANSCRITICAL = "Transcritical"
    PITCHFORK = "Pitchfork"
    PERIOD_DOUBLING = "PeriodDoubling"
    NONE = "None"
    DEGENERATE = "Degenerate"

    def __str__(self):
        return self.value


@dataclass
class Classification:
    kind: Kind
    flip_x: bool = False
    flip_mu: bool = False
    margins: dict = field(default_factory=dict)
    origin_fixed_for_all_mu: bool = False
    note: str = ""
    normalized: Jet2 | None = None  # jet after flips; None for None/Degenerate


def check_origin_fixed(j: Jet2, tol: float = DEFAULT_TOL) -> bool:
    """True iff every pure-mu coefficient of the jet is within tol of zero."""
    return max(abs(j.c[0, k]) for k in range(j.degree + 1)) <= tol


def normalize_signs(j: Jet2, kind: Kind, tol: float = DEFAULT_TOL):
    """Flip x and/or mu so the signs match the conventions for ``kind``.

    Saddle-node: f_mu > 0, f_xx < 0.  Transcritical: f_xx < 0, f_xmu > 0.
    Pitchfork: f_xmu > 0 (f_xxx is flip-invariant).  Period-doubling:
    f_xmu < 0 (3 f_xx^2 + 2 f_xxx is flip-invariant).

    Returns (jet, flip_x, flip_mu).  Raises ClassificationMismatch when a
    sign-determining quantity lies within the tolerance.
    """
    kind = Kind(kind)

    def need(value, name):
        if abs(value) <= tol:
            raise ClassificationMismatch(
                f"{name} = {value:.3e} is inside the degeneracy tolerance")
        return value

    flip_x = flip_mu = False
    if kind is Kind.SADDLE_NODE:
        if need(j.deriv(2, 0), "f_xx") > 0:
            j, flip_x = j.flip_x(), True
        if need(j.deriv(0, 1), "f_mu") < 0:
            j, flip_mu = j.flip_mu(), True
    elif kind is Kind.TRANSCRITICAL:
        if need(j.deriv(2, 0), "f_xx") > 0:
            j, flip_x = j.flip_x(), True
        if need(j.deriv(1, 1), "f_xmu") < 0:
            j, flip_mu = j.flip_mu(), True
    elif kind is Kind.PITCHFORK:
        need(j.deriv(3, 0), "f_xxx")
        if need(j.deriv(1, 1), "f_xmu") < 0:
            j, flip_mu = j.flip_mu(), True
    elif kind is Kind.PERIOD_DOUBLING:
        need(3 * j.deriv(2, 0) ** 2 + 2 * j.deriv(3, 0), "3*f_xx^2 + 2*f_xxx")
        if need(j.deriv(1, 1), "f_xmu") > 0:
            j, flip_mu = j.flip_mu(), True
    else:
        raise ClassificationMismatch(f"no sign conventions for kind {kind}")
    return j, flip_x, flip_mu


def classify(spec: MapSpec, tol: float = DEFAULT_TOL) -> Classification:
    """Decide which elementary bifurcation the family has at the origin."""
    j = spec.jet()
    f00 = j.deriv(0, 0)
    fx0 = j.deriv(1, 0)
    base = {"f_origin": f00, "fx_origin": fx0}

    def result(kind, note="", margins=None, origin_fixed=False,
               normalized=None, flip_x=False, flip_mu=False):
        all_margins = dict(base)
        if margins:
            all_margins.update(margins)
        return Classification(kind, flip_x, flip_mu, all_margins,
                              origin_fixed, note, normalized)

    if abs(f00) > tol:
        return result(Kind.NONE, note="f(0,0) is not zero")

    origin_fixed = check_origin_fixed(j, tol)

    if abs(fx0 - 1.0) <= tol:
        f_xx = j.deriv(2, 0)
        f_xmu = j.deriv(1, 1)
        if not origin_fixed:
            f_mu = j.deriv(0, 1)
            margins = {"f_mu": f_mu, "f_xx": f_xx}
            if abs(f_mu) <= tol:
                return result(Kind.DEGENERATE, margins=margins,
                              note="origin moves with mu but f_mu is inside "
                                   "the tolerance")
            if abs(f_xx) <= tol:
                return result(Kind.DEGENERATE, margins=margins,
                              note="f_xx is inside the tolerance")
            nj, fx_, fm_ = normalize_signs(j, Kind.SADDLE_NODE, tol)
            margins = {"f_mu": nj.deriv(0, 1), "f_xx": nj.deriv(2, 0)}
            return result(Kind.SADDLE_NODE, margins=margins, normalized=nj,
                          flip_x=fx_, flip_mu=fm_)

        f_xxx = j.deriv(3, 0)
        if abs(f_xx) > tol:
            margins = {"f_xx": f_xx, "f_xmu": f_xmu}
            if abs(f_xmu) <= tol:
                return result(Kind.DEGENERATE, margins=margins, origin_fixed=True,
                              note="f_xmu is inside the tolerance")
            nj, fx_, fm_ = normalize_signs(j, Kind.TRANSCRITICAL, tol)
            margins = {"f_xx": nj.deriv(2, 0), "f_xmu": nj.deriv(1, 1)}
            return result(Kind.TRANSCRITICAL, margins=margins, origin_fixed=True,
                          normalized=nj, flip_x=fx_, flip_mu=fm_)

        margins = {"f_xx": f_xx, "f_xxx": f_xxx, "f_xmu": f_xmu}
        if abs(f_xxx) <= tol or abs(f_xmu) <= tol:
            return result(Kind.DEGENERATE, margins=margins, origin_fixed=True,
                          note="pitchfork genericity quantity inside the tolerance")
        if f_xmu * f_xxx > 0:
            return result(Kind.DEGENERATE, margins=margins, origin_fixed=True,
                          note="subcritical pitchfork (f_xmu*f_xxx > 0): out of scope")
        nj, fx_, fm_ = normalize_signs(j, Kind.PITCHFORK, tol)
        margins = {"f_xx": nj.deriv(2, 0), "f_xxx": nj.deriv(3, 0),
                   "f_xmu": nj.deriv(1, 1)}
        return result(Kind.PITCHFORK, margins=margins, origin_fixed=True,
                      normalized=nj, flip_x=fx_, flip_mu=fm_)

    if abs(fx0 + 1.0) <= tol:
        f_xx = j.deriv(2, 0)
        f_xxx = j.deriv(3, 0)
        f_xmu = j.deriv(1, 1)
        quad = 3 * f_xx**2 + 2 * f_xxx
        margins = {"pd_quadratic": quad, "f_xmu": f_xmu}
        if not origin_fixed:
            return result(Kind.DEGENERATE, margins=margins,
                          note="period doubling requires the origin fixed "
                               "for all mu")
        if abs(quad) <= tol or abs(f_xmu) <= tol:
            return result(Kind.DEGENERATE, margins=margins, origin_fixed=True,
                          note="period-doubling genericity quantity inside "
                               "the tolerance")
        if quad < 0:
            return result(Kind.DEGENERATE, margins=margins, origin_fixed=True,
                          note="subcritical period doubling "
                               "(3*f_xx^2 + 2*f_xxx < 0): out of scope")
        nj, fx_, fm_ = normalize_signs(j, Kind.PERIOD_DOUBLING, tol)
        margins = {"pd_quadratic": 3 * nj.deriv(2, 0) ** 2 + 2 * nj.deriv(3, 0),
                   "f_xmu": nj.deriv(1, 1)}
        return result(Kind.PERIOD_DOUBLING, margins=margins, origin_fixed=True,
                      normalized=nj, flip_x=fx_, flip_mu=fm_)

    return result(Kind.NONE, origin_fixed=origin_fixed,
                  note="f_x(0,0) is neither +1 nor -1")
