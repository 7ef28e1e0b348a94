"""Per-kind orchestration from a map spec to verified conjugacies.

This wires the layers together for the CLI and the acceptance suite:
classification chooses the kind and sign normalization, skeleton supplies
branches and refined points, normalform matches (nu, a[, b]) at the working
parameter value, and conjugacy builds one map-to-form conjugacy per basin
piece, with residual, monotonicity, and derivative-probe verification.

Piece layouts by kind (normalized orientation, parameter value nu > 0):

  saddle-node      (-X0, x1), (x1, x2), (x2, X0)
  transcritical    (-X0, fp_lo), (fp_lo, fp_hi), (fp_hi, X0)
  pitchfork        (-X0, x-), (x-, 0), (0, x+), (x+, X0)
  period-doubling  four second-iterate pieces on (f(X0), X0) plus the lift

X0 is the trust radius; target cuts scale by the ratio of the form's fixed
point to the map's so the pieces correspond.  For a saddle-node at mu < 0
there are no fixed points; nu is matched by escape time instead and one
smooth transit conjugacy covers the interval.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import skeleton as sk
from .classify import Kind, classify
from .conjugacy import (MonotoneMap, PdLift, PiecewiseConjugacy, _escape,
                        _sample_margins, build_between_fixed_points,
                        build_no_fixed_points, derivative_probe, escape_data,
                        is_strictly_increasing, match_nu_by_escape, pd_lift,
                        residual)
from .errors import ConjugacyError, DomainError
from .expr import MapSpec
from .normalform import (leading_coefficients, match_multipliers,
                         pf_form_points, sn_form_points)

__all__ = [
    "ProbeSummary", "PieceSummary", "ConjugacySummary",
    "branch_set", "refined_branches", "conjugacy_analysis",
    "conjugacy_samples",
]


@dataclass
class ProbeSummary:
    x: float
    y: float
    side: int
    verdict: str
    spread: float
    limit: float
    truncated: bool

    def as_dict(self) -> dict:
        return {"x": self.x, "y": self.y, "side": self.side,
                "verdict": self.verdict, "spread": self.spread,
                "limit": self.limit, "truncated": self.truncated}


@dataclass
class PieceSummary:
    name: str
    source: tuple
    target: tuple
    residual: float
    monotone: bool
    probes: list = field(default_factory=list)
    handle: object = None  # live conjugacy, not serialized

    def as_dict(self) -> dict:
        return {"name": self.name,
                "source": list(self.source), "target": list(self.target),
                "residual": self.residual, "monotone": self.monotone,
                "probes": [p.as_dict() for p in self.probes]}


@dataclass
class ConjugacySummary:
    kind: Kind
    mu: float
    nu: float
    a: float
    b: float | None
    pieces: list
    lift_residual: float | None = None
    escape: dict | None = None
    handles: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        out = {"kind": str(self.kind), "mu": self.mu, "nu": self.nu,
               "a": self.a, "b": self.b,
               "pieces": [p.as_dict() for p in self.pieces]}
        if self.lift_residual is not None:
            out["lift_residual"] = self.lift_residual
        if self.escape is not None:
            out["escape"] = self.escape
        return out


def branch_set(nmap, kind: Kind):
    """(label, Branch) pairs for the kind, in plotting order."""
    j = nmap.jet()
    if kind == Kind.SADDLE_NODE:
        lower, upper = sk.sn_branches(j)
        return [lower, upper]
    if kind == Kind.TRANSCRITICAL:
        trivial, nontrivial = sk.tc_branches(j)
        return [trivial, nontrivial]
    if kind == Kind.PITCHFORK:
        trivial, lower, upper = sk.pf_branches(j)
        return [trivial, lower, upper]
    if kind == Kind.PERIOD_DOUBLING:
        return [sk.pd_trivial_branch(j), sk.pd_branch(j)]
    raise DomainError(f"no skeleton for kind {kind}")


def refined_branches(nmap, kind: Kind, mu_grid):
    return [sk.newton_branch(nmap, b, mu_grid) for b in branch_set(nmap, kind)]


def _monotone_bracket(func, deriv, need_lo: float, need_hi: float,
                      start_lo: float, start_hi: float) -> MonotoneMap:
    """Shrink [start_lo, start_hi] until deriv keeps one sign on it; the
    result must still contain [need_lo, need_hi]."""
    lo, hi = float(start_lo), float(start_hi)
    for _ in range(120):
        xs = np.linspace(lo, hi, 129)
        ds = np.array([deriv(float(x)) for x in xs])
        sgn = 1.0 if ds[64] > 0.0 else -1.0
        bad = ds * sgn <= 0.0
        if not bad.any():
            return MonotoneMap(func, deriv, lo, hi)
        step = 0.05 * (hi - lo)
        if bad[:64].any():
            lo += step
        if bad[65:].any():
            hi -= step
        if bad[64] or lo > need_lo or hi < need_hi:
            break
    raise ConjugacyError(
        "no monotone bracket covers the working interval; "
        "shrink trust_x in the map config")


def _form_funcs(kind: Kind, nu: float, a: float, b: float):
    if kind == Kind.SADDLE_NODE:
        return (lambda y: y + nu - y * y + a * y ** 3,
                lambda y: 1.0 - 2.0 * y + 3.0 * a * y * y)
    if kind == Kind.TRANSCRITICAL:
        return (lambda y: y + nu * y - y * y + a * y ** 3,
                lambda y: 1.0 + nu - 2.0 * y + 3.0 * a * y * y)
    if kind == Kind.PITCHFORK:
        return (lambda y: y + nu * y - y ** 3 + a * y ** 5
                + b * nu * y * y,
                lambda y: 1.0 + nu - 3.0 * y * y + 5.0 * a * y ** 4
                + 2.0 * b * nu * y)
    if kind == Kind.PERIOD_DOUBLING:
        return (lambda y: -y - nu * y + y ** 3 + a * y ** 5,
                lambda y: -1.0 - nu + 3.0 * y * y + 5.0 * a * y ** 4)
    raise DomainError(f"no normal form for kind {kind}")


def _probe(h, x: float, y: float, side: int) -> ProbeSummary:
    pr = derivative_probe(h, x, y, side=side)
    limit = pr.quotients[-1] if pr.quotients else math.nan
    return ProbeSummary(x, y, side, pr.classify(), pr.spread(), limit,
                        pr.truncated)


def _piece(name, fmap, gmap, src, tgt, n_samples, probes=()) -> PieceSummary:
    h = build_between_fixed_points(fmap, gmap, src, tgt)
    summary = PieceSummary(name, src, tgt, residual(h, n_samples),
                           is_strictly_increasing(h, min(n_samples, 500)),
                           handle=h)
    for x, y, side in probes:
        summary.probes.append(_probe(h, x, y, side))
    return summary


def _newton_points(nmap, branches, mu: float, which) -> list:
    out = []
    for idx in which:
        refined = sk.newton_branch(nmap, branches[idx], [mu])
        sample = refined.samples[0]
        if not sample.valid:
            raise ConjugacyError(
                f"branch point at mu={mu:g} failed refinement: {sample.note}")
        out.append(sample)
    return out


def conjugacy_analysis(spec: MapSpec, mu: float | None = None,
                       n_samples: int = 1000, with_probes: bool = True,
                       a_offset: float = 0.0) -> ConjugacySummary:
    """Build and verify the conjugacies of a map at one parameter value.

    ``a_offset`` shifts the fitted cubic/quintic coefficient before the
    form is built; it exists to demonstrate that the derivative probe
    detects a deliberate multiplier mismatch.
    """
    cls = classify(spec)
    if cls.kind in (Kind.NONE, Kind.DEGENERATE):
        raise DomainError(f"no conjugacy for classification {cls.kind}"
                          + (f": {cls.note}" if cls.note else ""))
    nmap = spec.normalized(cls.flip_x, cls.flip_mu)
    if mu is None:
        mu = spec.trust_mu
    if cls.kind == Kind.SADDLE_NODE and mu < 0:
        return _sn_escape_analysis(spec, nmap, mu, n_samples)
    if mu <= 0:
        raise DomainError("conjugacy construction needs mu > 0 in the "
                          "normalized orientation (saddle-node escape "
                          "handles mu < 0)")
    builder = {Kind.SADDLE_NODE: _sn_analysis,
               Kind.TRANSCRITICAL: _tc_analysis,
               Kind.PITCHFORK: _pf_analysis,
               Kind.PERIOD_DOUBLING: _pd_analysis}[cls.kind]
    return builder(spec, nmap, mu, n_samples, with_probes, a_offset)


def _sn_analysis(spec, nmap, mu, n_samples, with_probes, a_offset):
    branches = sk.sn_branches(nmap.jet())
    fit = match_multipliers(nmap, Kind.SADDLE_NODE, branches, mu)
    nu, a = fit.nu, fit.a + a_offset
    low, high = _newton_points(nmap, branches, mu, (0, 1))
    x1, x2 = low.x, high.x
    y1, y2 = sn_form_points(nu, a)
    X0 = spec.trust_x
    g, gp = _form_funcs(Kind.SADDLE_NODE, nu, a, 0.0)
    f_mu, fx_mu = nmap.frozen(mu)
    fmap = _monotone_bracket(f_mu, fx_mu, -1.05 * X0, 1.05 * X0,
                             -1.6 * X0, 1.6 * X0)
    cut_lo = -X0 * (y1 / x1)
    cut_hi = X0 * (y2 / x2)
    span = 1.6 * max(abs(cut_lo), cut_hi)
    gmap = _monotone_bracket(g, gp, 1.1 * cut_lo, 1.1 * cut_hi, -span, span)
    probes = with_probes
    pieces = [
        _piece("left_of_pair", fmap, gmap, (-X0, x1), (cut_lo, y1),
               n_samples, [(x1, y1, -1)] if probes else ()),
        _piece("between_pair", fmap, gmap, (x1, x2), (y1, y2), n_samples,
               [(x1, y1, +1), (x2, y2, -1)] if probes else ()),
        _piece("right_of_pair", fmap, gmap, (x2, X0), (y2, cut_hi),
               n_samples, [(x2, y2, +1)] if probes else ()),
    ]
    return ConjugacySummary(Kind.SADDLE_NODE, mu, nu, a, None, pieces,
                            handles={"fmap": fmap, "gmap": gmap})


def _tc_analysis(spec, nmap, mu, n_samples, with_probes, a_offset):
    branches = sk.tc_branches(nmap.jet())
    fit = match_multipliers(nmap, Kind.TRANSCRITICAL, branches, mu)
    nu, a = fit.nu, fit.a + a_offset
    (nontrivial,) = _newton_points(nmap, branches, mu, (1,))
    xs = nontrivial.x
    disc = 1.0 - 4.0 * a * nu
    if disc <= 0:
        raise ConjugacyError("perturbed form lost its nontrivial fixed point")
    ys = 2.0 * nu / (1.0 + math.sqrt(disc))
    if xs <= 0 or ys <= 0:
        raise DomainError("transcritical layout expects the nontrivial "
                          "fixed point on the positive side for mu > 0")
    X0 = spec.trust_x
    g, gp = _form_funcs(Kind.TRANSCRITICAL, nu, a, 0.0)
    f_mu, fx_mu = nmap.frozen(mu)
    fmap = _monotone_bracket(f_mu, fx_mu, -1.05 * X0, 1.05 * X0,
                             -1.6 * X0, 1.6 * X0)
    cut_hi = X0 * (ys / xs)
    span = 1.6 * max(X0, cut_hi)
    gmap = _monotone_bracket(g, gp, -1.1 * X0, 1.1 * cut_hi, -span, span)
    probes = with_probes
    pieces = [
        _piece("below_origin", fmap, gmap, (-X0, 0.0), (-X0, 0.0),
               n_samples, [(0.0, 0.0, -1)] if probes else ()),
        _piece("between", fmap, gmap, (0.0, xs), (0.0, ys), n_samples,
               [(0.0, 0.0, +1), (xs, ys, -1)] if probes else ()),
        _piece("above_nontrivial", fmap, gmap, (xs, X0), (ys, cut_hi),
               n_samples, [(xs, ys, +1)] if probes else ()),
    ]
    return ConjugacySummary(Kind.TRANSCRITICAL, mu, nu, a, None, pieces,
                            handles={"fmap": fmap, "gmap": gmap})


def _pf_analysis(spec, nmap, mu, n_samples, with_probes, a_offset):
    branches = sk.pf_branches(nmap.jet())
    fit = match_multipliers(nmap, Kind.PITCHFORK, branches, mu)
    nu, a, b = fit.nu, fit.a + a_offset, fit.b
    low, high = _newton_points(nmap, branches, mu, (1, 2))
    xm, xp = low.x, high.x
    ym, yp = pf_form_points(nu, a, b)
    X0 = spec.trust_x
    g, gp = _form_funcs(Kind.PITCHFORK, nu, a, b)
    f_mu, fx_mu = nmap.frozen(mu)
    fmap = _monotone_bracket(f_mu, fx_mu, -1.05 * X0, 1.05 * X0,
                             -1.6 * X0, 1.6 * X0)
    cut_lo = -X0 * (ym / xm)
    cut_hi = X0 * (yp / xp)
    span = 1.6 * max(abs(cut_lo), cut_hi)
    gmap = _monotone_bracket(g, gp, 1.1 * cut_lo, 1.1 * cut_hi, -span, span)
    probes = with_probes
    pieces = [
        _piece("below_lower", fmap, gmap, (-X0, xm), (cut_lo, ym),
               n_samples, [(xm, ym, -1)] if probes else ()),
        _piece("lower_to_origin", fmap, gmap, (xm, 0.0), (ym, 0.0),
               n_samples,
               [(xm, ym, +1), (0.0, 0.0, -1)] if probes else ()),
        _piece("origin_to_upper", fmap, gmap, (0.0, xp), (0.0, yp),
               n_samples,
               [(0.0, 0.0, +1), (xp, yp, -1)] if probes else ()),
        _piece("above_upper", fmap, gmap, (xp, X0), (yp, cut_hi),
               n_samples, [(xp, yp, +1)] if probes else ()),
    ]
    return ConjugacySummary(Kind.PITCHFORK, mu, nu, a, b, pieces,
                            handles={"fmap": fmap, "gmap": gmap})


def _pd_analysis(spec, nmap, mu, n_samples, with_probes, a_offset):
    branch = sk.pd_branch(nmap.jet())
    fit = match_multipliers(nmap, Kind.PERIOD_DOUBLING, branch, mu)
    nu, a = fit.nu, fit.a + a_offset
    refined = sk.newton_branch(nmap, branch, [mu]).samples[0]
    if not refined.valid:
        raise ConjugacyError(f"period-two pair at mu={mu:g} failed "
                             f"refinement: {refined.note}")
    z1, zm1 = refined.x, refined.partner
    t = 2.0 * nu / (1.0 + math.sqrt(1.0 + 4.0 * a * nu))
    if t <= 0:
        raise ConjugacyError("perturbed form lost its period-two orbit")
    ystar = math.sqrt(t)
    X0 = spec.trust_x
    f_mu, fx_mu = nmap.frozen(mu)
    f2_mu, f2x_mu = nmap.frozen2(mu)
    g, gp = _form_funcs(Kind.PERIOD_DOUBLING, nu, a, 0.0)
    g2 = lambda y: g(g(y))
    g2p = lambda y: gp(y) * gp(g(y))
    Y0 = ystar * (X0 / z1)
    Xm = -f_mu(X0)
    Ym = -g(Y0)
    fmap = _monotone_bracket(f_mu, fx_mu, -1.05 * Xm, 1.05 * X0,
                             -1.5 * Xm, 1.5 * X0)
    f2map = _monotone_bracket(f2_mu, f2x_mu, -1.02 * Xm, 1.02 * X0,
                              -1.3 * Xm, 1.3 * X0)
    gmap = _monotone_bracket(g, gp, -1.05 * Ym, 1.05 * Y0,
                             -1.5 * Ym, 1.5 * Y0)
    g2map = _monotone_bracket(g2, g2p, -1.02 * Ym, 1.02 * Y0,
                              -1.3 * Ym, 1.3 * Y0)
    probes = with_probes
    pieces = [
        _piece("origin_to_pair", f2map, g2map, (0.0, z1), (0.0, ystar),
               n_samples,
               [(0.0, 0.0, +1), (z1, ystar, -1)] if probes else ()),
        _piece("above_pair", f2map, g2map, (z1, X0), (ystar, Y0),
               n_samples, [(z1, ystar, +1)] if probes else ()),
        _piece("pair_to_origin_neg", f2map, g2map, (zm1, 0.0),
               (-ystar, 0.0), n_samples,
               [(zm1, -ystar, +1), (0.0, 0.0, -1)] if probes else ()),
        _piece("below_pair_neg", f2map, g2map, (-Xm, zm1), (-Ym, -ystar),
               n_samples, [(zm1, -ystar, -1)] if probes else ()),
    ]
    h2 = PiecewiseConjugacy([p.handle for p in pieces])
    lift = pd_lift(h2, fmap, gmap, n_check=40)
    attraction = _lift_region(lift, g, [pieces[1], pieces[3]], n_samples)
    repulsion = _lift_region(lift, g, [pieces[0], pieces[2]], n_samples)
    lift_pieces = [
        PieceSummary("attraction_lift", lift.source_interval,
                     lift.target_interval, attraction, True, handle=lift),
        PieceSummary("repulsion_lift",
                     (pieces[2].source[0], pieces[0].source[1]),
                     (pieces[2].target[0], pieces[0].target[1]),
                     repulsion, True, handle=lift),
    ]
    if probes:
        lift_pieces[1].probes = [_probe(lift, 0.0, 0.0, +1),
                                 _probe(lift, 0.0, 0.0, -1)]
    return ConjugacySummary(Kind.PERIOD_DOUBLING, mu, nu, a, None,
                            pieces + lift_pieces,
                            lift_residual=lift.lift_residual,
                            handles={"fmap": fmap, "gmap": gmap,
                                     "g": g, "lift": lift, "h2": h2})


def _lift_region(lift: PdLift, g, piece_summaries, n_samples) -> float:
    """sup |H(f(x)) - g(H(x))| over the margins of the given second-iterate
    pieces, for the lifted conjugacy H."""
    worst = 0.0
    n = max(2, n_samples // (2 * len(piece_summaries)))
    for ps in piece_summaries:
        lo, hi = ps.source
        m_lo, m_hi = _sample_margins(ps.handle)
        for x in np.linspace(lo + m_lo, hi - m_hi, n):
            x = float(x)
            err = abs(lift.evaluate(lift.fmap(x)) - g(lift.evaluate(x)))
            worst = max(worst, err)
    return worst


def _sn_escape_analysis(spec, nmap, mu, n_samples):
    X0 = spec.trust_x
    Y0 = X0
    a0 = leading_coefficients(nmap.jet(), Kind.SADDLE_NODE).a0
    nu = match_nu_by_escape(nmap, X0, Y0, mu, a=a0)
    g, gp = _form_funcs(Kind.SADDLE_NODE, nu, a0, 0.0)
    f_mu, fx_mu = nmap.frozen(mu)
    fmap = _monotone_bracket(f_mu, fx_mu, -1.05 * X0, 1.05 * X0,
                             -1.6 * X0, 1.6 * X0)
    gmap = _monotone_bracket(g, gp, -1.1 * Y0, 1.1 * Y0,
                             -1.6 * Y0, 1.6 * Y0)
    h = build_no_fixed_points(fmap, gmap, (-X0, X0), (-Y0, Y0))
    piece = PieceSummary("transit", (-X0, X0), (-Y0, Y0),
                         residual(h, n_samples),
                         is_strictly_increasing(h, min(n_samples, 500)),
                         handle=h)
    map_esc = escape_data(nmap, X0, mu)
    form_esc = _escape(g, Y0, 10 ** 6)
    escape = {"n": map_esc.n, "phase": map_esc.phase, "nu": nu,
              "form_n": form_esc.n, "form_phase": form_esc.phase}
    return ConjugacySummary(Kind.SADDLE_NODE, mu, nu, a0, None, [piece],
                            escape=escape,
                            handles={"fmap": fmap, "gmap": gmap})


def conjugacy_samples(summary: ConjugacySummary, n: int = 200):
    """(x, h(x), pointwise residual) rows across all pieces, ordered by x.

    For a period-doubling analysis the rows come from the lifted map on the
    full working interval; otherwise from each basin piece.
    """
    rows = []
    if summary.kind == Kind.PERIOD_DOUBLING:
        lift = summary.handles["lift"]
        g = summary.handles["g"]
        per = max(2, n // 4)
        for ps in summary.pieces[:4]:
            lo, hi = ps.source
            m_lo, m_hi = _sample_margins(ps.handle)
            for x in np.linspace(lo + m_lo, hi - m_hi, per):
                x = float(x)
                hx = lift.evaluate(x)
                fx = lift.fmap(x)
                res = abs(lift.evaluate(fx) - g(hx))
                rows.append((x, hx, res))
    else:
        per = max(2, n // max(1, len(summary.pieces)))
        for ps in summary.pieces:
            h = ps.handle
            lo, hi = ps.source
            m_lo, m_hi = _sample_margins(h)
            for x in np.linspace(lo + m_lo, hi - m_hi, per):
                x = float(x)
                rows.append((x, h.evaluate(x),
                             abs(h.evaluate(h.f(x)) - h.g(h.evaluate(x)))))
    rows.sort(key=lambda r: r[0])
    return rows
