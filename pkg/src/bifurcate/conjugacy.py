"""Numerical conjugacies between a map and its fitted normal form.

A conjugacy h with h(f(x)) = g(h(x)) is built per basin piece: an interval
whose ends are fixed points of f or trust-region cuts, containing no fixed
point inside.  h is pinned down by a monotone seed on one fundamental
domain [p0, f(p0)] and extended to the rest of the piece by the dynamics:
every orbit visits the seed tile exactly once, so h(x) = g^i(seed(f^-i(x)))
for the tile index i of x.  Inverse iterates use bracketed bisection on the
monotone map followed by Newton polish.

Two seeds are provided.  Between fixed points the seed is affine.  When the
piece has no fixed point at all (a parameter past the fold, where every
orbit transits), the seed is a smooth monotone blend whose endpoint slopes
make h C^1 across tile boundaries.

The module also matches the unfolding parameter for a vanished fixed-point
pair by escape time, and lifts a conjugacy of second iterates to one of the
original decreasing maps for the period-doubling case.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (ClassificationMismatch, ConjugacyError, DomainError,
                     IterationCapError, NumericError)

__all__ = [
    "MonotoneMap", "Seed", "ConjugacyMap", "PiecewiseConjugacy",
    "build_between_fixed_points", "build_no_fixed_points",
    "residual", "is_strictly_increasing",
    "ProbeResult", "derivative_probe",
    "EscapeData", "escape_data", "match_nu_by_escape",
    "PdLift", "pd_lift",
]

_INV_WIDTH = 1e-13
_FIXED_TOL = 1e-9


@dataclass(frozen=True)
class MonotoneMap:
    """A map monotone on [lo, hi], with derivative, invertible numerically."""
    func: object
    deriv: object
    lo: float
    hi: float

    def __call__(self, x: float) -> float:
        return self.func(x)

    def inverse(self, y: float, x0: float | None = None) -> float:
        """Solve func(x) = y by bisection to width 1e-13, then two Newton
        polish steps.

        A warm start ``x0`` tries plain Newton first (the conjugacy walk
        inverts one tile at a time, so the previous point is an excellent
        guess); any failure falls back to the bracketed path.
        """
        if x0 is not None:
            x = x0
            scale = max(1.0, abs(y))
            for _ in range(12):
                d = self.deriv(x)
                if d == 0.0 or not math.isfinite(d):
                    break
                x_new = x - (self.func(x) - y) / d
                if not self.lo <= x_new <= self.hi:
                    break
                if abs(self.func(x_new) - y) <= 1e-13 * scale:
                    d = self.deriv(x_new)
                    if d != 0.0 and math.isfinite(d):
                        x_new -= (self.func(x_new) - y) / d
                    return x_new
                x = x_new
        lo, hi = self.lo, self.hi
        flo = self.func(lo) - y
        fhi = self.func(hi) - y
        if flo == 0.0:
            return lo
        if fhi == 0.0:
            return hi
        if (flo > 0) == (fhi > 0):
            raise ConjugacyError(
                f"inverse target {y:g} outside the monotone range "
                f"[{min(self.func(lo), self.func(hi)):g}, "
                f"{max(self.func(lo), self.func(hi)):g}]")
        while hi - lo > _INV_WIDTH * max(1.0, abs(lo), abs(hi)):
            mid = 0.5 * (lo + hi)
            fm = self.func(mid) - y
            if fm == 0.0:
                lo = hi = mid
                break
            if (fm > 0) == (flo > 0):
                lo, flo = mid, fm
            else:
                hi, fhi = mid, fm
        x = 0.5 * (lo + hi)
        for _ in range(2):
            d = self.deriv(x)
            if d == 0.0 or not math.isfinite(d):
                break
            step = (self.func(x) - y) / d
            if self.lo <= x - step <= self.hi:
                x -= step
        return x


class Seed:
    """Monotone map of one source fundamental domain onto one target domain.

    ``domain`` is (p0, p1) with p1 = f(p0); the seed sends p0 -> q0 and
    p1 -> q1 = g(q0) and is strictly increasing between them.
    """

    def __init__(self, domain, target, fwd, inv=None):
        self.domain = (float(domain[0]), float(domain[1]))
        self.target = (float(target[0]), float(target[1]))
        self.fwd = fwd
        self._inv = inv

    def __call__(self, x: float) -> float:
        return self.fwd(x)

    def inv(self, y: float) -> float:
        if self._inv is not None:
            return self._inv(y)
        lo = min(self.domain)
        hi = max(self.domain)
        probe = MonotoneMap(self.fwd, lambda x: _num_deriv(self.fwd, x),
                            lo, hi)
        return probe.inverse(y)

    @classmethod
    def affine(cls, p0, p1, q0, q1) -> "Seed":
        slope = (q1 - q0) / (p1 - p0)
        if slope <= 0:
            raise ConjugacyError("seed endpoints are not in increasing order")
        fwd = lambda x: q0 + slope * (x - p0)
        inv = lambda y: p0 + (y - q0) / slope
        return cls((p0, p1), (q0, q1), fwd, inv)

    @classmethod
    def blend(cls, p0, p1, q0, q1, end_slope) -> "Seed":
        """Smooth monotone interpolation: identity-like anchor of slope 1 at
        p0, slope ``end_slope`` at p1, joined by the bump profile e^(-1/t).

        ``end_slope`` is chosen by the caller as g'(q0)/f'(p0), which makes
        the tiled extension C^1 across domain boundaries.
        """
        if end_slope <= 0:
            raise ConjugacyError("seed end slope must be positive")

        def fwd(x):
            u = (x - p0) / (p1 - p0)
            s = _smooth_step(u)
            anchor = q0 + (x - p0)
            far = q1 + end_slope * (x - p1)
            return anchor * (1.0 - s) + far * s

        seed = cls((p0, p1), (q0, q1), fwd)
        lo, hi = min(p0, p1), max(p0, p1)
        xs = np.linspace(lo, hi, 257)
        ys = [fwd(x) for x in xs]
        if any(b <= a for a, b in zip(ys, ys[1:])):
            raise ConjugacyError(
                "blended seed is not strictly increasing; the source and "
                "target fundamental domains are too dissimilar")
        return seed


def _smooth_step(t: float) -> float:
    """C-infinity step: 0 for t <= 0, 1 for t >= 1, strictly rising between."""
    if t <= 0.0:
        return 0.0
    if t >= 1.0:
        return 1.0
    a = math.exp(-1.0 / t)
    b = math.exp(-1.0 / (1.0 - t))
    return a / (a + b)


def _num_deriv(func, x: float, h: float = 1e-7) -> float:
    return (func(x + h) - func(x - h)) / (2.0 * h)


class ConjugacyMap:
    """Conjugacy between f and g on one basin piece.

    Evaluation walks x into the seed tile with f or its inverse, applies the
    seed, and mirrors the walk on the g side.  Immutable after construction.
    """

    def __init__(self, fmap: MonotoneMap, gmap: MonotoneMap,
                 source_interval, target_interval, seed: Seed,
                 direction_sign: int, cap: int = 10**6):
        self.f = fmap
        self.g = gmap
        self.source_interval = (float(source_interval[0]),
                                float(source_interval[1]))
        self.target_interval = (float(target_interval[0]),
                                float(target_interval[1]))
        self.seed = seed
        self.seed_domain = seed.domain
        self.direction_sign = direction_sign
        self.cap = int(cap)
        self._dom_lo = min(seed.domain)
        self._dom_hi = max(seed.domain)
        src_lo, src_hi = self.source_interval
        tgt_lo, tgt_hi = self.target_interval
        scale = max(1.0, abs(src_lo), abs(src_hi))
        self._lo_fixed = abs(fmap(src_lo) - src_lo) <= _FIXED_TOL * scale
        self._hi_fixed = abs(fmap(src_hi) - src_hi) <= _FIXED_TOL * scale
        # only fixed endpoints have a dynamically forced image
        self._end_images = {}
        if self._lo_fixed:
            self._end_images[src_lo] = tgt_lo
        if self._hi_fixed:
            self._end_images[src_hi] = tgt_hi

    def __call__(self, x: float) -> float:
        return self.evaluate(x)

    def evaluate(self, x: float) -> float:
        src_lo, src_hi = self.source_interval
        if x in self._end_images:
            return self._end_images[x]
        if not src_lo <= x <= src_hi:
            raise DomainError(f"{x:g} is outside the source interval "
                              f"({src_lo:g}, {src_hi:g})")
        a, b = self._dom_lo, self._dom_hi
        k = 0
        steps = 0
        while not a <= x < b:
            if (x >= b) == (self.direction_sign < 0):
                x = self.f(x)
                k += 1
            else:
                x = self.f.inverse(x, x0=x)
                k -= 1
            steps += 1
            if steps > self.cap:
                raise IterationCapError(
                    "iteration cap exceeded; the point is too close to a "
                    "fixed point for the floating-point budget")
        y = self.seed(x)
        for _ in range(k):
            y = self.g.inverse(y, x0=y)
        for _ in range(-k):
            y = self.g(y)
        return y

    def evaluate_extrapolated(self, x: float):
        """(value, flagged): like evaluate, but when the iteration cap is hit
        the value comes from a linear model anchored at the nearest fixed
        endpoint, and flagged is True."""
        try:
            return self.evaluate(x), False
        except IterationCapError:
            pass
        src_lo, src_hi = self.source_interval
        ends = []
        if self._lo_fixed:
            ends.append(src_lo)
        if self._hi_fixed:
            ends.append(src_hi)
        if not ends:
            raise IterationCapError("iteration cap exceeded away from any "
                                    "fixed endpoint")
        x_fp = min(ends, key=lambda e: abs(x - e))
        y_fp = self._end_images[x_fp]
        d = abs(x - x_fp)
        for scale_up in (1e3, 1e6, 1e9):
            ref = x_fp + math.copysign(d * scale_up, x - x_fp)
            if not src_lo < ref < src_hi:
                break
            try:
                y_ref = self.evaluate(ref)
            except IterationCapError:
                continue
            slope = (y_ref - y_fp) / (ref - x_fp)
            return y_fp + slope * (x - x_fp), True
        raise IterationCapError("iteration cap exceeded and no evaluable "
                                "reference point for extrapolation")

    def inverted(self) -> "ConjugacyMap":
        """The conjugacy from g back to f (h^-1).

        Its domain is the actual image of the source interval, which at a
        non-fixed end is set by the dynamics rather than by the declared
        target cut.
        """
        seed = Seed(self.seed.target, self.seed.domain,
                    self.seed.inv, self.seed.fwd)
        image = (self.evaluate(self.source_interval[0]),
                 self.evaluate(self.source_interval[1]))
        return ConjugacyMap(self.g, self.f, image,
                            self.source_interval, seed,
                            self.direction_sign, self.cap)


class PiecewiseConjugacy:
    """Union of per-piece conjugacies with disjoint source intervals."""

    def __init__(self, pieces):
        self.pieces = sorted(pieces, key=lambda p: p.source_interval[0])
        self.source_interval = (self.pieces[0].source_interval[0],
                                self.pieces[-1].source_interval[1])
        self.target_interval = (self.pieces[0].target_interval[0],
                                self.pieces[-1].target_interval[1])

    def __call__(self, x: float) -> float:
        return self.evaluate(x)

    def evaluate(self, x: float) -> float:
        for piece in self.pieces:
            lo, hi = piece.source_interval
            if lo <= x <= hi:
                return piece.evaluate(x)
        raise DomainError(f"{x:g} is outside every piece")

    def inverted(self) -> "PiecewiseConjugacy":
        return PiecewiseConjugacy([p.inverted() for p in self.pieces])


# builders ----------------------------------------------------------------------

def _displacement_sign(fmap, interval, samples=64):
    """Sign of f(x) - x inside the interval; None if it changes."""
    lo, hi = interval
    margin = 1e-4 * (hi - lo)
    xs = np.linspace(lo + margin, hi - margin, samples)
    signs = {math.copysign(1.0, fmap(x) - x)
             for x in xs if abs(fmap(x) - x) > 1e-14 * max(1.0, abs(x))}
    if len(signs) != 1:
        return None
    return int(signs.pop())


def build_between_fixed_points(fmap: MonotoneMap, gmap: MonotoneMap,
                               src_interval, tgt_interval,
                               seed_point: float | None = None,
                               seed_target: float | None = None,
                               cap: int = 10**6) -> ConjugacyMap:
    """Conjugacy on a piece whose closure contains at least one fixed point,
    with the paper's affine seed on one fundamental domain.

    The seed tile starts at the source midpoint (and maps to the target
    midpoint) unless seed_point/seed_target say otherwise.
    """
    s_sign = _displacement_sign(fmap, src_interval)
    t_sign = _displacement_sign(gmap, tgt_interval)
    if s_sign is None or t_sign is None:
        raise ConjugacyError("the interval contains an interior fixed point")
    if s_sign != t_sign:
        raise ConjugacyError("f and g move points in opposite directions")
    p0 = 0.5 * (src_interval[0] + src_interval[1]) \
        if seed_point is None else float(seed_point)
    q0 = 0.5 * (tgt_interval[0] + tgt_interval[1]) \
        if seed_target is None else float(seed_target)
    p1 = fmap(p0)
    q1 = gmap(q0)
    seed = Seed.affine(p0, p1, q0, q1)
    return ConjugacyMap(fmap, gmap, src_interval, tgt_interval, seed,
                        s_sign, cap)


def build_no_fixed_points(fmap: MonotoneMap, gmap: MonotoneMap,
                          src_interval, tgt_interval,
                          seed_point: float | None = None,
                          seed_target: float | None = None,
                          cap: int = 10**6) -> ConjugacyMap:
    """Conjugacy on a transit piece with no fixed points at all.

    The seed is the smooth identity-anchored blend, so the extension is C^1
    across tile boundaries even though no fixed point pins the derivative.
    """
    s_sign = _displacement_sign(fmap, src_interval)
    t_sign = _displacement_sign(gmap, tgt_interval)
    if s_sign is None or t_sign is None:
        raise ConjugacyError("a fixed point lies inside a supposed "
                             "no-fixed-point piece")
    if s_sign != t_sign:
        raise ConjugacyError("f and g move points in opposite directions")
    for mmap, (lo, hi), name in ((fmap, src_interval, "source"),
                                 (gmap, tgt_interval, "target")):
        if min(abs(mmap(lo) - lo), abs(mmap(hi) - hi)) \
                <= _FIXED_TOL * max(1.0, abs(lo), abs(hi)):
            raise ConjugacyError(f"{name} interval endpoint is a fixed point")
    p0 = 0.5 * (src_interval[0] + src_interval[1]) \
        if seed_point is None else float(seed_point)
    q0 = 0.5 * (tgt_interval[0] + tgt_interval[1]) \
        if seed_target is None else float(seed_target)
    p1 = fmap(p0)
    q1 = gmap(q0)
    end_slope = gmap.deriv(q0) / fmap.deriv(p0)
    seed = Seed.blend(p0, p1, q0, q1, end_slope)
    return ConjugacyMap(fmap, gmap, src_interval, tgt_interval, seed,
                        s_sign, cap)


# verification -------------------------------------------------------------------

def _sample_margins(h: ConjugacyMap):
    """Per-end sampling margins of two local fundamental-domain widths.

    Tile widths vary along the piece (they vanish toward a fixed end), so
    each margin starts from the width near the end, clamped to keep the
    window nonempty.  At a non-fixed end the flow can leave the piece, so
    the margin is widened further until one forward image of the window
    edge stays inside.
    """
    lo, hi = h.source_interval
    span = hi - lo
    w = abs(h.seed.domain[1] - h.seed.domain[0])
    margins = []
    for end, into, fixed in ((lo, 1.0, h._lo_fixed), (hi, -1.0, h._hi_fixed)):
        m = min(2.0 * w, 0.25 * span)
        x = end + into * m
        m = min(max(2.0 * abs(h.f(x) - x), 1e-12 * span), 0.45 * span)
        if not fixed:
            while not lo <= h.f(end + into * m) <= hi:
                if m >= 0.45 * span:
                    raise ConjugacyError(
                        "the flow crosses the whole piece in one step; "
                        "residual sampling is not meaningful here")
                m = min(1.3 * m, 0.45 * span)
        margins.append(m)
    return margins[0], margins[1]


def residual(h, n_samples: int = 1000) -> float:
    """sup |h(f(x)) - g(h(x))| over a deterministic grid kept at least two
    fundamental-domain widths away from the interval ends."""
    pieces = h.pieces if isinstance(h, PiecewiseConjugacy) else [h]
    worst = 0.0
    for piece in pieces:
        lo, hi = piece.source_interval
        m_lo, m_hi = _sample_margins(piece)
        a, b = lo + m_lo, hi - m_hi
        if a >= b:
            raise ConjugacyError("piece too narrow for the sampling margins")
        for x in np.linspace(a, b, max(2, n_samples // len(pieces))):
            x = float(x)
            err = abs(piece.evaluate(piece.f(x)) - piece.g(piece.evaluate(x)))
            worst = max(worst, err)
    return worst


def is_strictly_increasing(h, n_samples: int = 1000) -> bool:
    pieces = h.pieces if isinstance(h, PiecewiseConjugacy) else [h]
    for piece in pieces:
        lo, hi = piece.source_interval
        m_lo, m_hi = _sample_margins(piece)
        xs = np.linspace(lo + m_lo, hi - m_hi, n_samples)
        ys = [piece.evaluate(float(x)) for x in xs]
        if any(b <= a for a, b in zip(ys, ys[1:])):
            return False
    return True


@dataclass
class ProbeResult:
    """One-sided difference quotients of h at a fixed point."""
    deltas: list
    quotients: list
    truncated: bool = False

    def spread(self, last: int = 6) -> float:
        tail = self.quotients[-last:]
        if len(tail) < 2:
            return math.inf
        return max(tail) - min(tail)

    def classify(self, tol: float = 1e-3) -> str:
        """'convergent' (nonzero limit), 'vanishing', 'divergent', or
        'inconclusive'.

        A power-law tail q ~ delta^(rho - 1) shows up as a steady log drift
        per halving; its sign separates a vanishing from a diverging
        quotient long before the values themselves get extreme.
        """
        q = self.quotients
        if len(q) < 10:
            return "inconclusive"
        if self.spread() <= tol * max(1.0, abs(q[-1])) \
                and abs(q[-1]) > 10.0 * tol:
            return "convergent"
        lo, hi = abs(q[-9]), abs(q[-1])
        if hi < 1e-300:
            return "vanishing"
        if lo < 1e-300:
            return "divergent"
        # quotient noise is ~1e-5 relative, so 2e-3 per halving is a safe floor
        drift = math.log(hi / lo) / 8.0
        if drift <= -0.002:
            return "vanishing"
        if drift >= 0.002:
            return "divergent"
        return "inconclusive"


def derivative_probe(h, x_fp: float, y_fp: float,
                     delta0: float = 1e-2, j_max: int = 20,
                     side: int | None = None) -> ProbeResult:
    """Difference quotients (h(x_fp +/- d) - y_fp)/(+/- d) for d = delta0/2^j.

    The sign points into the source interval; pass ``side`` (+1 or -1)
    explicitly when the fixed point is interior, as for a lifted map.  A
    convergent sequence is the differentiability proxy; hitting the
    iteration cap truncates it.
    """
    lo, hi = h.source_interval
    scale = max(1.0, abs(lo), abs(hi))
    if side is None:
        if abs(x_fp - lo) <= 1e-12 * scale:
            side = 1
        elif abs(x_fp - hi) <= 1e-12 * scale:
            side = -1
        else:
            raise DomainError("probe point is interior; pass side=+1 or -1")
    sign = 1.0 if side > 0 else -1.0
    room = (hi - x_fp) if side > 0 else (x_fp - lo)
    delta0 = min(delta0, 0.25 * room)
    deltas, quotients = [], []
    truncated = False
    for j in range(j_max + 1):
        d = delta0 * 2.0**-j
        try:
            val = h.evaluate(x_fp + sign * d)
        except IterationCapError:
            truncated = True
            break
        deltas.append(d)
        quotients.append((val - y_fp) / (sign * d))
    return ProbeResult(deltas, quotients, truncated)


# escape-time matching for the vanished saddle-node pair --------------------------

@dataclass(frozen=True)
class EscapeData:
    n: int           # least iterate with f^n(X0) <= -X0
    phase: float     # fractional crossing position in [0, 1)

    @property
    def time(self) -> float:
        """n - phase: continuous and monotone across integer jumps."""
        return self.n - self.phase


def _escape(func, x0: float, cap: int) -> EscapeData:
    x_prev = x0
    target = -x0
    for n in range(1, cap + 1):
        x = func(x_prev)
        if x >= x_prev:
            raise ConjugacyError("orbit is not strictly decreasing; "
                                 "escape time undefined")
        if x <= target:
            phase = (target - x) / (x_prev - x)
            return EscapeData(n, phase)
        x_prev = x
    raise IterationCapError("orbit did not exit within the iteration cap "
                            "(mu too close to 0)")


def escape_data(nmap, X0: float, mu: float, cap: int = 10**6) -> EscapeData:
    """Escape count and crossing phase of the orbit of X0 through [-X0, X0].

    Requires mu < 0 with f(x, mu) < x across the interval (the regime after
    a saddle-node pair has vanished).
    """
    if mu >= 0:
        raise DomainError("escape data needs mu < 0")
    if X0 <= 0:
        raise DomainError("X0 must be positive")
    for x in np.linspace(-X0, X0, 33):
        if nmap.f(float(x), mu) >= float(x):
            raise ConjugacyError("f(x) < x fails on [-X0, X0]; "
                                 "a fixed point survives at this mu")
    return _escape(lambda x: nmap.f(x, mu), X0, cap)


def match_nu_by_escape(spec, X0: float, Y0: float, mu: float,
                       a: float | None = None,
                       time_tol: float = 1e-10) -> float:
    """The nu < 0 at which the normal form's escape through [-Y0, Y0] takes
    exactly as long (count and phase) as the map's through [-X0, X0].

    Bisection on the continuous escape time n - phase; the result realizes
    one admissible choice of nu(mu) for mu < 0, the one that interpolates
    the discrete escape equalities continuously.
    """
    from .normalform import leading_coefficients
    from .classify import Kind
    from .expr import MapSpec

    nmap = spec.normalized() if isinstance(spec, MapSpec) else spec
    if a is None:
        a = leading_coefficients(nmap.jet(), Kind.SADDLE_NODE).a0
    target = escape_data(nmap, X0, mu).time

    def g_time(nu: float) -> float:
        g = lambda y: y + nu - y * y + a * y**3
        return _escape(g, Y0, 10**6).time

    hi = -abs(mu) / 4.0
    for _ in range(60):
        if g_time(hi) >= target:
            break
        hi *= 0.5
        if hi > -1e-12:
            raise ConjugacyError("no bracketing nu: escape too slow even "
                                 "at nu near 0")
    else:
        raise ConjugacyError("no bracketing nu near 0")
    lo = hi * 2.0
    v1 = max(0.5, 4.0 * abs(mu))
    for _ in range(60):
        if g_time(lo) <= target:
            break
        lo *= 2.0
        if lo < -v1:
            raise ConjugacyError(f"no bracketing nu in (-{v1:g}, 0)")
    else:
        raise ConjugacyError("no bracketing nu below")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        t = g_time(mid)
        if abs(t - target) <= time_tol:
            return mid
        if t < target:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-16 * abs(hi):
            break
    result = 0.5 * (lo + hi)
    if abs(g_time(result) - target) > 100.0 * time_tol:
        raise NumericError("escape-time bisection stalled before reaching "
                           "the phase tolerance")
    return result


# period-doubling lift -------------------------------------------------------------

@dataclass
class PdLift:
    """Conjugacy between decreasing maps f and g, lifted from a conjugacy h
    of their second iterates on the two half-basins.

    Positive side: H = h.  Negative side: H = g o h o f^-1, which equals
    h o h1 for the intermediate square root w = h^-1 o g o h and
    h1 = w o f^-1.  ``lift_residual`` is sup |h1(f(x)) - w(h1(x))| from the
    verification samples.
    """
    h: object               # f^2-vs-g^2 conjugacy on both sides
    fmap: MonotoneMap
    gmap: MonotoneMap
    source_interval: tuple
    target_interval: tuple
    lift_residual: float
    origin_image: float = 0.0

    def __call__(self, x: float) -> float:
        return self.evaluate(x)

    def evaluate(self, x: float) -> float:
        if x == 0.0:
            return self.origin_image
        if x > 0:
            return self.h.evaluate(x)
        return self.gmap(self.h.evaluate(self.fmap.inverse(x)))


def pd_lift(h, fmap: MonotoneMap, gmap: MonotoneMap,
            n_check: int = 50) -> PdLift:
    """Lift a second-iterate conjugacy to the decreasing maps themselves.

    ``h`` must conjugate f^2 to g^2 on a positive interval and its negative
    f-image (as a PiecewiseConjugacy or equivalent evaluable).  The square
    root w = h^-1 o g o h of f^2 is built and the lift identity
    h1 o f = w o h1 checked on samples before the composite is returned.
    """
    if fmap.deriv(0.0) >= 0 or gmap.deriv(0.0) >= 0:
        raise ConjugacyError("the lift needs decreasing maps")
    pieces = h.pieces if isinstance(h, PiecewiseConjugacy) else [h]
    pos = [p for p in pieces if p.source_interval[0] >= 0.0]
    neg = [p for p in pieces if p.source_interval[1] <= 0.0]
    if not pos or not neg:
        raise ConjugacyError("the lift needs second-iterate pieces on both "
                             "sides of the fixed point")
    h_inv = h.inverted()

    def w(x: float) -> float:
        return h_inv.evaluate(gmap(h.evaluate(x)))

    def h1(x: float) -> float:
        if x >= 0:
            return x
        return w(fmap.inverse(x))

    worst = 0.0
    for piece in neg:
        lo, hi = piece.source_interval
        m_lo, m_hi = _sample_margins(piece)
        xs = np.linspace(lo + m_lo, hi - m_hi, max(2, n_check // len(neg)))
        for x in xs:
            x = float(x)
            try:
                err = abs(h1(fmap(x)) - w(h1(x)))
            except DomainError as exc:
                raise ConjugacyError(
                    "lift verification left the conjugacy domain; "
                    "h is not invertible on the required range") from exc
            worst = max(worst, err)
    src = (neg[0].source_interval[0], pos[-1].source_interval[1])
    tgt = (gmap(pos[-1].target_interval[1]), pos[-1].target_interval[1])
    return PdLift(h, fmap, gmap, src, tgt, worst)
