"""Conjugacy construction, verification, escape matching, and the lift."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bifurcate import skeleton as sk
from bifurcate.classify import Kind
from bifurcate.conjugacy import (EscapeData, MonotoneMap, PiecewiseConjugacy,
                                 Seed, build_between_fixed_points,
                                 build_no_fixed_points, derivative_probe,
                                 escape_data, is_strictly_increasing,
                                 match_nu_by_escape, pd_lift, residual)
from bifurcate.errors import (ConjugacyError, DomainError, IterationCapError)
from bifurcate.expr import MapSpec
from bifurcate.normalform import match_multipliers, sn_form_points


def halving():
    return MonotoneMap(lambda x: 0.5 * x, lambda x: 0.5, 0.0, 8.0)


def quartering():
    return MonotoneMap(lambda y: 0.25 * y, lambda y: 0.25, 0.0, 40.0)


class TestMonotoneMap:
    def test_inverse_exact(self):
        f = halving()
        assert f.inverse(1.0) == pytest.approx(2.0, abs=1e-12)
        assert f.inverse(0.3, x0=0.5) == pytest.approx(0.6, abs=1e-12)

    def test_inverse_out_of_range(self):
        f = halving()
        with pytest.raises(ConjugacyError):
            f.inverse(100.0)

    def test_warm_start_matches_bisection(self):
        f = MonotoneMap(lambda x: x + 0.01 - x * x, lambda x: 1 - 2 * x,
                        -0.4, 0.4)
        cold = f.inverse(0.05)
        warm = f.inverse(0.05, x0=0.04)
        assert warm == pytest.approx(cold, abs=1e-12)


class TestSeeds:
    def test_affine_endpoints_and_inverse(self):
        s = Seed.affine(1.0, 0.5, 1.0, 0.25)
        assert s(1.0) == pytest.approx(1.0)
        assert s(0.5) == pytest.approx(0.25)
        assert s.inv(s(0.7)) == pytest.approx(0.7, abs=1e-12)

    def test_affine_rejects_decreasing(self):
        with pytest.raises(ConjugacyError):
            Seed.affine(0.0, 1.0, 1.0, 0.0)

    def test_blend_is_identity_for_identical_data(self):
        s = Seed.blend(0.0, 1.0, 0.0, 1.0, 1.0)
        for x in np.linspace(0.0, 1.0, 17):
            assert s(float(x)) == pytest.approx(float(x), abs=1e-14)

    def test_blend_rejects_shrinking_target(self):
        # target tile 100x narrower than the source: no monotone blend with
        # unit anchor slope
        with pytest.raises(ConjugacyError):
            Seed.blend(0.0, 1.0, 0.0, 0.01, 1.0)

    def test_blend_numeric_inverse(self):
        s = Seed.blend(0.0, 1.0, 0.0, 2.0, 1.0)
        assert s.inv(s(0.3)) == pytest.approx(0.3, abs=1e-10)


class TestBetweenFixedPoints:
    def test_halving_to_quartering_on_seed_orbit(self):
        h = build_between_fixed_points(halving(), quartering(),
                                       (0.0, 4.0), (0.0, 4.0),
                                       seed_point=1.0, seed_target=1.0)
        assert h(1.0) == pytest.approx(1.0, abs=1e-14)
        assert h(0.5) == pytest.approx(0.25, abs=1e-14)
        assert h(4.0) == pytest.approx(16.0, abs=1e-12)
        for k in range(1, 12):
            assert h(2.0 ** -k) == pytest.approx(4.0 ** -k, rel=1e-13)

    def test_conjugacy_relation_off_orbit(self):
        h = build_between_fixed_points(halving(), quartering(),
                                       (0.0, 4.0), (0.0, 4.0),
                                       seed_point=1.0, seed_target=1.0)
        for x in (0.037, 0.81, 1.9, 3.3):
            assert h(0.5 * x) == pytest.approx(0.25 * h(x), rel=1e-12)

    def test_identical_maps_give_identity(self):
        h = build_between_fixed_points(halving(), halving(),
                                       (0.0, 4.0), (0.0, 4.0))
        for x in np.linspace(0.01, 3.9, 29):
            assert h(float(x)) == pytest.approx(float(x), abs=1e-13)
        assert residual(h, 200) <= 1e-13

    def test_fixed_endpoint_maps_to_fixed_endpoint(self):
        h = build_between_fixed_points(halving(), quartering(),
                                       (0.0, 4.0), (0.0, 4.0))
        assert h(0.0) == 0.0

    def test_rejects_interior_fixed_point(self):
        f = MonotoneMap(lambda x: x + 0.01 - x * x, lambda x: 1 - 2 * x,
                        -0.4, 0.4)
        with pytest.raises(ConjugacyError):
            build_between_fixed_points(f, f, (-0.3, 0.3), (-0.3, 0.3))

    def test_rejects_opposite_directions(self):
        up = MonotoneMap(lambda x: x + 1.0, lambda x: 1.0, -50.0, 50.0)
        down = MonotoneMap(lambda x: x - 1.0, lambda x: 1.0, -50.0, 50.0)
        with pytest.raises(ConjugacyError):
            build_between_fixed_points(up, down, (-20.0, 20.0),
                                       (-20.0, 20.0))


class TestNoFixedPoints:
    def test_translations_conjugate(self):
        ft = MonotoneMap(lambda x: x + 1.0, lambda x: 1.0, -50.0, 50.0)
        gt = MonotoneMap(lambda y: y + 2.0, lambda y: 1.0, -100.0, 100.0)
        h = build_no_fixed_points(ft, gt, (-20.0, 20.0), (-40.0, 40.0))
        for x in np.linspace(-15.0, 14.0, 23):
            assert h(float(x) + 1.0) - h(float(x)) == pytest.approx(
                2.0, abs=1e-12)
        assert residual(h, 300) <= 1e-12
        assert is_strictly_increasing(h, 300)

    def test_identity_when_maps_agree(self):
        ft = MonotoneMap(lambda x: x + 1.0, lambda x: 1.0, -50.0, 50.0)
        h = build_no_fixed_points(ft, ft, (-20.0, 20.0), (-20.0, 20.0))
        for x in (-13.7, -2.2, 0.0, 3.7, 11.1):
            assert h(x) == pytest.approx(x, abs=1e-13)

    def test_rejects_fixed_endpoint(self):
        f = halving()
        with pytest.raises(ConjugacyError):
            build_no_fixed_points(f, f, (0.0, 4.0), (0.0, 4.0))


class TestEvaluateEdges:
    def test_outside_interval_raises(self):
        h = build_between_fixed_points(halving(), quartering(),
                                       (0.0, 4.0), (0.0, 4.0))
        with pytest.raises(DomainError):
            h(5.0)
        with pytest.raises(DomainError):
            h(-0.1)

    def test_iteration_cap(self):
        h = build_between_fixed_points(halving(), quartering(),
                                       (0.0, 4.0), (0.0, 4.0), cap=5)
        with pytest.raises(IterationCapError):
            h(2.0 ** -30)

    def test_extrapolation_flags_capped_point(self):
        h = build_between_fixed_points(halving(), quartering(),
                                       (0.0, 4.0), (0.0, 4.0), cap=25)
        val, flagged = h.evaluate_extrapolated(2.0 ** -40)
        assert flagged
        assert 0.0 < val < 1e-6
        val2, flagged2 = h.evaluate_extrapolated(1.0)
        assert not flagged2
        assert val2 == pytest.approx(h(1.0))

    def test_inverted_roundtrip(self):
        h = build_between_fixed_points(halving(), quartering(),
                                       (0.0, 4.0), (0.0, 4.0))
        hinv = h.inverted()
        for x in (0.03, 0.4, 1.7, 3.1):
            assert hinv(h(x)) == pytest.approx(x, rel=1e-10)


class TestPiecewise:
    def test_dispatch_and_domain(self):
        f = halving()
        g = quartering()
        p1 = build_between_fixed_points(f, g, (0.0, 4.0), (0.0, 4.0))
        shift_f = MonotoneMap(lambda x: 0.5 * (x + 5.0) - 5.0,
                              lambda x: 0.5, -5.0, 0.0)
        shift_g = MonotoneMap(lambda y: 0.25 * (y + 5.0) - 5.0,
                              lambda y: 0.25, -5.0, 0.0)
        p2 = build_between_fixed_points(shift_f, shift_g,
                                        (-5.0, -1.0), (-5.0, -1.0))
        h = PiecewiseConjugacy([p1, p2])
        assert h.source_interval == (-5.0, 4.0)
        assert h(2.0) == p1(2.0)
        assert h(-3.0) == p2(-3.0)
        with pytest.raises(DomainError):
            h(-0.5)


class TestDerivativeProbe:
    def test_vanishing_for_square_conjugacy(self):
        # h behaves like x^2 at 0 when g contracts twice as hard as f
        h = build_between_fixed_points(halving(), quartering(),
                                       (0.0, 4.0), (0.0, 4.0),
                                       seed_point=1.0, seed_target=1.0)
        probe = derivative_probe(h, 0.0, 0.0)
        assert probe.classify() == "vanishing"
        assert not probe.truncated

    def test_convergent_for_identity(self):
        h = build_between_fixed_points(halving(), halving(),
                                       (0.0, 4.0), (0.0, 4.0))
        probe = derivative_probe(h, 0.0, 0.0)
        assert probe.classify() == "convergent"
        assert probe.quotients[-1] == pytest.approx(1.0, abs=1e-10)

    def test_interior_point_needs_side(self):
        h = build_between_fixed_points(halving(), halving(),
                                       (0.0, 4.0), (0.0, 4.0))
        with pytest.raises(DomainError):
            derivative_probe(h, 1.0, 1.0)

    @settings(max_examples=25, deadline=None)
    @given(lam=st.floats(0.35, 0.9), ratio=st.floats(0.4, 2.5))
    def test_power_law_dichotomy(self, lam, ratio):
        # exponent of h at 0 is log(lam_g)/log(lam_f); quotients vanish when
        # it exceeds 1 and diverge when it is below 1
        lam_g = lam ** ratio
        f = MonotoneMap(lambda x: lam * x, lambda x: lam, 0.0, 8.0)
        g = MonotoneMap(lambda y: lam_g * y, lambda y: lam_g, 0.0, 8.0)
        h = build_between_fixed_points(f, g, (0.0, 4.0), (0.0, 4.0))
        probe = derivative_probe(h, 0.0, 0.0)
        verdict = probe.classify()
        if ratio > 1.05:
            assert verdict == "vanishing"
        elif ratio < 0.95:
            assert verdict == "divergent"
        elif abs(ratio - 1.0) < 0.001:
            assert verdict in ("convergent", "inconclusive")


@pytest.fixture(scope="module")
def sn_setup():
    spec = MapSpec("x * exp(-x) + mu", trust_x=0.5, trust_mu=0.05)
    nm = spec.normalized()
    mu = 0.01
    branches = sk.sn_branches(nm.jet())
    fit = match_multipliers(spec, Kind.SADDLE_NODE, branches, mu)
    x1 = sk.newton_branch(nm, branches[0], [mu]).samples[0].x
    x2 = sk.newton_branch(nm, branches[1], [mu]).samples[0].x
    y1, y2 = sn_form_points(fit.nu, fit.a)
    f_mu, fx_mu = nm.frozen(mu)
    fmap = MonotoneMap(f_mu, fx_mu, -0.75, 0.95)
    nu, a = fit.nu, fit.a
    gmap = MonotoneMap(lambda y: y + nu - y * y + a * y ** 3,
                       lambda y: 1.0 - 2.0 * y + 3.0 * a * y * y, -2.0, 2.0)
    X0 = Y0 = spec.trust_x
    pieces = [
        build_between_fixed_points(fmap, gmap, (-X0, x1), (-Y0, y1)),
        build_between_fixed_points(fmap, gmap, (x1, x2), (y1, y2)),
        build_between_fixed_points(fmap, gmap, (x2, X0), (y2, Y0)),
    ]
    return {"fit": fit, "x": (x1, x2), "y": (y1, y2),
            "fmap": fmap, "pieces": pieces, "X0": X0}


class TestFittedSaddleNode:
    def test_residuals_small(self, sn_setup):
        for piece in sn_setup["pieces"]:
            assert residual(piece, 400) <= 1e-7

    def test_strictly_increasing(self, sn_setup):
        for piece in sn_setup["pieces"]:
            assert is_strictly_increasing(piece, 300)

    def test_probes_converge_at_both_fixed_points(self, sn_setup):
        x1, x2 = sn_setup["x"]
        y1, y2 = sn_setup["y"]
        p_low, p_mid, p_high = sn_setup["pieces"]
        for h, fp, yfp, side in [(p_low, x1, y1, -1), (p_mid, x1, y1, +1),
                                 (p_mid, x2, y2, -1), (p_high, x2, y2, +1)]:
            probe = derivative_probe(h, fp, yfp, side=side)
            assert probe.classify() == "convergent"
            assert probe.spread() <= 1e-3
            assert abs(probe.quotients[-1]) > 0.1

    def test_mismatched_multiplier_breaks_probe(self, sn_setup):
        fit = sn_setup["fit"]
        x1, x2 = sn_setup["x"]
        fmap = sn_setup["fmap"]
        X0 = sn_setup["X0"]
        for factor, verdict in ((2.0, "vanishing"), (0.5, "divergent")):
            nu_bad = factor * fit.nu
            a = fit.a
            g_bad = MonotoneMap(
                lambda y: y + nu_bad - y * y + a * y ** 3,
                lambda y: 1.0 - 2.0 * y + 3.0 * a * y * y, -2.0, 2.0)
            yb1, yb2 = sn_form_points(nu_bad, a)
            h = build_between_fixed_points(fmap, g_bad, (x2, X0),
                                           (yb2, X0))
            probe = derivative_probe(h, x2, yb2, side=+1)
            assert probe.classify() == verdict


class TestEscape:
    def test_hand_checked_orbit(self):
        nm = MapSpec("x + mu - x^2").normalized()
        ed = escape_data(nm, 0.5, -0.25)
        assert ed.n == 3
        assert ed.phase == pytest.approx(0.2, abs=1e-12)
        assert ed.time == pytest.approx(2.8, abs=1e-12)

    def test_requires_negative_mu(self):
        nm = MapSpec("x + mu - x^2").normalized()
        with pytest.raises(DomainError):
            escape_data(nm, 0.5, 0.01)

    def test_rejects_surviving_fixed_point(self):
        nm = MapSpec("x + mu + x^2").normalized()
        with pytest.raises(ConjugacyError):
            escape_data(nm, 0.5, -0.01)

    def test_count_monotone_and_phase_in_range(self):
        nm = MapSpec("x + mu - x^2").normalized()
        mus = [-0.25, -0.16, -0.09, -0.04, -0.02]
        counts = []
        times = []
        for mu in mus:
            ed = escape_data(nm, 0.5, mu)
            assert 0.0 <= ed.phase < 1.0
            counts.append(ed.n)
            times.append(ed.time)
        assert counts == sorted(counts)
        assert times == sorted(times)


class TestMatchNu:
    def test_normal_form_matches_itself(self):
        spec = MapSpec("x + mu - x^2 + 0.5*x^3")
        nu = match_nu_by_escape(spec, 0.4, 0.4, -0.01)
        assert nu == pytest.approx(-0.01, abs=1e-8)

    def test_exp_map_nu_is_close_to_mu(self):
        spec = MapSpec("x * exp(-x) + mu", trust_x=0.5, trust_mu=0.05)
        nu = match_nu_by_escape(spec, 0.4, 0.4, -0.01)
        assert -0.02 < nu < 0.0

    def test_matched_nu_monotone_in_mu(self):
        spec = MapSpec("x * exp(-x) + mu", trust_x=0.5, trust_mu=0.05)
        mus = [-0.02, -0.016, -0.012, -0.008, -0.005]
        nus = [match_nu_by_escape(spec, 0.4, 0.4, mu) for mu in mus]
        assert nus == sorted(nus)
        assert all(nu < 0 for nu in nus)

    def test_non_escaping_form_is_an_error(self):
        # a huge positive cubic coefficient turns the form increasing before
        # the exit, so escape time is undefined
        spec = MapSpec("x + mu - x^2 + 50*x^3")
        with pytest.raises(ConjugacyError):
            match_nu_by_escape(spec, 0.5, 0.5, -0.04)


@pytest.fixture(scope="module")
def pd_setup():
    spec = MapSpec("(-1 - mu)*x - (3 + mu)*x^2", trust_x=0.08, trust_mu=0.01)
    nm = spec.normalized()
    mu = 0.01
    branch = sk.pd_branch(nm.jet())
    fit = match_multipliers(spec, Kind.PERIOD_DOUBLING, branch, mu)
    nu, a = fit.nu, fit.a
    ref = sk.newton_branch(nm, branch, [mu]).samples[0]
    z1, zm1 = ref.x, ref.partner
    ystar = math.sqrt((-1.0 + math.sqrt(1.0 + 4.0 * a * nu)) / (2.0 * a))
    f_mu, fx_mu = nm.frozen(mu)
    f2_mu, f2x_mu = nm.frozen2(mu)
    fmap = MonotoneMap(f_mu, fx_mu, -0.155, 0.155)
    f2map = MonotoneMap(f2_mu, f2x_mu, -0.12, 0.12)
    g = lambda y: -y - nu * y + y ** 3 + a * y ** 5
    gp = lambda y: -1.0 - nu + 3.0 * y * y + 5.0 * a * y ** 4
    gmap = MonotoneMap(g, gp, -0.4, 0.4)
    g2map = MonotoneMap(lambda y: g(g(y)), lambda y: gp(y) * gp(g(y)),
                        -0.35, 0.35)
    X0 = spec.trust_x
    Y0 = ystar * (X0 / z1)
    Xm = -f_mu(X0)
    Ym = -g(Y0)
    pieces = [
        build_between_fixed_points(f2map, g2map, (0.0, z1), (0.0, ystar)),
        build_between_fixed_points(f2map, g2map, (z1, X0), (ystar, Y0)),
        build_between_fixed_points(f2map, g2map, (zm1, 0.0), (-ystar, 0.0)),
        build_between_fixed_points(f2map, g2map, (-Xm, zm1), (-Ym, -ystar)),
    ]
    h2 = PiecewiseConjugacy(pieces)
    lift = pd_lift(h2, fmap, gmap, n_check=30)
    return {"spec": spec, "mu": mu, "g": g, "fmap": fmap,
            "pieces": pieces, "h2": h2, "lift": lift,
            "z": (z1, zm1, ystar), "cuts": (X0, Xm, Y0, Ym)}


class TestPeriodDoublingLift:
    def test_second_iterate_residuals(self, pd_setup):
        for piece in pd_setup["pieces"]:
            assert residual(piece, 200) <= 1e-7

    def test_lift_verification_residual(self, pd_setup):
        assert pd_setup["lift"].lift_residual <= 1e-9

    def test_lift_conjugates_f_to_g(self, pd_setup):
        lift = pd_setup["lift"]
        fmap = pd_setup["fmap"]
        g = pd_setup["g"]
        X0, Xm, _, _ = pd_setup["cuts"]
        worst = 0.0
        for x in np.linspace(-Xm * 0.9, X0 * 0.9, 151):
            x = float(x)
            if abs(x) < 5e-4:
                continue
            fx = fmap(x)
            if not -Xm * 0.9 <= fx <= X0 * 0.9:
                continue
            worst = max(worst, abs(lift.evaluate(fx) - g(lift.evaluate(x))))
        assert worst <= 1e-7

    def test_lift_probe_agrees_from_both_sides(self, pd_setup):
        lift = pd_setup["lift"]
        plus = derivative_probe(lift, 0.0, 0.0, side=+1)
        minus = derivative_probe(lift, 0.0, 0.0, side=-1)
        assert plus.classify() == "convergent"
        assert minus.classify() == "convergent"
        assert plus.spread() <= 1e-3
        assert minus.spread() <= 1e-3
        assert plus.quotients[-1] == pytest.approx(minus.quotients[-1],
                                                   rel=1e-4)

    def test_period_two_point_probe(self, pd_setup):
        z1, _, ystar = pd_setup["z"]
        probe = derivative_probe(pd_setup["pieces"][0], z1, ystar, side=-1)
        assert probe.classify() == "convergent"
        assert probe.spread() <= 1e-3

    def test_lift_needs_decreasing_maps(self, pd_setup):
        up = halving()
        with pytest.raises(ConjugacyError):
            pd_lift(pd_setup["h2"], up, up)

    def test_lift_needs_both_sides(self, pd_setup):
        fmap = pd_setup["fmap"]
        gmap = MonotoneMap(lambda y: -y, lambda y: -1.0, -1.0, 1.0)
        positive_only = PiecewiseConjugacy([pd_setup["pieces"][0],
                                            pd_setup["pieces"][1]])
        with pytest.raises(ConjugacyError):
            pd_lift(positive_only, fmap, gmap)


class TestLinearLift:
    def test_matched_linear_lift_is_identity(self):
        f = MonotoneMap(lambda x: -0.5 * x, lambda x: -0.5, -2.0, 2.0)
        f2 = MonotoneMap(lambda x: 0.25 * x, lambda x: 0.25, -2.0, 2.0)
        pos = build_between_fixed_points(f2, f2, (0.0, 1.0), (0.0, 1.0))
        neg = build_between_fixed_points(f2, f2, (-0.5, 0.0), (-0.5, 0.0))
        lift = pd_lift(PiecewiseConjugacy([pos, neg]), f, f)
        assert lift.lift_residual <= 1e-12
        for x in (-0.4, -0.1, 0.2, 0.9):
            assert lift.evaluate(x) == pytest.approx(x, abs=1e-11)

    def test_mismatched_linear_lift_probe_vanishes(self):
        f = MonotoneMap(lambda x: -0.5 * x, lambda x: -0.5, -20.0, 20.0)
        g = MonotoneMap(lambda y: -0.25 * y, lambda y: -0.25, -20.0, 20.0)
        f2 = MonotoneMap(lambda x: 0.25 * x, lambda x: 0.25, -20.0, 20.0)
        g2 = MonotoneMap(lambda y: 0.0625 * y, lambda y: 0.0625, -20.0, 20.0)
        pos = build_between_fixed_points(f2, g2, (0.0, 1.0), (0.0, 1.0))
        neg = build_between_fixed_points(f2, g2, (-0.5, 0.0), (-0.5, 0.0))
        lift = pd_lift(PiecewiseConjugacy([pos, neg]), f, g)
        probe = derivative_probe(lift, 0.0, 0.0, side=+1)
        assert probe.classify() == "vanishing"
