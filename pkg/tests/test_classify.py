import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bifurcate.classify import (
    Kind, check_origin_fixed, classify, normalize_signs,
)
from bifurcate.errors import ClassificationMismatch
from bifurcate.expr import MapSpec


def test_check_origin_fixed():
    assert check_origin_fixed(MapSpec("x + mu*x - x^2").jet())
    assert not check_origin_fixed(MapSpec("x + mu - x^2").jet())
    assert check_origin_fixed(MapSpec("x + 1e-15*mu").jet(), tol=1e-12)


def test_normalize_signs_examples():
    j = MapSpec("x - mu - x^2").jet()
    nj, fx, fm = normalize_signs(j, Kind.SADDLE_NODE)
    assert (fx, fm) == (False, True)
    assert nj.deriv(0, 1) == pytest.approx(1.0)
    assert nj.deriv(2, 0) == pytest.approx(-2.0)

    j = MapSpec("x + mu + x^2").jet()
    nj, fx, fm = normalize_signs(j, Kind.SADDLE_NODE)
    assert (fx, fm) == (True, True)  # x-flip sends f_mu to -1, so mu flips too
    assert nj.deriv(0, 1) == pytest.approx(1.0)
    assert nj.deriv(2, 0) == pytest.approx(-2.0)

    j = MapSpec("x + mu - x^2").jet()
    nj, fx, fm = normalize_signs(j, Kind.SADDLE_NODE)
    assert (fx, fm) == (False, False)
    assert np.allclose(nj.c, j.c)


def test_normalize_signs_degenerate_raises():
    j = MapSpec("x + mu").jet()
    with pytest.raises(ClassificationMismatch):
        normalize_signs(j, Kind.SADDLE_NODE)


def test_classify_saddle_node():
    res = classify(MapSpec("x + mu - x^2 + 0.5*x^3"))
    assert res.kind is Kind.SADDLE_NODE
    assert not res.flip_x and not res.flip_mu
    assert not res.origin_fixed_for_all_mu
    assert res.margins["f_mu"] == pytest.approx(1.0)
    assert res.margins["f_xx"] == pytest.approx(-2.0)


def test_classify_transcritical():
    res = classify(MapSpec("(1 + mu)*x*(1 - x)"))
    assert res.kind is Kind.TRANSCRITICAL
    assert res.origin_fixed_for_all_mu
    assert res.margins["f_xx"] == pytest.approx(-2.0)
    assert res.margins["f_xmu"] == pytest.approx(1.0)
    assert not res.flip_x and not res.flip_mu


def test_classify_pitchfork():
    res = classify(MapSpec("x + mu*x - x^3 + x^4"))
    assert res.kind is Kind.PITCHFORK
    assert res.margins["f_xxx"] == pytest.approx(-6.0)
    assert res.margins["f_xmu"] == pytest.approx(1.0)


def test_classify_period_doubling():
    res = classify(MapSpec("-x - mu*x + x^3 + 0.3*x^5"))
    assert res.kind is Kind.PERIOD_DOUBLING
    assert res.margins["pd_quadratic"] == pytest.approx(12.0)
    assert res.margins["f_xmu"] == pytest.approx(-1.0)
    assert not res.flip_x and not res.flip_mu


def test_classify_shifted_logistic_pd():
    res = classify(MapSpec("(-1 - mu)*x - (3 + mu)*x^2"))
    assert res.kind is Kind.PERIOD_DOUBLING
    assert res.margins["pd_quadratic"] == pytest.approx(3 * 36.0)
    assert res.margins["f_xmu"] == pytest.approx(-1.0)


def test_classify_none_cases():
    assert classify(MapSpec("x + 1 + mu")).kind is Kind.NONE
    assert classify(MapSpec("0.5*x + mu")).kind is Kind.NONE


def test_classify_degenerate_cases():
    # saddle-node candidate with f_xx = 0
    res = classify(MapSpec("x + mu - x^3"))
    assert res.kind is Kind.DEGENERATE
    # subcritical pitchfork
    res = classify(MapSpec("x + mu*x + x^3"))
    assert res.kind is Kind.DEGENERATE
    assert "subcritical" in res.note
    # subcritical period doubling
    res = classify(MapSpec("-x - mu*x - x^3"))
    assert res.kind is Kind.DEGENERATE
    assert "subcritical" in res.note
    # period doubling whose origin drifts with mu
    res = classify(MapSpec("-x - mu*x + x^3 + mu^2"))
    assert res.kind is Kind.DEGENERATE
    assert "origin" in res.note


def test_margins_match_jet_derivatives_exactly():
    spec = MapSpec("x + mu - x^2 + 0.5*x^3")
    res = classify(spec)
    j = spec.jet()
    assert abs(res.margins["f_mu"] - j.deriv(0, 1)) <= 1e-13
    assert abs(res.margins["f_xx"] - j.deriv(2, 0)) <= 1e-13
    assert abs(res.margins["f_origin"] - j.deriv(0, 0)) <= 1e-13


def x_flip_expression(kind, a):
    """Hand-flipped partner expressions: y = -x conjugation applied."""
    if kind == "sn":
        return (f"x + mu - x^2 + {a}*x^3", f"x - mu + x^2 + {a}*x^3")
    return (f"x + mu*x - x^2 + {a}*x^3", f"x + mu*x + x^2 + {a}*x^3")


@pytest.mark.parametrize("kind", ["sn", "tc"])
def test_flip_involution(kind):
    orig_src, flip_src = x_flip_expression(kind, 0.4)
    orig = classify(MapSpec(orig_src))
    flipped = classify(MapSpec(flip_src))
    assert flipped.kind is orig.kind
    assert flipped.flip_x != orig.flip_x


@pytest.mark.parametrize("kind", ["pf", "pd"])
def test_x_flip_invariant_kinds(kind):
    # for odd-leading families the x-flip changes nothing testable
    src = "x + mu*x - x^3 + x^4" if kind == "pf" else "-x - mu*x + x^3 + 0.2*x^4"
    flipped_src = ("x + mu*x - x^3 - x^4" if kind == "pf"
                   else "-x - mu*x + x^3 - 0.2*x^4")
    a, b = classify(MapSpec(src)), classify(MapSpec(flipped_src))
    assert a.kind is b.kind
    assert a.flip_x == b.flip_x == False


@settings(max_examples=60, deadline=None)
@given(st.floats(-1, 1), st.floats(-1, 1))
def test_normal_forms_classify_as_themselves(a, b):
    sn = classify(MapSpec(f"x + mu - x^2 + ({a})*x^3"))
    assert sn.kind is Kind.SADDLE_NODE and not sn.flip_x and not sn.flip_mu
    tc = classify(MapSpec(f"x + mu*x - x^2 + ({a})*x^3"))
    assert tc.kind is Kind.TRANSCRITICAL and not tc.flip_x and not tc.flip_mu
    pf = classify(MapSpec(f"x + mu*x - x^3 + ({a})*x^5 + ({b})*mu*x^2"))
    assert pf.kind is Kind.PITCHFORK and not pf.flip_x and not pf.flip_mu
    pd = classify(MapSpec(f"-x - mu*x + x^3 + ({a})*x^5"))
    assert pd.kind is Kind.PERIOD_DOUBLING and not pd.flip_x and not pd.flip_mu
