import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bifurcate.errors import ConfigError, DomainError, ParseError
from bifurcate.expr import (
    BinOp, Call, MapSpec, Neg, Num, Param, Pow, Var,
    compile_expr, differentiate, eval_expr, load_config, parameter_names,
    parse, pretty,
)
from bifurcate.jet import Jet1, Jet2


def test_parse_basic_shapes():
    node = parse("x + mu - x^2")
    assert isinstance(node, BinOp) and node.op == "-"
    assert parse("x") == Var("x")
    assert parse("mu") == Var("mu")
    assert parse("a") == Param("a")
    assert parse("sin(x)") == Call("sin", Var("x"))


def test_precedence_and_associativity():
    assert parse("1 - 2 - 3") == BinOp("-", BinOp("-", Num(1.0), Num(2.0)), Num(3.0))
    assert parse("2*x^3") == BinOp("*", Num(2.0), Pow(Var("x"), 3))
    assert parse("-x^2") == Neg(Pow(Var("x"), 2))
    assert parse("1/2/2") == BinOp("/", BinOp("/", Num(1.0), Num(2.0)), Num(2.0))
    assert parse("x - -mu") == BinOp("-", Var("x"), Neg(Var("mu")))


def test_eval_example_value():
    node = parse("x + mu - x^2 + 0.5*x^3")
    assert eval_expr(node, 0.1, 0.0) == pytest.approx(0.0905)


def test_numbers_scientific_notation():
    assert eval_expr(parse("1e-3 + 2.5E2 + .5"), 0, 0) == pytest.approx(250.501)


def test_unbalanced_paren_offset():
    with pytest.raises(ParseError) as err:
        parse("x + (mu")
    assert err.value.offset == 8


def test_error_offsets_point_at_problem():
    with pytest.raises(ParseError) as err:
        parse("x + ")
    assert err.value.offset == 5
    with pytest.raises(ParseError) as err:
        parse("x ? mu")
    assert err.value.offset == 3
    with pytest.raises(ParseError) as err:
        parse("x^2.5")
    assert err.value.offset == 3
    with pytest.raises(ParseError) as err:
        parse("x^mu")
    assert err.value.offset == 3


def test_abs_rejected_other_idents_are_params():
    with pytest.raises(ParseError) as err:
        parse("abs(x)")
    assert "abs" in str(err.value)
    with pytest.raises(ParseError):
        parse("foo(x)")
    assert parameter_names(parse("a*x + b*mu + x")) == {"a", "b"}


def test_unbound_parameter_reported_by_name():
    with pytest.raises(ConfigError) as err:
        MapSpec("x + c*x^2")
    assert "unbound parameter 'c'" in str(err.value)


def test_eval_with_params_and_domain_errors():
    node = parse("log(x)")
    with pytest.raises(DomainError):
        eval_expr(node, -1.0, 0.0)
    with pytest.raises(DomainError):
        eval_expr(parse("1/x"), 0.0, 0.0)
    assert eval_expr(parse("a*x"), 2.0, 0.0, {"a": 3.0}) == 6.0


def test_eval_over_jets_matches_float_eval():
    node = parse("x*exp(-x) + mu + 0.1*sin(x*mu)")
    j = eval_expr(node, Jet2.variable_x(7), Jet2.variable_mu(7))
    for xv, mv in [(0.03, 0.01), (-0.04, 0.02), (0.0, 0.0)]:
        assert j.eval(xv, mv) == pytest.approx(eval_expr(node, xv, mv), abs=1e-9)


def test_jet1_dual_number_derivative():
    node = parse("x*exp(-x) + mu*x")
    d = eval_expr(node, Jet1.variable(1, base=0.2), Jet1.constant(0.3, 1))
    # d/dx [x e^-x + mu x] = (1 - x) e^-x + mu
    assert d.c[1] == pytest.approx((1 - 0.2) * math.exp(-0.2) + 0.3, abs=1e-12)


def test_differentiate_matches_finite_difference():
    rng = random.Random(5)
    exprs = [
        "x*exp(-x) + mu", "(1 + mu)*x*(1 - x)", "x + mu*x - x^3 + x^4",
        "sin(x) + cos(mu*x)", "tanh(x)/(1 + x^2)", "sqrt(1 + x^2) + log(1 + mu + x)",
    ]
    for src in exprs:
        node = parse(src)
        dx = compile_expr(differentiate(node, "x"))
        dmu = compile_expr(differentiate(node, "mu"))
        f = compile_expr(node)
        for _ in range(5):
            xv, mv = rng.uniform(-0.2, 0.2), rng.uniform(-0.02, 0.02)
            h = 1e-5
            fd_x = (f(xv + h, mv) - f(xv - h, mv)) / (2 * h)
            fd_m = (f(xv, mv + h) - f(xv, mv - h)) / (2 * h)
            assert dx(xv, mv) == pytest.approx(fd_x, rel=1e-6, abs=1e-8)
            assert dmu(xv, mv) == pytest.approx(fd_m, rel=1e-6, abs=1e-8)


def test_compiled_matches_tree_walk():
    spec = MapSpec("x*exp(-x) + mu")
    for xv, mv in [(0.1, 0.01), (-0.3, -0.02), (1.5, 0.0)]:
        assert spec.f(xv, mv) == pytest.approx(spec.eval_tree(xv, mv), rel=1e-14)


def _random_ast(rng, depth):
    roll = rng.random()
    if depth <= 0 or roll < 0.25:
        choice = rng.random()
        if choice < 0.4:
            return Num(round(rng.uniform(0, 4), 3))
        if choice < 0.7:
            return Var("x")
        if choice < 0.9:
            return Var("mu")
        return Param(rng.choice("abc"))
    if roll < 0.65:
        op = rng.choice("+-*/")
        return BinOp(op, _random_ast(rng, depth - 1), _random_ast(rng, depth - 1))
    if roll < 0.75:
        return Neg(_random_ast(rng, depth - 1))
    if roll < 0.85:
        return Pow(_random_ast(rng, depth - 1), rng.randint(0, 4))
    fn = rng.choice(["exp", "sin", "cos", "tanh", "sinh", "cosh"])
    return Call(fn, _random_ast(rng, depth - 1))


@settings(max_examples=500, deadline=None)
@given(st.integers(0, 10**9))
def test_pretty_parse_round_trip(seed):
    rng = random.Random(seed)
    ast = _random_ast(rng, 4)
    printed = pretty(ast)
    reparsed = parse(printed)
    assert reparsed == ast
    assert parse(pretty(reparsed)) == reparsed


def test_normalized_map_flips():
    spec = MapSpec("x + mu - x^2")
    nm = spec.normalized(flip_x=True, flip_mu=True)
    for xv, mv in [(0.05, 0.01), (-0.02, 0.003)]:
        assert nm.f(xv, mv) == pytest.approx(-spec.f(-xv, -mv), rel=1e-14)
        assert nm.fx(xv, mv) == pytest.approx(spec.fx(-xv, -mv), rel=1e-14)
    j = nm.jet(5)
    assert j.c[0, 1] == pytest.approx(1.0)   # f_mu picks up both sign flips
    assert j.c[2, 0] == pytest.approx(1.0)   # f_xx flips once


def test_second_iterate_callables():
    spec = MapSpec("(-1 - mu)*x - (3 + mu)*x^2")
    nm = spec.normalized()
    x, mu = 0.02, 0.01
    assert nm.f2(x, mu) == pytest.approx(spec.f(spec.f(x, mu), mu), rel=1e-14)
    h = 1e-6
    fd = (nm.f2(x + h, mu) - nm.f2(x - h, mu)) / (2 * h)
    assert nm.f2x(x, mu) == pytest.approx(fd, rel=1e-7)


def test_load_config(tmp_path):
    good = tmp_path / "map.toml"
    good.write_text(
        'map = "x + mu - c*x^2"\ndegree = 6\ntrust_x = 0.4\ntrust_mu = 0.04\n'
        "[params]\nc = 1.5\n")
    spec = load_config(str(good))
    assert spec.degree == 6
    assert spec.f(0.1, 0.0) == pytest.approx(0.1 - 0.015)

    missing = tmp_path / "missing.toml"
    missing.write_text('degree = 5\n')
    with pytest.raises(ConfigError) as err:
        load_config(str(missing))
    assert err.value.field == "map"

    unbound = tmp_path / "unbound.toml"
    unbound.write_text('map = "x + c*x^2"\n')
    with pytest.raises(ConfigError) as err:
        load_config(str(unbound))
    assert "unbound parameter 'c'" in str(err.value)

    unknown = tmp_path / "unknown.toml"
    unknown.write_text('map = "x"\nbogus = 1\n')
    with pytest.raises(ConfigError) as err:
        load_config(str(unknown))
    assert err.value.field == "bogus"

    badval = tmp_path / "badval.toml"
    badval.write_text('map = "x + c*x^2"\n[params]\nc = "one"\n')
    with pytest.raises(ConfigError):
        load_config(str(badval))

    with pytest.raises(ConfigError):
        load_config(str(tmp_path / "nope.toml"))


def test_config_validation():
    with pytest.raises(ConfigError):
        MapSpec("x", degree=1)
    with pytest.raises(ConfigError):
        MapSpec("x", trust_x=-1.0)
    with pytest.raises(ConfigError):
        MapSpec("x", params={"mu": 1.0})
