"""Expression parsing and evaluation for one-parameter map families.

Grammar (standard precedence, ``^`` binds tightest, then unary minus, then
``* /``, then ``+ -``; binary operators associate left):

    expr    := term (('+' | '-') term)*
    term    := unary (('*' | '/') unary)*
    unary   := '-' unary | power
    power   := atom ['^' INTEGER]
    atom    := NUMBER | IDENT | IDENT '(' expr ')' | '(' expr ')'

``x`` and ``mu`` are the reserved map variables.  Any other identifier is a
named parameter and must be bound to a real number before evaluation.
Functions: exp, log, sin, cos, tan, sinh, cosh, tanh, sqrt.  ``abs`` is
rejected because the analysis requires smooth maps.  Exponents of ``^`` must
be literal non-negative integers.

Error positions (``ParseError.offset``) are 1-based character offsets; the
offset just past the string marks errors at end of input.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from . import jet as jetlib
from .errors import ConfigError, DomainError, ParseError
from .jet import Jet1, Jet2

__all__ = [
    "parse", "pretty", "eval_expr", "differentiate", "compile_expr",
    "parameter_names", "MapSpec", "NormalizedMap", "load_config",
    "spec_from_dict",
]

FUNCTIONS = set(jetlib.JET_FUNCTIONS)
RESERVED = {"x", "mu"}


# AST -------------------------------------------------------------------------

@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str  # "x" or "mu"


@dataclass(frozen=True)
class Param:
    name: str


@dataclass(frozen=True)
class Neg:
    arg: object


@dataclass(frozen=True)
class BinOp:
    op: str  # '+', '-', '*', '/'
    lhs: object
    rhs: object


@dataclass(frozen=True)
class Pow:
    base: object
    exponent: int


@dataclass(frozen=True)
class Call:
    fn: str
    arg: object


# tokenizer ---------------------------------------------------------------

@dataclass
class _Token:
    kind: str   # NUM IDENT OP EOF
    text: str
    offset: int  # 1-based


def _tokenize(src: str) -> list[_Token]:
    toks = []
    i, n = 0, len(src)
    while i < n:
        ch = src[i]
        if ch.isspace():
            i += 1
            continue
        if ch.isdigit() or (ch == "." and i + 1 < n and src[i + 1].isdigit()):
            j = i
            while j < n and src[j].isdigit():
                j += 1
            if j < n and src[j] == ".":
                j += 1
                while j < n and src[j].isdigit():
                    j += 1
            if j < n and src[j] in "eE":
                k = j + 1
                if k < n and src[k] in "+-":
                    k += 1
                if k < n and src[k].isdigit():
                    j = k
                    while j < n and src[j].isdigit():
                        j += 1
            toks.append(_Token("NUM", src[i:j], i + 1))
            i = j
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (src[j].isalnum() or src[j] == "_"):
                j += 1
            toks.append(_Token("IDENT", src[i:j], i + 1))
            i = j
            continue
        if ch in "+-*/^()":
            toks.append(_Token("OP", ch, i + 1))
            i += 1
            continue
        raise ParseError(f"unexpected character {ch!r}", i + 1)
    toks.append(_Token("EOF", "", n + 1))
    return toks


# parser --------------------------------------------------------------------

class _Parser:
    def __init__(self, src: str):
        self.toks = _tokenize(src)
        self.pos = 0

    def peek(self) -> _Token:
        return self.toks[self.pos]

    def next(self) -> _Token:
        tok = self.toks[self.pos]
        self.pos += 1
        return tok

    def expect_op(self, text: str):
        tok = self.peek()
        if tok.kind == "OP" and tok.text == text:
            return self.next()
        what = "end of input" if tok.kind == "EOF" else repr(tok.text)
        raise ParseError(f"expected {text!r}, found {what}", tok.offset)

    def parse(self):
        node = self.expr()
        tok = self.peek()
        if tok.kind != "EOF":
            raise ParseError(f"unexpected {tok.text!r} after expression", tok.offset)
        return node

    def expr(self):
        node = self.term()
        while True:
            tok = self.peek()
            if tok.kind == "OP" and tok.text in "+-":
                self.next()
                node = BinOp(tok.text, node, self.term())
            else:
                return node

    def term(self):
        node = self.unary()
        while True:
            tok = self.peek()
            if tok.kind == "OP" and tok.text in "*/":
                self.next()
                node = BinOp(tok.text, node, self.unary())
            else:
                return node

    def unary(self):
        tok = self.peek()
        if tok.kind == "OP" and tok.text == "-":
            self.next()
            return Neg(self.unary())
        return self.power()

    def power(self):
        base = self.atom()
        tok = self.peek()
        if tok.kind == "OP" and tok.text == "^":
            self.next()
            exp_tok = self.peek()
            if exp_tok.kind != "NUM" or not exp_tok.text.isdigit():
                where = exp_tok.offset
                raise ParseError("exponent must be an integer literal", where)
            self.next()
            return Pow(base, int(exp_tok.text))
        return base

    def atom(self):
        tok = self.next()
        if tok.kind == "NUM":
            return Num(float(tok.text))
        if tok.kind == "IDENT":
            name = tok.text
            nxt = self.peek()
            if nxt.kind == "OP" and nxt.text == "(":
                if name == "abs":
                    raise ParseError("function 'abs' is not supported (not smooth)", tok.offset)
                if name not in FUNCTIONS:
                    raise ParseError(f"unknown function '{name}'", tok.offset)
                self.next()
                arg = self.expr()
                self.expect_op(")")
                return Call(name, arg)
            if name in RESERVED:
                return Var(name)
            return Param(name)
        if tok.kind == "OP" and tok.text == "(":
            node = self.expr()
            self.expect_op(")")
            return node
        what = "end of input" if tok.kind == "EOF" else repr(tok.text)
        raise ParseError(f"unexpected {what}", tok.offset)


def parse(src: str):
    """Parse an expression string into an AST."""
    return _Parser(src).parse()


def parameter_names(node) -> set[str]:
    if isinstance(node, Param):
        return {node.name}
    if isinstance(node, Neg):
        return parameter_names(node.arg)
    if isinstance(node, BinOp):
        return parameter_names(node.lhs) | parameter_names(node.rhs)
    if isinstance(node, Pow):
        return parameter_names(node.base)
    if isinstance(node, Call):
        return parameter_names(node.arg)
    return set()


# pretty printing -------------------------------------------------------------

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "neg": 3, "pow": 4, "atom": 5}


def _prec(node) -> int:
    if isinstance(node, BinOp):
        return _PREC[node.op]
    if isinstance(node, Neg):
        return _PREC["neg"]
    if isinstance(node, Pow):
        return _PREC["pow"]
    return _PREC["atom"]


def pretty(node) -> str:
    """Render an AST canonically; parse(pretty(parse(s))) == parse(s)."""
    if isinstance(node, Num):
        return repr(node.value)
    if isinstance(node, (Var, Param)):
        return node.name
    if isinstance(node, Neg):
        inner = pretty(node.arg)
        if _prec(node.arg) < _PREC["neg"]:
            inner = f"({inner})"
        return f"-{inner}"
    if isinstance(node, BinOp):
        lhs, rhs = pretty(node.lhs), pretty(node.rhs)
        if _prec(node.lhs) < _PREC[node.op]:
            lhs = f"({lhs})"
        # left associativity: the right operand needs parens at equal level
        if _prec(node.rhs) <= _PREC[node.op]:
            rhs = f"({rhs})"
        if node.op in "+-":
            return f"{lhs} {node.op} {rhs}"
        return f"{lhs}{node.op}{rhs}"
    if isinstance(node, Pow):
        base = pretty(node.base)
        if _prec(node.base) < _PREC["pow"] or isinstance(node.base, Pow):
            base = f"({base})"
        return f"{base}^{node.exponent}"
    if isinstance(node, Call):
        return f"{node.fn}({pretty(node.arg)})"
    raise TypeError(f"not an AST node: {node!r}")


# evaluation ------------------------------------------------------------------

_MATH_FUNCS = {
    "exp": math.exp, "log": math.log, "sin": math.sin, "cos": math.cos,
    "tan": math.tan, "sinh": math.sinh, "cosh": math.cosh, "tanh": math.tanh,
    "sqrt": math.sqrt,
}


def _call(fn: str, v):
    if isinstance(v, (Jet1, Jet2)):
        return jetlib.apply_function(fn, v)
    try:
        return _MATH_FUNCS[fn](v)
    except ValueError as exc:
        raise DomainError(f"{fn}({v!r}) is undefined") from exc
    except OverflowError:
        return math.inf if v > 0 else 0.0


def eval_expr(node, x, mu, params: dict | None = None):
    """Evaluate over floats or jets.  x and mu may be float, Jet1 or Jet2."""
    params = params or {}

    def ev(n):
        if isinstance(n, Num):
            return n.value
        if isinstance(n, Var):
            return x if n.name == "x" else mu
        if isinstance(n, Param):
            try:
                return params[n.name]
            except KeyError:
                raise ConfigError(f"unbound parameter '{n.name}'", field=n.name) from None
        if isinstance(n, Neg):
            return -ev(n.arg)
        if isinstance(n, BinOp):
            a, b = ev(n.lhs), ev(n.rhs)
            if n.op == "+":
                return a + b
            if n.op == "-":
                return a - b
            if n.op == "*":
                return a * b
            if isinstance(b, (int, float)) and b == 0:
                raise DomainError("division by zero")
            return a / b
        if isinstance(n, Pow):
            return ev(n.base) ** n.exponent
        if isinstance(n, Call):
            return _call(n.fn, ev(n.arg))
        raise TypeError(f"not an AST node: {n!r}")

    return ev(node)


# symbolic derivative ---------------------------------------------------------

_DERIV_TABLE = {
    "exp": lambda u: Call("exp", u),
    "log": lambda u: BinOp("/", Num(1.0), u),
    "sin": lambda u: Call("cos", u),
    "cos": lambda u: Neg(Call("sin", u)),
    "tan": lambda u: BinOp("/", Num(1.0), Pow(Call("cos", u), 2)),
    "sinh": lambda u: Call("cosh", u),
    "cosh": lambda u: Call("sinh", u),
    "tanh": lambda u: BinOp("/", Num(1.0), Pow(Call("cosh", u), 2)),
    "sqrt": lambda u: BinOp("/", Num(0.5), Call("sqrt", u)),
}


def differentiate(node, var: str):
    """Exact derivative of the AST with respect to 'x' or 'mu'."""
    if isinstance(node, Num) or isinstance(node, Param):
        return Num(0.0)
    if isinstance(node, Var):
        return Num(1.0 if node.name == var else 0.0)
    if isinstance(node, Neg):
        return Neg(differentiate(node.arg, var))
    if isinstance(node, BinOp):
        da, db = differentiate(node.lhs, var), differentiate(node.rhs, var)
        if node.op in "+-":
            return BinOp(node.op, da, db)
        if node.op == "*":
            return BinOp("+", BinOp("*", da, node.rhs), BinOp("*", node.lhs, db))
        num = BinOp("-", BinOp("*", da, node.rhs), BinOp("*", node.lhs, db))
        return BinOp("/", num, Pow(node.rhs, 2))
    if isinstance(node, Pow):
        if node.exponent == 0:
            return Num(0.0)
        du = differentiate(node.base, var)
        if node.exponent == 1:
            return du
        return BinOp("*", BinOp("*", Num(float(node.exponent)),
                                Pow(node.base, node.exponent - 1)), du)
    if isinstance(node, Call):
        du = differentiate(node.arg, var)
        return BinOp("*", _DERIV_TABLE[node.fn](node.arg), du)
    raise TypeError(f"not an AST node: {node!r}")


# compilation -----------------------------------------------------------------

def _codegen(node, params: dict) -> str:
    if isinstance(node, Num):
        return repr(node.value)
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Param):
        try:
            return repr(float(params[node.name]))
        except KeyError:
            raise ConfigError(f"unbound parameter '{node.name}'", field=node.name) from None
    if isinstance(node, Neg):
        return f"(-{_codegen(node.arg, params)})"
    if isinstance(node, BinOp):
        return f"({_codegen(node.lhs, params)}{node.op}{_codegen(node.rhs, params)})"
    if isinstance(node, Pow):
        return f"({_codegen(node.base, params)})**{node.exponent}"
    if isinstance(node, Call):
        return f"_{node.fn}({_codegen(node.arg, params)})"
    raise TypeError(f"not an AST node: {node!r}")


def compile_expr(node, params: dict | None = None):
    """Compile the AST to a fast float callable (x, mu) -> float.

    Parameters are frozen into the code as literals.  Domain faults raise
    DomainError just like the tree-walking evaluator.
    """
    src = _codegen(node, params or {})
    ns = {f"_{name}": fn for name, fn in _MATH_FUNCS.items()}
    raw = eval(f"lambda x, mu: {src}", ns)  # generated from our own AST only

    def call(x: float, mu: float) -> float:
        try:
            return raw(x, mu)
        except ValueError as exc:
            raise DomainError(str(exc)) from exc
        except ZeroDivisionError as exc:
            raise DomainError("division by zero") from exc
        except OverflowError:
            return math.inf

    call.raw = raw
    return call


# map specification -----------------------------------------------------------

@dataclass
class MapSpec:
    """A parsed one-parameter family f(x, mu) with working neighbourhoods."""

    expression: str
    params: dict = field(default_factory=dict)
    degree: int = 7
    trust_x: float = 0.5
    trust_mu: float = 0.05

    def __post_init__(self):
        if self.degree < 3:
            raise ConfigError("degree must be at least 3", field="degree")
        if not (self.trust_x > 0):
            raise ConfigError("trust_x must be positive", field="trust_x")
        if not (self.trust_mu > 0):
            raise ConfigError("trust_mu must be positive", field="trust_mu")
        self.ast = parse(self.expression)
        unbound = sorted(parameter_names(self.ast) - set(self.params))
        if unbound:
            raise ConfigError(
                f"unbound parameter '{unbound[0]}'", field=unbound[0])
        for name in self.params:
            if name in RESERVED:
                raise ConfigError(
                    f"'{name}' is a reserved variable, not a parameter", field=name)
        self._f = compile_expr(self.ast, self.params)
        self._fx = compile_expr(differentiate(self.ast, "x"), self.params)

    # evaluation -----------------------------------------------------------

    def f(self, x: float, mu: float) -> float:
        return self._f(x, mu)

    def fx(self, x: float, mu: float) -> float:
        """df/dx, exact (compiled symbolic derivative)."""
        return self._fx(x, mu)

    def eval_tree(self, x, mu):
        """Reference tree-walking evaluation; accepts floats or jets."""
        return eval_expr(self.ast, x, mu, self.params)

    def jet(self, degree: int | None = None) -> Jet2:
        d = degree or self.degree
        return eval_expr(self.ast, Jet2.variable_x(d), Jet2.variable_mu(d),
                         self.params)

    def normalized(self, flip_x: bool = False, flip_mu: bool = False) -> "NormalizedMap":
        return NormalizedMap(self, flip_x, flip_mu)


class NormalizedMap:
    """A MapSpec composed with the sign changes chosen by classification.

    flip_x replaces f by -f(-x, mu); flip_mu replaces mu by -mu.  All skeleton
    and conjugacy work happens in these coordinates; results translate back
    through the recorded flips.
    """

    def __init__(self, spec: MapSpec, flip_x: bool, flip_mu: bool):
        self.spec = spec
        self.flip_x = flip_x
        self.flip_mu = flip_mu
        sx = -1.0 if flip_x else 1.0
        sm = -1.0 if flip_mu else 1.0
        raw_f, raw_fx = spec._f, spec._fx
        if flip_x or flip_mu:
            self.f = lambda x, mu: sx * raw_f(sx * x, sm * mu)
            self.fx = lambda x, mu: raw_fx(sx * x, sm * mu)
        else:
            self.f = raw_f
            self.fx = raw_fx
        self.trust_x = spec.trust_x
        self.trust_mu = spec.trust_mu

    def f2(self, x: float, mu: float) -> float:
        return self.f(self.f(x, mu), mu)

    def f2x(self, x: float, mu: float) -> float:
        return self.fx(self.f(x, mu), mu) * self.fx(x, mu)

    def jet(self, degree: int | None = None) -> Jet2:
        j = self.spec.jet(degree)
        if self.flip_x:
            j = j.flip_x()
        if self.flip_mu:
            j = j.flip_mu()
        return j

    def frozen(self, mu: float):
        """(f, fx) as univariate callables at fixed mu."""
        f, fx = self.f, self.fx
        return (lambda x: f(x, mu)), (lambda x: fx(x, mu))

    def frozen2(self, mu: float):
        """(f2, f2x) as univariate callables at fixed mu."""
        f2, f2x = self.f2, self.f2x
        return (lambda x: f2(x, mu)), (lambda x: f2x(x, mu))


# configuration files ---------------------------------------------------------

def load_config(path: str) -> MapSpec:
    """Read a TOML map configuration.

    Recognised fields: ``map`` (required expression string), ``params``
    (table of real parameter bindings), ``degree`` (int), ``trust_x``,
    ``trust_mu`` (positive reals).
    """
    try:
        import tomllib
    except ModuleNotFoundError:  # Python 3.10
        import tomli as tomllib

    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"invalid TOML in {path}: {exc}") from None
    return spec_from_dict(data)


def spec_from_dict(data: dict) -> MapSpec:
    """Build a MapSpec from an already-parsed configuration table."""
    if "map" not in data:
        raise ConfigError("missing required field 'map'", field="map")
    if not isinstance(data["map"], str):
        raise ConfigError("field 'map' must be a string", field="map")

    kwargs = {"expression": data["map"]}
    params = data.get("params", {})
    if not isinstance(params, dict):
        raise ConfigError("field 'params' must be a table", field="params")
    for name, value in params.items():
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            raise ConfigError(
                f"parameter '{name}' must be a real number", field=name)
    kwargs["params"] = {k: float(v) for k, v in params.items()}
    if "degree" in data:
        if not isinstance(data["degree"], int) or isinstance(data["degree"], bool):
            raise ConfigError("field 'degree' must be an integer", field="degree")
        kwargs["degree"] = data["degree"]
    for key in ("trust_x", "trust_mu"):
        if key in data:
            value = data[key]
            if not isinstance(value, (int, float)) or isinstance(value, bool):
                raise ConfigError(f"field '{key}' must be a real number", field=key)
            kwargs[key] = float(value)
    known = {"map", "params", "degree", "trust_x", "trust_mu"}
    for key in data:
        if key not in known:
            raise ConfigError(f"unknown field '{key}'", field=key)
    return MapSpec(**kwargs)
