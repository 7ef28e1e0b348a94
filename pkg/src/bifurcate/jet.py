"""Truncated Taylor series (jets) in one and two variables.

``Jet2`` stores a dense table of coefficients ``c[i, j]`` of ``x^i mu^j``
with total degree ``i + j <= degree``; ``Jet1`` is the univariate analogue.
Arithmetic truncates at the stored degree and is exact below it, so jets
double as an exact derivative engine for analytic expressions: the partial
derivative ``f_{x^i mu^j}(0, 0)`` is ``i! j! c[i, j]``.

Both classes are immutable by convention; every operation returns a new
instance.  Mixed scalar arithmetic lifts floats to constant jets.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import DomainError, JetError

__all__ = ["Jet1", "Jet2", "apply_function", "JET_FUNCTIONS"]

#: Elementary functions jets can be composed with.
JET_FUNCTIONS = ("exp", "log", "sqrt", "sin", "cos", "tan", "sinh", "cosh", "tanh")

_FACT = [math.factorial(k) for k in range(40)]


def _as_array(values, n: int) -> np.ndarray:
    arr = np.zeros(n, dtype=float)
    vals = np.asarray(values, dtype=float)
    if vals.ndim != 1 or vals.size > n:
        raise JetError("coefficient array does not fit the requested degree")
    arr[: vals.size] = vals
    return arr


class Jet1:
    """Univariate truncated series sum_k c[k] t^k, k <= degree."""

    __slots__ = ("degree", "c")

    def __init__(self, coeffs, degree: int | None = None):
        vals = np.asarray(coeffs, dtype=float)
        if degree is None:
            degree = vals.size - 1
        if degree < 0:
            raise JetError("degree must be non-negative")
        self.degree = int(degree)
        self.c = _as_array(vals, self.degree + 1)
        if not np.all(np.isfinite(self.c)):
            raise JetError("non-finite jet coefficient")

    @classmethod
    def constant(cls, value: float, degree: int) -> "Jet1":
        out = np.zeros(degree + 1)
        out[0] = value
        return cls(out)

    @classmethod
    def variable(cls, degree: int, base: float = 0.0) -> "Jet1":
        if degree < 1:
            raise JetError("a variable jet needs degree >= 1")
        out = np.zeros(degree + 1)
        out[0] = base
        out[1] = 1.0
        return cls(out)

    def _coerce(self, other) -> "Jet1":
        if isinstance(other, Jet1):
            if other.degree != self.degree:
                raise JetError("jet degree mismatch")
            return other
        if isinstance(other, (int, float)):
            return Jet1.constant(float(other), self.degree)
        raise TypeError(f"cannot combine Jet1 with {type(other).__name__}")

    # arithmetic -----------------------------------------------------------

    def __add__(self, other):
        other = self._coerce(other)
        return Jet1(self.c + other.c)

    __radd__ = __add__

    def __sub__(self, other):
        other = self._coerce(other)
        return Jet1(self.c - other.c)

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __neg__(self):
        return Jet1(-self.c)

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            return Jet1(self.c * float(other))
        other = self._coerce(other)
        n = self.degree
        out = np.zeros(n + 1)
        for k in range(n + 1):
            if self.c[k] == 0.0:
                continue
            out[k:] += self.c[k] * other.c[: n + 1 - k]
        return Jet1(out)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, (int, float)):
            if other == 0:
                raise DomainError("division by zero")
            return Jet1(self.c / float(other))
        other = self._coerce(other)
        return self * other.reciprocal()

    def __rtruediv__(self, other):
        return self._coerce(other) / self

    def __pow__(self, n):
        if not isinstance(n, int):
            raise JetError("jet exponent must be an integer")
        if n < 0:
            return self.reciprocal() ** (-n)
        out = Jet1.constant(1.0, self.degree)
        base = self
        while n:
            if n & 1:
                out = out * base
            n >>= 1
            if n:
                base = base * base
        return out

    def reciprocal(self) -> "Jet1":
        a = self.c[0]
        if a == 0.0:
            raise DomainError("reciprocal of a series with zero constant term")
        series = np.array([(-1.0) ** k / a ** (k + 1) for k in range(self.degree + 1)])
        return _apply_series(self, series)

    # structure ------------------------------------------------------------

    def shift(self, k: int) -> "Jet1":
        """Multiply by t^k."""
        out = np.zeros(self.degree + 1)
        if k <= self.degree:
            out[k:] = self.c[: self.degree + 1 - k]
        return Jet1(out)

    def truncated(self, degree: int) -> "Jet1":
        return Jet1(self.c[: degree + 1].copy(), degree)

    def padded(self, degree: int) -> "Jet1":
        if degree < self.degree:
            return self.truncated(degree)
        return Jet1(self.c, degree)

    def deriv(self, k: int) -> float:
        """k-th derivative at 0."""
        if k > self.degree:
            raise JetError("derivative order exceeds jet degree")
        return _FACT[k] * self.c[k]

    def eval(self, t: float) -> float:
        acc = 0.0
        for k in range(self.degree, -1, -1):
            acc = acc * t + self.c[k]
        return acc

    def __repr__(self):
        return f"Jet1({np.array2string(self.c, precision=6)})"


class Jet2:
    """Bivariate truncated series sum c[i, j] x^i mu^j, i + j <= degree."""

    __slots__ = ("degree", "c")

    def __init__(self, coeffs, degree: int | None = None):
        arr = np.asarray(coeffs, dtype=float)
        if degree is None:
            degree = arr.shape[0] - 1
        if degree < 0:
            raise JetError("degree must be non-negative")
        self.degree = int(degree)
        n = self.degree + 1
        full = np.zeros((n, n))
        if arr.ndim != 2 or arr.shape[0] > n or arr.shape[1] > n:
            raise JetError("coefficient table does not fit the requested degree")
        full[: arr.shape[0], : arr.shape[1]] = arr
        # entries past the triangle are meaningless; keep them at zero
        ii, jj = np.indices((n, n))
        full[ii + jj > self.degree] = 0.0
        self.c = full
        if not np.all(np.isfinite(self.c)):
            raise JetError("non-finite jet coefficient")

    @classmethod
    def zeros(cls, degree: int) -> "Jet2":
        return cls(np.zeros((degree + 1, degree + 1)), degree)

    @classmethod
    def constant(cls, value: float, degree: int) -> "Jet2":
        out = np.zeros((degree + 1, degree + 1))
        out[0, 0] = value
        return cls(out, degree)

    @classmethod
    def variable_x(cls, degree: int) -> "Jet2":
        if degree < 1:
            raise JetError("a variable jet needs degree >= 1")
        out = np.zeros((degree + 1, degree + 1))
        out[1, 0] = 1.0
        return cls(out, degree)

    @classmethod
    def variable_mu(cls, degree: int) -> "Jet2":
        if degree < 1:
            raise JetError("a variable jet needs degree >= 1")
        out = np.zeros((degree + 1, degree + 1))
        out[0, 1] = 1.0
        return cls(out, degree)

    def _coerce(self, other) -> "Jet2":
        if isinstance(other, Jet2):
            if other.degree != self.degree:
                raise JetError("jet degree mismatch")
            return other
        if isinstance(other, (int, float)):
            return Jet2.constant(float(other), self.degree)
        raise TypeError(f"cannot combine Jet2 with {type(other).__name__}")

    # arithmetic -----------------------------------------------------------

    def __add__(self, other):
        other = self._coerce(other)
        return Jet2(self.c + other.c)

    __radd__ = __add__

    def __sub__(self, other):
        other = self._coerce(other)
        return Jet2(self.c - other.c)

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __neg__(self):
        return Jet2(-self.c)

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            return Jet2(self.c * float(other))
        other = self._coerce(other)
        n = self.degree + 1
        out = np.zeros((n, n))
        for i in range(n):
            for j in range(n - i):
                a = self.c[i, j]
                if a == 0.0:
                    continue
                out[i:, j:] += a * other.c[: n - i, : n - j]
        return Jet2(out)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, (int, float)):
            if other == 0:
                raise DomainError("division by zero")
            return Jet2(self.c / float(other))
        other = self._coerce(other)
        return self * other.reciprocal()

    def __rtruediv__(self, other):
        return self._coerce(other) / self

    def __pow__(self, n):
        if not isinstance(n, int):
            raise JetError("jet exponent must be an integer")
        if n < 0:
            return self.reciprocal() ** (-n)
        out = Jet2.constant(1.0, self.degree)
        base = self
        while n:
            if n & 1:
                out = out * base
            n >>= 1
            if n:
                base = base * base
        return out

    def reciprocal(self) -> "Jet2":
        a = self.c[0, 0]
        if a == 0.0:
            raise DomainError("reciprocal of a series with zero constant term")
        series = np.array([(-1.0) ** k / a ** (k + 1) for k in range(self.degree + 1)])
        return _apply_series(self, series)

    # calculus and structure ------------------------------------------------

    def deriv(self, i: int, j: int) -> float:
        """Partial derivative d^{i+j} f / dx^i dmu^j at the origin."""
        if i + j > self.degree:
            raise JetError("derivative order exceeds jet degree")
        return _FACT[i] * _FACT[j] * self.c[i, j]

    def derivs(self, max_order: int | None = None) -> dict:
        """All partial derivatives up to total order max_order (default: degree)."""
        top = self.degree if max_order is None else min(max_order, self.degree)
        return {
            (i, j): self.deriv(i, j)
            for i in range(top + 1)
            for j in range(top + 1 - i)
        }

    def partial_x(self) -> "Jet2":
        n = self.degree
        if n == 0:
            return Jet2.zeros(0)
        out = np.zeros((n, n))
        for i in range(1, n + 1):
            out[i - 1, :n] = i * self.c[i, :n]
        return Jet2(out, n - 1)

    def partial_mu(self) -> "Jet2":
        n = self.degree
        if n == 0:
            return Jet2.zeros(0)
        out = np.zeros((n, n))
        for j in range(1, n + 1):
            out[:n, j - 1] = j * self.c[:n, j]
        return Jet2(out, n - 1)

    def eval(self, x: float, mu: float) -> float:
        acc = 0.0
        for i in range(self.degree, -1, -1):
            row = 0.0
            for j in range(self.degree - i, -1, -1):
                row = row * mu + self.c[i, j]
            acc = acc * x + row
        return acc

    def flip_x(self) -> "Jet2":
        """Jet of -f(-x, mu): c[i, j] -> (-1)^(i+1) c[i, j]."""
        signs = np.array([(-1.0) ** (i + 1) for i in range(self.degree + 1)])
        return Jet2(self.c * signs[:, None])

    def flip_mu(self) -> "Jet2":
        """Jet of f(x, -mu): c[i, j] -> (-1)^j c[i, j]."""
        signs = np.array([(-1.0) ** j for j in range(self.degree + 1)])
        return Jet2(self.c * signs[None, :])

    def factor_x(self, tol: float = 0.0) -> "Jet2":
        """Divide by x.  Requires the x^0 column to vanish (within tol)."""
        if np.max(np.abs(self.c[0, :])) > tol:
            raise JetError("series is not divisible by x")
        n = self.degree
        out = np.zeros((n, n))
        out[: n, : n] = self.c[1:, : n]
        return Jet2(out, n - 1)

    def mu_profile(self, i: int = 0) -> Jet1:
        """Coefficient row of x^i as a univariate series in mu."""
        if i > self.degree:
            raise JetError("row index exceeds jet degree")
        return Jet1(self.c[i, : self.degree + 1 - i].copy())

    def subs_x(self, inner: "Jet2") -> "Jet2":
        """Compose: substitute ``inner`` for x, keeping mu.

        ``inner`` must have zero constant term so the truncation stays exact.
        """
        inner = self._coerce(inner)
        if inner.c[0, 0] != 0.0:
            raise JetError("inner jet must vanish at the origin")
        n = self.degree
        pows = [Jet2.constant(1.0, n)]
        for _ in range(n):
            pows.append(pows[-1] * inner)
        out = Jet2.zeros(n)
        for i in range(n + 1):
            for j in range(n + 1 - i):
                a = self.c[i, j]
                if a == 0.0:
                    continue
                term = pows[i].c
                block = np.zeros((n + 1, n + 1))
                block[:, j:] = term[:, : n + 1 - j]
                out = out + Jet2(block) * a
        return out

    def substitute_series(self, x_series: Jet1, mu_power: int = 2,
                          out_degree: int | None = None) -> Jet1:
        """Evaluate along a parameter branch: x = x_series(t), mu = t^mu_power.

        ``x_series`` must have zero constant term.  The result is exact in t
        up to min(out_degree, self.degree * min-order) for polynomial input.
        """
        if x_series.c[0] != 0.0:
            raise JetError("branch series must vanish at t = 0")
        d_out = x_series.degree if out_degree is None else out_degree
        xs = x_series.padded(d_out)
        pows = [Jet1.constant(1.0, d_out)]
        for _ in range(min(self.degree, d_out)):
            pows.append(pows[-1] * xs)
        out = np.zeros(d_out + 1)
        for i in range(len(pows)):
            for j in range(self.degree + 1 - i):
                a = self.c[i, j]
                if a == 0.0:
                    continue
                k = j * mu_power
                if k > d_out:
                    continue
                contrib = pows[i].shift(k) if k else pows[i]
                out += a * contrib.c
        return Jet1(out)

    def __repr__(self):
        return f"Jet2(degree={self.degree})"


# elementary functions -------------------------------------------------------

def _apply_series(jet, series: np.ndarray):
    """Horner evaluation of sum_k series[k] * (jet - jet0)^k."""
    if isinstance(jet, Jet1):
        u = jet - jet.c[0]
    else:
        u = jet - jet.c[0, 0]
    acc = (u * 0.0) + float(series[-1])
    for k in range(len(series) - 2, -1, -1):
        acc = acc * u + float(series[k])
    return acc


def _taylor(name: str, a: float, n: int) -> np.ndarray:
    """Taylor coefficients of an elementary function about ``a``."""
    k = np.arange(n + 1)
    if name == "exp":
        return math.exp(a) / np.array([_FACT[i] for i in k])
    if name == "log":
        if a <= 0.0:
            raise DomainError("log requires a positive expansion point")
        out = np.empty(n + 1)
        out[0] = math.log(a)
        for i in range(1, n + 1):
            out[i] = (-1.0) ** (i + 1) / (i * a**i)
        return out
    if name == "sqrt":
        if a <= 0.0:
            raise DomainError("sqrt requires a positive expansion point")
        out = np.empty(n + 1)
        coeff = math.sqrt(a)
        out[0] = coeff
        half = 0.5
        for i in range(1, n + 1):
            coeff *= (half - (i - 1)) / (i * a)
            out[i] = coeff
        return out
    if name == "sin":
        return np.array([math.sin(a + i * math.pi / 2) / _FACT[i] for i in k])
    if name == "cos":
        return np.array([math.cos(a + i * math.pi / 2) / _FACT[i] for i in k])
    if name == "sinh":
        return np.array(
            [(math.sinh(a) if i % 2 == 0 else math.cosh(a)) / _FACT[i] for i in k]
        )
    if name == "cosh":
        return np.array(
            [(math.cosh(a) if i % 2 == 0 else math.sinh(a)) / _FACT[i] for i in k]
        )
    raise JetError(f"no series table for '{name}'")


def apply_function(name: str, jet):
    """Compose an elementary function with a jet (Jet1 or Jet2)."""
    if not isinstance(jet, (Jet1, Jet2)):
        raise TypeError("apply_function expects a jet")
    if name == "tan":
        num = apply_function("sin", jet)
        den = apply_function("cos", jet)
        a = den.c[0] if isinstance(den, Jet1) else den.c[0, 0]
        if abs(a) < 1e-300:
            raise DomainError("tan undefined at the expansion point")
        return num / den
    if name == "tanh":
        return apply_function("sinh", jet) / apply_function("cosh", jet)
    if name not in JET_FUNCTIONS:
        raise JetError(f"unknown function '{name}'")
    a = jet.c[0] if isinstance(jet, Jet1) else jet.c[0, 0]
    return _apply_series(jet, _taylor(name, a, jet.degree))
