"""Exact scalar layer: rationals, truncated power series in h, binomial expansions."""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache

from gmpy2 import mpq

# exact rationals; gmpy2 is several times faster than fractions.Fraction
Rational = mpq

ZERO = mpq(0)
ONE = mpq(1)


class NonUnit(ArithmeticError):
    """Raised when inverting a series whose constant term vanishes."""


def frac(x) -> Rational:
    if type(x) is mpq:
        return x
    if isinstance(x, Fraction):
        return mpq(x.numerator, x.denominator)
    if isinstance(x, str):
        return mpq(x.strip())
    return mpq(x)


class HSeries:
    """Element of Q[[h]]/(h^N), stored as a tuple of N rational coefficients."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs):
        object.__setattr__(self, "coeffs", tuple(frac(c) for c in coeffs))
        if not self.coeffs:
            raise ValueError("HSeries needs order >= 1")

    def __setattr__(self, name, value):
        raise AttributeError("HSeries is immutable")

    @classmethod
    def const(cls, c, order: int) -> "HSeries":
        return cls((frac(c),) + (ZERO,) * (order - 1))

    @classmethod
    def zero(cls, order: int) -> "HSeries":
        return cls((ZERO,) * order)

    @classmethod
    def monomial(cls, c, k: int, order: int) -> "HSeries":
        cs = [ZERO] * order
        if k < order:
            cs[k] = frac(c)
        return cls(cs)

    @property
    def order(self) -> int:
        return len(self.coeffs)

    def __getitem__(self, k: int) -> Rational:
        return self.coeffs[k]

    def truncate(self, order: int) -> "HSeries":
        if order >= self.order:
            return self
        return HSeries(self.coeffs[:order])

    def is_zero(self) -> bool:
        return not any(self.coeffs)

    def valuation(self):
        """Smallest k with a nonzero h^k coefficient, or None for zero."""
        for k, c in enumerate(self.coeffs):
            if c:
                return k
        return None

    def _coerce(self, other):
        if isinstance(other, HSeries):
            n = min(self.order, other.order)
            return self.coeffs[:n], other.coeffs[:n], n
        c = frac(other)
        return self.coeffs, (c,) + (ZERO,) * (self.order - 1), self.order

    def __add__(self, other):
        a, b, _ = self._coerce(other)
        return HSeries(x + y for x, y in zip(a, b))

    __radd__ = __add__

    def __sub__(self, other):
        a, b, _ = self._coerce(other)
        return HSeries(x - y for x, y in zip(a, b))

    def __rsub__(self, other):
        return (-self) + other

    def __neg__(self):
        return HSeries(-x for x in self.coeffs)

    def __mul__(self, other):
        if not isinstance(other, HSeries):
            c = frac(other)
            return HSeries(c * x for x in self.coeffs)
        a, b, n = self._coerce(other)
        return HSeries(mul_trunc(a, b, n))

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, HSeries):
            return self * other.inverse()
        c = frac(other)
        return HSeries(x / c for x in self.coeffs)

    def __pow__(self, n: int):
        if n < 0:
            return self.inverse() ** (-n)
        out = HSeries.const(1, self.order)
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def inverse(self) -> "HSeries":
        a = self.coeffs
        if not a[0]:
            raise NonUnit("constant term of %r is zero" % (self,))
        n = len(a)
        inv = [ZERO] * n
        inv[0] = 1 / a[0]
        for k in range(1, n):
            s = sum((a[j] * inv[k - j] for j in range(1, k + 1)), ZERO)
            inv[k] = -s * inv[0]
        return HSeries(inv)

    def shift_down(self) -> "HSeries":
        """Divide by h; the result has order N-1. Requires a zero constant term."""
        if self.coeffs[0]:
            raise NotDivisible("constant term %s is nonzero" % self.coeffs[0])
        if self.order == 1:
            raise NotDivisible("cannot divide an order-1 series by h")
        return HSeries(self.coeffs[1:])

    def times_h(self, k: int = 1) -> "HSeries":
        return HSeries(((ZERO,) * k + self.coeffs)[: self.order])

    def __eq__(self, other):
        if isinstance(other, HSeries):
            return self.coeffs == other.coeffs
        if other == 0:
            return self.is_zero()
        return NotImplemented

    def __hash__(self):
        return hash(self.coeffs)

    def __repr__(self):
        return "HSeries(%s)" % self.to_text()

    def to_text(self) -> str:
        return "[" + ", ".join(str(c) for c in self.coeffs) + "]"

    @classmethod
    def from_text(cls, s: str) -> "HSeries":
        body = s.strip()
        if not (body.startswith("[") and body.endswith("]")):
            raise ValueError("bad HSeries text %r" % s)
        return cls(mpq(p.strip()) for p in body[1:-1].split(","))

    def pretty(self) -> str:
        parts = []
        for k, c in enumerate(self.coeffs):
            if not c:
                continue
            if k == 0:
                parts.append(str(c))
            elif k == 1:
                parts.append("%s*h" % c)
            else:
                parts.append("%s*h^%d" % (c, k))
        return " + ".join(parts) if parts else "0"


class NotDivisible(ArithmeticError):
    """An expression that must be divisible by h was not."""


def mul_trunc(a, b, n: int) -> list:
    """Truncated Cauchy product of two coefficient sequences."""
    out = [ZERO] * n
    for i, x in enumerate(a[:n]):
        if not x:
            continue
        for j in range(n - i):
            y = b[j]
            if y:
                out[i + j] += x * y
    return out


def hseries_mul(a: HSeries, b: HSeries) -> HSeries:
    return a * b


def hseries_inv(a: HSeries) -> HSeries:
    return a.inverse()


def check_binom_exponent(t) -> Rational:
    t = frac(t)
    if (2 * t).denominator != 1:
        raise ValueError("exponent %s is not a half-integer" % t)
    return t


@lru_cache(maxsize=None)
def _binom(t: Rational, k: int) -> Rational:
    out = ONE
    for i in range(k):
        out = out * (t - i) / (i + 1)
    return out


def binom(t, k: int) -> Rational:
    """Generalized binomial coefficient t(t-1)...(t-k+1)/k!."""
    if k < 0:
        return ZERO
    return _binom(frac(t), k)


def binom_coeffs(t, K: int) -> list:
    """Coefficients of x^0..x^(K-1) in (1+x)^t."""
    t = frac(t)
    return [binom(t, k) for k in range(K)]


def shifted_power(r: int, c, N: int) -> dict:
    """(u + c*h)^r mod h^N as {u-exponent: HSeries}.

    For r >= 0 this is the finite binomial expansion (r+1 entries); for r < 0 it
    is expanded in powers of h/u and keeps the N exponents r, r-1, ..., r-N+1.
    """
    c = frac(c)
    out = {}
    terms = r + 1 if r >= 0 else N
    for k in range(terms):
        coeff = binom(r, k) * c**k if k else ONE
        out[r - k] = HSeries.monomial(coeff, k, N) if k < N else HSeries.zero(N)
    return out


def power_factor_series(factors, N: int):
    """Expand a product of (u + c_i h)^{t_i} mod h^N.

    ``factors`` is an iterable of (c, t) pairs with rational c and t.  The total
    exponent T = sum t_i must be an integer.  Returns (T, g) with g a list of N
    rationals such that the product equals sum_k g[k] h^k u^(T-k).
    """
    total = ZERO
    g = [ONE] + [ZERO] * (N - 1)
    for c, t in factors:
        c = frac(c)
        t = frac(t)
        if not t:
            continue
        total += t
        if not c:
            continue
        # (u + c h)^t = u^t (1 + c h/u)^t
        b = [binom(t, k) * c**k for k in range(N)]
        g = mul_trunc(g, b, N)
    if total.denominator != 1:
        raise ValueError("non-integral total u-exponent %s" % total)
    return int(total), g
