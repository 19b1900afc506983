"""Lazy operator-valued series in one variable and the T^{+-}(u) action.

A current A(u) = sum_m A_m u^m is only ever evaluated on a concrete vector and
a finite exponent window.  Products A(u)B(u) at the same argument need finitely
many terms per exponent, which is guaranteed by one of two kinds of bounds:

* ``up``: a global upper bound on exponents (series in u^{-1}, e.g. k^+(u)),
* ``low_global``: a global lower bound (series in u, e.g. k^-(u)),

together with ``low(v)``, a vector-dependent lower bound.
"""

from __future__ import annotations

from contextlib import contextmanager

from ..arith import HSeries, binom, frac
from ..fock import FockVector
from .catalog import catalog
from .engine import USeriesVector, apply_raw, lower_bound


class UnboundedProduct(ValueError):
    """A product of currents whose coefficients are not finite sums."""


class InverseNotUnit(ArithmeticError):
    pass


class Current:
    up = None
    low_global = None

    def low(self, v: FockVector, N: int) -> int:
        raise NotImplementedError

    def _coeffs(self, v, lo, hi, N):
        raise NotImplementedError

    def coeffs(self, v: FockVector, lo: int, hi: int, N: int) -> dict:
        """{m: A_m v} for lo <= m <= hi, zero coefficients omitted."""
        if self.up is not None:
            hi = min(hi, self.up)
        if self.low_global is not None:
            lo = max(lo, self.low_global)
        if hi < lo or v.is_zero():
            return {}
        key = (v, lo, hi, N, SpecCurrent.clamp)
        memo = self.__dict__.setdefault("_memo", {})
        if key not in memo:
            memo[key] = {m: w for m, w in self._coeffs(v, lo, hi, N).items() if not w.is_zero()}
        return memo[key]

    def series(self, v: FockVector, window, N: int) -> USeriesVector:
        lo, hi = window
        return USeriesVector(("u",), (window,), {(m,): w for m, w in self.coeffs(v, lo, hi, N).items()}, N, self.low(v, N) >= lo)

    def __add__(self, other):
        return Sum([self, other])

    def __sub__(self, other):
        return Sum([self, Scale(other, -1)])

    def __matmul__(self, other):
        return Compose(self, other)


class SpecCurrent(Current):
    """A catalog operator times h^hpow.

    Evaluation skips exponents below the engine's certified lower bound unless
    ``SpecCurrent.clamp`` is switched off (see ``unclamped``).
    """

    clamp = True

    def __init__(self, spec, hpow: int = 0):
        self.spec = spec
        self.hpow = hpow
        self.up = spec.upper_bound()
        self.low_global = 0 if (not spec.annihilation and not spec.graded and not any(spec.shift)) else None

    def low(self, v, N):
        lb = lower_bound(self.spec, v, N)
        return 0 if lb is None else lb

    def _coeffs(self, v, lo, hi, N):
        if SpecCurrent.clamp:
            lo = max(lo, self.low(v, N))
        if hi < lo:
            return {}
        raw = apply_raw(self.spec, v, lo, hi, N)
        if self.hpow:
            raw = {m: w.times_h(self.hpow) for m, w in raw.items()}
        return raw


@contextmanager
def unclamped():
    """Evaluate catalog currents honestly below their certified lower bounds."""
    old = SpecCurrent.clamp
    SpecCurrent.clamp = False
    try:
        yield
    finally:
        SpecCurrent.clamp = old


class Identity(Current):
    up = 0
    low_global = 0

    def low(self, v, N):
        return 0

    def _coeffs(self, v, lo, hi, N):
        return {0: v.truncate(N)} if lo <= 0 <= hi else {}


class Scale(Current):
    def __init__(self, inner: Current, c):
        self.inner = inner
        self.c = frac(c)
        self.up = inner.up
        self.low_global = inner.low_global

    def low(self, v, N):
        return self.inner.low(v, N)

    def _coeffs(self, v, lo, hi, N):
        return {m: w.scale(self.c) for m, w in self.inner.coeffs(v, lo, hi, N).items()}


class Sum(Current):
    """Sum of currents; the empty sum is the zero current."""

    def __init__(self, parts):
        self.parts = list(parts)
        ups = [p.up for p in self.parts]
        lows = [p.low_global for p in self.parts]
        if not self.parts:
            # zero: any finite bounds are valid and keep compositions bounded
            self.up = self.low_global = 0
            return
        self.up = None if None in ups else max(ups)
        self.low_global = None if None in lows else min(lows)

    def low(self, v, N):
        return min((p.low(v, N) for p in self.parts), default=0)

    def _coeffs(self, v, lo, hi, N):
        out = {}
        for p in self.parts:
            for m, w in p.coeffs(v, lo, hi, N).items():
                out[m] = out[m] + w if m in out else w
        return out


class Part(Current):
    """Negative (m < 0) or nonnegative (m >= 0) exponents of a current."""

    def __init__(self, inner: Current, which: str):
        if which not in ("neg", "nonneg"):
            raise ValueError(which)
        self.inner = inner
        self.which = which
        if which == "neg":
            self.up = -1 if inner.up is None else min(inner.up, -1)
            self.low_global = inner.low_global
        else:
            self.up = inner.up
            self.low_global = 0 if inner.low_global is None else max(0, inner.low_global)

    def low(self, v, N):
        lb = self.inner.low(v, N)
        return lb if self.which == "neg" else max(0, lb)

    def _coeffs(self, v, lo, hi, N):
        if self.which == "neg":
            hi = min(hi, -1)
        else:
            lo = max(lo, 0)
        if hi < lo:
            return {}
        return self.inner.coeffs(v, lo, hi, N)


class Shift(Current):
    """A(u + c h), re-expanded in u.

    [u^m] A(u + ch) = sum_j binom(m + j, j) (ch)^j A_{m+j}; mod h^N only j < N
    contributes.
    """

    def __init__(self, inner: Current, c):
        self.inner = inner
        self.c = frac(c)
        self.up = inner.up
        lg = inner.low_global
        self.low_global = lg if lg is None else self._shift_low(lg, None)

    @staticmethod
    def _shift_low(lb, N):
        # polynomial terms u^n (n >= 0) stay at exponents >= 0
        if lb >= 0:
            return 0 if N is None else max(0, lb - (N - 1))
        return None if N is None else lb - (N - 1)

    def low(self, v, N):
        return self._shift_low(self.inner.low(v, N), N)

    def _coeffs(self, v, lo, hi, N):
        if not self.c:
            return self.inner.coeffs(v, lo, hi, N)
        src = self.inner.coeffs(v, lo, hi + N - 1, N)
        out = {}
        for n, w in src.items():
            for j in range(N):
                m = n - j
                if m < lo or m > hi:
                    continue
                cf = binom(m + j, j) * self.c**j
                if not cf:
                    continue
                term = w.scale(HSeries.monomial(cf, j, N))
                out[m] = out[m] + term if m in out else term
        return out


class Derivative(Current):
    """Divided derivative A^{(k)}(u)/k!: [u^m] = binom(m + k, k) A_{m+k}."""

    def __init__(self, inner: Current, k: int):
        self.inner = inner
        self.k = k
        self.up = None if inner.up is None else inner.up - k
        lg = inner.low_global
        self.low_global = None if lg is None else max(0, lg - k)

    def low(self, v, N):
        lb = self.inner.low(v, N)
        return max(0, lb - self.k) if lb >= 0 else lb - self.k

    def _coeffs(self, v, lo, hi, N):
        if not self.k:
            return self.inner.coeffs(v, lo, hi, N)
        out = {}
        for n, w in self.inner.coeffs(v, lo + self.k, hi + self.k, N).items():
            cf = binom(n, self.k)
            if cf:
                out[n - self.k] = w.scale(cf)
        return out


class Compose(Current):
    """A(u) B(u), B acting first."""

    def __init__(self, a: Current, b: Current):
        self.a = a
        self.b = b
        self.up = None if a.up is None or b.up is None else a.up + b.up
        self.low_global = (
            None if a.low_global is None or b.low_global is None else a.low_global + b.low_global
        )

    def low(self, v, N):
        if self.a.low_global is not None:
            return self.a.low_global + self.b.low(v, N)
        if self.a.up is not None and self.b.up is not None:
            # any exponent below is possible only through the vector-dependent bounds
            blo = self.b.low(v, N)
            lows = [blo + self.a.low(w, N) for w in self.b.coeffs(v, blo, self.b.up, N).values()]
            return min(lows, default=0)
        raise UnboundedProduct("no lower bound for the composition")

    def _coeffs(self, v, lo, hi, N):
        a, b = self.a, self.b
        # A_k = 0 for k > a.up, so b >= lo - a.up; otherwise use B's own bound
        b_lo = lo - a.up if a.up is not None else b.low(v, N)
        cands = []
        if b.up is not None:
            cands.append(b.up)
        if a.low_global is not None:
            cands.append(hi - a.low_global)
        if not cands:
            raise UnboundedProduct("composition needs an upper bound on A or a lower bound on B")
        b_hi = min(cands)
        out = {}
        for bexp, w in b.coeffs(v, b_lo, b_hi, N).items():
            for aexp, x in a.coeffs(w, lo - bexp, hi - bexp, N).items():
                m = aexp + bexp
                out[m] = out[m] + x if m in out else x
        return out


class GeometricInverse(Current):
    """A^{-1} = sum_{l < N} (1 - A)^l for A = 1 + h * (...)."""

    def __init__(self, inner: Current, terms: int):
        if inner.up is None and inner.low_global is None:
            raise UnboundedProduct("inverse needs a one-sided current")
        self.inner = inner
        d = Sum([Identity(), Scale(inner, -1)])
        parts = [Identity()]
        power = Identity()
        for _ in range(1, terms):
            power = Compose(d, power)
            parts.append(power)
        self._sum = Sum(parts)
        self._delta = d
        self.up = self._sum.up
        self.low_global = self._sum.low_global

    def low(self, v, N):
        return self._sum.low(v, N)

    def _coeffs(self, v, lo, hi, N):
        # the deviation from the identity must vanish mod h on the window
        for w in self._delta.coeffs(v, lo, hi, N).values():
            if not w.truncate(1).is_zero():
                raise InverseNotUnit("inverted factor is not the identity mod h")
        return self._sum.coeffs(v, lo, hi, N)


# ----- T^{+-}(u) at level C = 1 -----------------------------------------------

_QUARTER = frac("1/4")


class _TBuilder:
    def __init__(self, variant):
        self.variant = variant
        self._cache = {}

    def get(self, name):
        if name not in self._cache:
            self._cache[name] = getattr(self, "_" + name)()
        return self._cache[name]

    def _spec(self, name, hpow=0):
        return SpecCurrent(catalog(name, self.variant), hpow)

    def _Xp(self):
        return self._spec("X_alpha", 1)

    def _Xm(self):
        return self._spec("X_malpha", 1)

    # X^+(u) = e^+(u - h/4) - e^-(u + h/4) with e^{+-} = t11^{-1} t12; the two
    # terms are separated by the sign of the exponents
    def _e_plus(self):
        return Shift(Part(self.get("Xp"), "neg"), _QUARTER)

    def _e_minus(self):
        return Scale(Shift(Part(self.get("Xp"), "nonneg"), -_QUARTER), -1)

    # X^-(u) = f^+(u + h/4) - f^-(u - h/4) with f^{+-} = t21 t11^{-1}
    def _f_plus(self):
        return Shift(Part(self.get("Xm"), "neg"), -_QUARTER)

    def _f_minus(self):
        return Scale(Shift(Part(self.get("Xm"), "nonneg"), _QUARTER), -1)

    def t(self, i, j, sign):
        s = "plus" if sign in ("+", "plus", 1) else "minus"
        key = ("t", i, j, s)
        if key in self._cache:
            return self._cache[key]
        k1 = self._spec("k1_" + s)
        k2 = self._spec("k2_" + s)
        e = self.get("e_" + s)
        f = self.get("f_" + s)
        if (i, j) == (1, 1):
            cur = k1
        elif (i, j) == (1, 2):
            cur = Compose(k1, e)
        elif (i, j) == (2, 1):
            cur = Compose(f, k1)
        elif (i, j) == (2, 2):
            cur = Sum([k2, Compose(f, Compose(k1, e))])
        else:
            raise ValueError("matrix index out of range")
        self._cache[key] = cur
        return cur


_BUILDERS = {}


def t_current(i: int, j: int, sign, variant: str = "norm") -> Current:
    """The current t_ij^{sign}(u) realized on the Fock space."""
    if variant not in _BUILDERS:
        _BUILDERS[variant] = _TBuilder(variant)
    return _BUILDERS[variant].t(i, j, sign)


def t_action(i: int, j: int, sign, v: FockVector, window, N: int, variant: str = "norm") -> USeriesVector:
    return t_current(i, j, sign, variant).series(v, window, N)


def drinfeld_current(name: str, variant: str = "norm") -> Current:
    """Catalog currents with the overall h of X^{+-} = h X_{+-alpha} made explicit."""
    hp = {"X_plus": ("X_alpha", 1), "X_minus": ("X_malpha", 1)}
    if name in hp:
        base, k = hp[name]
        return SpecCurrent(catalog(base, variant), k)
    return SpecCurrent(catalog(name, variant))


def product_series(currents, v: FockVector, windows, N: int) -> dict:
    """Coefficients of A_1(x_1) ... A_k(x_k) v on a box of exponents.

    ``currents`` and ``windows`` are listed left to right; the result maps
    exponent tuples (in the same order) to vectors.
    """
    state = {(): v}
    for cur, (lo, hi) in zip(reversed(currents), reversed(windows)):
        new = {}
        for key, w in state.items():
            for m, x in cur.coeffs(w, lo, hi, N).items():
                new[(m,) + key] = x
        state = new
    return state
