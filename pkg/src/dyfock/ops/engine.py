"""Windowed evaluation of normal-ordered operator specs on Fock vectors.

Soundness of the creation cutoff
--------------------------------
Every creation coefficient in the catalog is homogeneous of degree r in (u, h):
the coefficient of a_j(-r) is a combination of (u + c h)^r and (c h)^r.  Hence a
creation monomial of total mode weight W only comes with terms u^p h^(W-p),
0 <= p <= W.  If the vector reaching the creation exponential has a term
u^e h^a, the product lands at u^(e+p) h^(a+W-p).  Inside a window with upper
end ``hi`` and modulo h^N this forces p <= hi - e and a + W - p < N, i.e.

    W <= hi - e + N - 1 - a.

Creation monomials above that weight cannot contribute, so truncating the
exponential there is exact.  Annihilation exponentials act on a polynomial in
the creation operators x_{j,r} = a_j(-r) by translation
x_{j,r} -> x_{j,r} + r * alpha_{j,r}(u), so they terminate on their own; the
lowest u-exponent reached before the creation stage is a certified lower bound
for the whole result because creation terms only raise the u-exponent.
"""

from __future__ import annotations

import threading
from bisect import bisect_left, bisect_right
from dataclasses import dataclass, field
from math import comb

from ..arith import HSeries, ONE, Rational, ZERO, binom, mul_trunc, power_factor_series
from ..fock import FockVector, LatticePoint, graded_eigenvalue
from .catalog import OperatorSpec


class WindowUnsound(ValueError):
    pass


class IncompleteWindow(ValueError):
    pass


@dataclass
class USeriesVector:
    """Windowed multi-variable Laurent series with FockVector coefficients."""

    variables: tuple
    window: tuple  # ((lo, hi), ...) per variable
    coeffs: dict  # exponent tuple -> FockVector (zeros omitted)
    order: int
    below_window_empty: bool = False
    lower_bounds: tuple = field(default=())

    def __getitem__(self, exps):
        if not isinstance(exps, tuple):
            exps = (exps,)
        return self.coeffs.get(exps, FockVector.zero(self.order))

    def is_zero(self) -> bool:
        return all(v.is_zero() for v in self.coeffs.values())

    def nonzero(self):
        return {k: v for k, v in self.coeffs.items() if not v.is_zero()}

    def equals(self, other) -> bool:
        keys = set(self.coeffs) | set(other.coeffs)
        return all((self[k] - other[k]).is_zero() for k in keys)


class _Cache:
    def __init__(self):
        self._d = {}
        self._lock = threading.Lock()
        self.enabled = True

    def get_or_compute(self, key, fn):
        if not self.enabled:
            return fn()
        with self._lock:
            if key in self._d:
                return self._d[key]
        val = fn()
        with self._lock:
            return self._d.setdefault(key, val)

    def peek(self, key):
        return self._d.get(key) if self.enabled else None

    def put(self, key, val):
        if self.enabled:
            with self._lock:
                self._d[key] = val

    def clear(self):
        with self._lock:
            self._d.clear()


CACHE = _Cache()


def _hadd(acc, key, vals, n):
    cur = acc.get(key)
    if cur is None:
        acc[key] = list(vals[:n])
    else:
        for i in range(n):
            cur[i] += vals[i]


def _uh_mul(a, b, n):
    """Product of {uexp: hlist} polynomials."""
    out = {}
    for ea, ha in a.items():
        for eb, hb in b.items():
            prod = mul_trunc(ha, hb, n)
            if any(prod):
                _hadd(out, ea + eb, prod, n)
    return out


def _annih_translation(spec: OperatorSpec, j: int, r: int, n: int):
    """r * alpha_{j,r}(u) as {uexp: hlist}."""
    out = {}
    for t in spec.annihilation:
        if t.color != j:
            continue
        for k in range(n):
            cf = t.sign * binom(-r, k) * (t.c ** k if k else 1)
            if cf:
                hl = [ZERO] * n
                hl[k] = cf
                _hadd(out, -r - k, hl, n)
    return out


def _pre_creation(spec: OperatorSpec, mono, point, n):
    """Graded, shift and annihilation stages on one basis element.

    Returns {(uexp, mono', point'): hlist}.
    """
    factors = []
    for g in spec.graded:
        factors.append((g.c, g.mult * graded_eigenvalue(g.selector, point)))
    T, gser = power_factor_series(factors, n)
    q = LatticePoint(point[0] + spec.shift[0], point[1] + spec.shift[1])
    # polynomial in x_{j,r} after translation: {(uexp, mono): hlist}
    poly = {(0, ()): [Rational(1)] + [ZERO] * (n - 1)}
    if spec.annihilation and mono:
        counts = {}
        for key in mono:
            counts[key] = counts.get(key, 0) + 1
        for (j, r), mult in sorted(counts.items()):
            tau = _annih_translation(spec, j, r, n)
            # (x + tau)^mult = sum_i C(mult, i) x^(mult-i) tau^i
            powers = [{0: [Rational(1)] + [ZERO] * (n - 1)}]
            for _ in range(mult):
                powers.append(_uh_mul(powers[-1], tau, n))
            new = {}
            for (e0, m0), h0 in poly.items():
                for i in range(mult + 1):
                    binc = comb(mult, i)
                    m1 = m0 + ((j, r),) * (mult - i)
                    for e1, h1 in powers[i].items():
                        prod = mul_trunc(h0, h1, n)
                        if binc != 1:
                            prod = [x * binc for x in prod]
                        if any(prod):
                            _hadd(new, (e0 + e1, m1), prod, n)
            poly = new
    else:
        poly = {(0, tuple(mono)): poly[(0, ())]}
    out = {}
    for (e, m), hl in poly.items():
        for k in range(n):
            if not gser[k]:
                continue
            shifted = [ZERO] * n
            for i in range(n - k):
                shifted[i + k] = hl[i] * gser[k]
            if any(shifted):
                _hadd(out, (e + T - k, tuple(sorted(m)), q), shifted, n)
    return {k: v for k, v in out.items() if any(v)}


def _creation_coeffs(spec: OperatorSpec, j: int, r: int):
    """Coefficient of a_j(-r) in the creation exponent as {p: rational} (times u^p h^(r-p))."""
    out = {}
    for t in spec.creation:
        if t.color != j:
            continue
        s = t.sign / r
        if t.at_zero:
            out[0] = out.get(0, ZERO) + s * t.c ** r
        else:
            for p in range(r + 1):
                out[p] = out.get(p, ZERO) + s * comb(r, p) * t.c ** (r - p)
    return {p: c for p, c in out.items() if c}


def _poly_mul(a, b, wa, wb, n):
    """Multiply {p: coef} polynomials, dropping terms with (W - p) >= n."""
    out = {}
    w = wa + wb
    for pa, ca in a.items():
        for pb, cb in b.items():
            p = pa + pb
            if w - p < n:
                out[p] = out.get(p, ZERO) + ca * cb
    return {p: c for p, c in out.items() if c}


def _build_creation(spec: OperatorSpec, wmax: int, n: int):
    terms = [(0, (), {0: Rational(1)})]
    if not spec.creation:
        return terms
    for r in range(1, wmax + 1):
        for j in (1, 2):
            beta = _creation_coeffs(spec, j, r)
            if not beta:
                continue
            new = []
            for W, mono, poly in terms:
                new.append((W, mono, poly))
                power = {0: Rational(1)}
                fact = 1
                k = 0
                while W + (k + 1) * r <= wmax:
                    k += 1
                    fact *= k
                    power = _poly_mul(power, beta, (k - 1) * r, r, n)
                    if not power:
                        break
                    scaled = {p: c / fact for p, c in power.items()}
                    prod = _poly_mul(poly, scaled, W, k * r, n)
                    if prod:
                        new.append((W + k * r, mono + ((j, r),) * k, prod))
            terms = new
    terms.sort(key=lambda t: t[0])
    return [(W, tuple(sorted(m)), p) for W, m, p in terms]


def creation_expansion(spec: OperatorSpec, wmax: int, n: int):
    """exp(creation part) up to mode weight wmax: list of (W, mono, {p: coef}), sorted by W.

    Truncation at wmax only drops whole weights, so one expansion at the
    largest weight seen so far serves every smaller request as a prefix.
    """
    key = ("cre", spec.creation, n)
    full = CACHE.peek(key)
    if full is None or full[0] < wmax:
        w = wmax if full is None else max(wmax, full[0] + 4)
        terms = _build_creation(spec, w, n)
        full = (w, terms, [t[0] for t in terms])
        CACHE.put(key, full)
    return full[1][: bisect_right(full[2], wmax)]


def lower_bound_term(spec: OperatorSpec, mono, point, n: int):
    pre = _pre_cached(spec, mono, point, n)
    return min((e for (e, _, _) in pre), default=None)


def _pre_cached(spec, mono, point, n):
    return CACHE.get_or_compute(("pre", spec.key, mono, point, n), lambda: _pre_creation(spec, mono, point, n))


def _creation_stage(spec: OperatorSpec, pre, lo, hi, n):
    """Multiply aggregated pre-creation terms by the creation exponential.

    ``pre`` maps (uexp, mono, point) to h-coefficient lists; returns
    {uexp: {(mono, point): hlist}} on [lo, hi].
    """
    if not pre:
        return {}
    emin = min(e for (e, _, _) in pre)
    if lo is None:
        lo = emin
    if hi < lo:
        return {}
    wmax = max(0, hi - emin + n - 1)
    cre = creation_expansion(spec, wmax, n) if spec.creation else [(0, (), {0: ONE})]
    cre_w = [t[0] for t in cre]
    merged = {}
    out = {}
    for (e, m, q), hl in pre.items():
        if e > hi:
            continue
        a = next((i for i, x in enumerate(hl) if x), None)
        if a is None:
            continue
        wcap = hi - e + n - 1 - a
        # p <= W, so weights below lo - e cannot reach the window
        start = bisect_left(cre_w, lo - e)
        for idx in range(start, len(cre)):
            W, cm, poly = cre[idx]
            if W > wcap:
                break
            mono2 = None
            for p, cf in poly.items():
                ex = e + p
                if ex < lo or ex > hi:
                    continue
                s = W - p
                if s + a >= n:
                    continue
                if mono2 is None:
                    if not m or not cm:
                        mono2 = m or cm
                    else:
                        mk = (m, cm)
                        mono2 = merged.get(mk)
                        if mono2 is None:
                            mono2 = merged[mk] = tuple(sorted(m + cm))
                bucket = out.get(ex)
                if bucket is None:
                    bucket = out[ex] = {}
                key = (mono2, q)
                acc = bucket.get(key)
                if acc is None:
                    acc = bucket[key] = [ZERO] * n
                for i in range(a, n - s):
                    x = hl[i]
                    if x:
                        acc[i + s] += x * cf
    return out


def _apply_term(spec: OperatorSpec, mono, point, lo, hi, n):
    """{uexp: {(mono, point): hlist}} for one basis element, exponents in [lo, hi]."""
    return _creation_stage(spec, _pre_cached(spec, mono, point, n), lo, hi, n)


def apply_raw(spec: OperatorSpec, v: FockVector, lo, hi, n: int):
    """{uexp: FockVector} for spec(u) v mod h^n on [lo, hi] (lo=None: from the certified bound)."""
    if v.order < n:
        raise ValueError("vector order %d below requested order %d" % (v.order, n))
    # the non-creation stages are linear, so their outputs are summed before the
    # (expensive) creation stage; distinct inputs often share these terms
    pre = {}
    for (mono, point), c in v.terms.items():
        cl = c.coeffs[:n]
        for key, hl in _pre_cached(spec, mono, point, n).items():
            _hadd(pre, key, mul_trunc(cl, hl, n), n)
    acc = _creation_stage(spec, pre, lo, hi, n)
    out = {}
    for ex, bucket in acc.items():
        terms = {k: HSeries(h) for k, h in bucket.items() if any(h)}
        if terms:
            out[ex] = FockVector._raw(terms, n)
    return out


def lower_bound(spec: OperatorSpec, v: FockVector, n: int):
    """Certified lower bound on the u-support of spec(u) v mod h^n (None for zero)."""
    bounds = [lower_bound_term(spec, m, p, n) for (m, p) in v.terms]
    bounds = [b for b in bounds if b is not None]
    return min(bounds) if bounds else None


def apply(spec: OperatorSpec, v: FockVector, window, N: int) -> USeriesVector:
    lo, hi = window
    if lo is not None and hi is not None and lo > hi:
        raise WindowUnsound("empty window %s" % (window,))
    lb = lower_bound(spec, v, N)
    raw = apply_raw(spec, v, lo, hi, N)
    empty = lb is None or lo is None or lb >= lo
    lo_eff = lo if lo is not None else (lb if lb is not None else hi)
    return USeriesVector(("u",), ((lo_eff, hi),), {(e,): w for e, w in raw.items()}, N, empty, (lb,))


def apply_product(specs, v: FockVector, windows, N: int, variables=None) -> USeriesVector:
    """Composition spec_1(x_1) ... spec_k(x_k) v; the last pair acts first.

    ``specs`` is a list of (OperatorSpec, variable name); ``windows`` maps each
    variable to (lo, hi).  Exponent tuples of the result follow ``variables``
    (default: the order in which the variables appear in ``specs``).
    """
    listed = [var for _, var in specs]
    if variables is None:
        variables = listed
    variables = list(variables)
    if len(set(listed)) != len(listed) or sorted(listed) != sorted(variables):
        raise ValueError("each variable may carry one current")
    if len(variables) > 3:
        raise ValueError("at most 3 variables")
    state = {(): v}
    order = []
    certified = True
    for spec, var in reversed(specs):
        lo, hi = windows[var]
        new = {}
        for key, vec in state.items():
            lb = lower_bound(spec, vec, N)
            if lb is not None and lo is not None and lb < lo:
                certified = False
            for e, w in apply_raw(spec, vec, lo, hi, N).items():
                new[(e,) + key] = w
        state = new
        order.insert(0, var)
    # reorder exponent tuples to the order the variables were listed
    perm = [order.index(var) for var in variables]
    coeffs = {tuple(k[i] for i in perm): w for k, w in state.items()}
    return USeriesVector(tuple(variables), tuple(windows[x] for x in variables), coeffs, N, certified)


def substitute_shift(sv: USeriesVector, var: str, into: str, c) -> USeriesVector:
    """Set ``var`` = ``into`` + c h and collect exponents of ``into``.

    The input windows must be complete for every exponent combination that can
    reach the output window; the caller certifies this with below_window_empty.
    """
    if not sv.below_window_empty:
        raise IncompleteWindow("window in %s is not certified complete" % var)
    c = Rational(c)
    iv = sv.variables.index(var)
    it = sv.variables.index(into)
    n = sv.order
    out = {}
    for exps, w in sv.coeffs.items():
        b = exps[iv]
        for j, (e2, hs) in enumerate(_shift_terms(b, c, n)):
            new = list(exps)
            new[it] = exps[it] + e2
            del new[iv]
            key = tuple(new)
            term = w.scale(hs)
            out[key] = out[key] + term if key in out else term
    variables = tuple(x for x in sv.variables if x != var)
    win = list(sv.window)
    del win[iv]
    return USeriesVector(variables, tuple(win), {k: x for k, x in out.items() if not x.is_zero()}, n, True)


def _shift_terms(b: int, c: Rational, n: int):
    """(into + c h)^b as [(exponent of into, HSeries)]."""
    out = []
    for k in range(n):
        cf = binom(b, k) * (c ** k if k else 1)
        if cf:
            out.append((b - k, HSeries.monomial(cf, k, n)))
    return out


def split_halves(sv: USeriesVector):
    if len(sv.variables) != 1:
        raise ValueError("split_halves takes a one-variable series")
    if not sv.below_window_empty:
        raise IncompleteWindow("window not certified complete below")
    neg = {k: v for k, v in sv.coeffs.items() if k[0] < 0}
    pos = {k: v for k, v in sv.coeffs.items() if k[0] >= 0}
    mk = lambda d: USeriesVector(sv.variables, sv.window, d, sv.order, True)
    return mk(neg), mk(pos)
