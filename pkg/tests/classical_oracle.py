"""Independent h = 0 model of the lattice vertex operators X_{+-alpha}(u).

The Fock space is modelled as sympy polynomials in x[j, r] ~ a_j(-r) tagged by
a lattice point; a_j(r), r > 0, acts as r d/dx[j, r].  At h = 0 both catalog
variants reduce to

    X_{s alpha}(u) = exp(-s sum_r alpha(-r) u^r / r) exp(s sum_r alpha(r) u^{-r} / r)
                     e^{s alpha} u^{s (alpha, mu)},      alpha(r) = a_1(r) - a_2(r).
"""

from __future__ import annotations

from functools import lru_cache

import sympy as sp

u = sp.Symbol("u")


@lru_cache(maxsize=None)
def x(j: int, r: int):
    return sp.Symbol("x%d_%d" % (j, r))


def from_fock(v) -> dict:
    """{(m1, m2): polynomial} from a FockVector, keeping the h^0 coefficients."""
    out = {}
    for (mono, p), c in v.terms.items():
        c0 = c.coeffs[0]
        if not c0:
            continue
        term = sp.Rational(int(c0.numerator), int(c0.denominator))
        for j, r in mono:
            term *= x(j, r)
        key = (sp.Rational(str(p[0])), sp.Rational(str(p[1])))
        out[key] = sp.expand(out.get(key, 0) + term)
    return {k: f for k, f in out.items() if f != 0}


def _max_mode(f) -> int:
    return max([int(s.name.split("_")[1]) for s in f.free_symbols if s.name.startswith("x")], default=0)


def _annihilation(f, coef):
    """exp(sum_r (c1 a_1(r) + c2 a_2(r)) u^{-r} / r) f as an expression in u^{-1}."""
    c1, c2 = coef
    R = _max_mode(f)
    out, term, k = 0, f, 0
    while term != 0:
        out += term / sp.factorial(k)
        k += 1
        nxt = 0
        for r in range(1, R + 1):
            nxt += u ** (-r) * (c1 * sp.diff(term, x(1, r)) + c2 * sp.diff(term, x(2, r)))
        term = sp.expand(nxt)
    return sp.expand(out)


def _creation_series(s: int, K: int) -> dict:
    """exp(sum_k c_k u^k), c_k = -s alpha(-k)/k, up to u^K via n e_n = sum_k k c_k e_{n-k}."""
    c = {k: -s * (x(1, k) - x(2, k)) / k for k in range(1, K + 1)}
    e = {0: sp.Integer(1)}
    for n in range(1, K + 1):
        e[n] = sp.expand(sum(k * c[k] * e[n - k] for k in range(1, n + 1)) / n)
    return e


def _laurent(expr) -> dict:
    """{exponent: coefficient} of a Laurent polynomial in u."""
    expr = sp.expand(expr)
    out = {}
    for t in sp.Add.make_args(expr):
        c, e = t.as_coeff_exponent(u)
        rest = sp.expand(t / u**e)
        out[int(e)] = out.get(int(e), 0) + rest
    return {e: sp.expand(c) for e, c in out.items() if sp.expand(c) != 0}


def apply_x(s: int, vec: dict, lo: int, hi: int, ann=None) -> dict:
    """{u-exponent: {point: polynomial}} for X_{s alpha}(u) vec on [lo, hi].

    ``ann`` = (c1, c2) replaces the annihilation coefficients (s, -s); the
    lowered current Xbar(u) = X_alpha(u) Ebar^+(u) Ebar^0(u) has (2, 0) at h = 0.
    """
    ann_coef = (s, -s) if ann is None else ann
    out = {}
    for (m1, m2), f in vec.items():
        pair = m1 - m2
        lowered = _laurent(_annihilation(f, ann_coef))
        grade = int(s * pair)
        shifted = {e + grade: c for e, c in lowered.items()}
        emin = min(shifted, default=0)
        K = max(0, hi - emin)
        cre = _creation_series(s, K)
        q = (m1 + s, m2 - s)
        for e1, c1 in shifted.items():
            for e2, c2 in cre.items():
                m = e1 + e2
                if lo <= m <= hi:
                    bucket = out.setdefault(m, {})
                    bucket[q] = sp.expand(bucket.get(q, 0) + c1 * c2)
    return {m: {q: f for q, f in d.items() if f != 0} for m, d in out.items()}


def pair_product(s_left: int, s_right: int, vec: dict, box, ann=None) -> dict:
    """{(a, b): vector} for X_{s_left}(u) X_{s_right}(v) vec, a the u-exponent."""
    (lo1, hi1), (lo2, hi2) = box
    out = {}
    inner = apply_x(s_right, vec, lo2, hi2, ann)
    for b, w in inner.items():
        for a, z in apply_x(s_left, w, lo1, hi1, ann).items():
            if z:
                out[(a, b)] = z
    return out


def to_plain(d: dict) -> dict:
    """Canonical comparable form: {key: {point: expanded polynomial}} without zeros."""
    out = {}
    for k, vec in d.items():
        vv = {q: sp.expand(f) for q, f in vec.items() if sp.expand(f) != 0}
        if vv:
            out[k] = vv
    return out
