"""Coefficient-exact checks of operator identities on Fock vectors.

Every check evaluates both sides of an identity independently on a finite
exponent window, modulo h^N, and records each nonzero coefficient of the
difference.  Rational prefactors are cleared by cross-multiplication so that
only polynomials in u, v, h ever multiply operator series.
"""

from __future__ import annotations

import json
import random
from math import floor
from dataclasses import dataclass, field

from .arith import HSeries, NotDivisible, Rational, binom, frac
from .fock import (
    LAMBDA,
    FockVector,
    apply_lattice_shift,
    graded_eigenvalue,
    mono_to_text,
    mono_weight,
    sector_point,
)
from .ops.catalog import catalog, compose, inverse, shifted
from .ops.currents import Compose, Current, SpecCurrent, product_series, t_current

MAX_RECORDED = 20


# ----- reports ----------------------------------------------------------------


@dataclass
class CheckReport:
    relation: str
    params: dict = field(default_factory=dict)
    discrepancies: list = field(default_factory=list)
    discrepancy_count: int = 0

    @property
    def passed(self) -> bool:
        return self.discrepancy_count == 0

    def record(self, label, exps, diff: FockVector):
        for (mono, p), c in diff.sorted_items():
            for k, x in enumerate(c.coeffs):
                if not x:
                    continue
                self.discrepancy_count += 1
                if len(self.discrepancies) < MAX_RECORDED:
                    self.discrepancies.append(
                        {
                            "where": label,
                            "exponents": list(exps),
                            "h_order": k,
                            "basis": "%s e(%s,%s)" % (mono_to_text(mono), p[0], p[1]),
                            "value": str(x),
                        }
                    )

    def merge(self, other: "CheckReport"):
        self.discrepancy_count += other.discrepancy_count
        room = MAX_RECORDED - len(self.discrepancies)
        self.discrepancies.extend(other.discrepancies[: max(room, 0)])

    def to_dict(self) -> dict:
        return {
            "relation": self.relation,
            "params": self.params,
            "passed": self.passed,
            "discrepancy_count": self.discrepancy_count,
            "first_discrepancy": self.discrepancies[0] if self.discrepancies else None,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "CheckReport":
        first = d.get("first_discrepancy")
        return cls(d["relation"], d.get("params", {}), [first] if first else [], d.get("discrepancy_count", 0))

    def summary(self) -> str:
        return "%s: %s (%d discrepancies)" % (self.relation, "passed" if self.passed else "FAILED", self.discrepancy_count)


def compare(report: CheckReport, label, lhs: dict, rhs: dict, box):
    """Record lhs - rhs on every exponent tuple inside ``box``."""
    for exps in sorted(set(lhs) | set(rhs)):
        if not all(lo <= e <= hi for e, (lo, hi) in zip(exps, box)):
            continue
        a, b = lhs.get(exps), rhs.get(exps)
        if a is None:
            d = -b
        elif b is None:
            d = a
        else:
            d = a - b
        if not d.is_zero():
            report.record(label, exps, d)


# ----- test vectors ------------------------------------------------------------


@dataclass(frozen=True)
class TestVector:
    __test__ = False  # keep pytest from collecting it

    name: str
    vector: FockVector

    def at(self, order: int) -> FockVector:
        if self.vector.order < order:
            raise ValueError("test vector %s only known mod h^%d" % (self.name, self.vector.order))
        return self.vector.truncate(order)


def _basis_vector(mono, i, k, order):
    return FockVector.basis(mono, sector_point(i, k), order)


def battery(i: int = 0, order: int = 8) -> list:
    """Deterministic vectors: vacuum, e^{+-alpha}, single modes of weight <= 3, one weight-4 vector."""
    out = [TestVector("vac", _basis_vector((), i, 0, order))]
    out.append(TestVector("e^alpha", _basis_vector((), i, 1, order)))
    out.append(TestVector("e^-alpha", _basis_vector((), i, -1, order)))
    for r in (1, 2, 3):
        for j in (1, 2):
            out.append(TestVector("a%d(-%d)" % (j, r), _basis_vector(((j, r),), i, 0, order)))
    mixed = ((1, 1), (1, 1), (2, 2))
    out.append(TestVector("a1(-1)^2 a2(-2) e^alpha", _basis_vector(mixed, i, 1, order)))
    return out


def small_battery(i: int = 0, order: int = 8) -> list:
    """Vacuum and e^alpha only."""
    return battery(i, order)[:2]


def _random_mono(rng, wmax):
    w = rng.randint(0, wmax)
    mono = []
    while w > 0:
        r = rng.randint(1, w)
        mono.append((rng.randint(1, 2), r))
        w -= r
    return tuple(sorted(mono))


def random_vectors(seed: int, count: int = 5, i: int = 0, order: int = 8, wmax: int = 3, terms: int = 3) -> list:
    """Seeded random combinations of basis vectors with h-dependent coefficients."""
    rng = random.Random(seed)
    out = []
    for n in range(count):
        tv = {}
        for _ in range(terms):
            key = (_random_mono(rng, wmax), sector_point(i, rng.randint(-1, 1)))
            coeffs = [Rational(rng.randint(-3, 3), rng.randint(1, 3)) for _ in range(order)]
            if not coeffs[0]:
                coeffs[0] = Rational(1)
            tv[key] = HSeries(coeffs)
        out.append(TestVector("random(seed=%d,#%d)" % (seed, n), FockVector(tv, order)))
    return out


def as_test_vectors(vectors) -> list:
    out = []
    for n, v in enumerate(vectors):
        out.append(v if isinstance(v, TestVector) else TestVector("v%d" % n, v))
    return out


# ----- delta function ----------------------------------------------------------


@dataclass
class DeltaSeries:
    """delta(u - v - c h) = sum_r u^(-r-1) (v + c h)^r on a window pair, mod h^N."""

    c: Rational
    window_u: tuple
    window_v: tuple
    order: int
    coeffs: dict  # (a, b) -> HSeries

    def __getitem__(self, ab):
        return self.coeffs.get(tuple(ab), HSeries.zero(self.order))


def delta_coeff(c, a: int, b: int, N: int) -> HSeries:
    """Coefficient of u^a v^b in delta(u - v - c h) mod h^N."""
    r = -a - 1
    k = r - b
    if k < 0 or k >= N:
        return HSeries.zero(N)
    return HSeries.monomial(binom(r, k) * frac(c) ** k, k, N)


def delta_expand(c, windows, N: int) -> DeltaSeries:
    (ulo, uhi), (vlo, vhi) = windows
    c = frac(c)
    out = {}
    for a in range(ulo, uhi + 1):
        for b in range(vlo, vhi + 1):
            x = delta_coeff(c, a, b, N)
            if not x.is_zero():
                out[(a, b)] = x
    return DeltaSeries(c, (ulo, uhi), (vlo, vhi), N, out)


def delta_times_current(c, cur, var: str, v: FockVector, box, N: int) -> dict:
    """Coefficients of delta(u - v - c h) A(var) v on the (u, v) box."""
    (ulo, uhi), (vlo, vhi) = box
    out = {}
    for a in range(ulo, uhi + 1):
        for b in range(vlo, vhi + 1):
            acc = None
            for k in range(N):
                if var == "u":
                    # delta term u^(a') v^b with a' = -b - k - 1, A_(a - a')
                    ap = -b - k - 1
                    m = a - ap
                    dc = delta_coeff(c, ap, b, N)
                else:
                    r = -a - 1
                    bp = r - k
                    m = b - bp
                    dc = delta_coeff(c, a, bp, N)
                if dc.is_zero():
                    continue
                w = cur.coeffs(v, m, m, N).get(m)
                if w is None:
                    continue
                term = w.scale(dc)
                acc = term if acc is None else acc + term
            if acc is not None and not acc.is_zero():
                out[(a, b)] = acc
    return out


# ----- polynomial prefactors ---------------------------------------------------


def linear_product(factors):
    """Expand prod (x_u u + x_v v + c h) as {(du, dv, dh): coef}."""
    poly = {(0, 0, 0): Rational(1)}
    for fu, fv, fc in factors:
        new = {}
        for (du, dv, dh), x in poly.items():
            for step, y in (((1, 0, 0), fu), ((0, 1, 0), fv), ((0, 0, 1), fc)):
                y = frac(y)
                if not y:
                    continue
                key = (du + step[0], dv + step[1], dh + step[2])
                new[key] = new.get(key, 0) + x * y
        poly = {k: x for k, x in new.items() if x}
    return poly


def x_minus(c):
    """The factor u - v + c h."""
    return (1, -1, c)


def poly_times(poly, series: dict, N: int) -> dict:
    """Multiply a two-variable series by a polynomial in u, v, h."""
    out = {}
    for (du, dv, dh), x in poly.items():
        if dh >= N:
            continue
        hs = HSeries.monomial(x, dh, N)
        for (a, b), w in series.items():
            key = (a + du, b + dv)
            term = w.scale(hs)
            out[key] = out[key] + term if key in out else term
    return out


def add_series(*parts) -> dict:
    out = {}
    for p in parts:
        for k, w in p.items():
            out[k] = out[k] + w if k in out else w
    return out


def _extend(box, d):
    return tuple((lo - d, hi) for lo, hi in box)


def _pair(cu, cv, first: str, v, box, N):
    """cu(u) cv(v) v (cv first) or cv(v) cu(u) v (cu first), keyed by (a, b)."""
    (ulo, uhi), (vlo, vhi) = box
    if first == "v":
        return product_series([cu, cv], v, [(ulo, uhi), (vlo, vhi)], N)
    res = product_series([cv, cu], v, [(vlo, vhi), (ulo, uhi)], N)
    return {(a, b): w for (b, a), w in res.items()}


# ----- (3.1): [X_alpha(u), X_{-alpha}(v)] --------------------------------------


def _k_ratio(sign: str, variant: str):
    """k_2(u - h/4) k_1(u - h/4)^{-1}."""
    k1 = catalog("k1_" + sign, variant)
    k2 = catalog("k2_" + sign, variant)
    q = Rational(-1, 4)
    return SpecCurrent(compose(shifted(k2, q), inverse(shifted(k1, q))))


def check_jps1(vectors, window=(-4, 4), N: int = 2, variant: str = "norm") -> CheckReport:
    """h [X_a(u), X_-a(v)] = d(u-v-h/2) K+(u) - d(u-v+h/2) K-(v), compared mod h^(N+1)."""
    tvs = as_test_vectors(vectors)
    box = (tuple(window), tuple(window))
    rep = CheckReport("jps1", {"vectors": [t.name for t in tvs], "window": list(window), "N": N, "variant": variant,
                               "convention": "both sides times h, internal order N+1"})
    n1 = N + 1
    xp = SpecCurrent(catalog("X_alpha", variant))
    xm = SpecCurrent(catalog("X_malpha", variant))
    kp, km = _k_ratio("plus", variant), _k_ratio("minus", variant)
    for tv in tvs:
        v = tv.at(n1)
        lhs = add_series(_pair(xp, xm, "v", v, box, n1), {k: -w for k, w in _pair(xp, xm, "u", v, box, n1).items()})
        lhs = {k: w.times_h(1) for k, w in lhs.items()}
        rhs = add_series(
            delta_times_current("1/2", kp, "u", v, box, n1),
            {k: -w for k, w in delta_times_current("-1/2", km, "v", v, box, n1).items()},
        )
        for k, w in rhs.items():
            if not w.truncate(1).is_zero():
                raise NotDivisible("right-hand side of the commutator is not divisible by h at %s" % (k,))
        diff = {}
        for k in set(lhs) | set(rhs):
            d = lhs.get(k, FockVector.zero(n1)) - rhs.get(k, FockVector.zero(n1))
            if not d.is_zero():
                diff[k] = d.divide_h()
        compare(rep, tv.name, diff, {}, box)
    return rep


def commutator_mod_h(v: FockVector, window=(-4, 4), variant: str = "norm") -> dict:
    """[X_a(u), X_-a(v)] v mod h, keyed by (a, b)."""
    box = (tuple(window), tuple(window))
    xp = SpecCurrent(catalog("X_alpha", variant))
    xm = SpecCurrent(catalog("X_malpha", variant))
    v = v.truncate(1)
    a = _pair(xp, xm, "v", v, box, 1)
    b = _pair(xp, xm, "u", v, box, 1)
    out = add_series(a, {k: -w for k, w in b.items()})
    return {k: w for k, w in out.items() if not w.is_zero()}


# ----- RTT relations -----------------------------------------------------------


RTT_PATTERNS = (("+", "+"), ("-", "-"), ("+", "-"))


def check_rtt(pattern, vectors, window=(-3, 3), N: int = 2, variant: str = "norm") -> CheckReport:
    """All 16 entries of R(u-v) T(u) T(v) = T(v) T(u) R(u-v) and of the mixed relation.

    With x = u - v and R(x) = (x + h P)/(x + h) the entries read, after clearing
    denominators,
      (s, s):  x t_ij(u) t_kl(v) + h t_kj(u) t_il(v) = x t_kl(v) t_ij(u) + h t_kj(v) t_il(u),
      (+, -):  (x + 3h/2) [(x - h/2) t+_ij(u) t-_kl(v) + h t+_kj(u) t-_il(v)]
             = (x + h/2) [(x + h/2) t-_kl(v) t+_ij(u) + h t-_kj(v) t+_il(u)]   (level 1).
    """
    su, sv = pattern
    tvs = as_test_vectors(vectors)
    box = (tuple(window), tuple(window))
    rep = CheckReport("rtt%s%s" % (su, sv), {"vectors": [t.name for t in tvs], "window": list(window), "N": N,
                                             "variant": variant, "convention": "cross-multiplied polynomial form"})
    t = {(i, j, s): t_current(i, j, s, variant) for i in (1, 2) for j in (1, 2) for s in "+-"}
    x0 = [x_minus(0)]
    if su == sv:
        pl_left = linear_product(x0)
        pl_right = linear_product(x0)
        ph_left = linear_product([(0, 0, 1)])
        ph_right = ph_left
        deg = 1
    else:
        pl_left = linear_product([x_minus("3/2"), x_minus("-1/2")])
        ph_left = linear_product([x_minus("3/2"), (0, 0, 1)])
        pl_right = linear_product([x_minus("1/2"), x_minus("1/2")])
        ph_right = linear_product([x_minus("1/2"), (0, 0, 1)])
        deg = 2
    ext = _extend(box, deg)
    for tv in tvs:
        v = tv.at(N)
        for i in (1, 2):
            for j in (1, 2):
                for k in (1, 2):
                    for l in (1, 2):
                        a = _pair(t[(i, j, su)], t[(k, l, sv)], "v", v, ext, N)
                        b = _pair(t[(k, j, su)], t[(i, l, sv)], "v", v, ext, N)
                        c = _pair(t[(i, j, su)], t[(k, l, sv)], "u", v, ext, N)
                        d = _pair(t[(i, l, su)], t[(k, j, sv)], "u", v, ext, N)
                        lhs = add_series(poly_times(pl_left, a, N), poly_times(ph_left, b, N))
                        rhs = add_series(poly_times(pl_right, c, N), poly_times(ph_right, d, N))
                        compare(rep, "%s t%d%d t%d%d" % (tv.name, i, j, k, l), lhs, rhs, box)
    return rep


# ----- Heisenberg subalgebra ---------------------------------------------------


def K_current(sign: str, variant: str = "norm"):
    """K(u) = k_1(u - h/2) k_2(u + h/2)."""
    return SpecCurrent(catalog("K_" + sign, variant))


def check_heisenberg(vectors, window=(-3, 3), N: int = 2, variant: str = "norm") -> CheckReport:
    """[K(u), K(v)] = 0 for both signs and, at level 1 (C_2 = -2),
    (x - 3h/2)(x + 3h/2) K+(u) K-(v) = (x - h/2)(x + h/2) K-(v) K+(u).
    """
    tvs = as_test_vectors(vectors)
    box = (tuple(window), tuple(window))
    rep = CheckReport("heisenberg", {"vectors": [t.name for t in tvs], "window": list(window), "N": N,
                                     "variant": variant, "convention": "cross-multiplied polynomial form"})
    kp, km = K_current("plus", variant), K_current("minus", variant)
    left = linear_product([x_minus("-3/2"), x_minus("3/2")])
    right = linear_product([x_minus("-1/2"), x_minus("1/2")])
    ext = _extend(box, 2)
    for tv in tvs:
        v = tv.at(N)
        for name, cur in (("K+K+", kp), ("K-K-", km)):
            compare(rep, "%s %s" % (tv.name, name), _pair(cur, cur, "v", v, box, N), _pair(cur, cur, "u", v, box, N), box)
        lhs = poly_times(left, _pair(kp, km, "v", v, ext, N), N)
        rhs = poly_times(right, _pair(kp, km, "u", v, ext, N), N)
        compare(rep, "%s K+K-" % tv.name, lhs, rhs, box)
    return rep


def kappa_mode(r: int, v: FockVector, N: int, variant: str = "norm") -> FockVector:
    """kappa^(r) v mod h^N, read off from K(u) = 1 -+ h kappa(u) at internal order N + 1."""
    n1 = N + 1
    if v.order < n1:
        raise ValueError("kappa modes need the vector mod h^(N+1)")
    v = v.truncate(n1)
    if r >= 0:
        m = -r - 1
        w = K_current("plus", variant).coeffs(v, m, m, n1).get(m, FockVector.zero(n1))
        return (-w).divide_h()
    m = -r - 1
    w = K_current("minus", variant).coeffs(v, m, m, n1).get(m, FockVector.zero(n1))
    if m == 0:
        w = w - v
    return w.divide_h()


def check_kappa_commute(vectors, modes=(-1, -2, -3), N: int = 2, variant: str = "norm") -> CheckReport:
    """kappa^(r) kappa^(s) = kappa^(s) kappa^(r) for the listed modes."""
    tvs = as_test_vectors(vectors)
    rep = CheckReport("kappa_commute", {"vectors": [t.name for t in tvs], "modes": list(modes), "N": N, "variant": variant})
    for tv in tvs:
        v = tv.at(N + 2)
        for x, r in enumerate(modes):
            for s in modes[x + 1:]:
                a = kappa_mode(r, kappa_mode(s, v, N + 1, variant), N, variant)
                b = kappa_mode(s, kappa_mode(r, v, N + 1, variant), N, variant)
                compare(rep, "%s k(%d)k(%d)" % (tv.name, r, s), {(r, s): a}, {(r, s): b}, ((r, r), (s, s)))
    return rep


# ----- commutativity and integrability of Xbar ---------------------------------


def _xbar_pair_lower_bound(v: FockVector, N: int) -> int:
    """Lower bound on u- (and v-) exponents of Xbar(u) Xbar(v) v mod h^N.

    Xbar(u) Xbar(v) = (u - v - h)(u - v + h) Xbar(u, v), where Xbar(u, v) is
    normal ordered: creation factors, then the annihilation exponentials in u
    and v, then e^(2 alpha) (u^2 - h^2)^(d_{alpha/2}) (v^2 - h^2)^(d_{alpha/2}).
    On a basis vector of weight d at a point with d_{alpha/2} = t the
    annihilation part reaches u^(-d) at worst, each power of h costing one more
    negative power; the grading factor starts at u^(2t) and, being a series in
    h^2/u^2, goes down to u^(2t - 2k) with 2k < N.  The polynomial prefactor and
    the creation part only raise exponents.
    """
    best = 0
    for (mono, p), _ in v.items():
        d = mono_weight(mono)
        t = graded_eigenvalue("alpha2", p)
        ann = 0 if d == 0 else -d - (N - 1)
        kmax = (N - 1) // 2
        if t.denominator == 1 and t >= 0:
            gr = max(0, int(2 * t) - 2 * kmax)
        else:
            gr = floor(2 * t) - 2 * kmax
        best = min(best, ann + gr)
    return best


def _xbar_products(v, box, N):
    xb = SpecCurrent(catalog("Xbar", "norm"))
    return _pair(xb, xb, "v", v, box, N), _pair(xb, xb, "u", v, box, N)


def substitute(series: dict, c, N: int, lows, hi_out: int) -> dict:
    """Set v = u + c h in a two-variable series known to vanish below ``lows``.

    Returns {u-exponent: vector} for exponents up to ``hi_out``; the series must
    contain every (a, b) with a >= lows[0], b >= lows[1], a + b <= hi_out + N - 1.
    """
    out = {}
    for (a, b), w in series.items():
        for e2, hs in _shift_row(b, c, N):
            m = a + e2
            if m > hi_out:
                continue
            term = w.scale(hs)
            out[m] = out[m] + term if m in out else term
    return out


def _shift_row(b, c, N):
    """(v + c h)^b expanded: [(u-exponent, HSeries)] for the N lowest h-powers."""
    c = frac(c)
    rows = []
    for k in range(N):
        cf = binom(b, k) * c**k
        if cf:
            rows.append((b - k, HSeries.monomial(cf, k, N)))
    return rows


def check_comm_int(vectors, window=(-5, 5), N: int = 3, widen: int = 0) -> CheckReport:
    """Xbar(u) Xbar(v) = Xbar(v) Xbar(u) on the window box, and
    Xbar(u) Xbar(u + h) = Xbar(u) Xbar(u - h) = 0 for u-exponents in the window.

    The limits v -> u +- h are taken on the triangle of exponents forced by the
    analytic lower bound; ``widen`` lowers that bound further as a sanity check.
    """
    tvs = as_test_vectors(vectors)
    box = (tuple(window), tuple(window))
    rep = CheckReport("comm_int", {"vectors": [t.name for t in tvs], "window": list(window), "N": N, "widen": widen,
                                   "convention": "limit v -> u +- h on the certified exponent triangle"})
    xb = SpecCurrent(catalog("Xbar", "norm"))
    lo, hi = window
    for tv in tvs:
        v = tv.at(N)
        uv, vu = _xbar_products(v, box, N)
        compare(rep, "%s symmetry" % tv.name, uv, vu, box)
        low = _xbar_pair_lower_bound(v, N) - widen
        top = hi + N - 1 - low
        tri = {}
        # the engine's own per-vector bounds must not undercut the analytic one
        if xb.low(v, N) < low:
            below = xb.coeffs(v, xb.low(v, N), low - 1, N)
            for b, w in below.items():
                rep.record("%s below bound" % tv.name, (b,), w)
        inner = xb.coeffs(v, low, top, N)
        for b, w in inner.items():
            elow = min(xb.low(w, N), low)
            for a, x in xb.coeffs(w, elow, hi + N - 1 - b, N).items():
                if a < low:
                    rep.record("%s below bound" % tv.name, (a, b), x)
                else:
                    tri[(a, b)] = x
        for c in ("1", "-1"):
            res = substitute(tri, c, N, (low, low), hi)
            compare(rep, "%s v=u%+dh" % (tv.name, int(c)), {(m,): w for m, w in res.items()}, {}, ((lo, hi),))
    return rep


# ----- straightening identities ------------------------------------------------


def _xbar_mode_pairs(xb, v: FockVector, sums, N: int) -> dict:
    """{(a, b): xbar(a) xbar(b) v} for every a + b in ``sums`` with a, b <= bmax.

    bmax is the largest mode with xbar(bmax) v possibly nonzero.  Pairs with
    a > bmax vanish because xbar(a) xbar(b) = xbar(b) xbar(a), which
    check_comm_int verifies separately.
    """
    bmax = -xb.low(v, N) - 1
    smin = min(sums)
    out = {}
    # modes appear as exponents -mode-1
    col = xb.coeffs(v, -bmax - 1, -(smin - bmax) - 1, N)
    for e, w in col.items():
        b = -e - 1
        alist = [s - b for s in sums if s - b <= bmax]
        if not alist:
            continue
        row = xb.coeffs(w, -max(alist) - 1, -min(alist) - 1, N)
        for a in alist:
            x = row.get(-a - 1)
            if x is not None:
                out[(a, b)] = x
    return out


def check_straightening_ids(r: int, vectors, N: int = 2) -> CheckReport:
    """The two rewriting rules for adjacent xbar modes.

    Mod h:  xbar(r) xbar(r+1) = -sum_{l>=1} xbar(r-l) xbar(r+l+1)  and
            xbar(r) xbar(r)   = -2 sum_{l>=1} xbar(r-l) xbar(r+l).
    Mod h^N, with the h-corrections: the coefficients of u^(-2r-3) and
    u^(-2r-2) in Xbar(u) Xbar(u + c h) vanish for c = +-1, i.e.
        sum_{j<N} sum_{a+b=S-j} binom(-b-1, j) (c h)^j xbar(a) xbar(b) v = 0
    for S = 2r+1 and S = 2r.
    """
    tvs = as_test_vectors(vectors)
    rep = CheckReport("straightening", {"r": r, "vectors": [t.name for t in tvs], "N": N,
                                        "convention": "mode sums cut at the largest nonvanishing mode"})
    xb = SpecCurrent(catalog("Xbar", "norm"))
    for tv in tvs:
        v = tv.at(N)
        sums = [2 * r + 1 - j for j in range(N)] + [2 * r - j for j in range(N)]
        pairs = _xbar_mode_pairs(xb, v, sorted(set(sums)), N)
        zero = FockVector.zero(1)

        def get(a, b, order):
            x = pairs.get((a, b))
            return zero if x is None else x.truncate(order)

        bmax = -xb.low(v, N) - 1
        lhs1 = get(r, r + 1, 1)
        rhs1 = -sum((get(r - l, r + l + 1, 1) for l in range(1, max(1, bmax - r) + 1)), FockVector.zero(1))
        compare(rep, "%s adjacent mod h" % tv.name, {(r,): lhs1}, {(r,): rhs1}, ((r, r),))
        lhs2 = get(r, r, 1)
        rhs2 = sum((get(r - l, r + l, 1) for l in range(1, max(1, bmax - r) + 1)), FockVector.zero(1)).scale(-2)
        compare(rep, "%s equal mod h" % tv.name, {(r,): lhs2}, {(r,): rhs2}, ((r, r),))
        for S in (2 * r + 1, 2 * r):
            for c in (1, -1):
                total = FockVector.zero(N)
                for (a, b), x in pairs.items():
                    j = S - a - b
                    if 0 <= j < N:
                        cf = binom(-b - 1, j) * frac(c) ** j
                        if cf:
                            total = total + x.scale(HSeries.monomial(cf, j, N))
                compare(rep, "%s exact S=%d c=%+d" % (tv.name, S, c), {(S,): total}, {}, ((S, S),))
    return rep


# ----- exchange identities behind the closure of L_0 and L_1 -------------------


def _chain(ops, v: FockVector, windows, N: int) -> dict:
    """Apply ``ops`` (listed left to right) to v.

    Each op is a Current, which consumes the next window and contributes one
    exponent to the key, or a lattice vector, which translates the result.
    """
    wins = list(windows)
    state = {(): v}
    for op in reversed(ops):
        if isinstance(op, Current):
            lo, hi = wins.pop()
            new = {}
            for key, w in state.items():
                for m, x in op.coeffs(w, lo, hi, N).items():
                    new[(m,) + key] = x
            state = new
        else:
            state = {key: apply_lattice_shift(op, w) for key, w in state.items()}
    return state


def _swap(series: dict) -> dict:
    return {(b, a): w for (a, b), w in series.items()}


def power_product(factors, N: int) -> dict:
    """prod (u + c h)^p for rational p with integral total exponent, as {u-exponent: HSeries}.

    Each factor is expanded as u^p sum_j binom(p, j) (c h / u)^j, so the
    product is a finite Laurent polynomial mod h^N.
    """
    total = sum((frac(p) for _, p in factors), Rational(0))
    if total.denominator != 1:
        raise ValueError("total exponent %s is not an integer" % total)
    acc = {0: HSeries.monomial(1, 0, N)}
    for c, p in factors:
        c, p = frac(c), frac(p)
        new = {}
        for j in range(N):
            cf = binom(p, j) * c**j
            if not cf:
                continue
            hs = HSeries.monomial(cf, j, N)
            for e, x in acc.items():
                new[e - j] = new[e - j] + x * hs if e - j in new else x * hs
        acc = {e: x for e, x in new.items() if not x.is_zero()}
    return {e + int(total): x for e, x in acc.items()}


def times_u(poly: dict, series: dict, axis: int, N: int) -> dict:
    """Multiply a series (tuple keys) by a Laurent polynomial in the variable at ``axis``."""
    out = {}
    for d, hs in poly.items():
        for key, w in series.items():
            k2 = key[:axis] + (key[axis] + d,) + key[axis + 1:]
            term = w.scale(hs)
            out[k2] = out[k2] + term if k2 in out else term
    return out


def _cur(name, shift=None, inv=False):
    spec = catalog(name, "norm")
    if inv:
        spec = inverse(spec)
    if shift is not None:
        spec = shifted(spec, shift)
    return SpecCurrent(spec)


def _closure_exchange(rep, tvs, window, N):
    Ep, Em, E0 = _cur("E_plus"), _cur("E_minus"), _cur("E_zero")
    Ebp, Eb0 = _cur("Ebar_plus"), _cur("Ebar_zero")
    box = (tuple(window), tuple(window))
    src = _extend(box, 2)
    q = frac("1/4")
    # (lhs prefactor, A, B, rhs prefactor): prefactor_l A(u) B(v) = prefactor_r B(v) A(u)
    rules = [
        ("E+E-", [(1, 0, q), (1, 0, q)], Ep, Em, [x_minus(0), x_minus(1)]),
        ("E0E0", [(0, 1, q), (0, 1, q)], E0, E0, [(1, 0, q), (1, 0, q)]),
        ("Ebar+E-", [x_minus(0), (1, 0, frac("-7/4"))], Ebp, Em, [x_minus(-1), (1, 0, q)]),
        ("Ebar0E0", [(1, 0, 0)], Eb0, E0, [(1, 0, -1)]),
    ]
    for tv in tvs:
        v = tv.at(N)
        for label, pl, A, B, pr in rules:
            lhs = poly_times(linear_product(pl), _pair(A, B, "v", v, src, N), N)
            rhs = poly_times(linear_product(pr), _pair(A, B, "u", v, src, N), N)
            compare(rep, "%s %s" % (tv.name, label), lhs, rhs, box)


def _closure_E_plus(rep, ks, window, N):
    """E^+(u) e^{k alpha} X_alpha(v) 1 = (1 - v/u)(1 - v/(u + h)) e^{k alpha} X_alpha(v) 1."""
    Ep, X = _cur("E_plus"), _cur("X_alpha")
    box = (tuple(window), tuple(window))
    src = _extend(box, 2)
    one = FockVector.vacuum(0, N)
    for k in ks:
        beta = (k, -k)
        lhs = _chain([Ep, beta, X], one, src, N)
        base = {(0, b): w for (b,), w in _chain([beta, X], one, src[1:], N).items()}
        lhs = poly_times(linear_product([(1, 0, 0), (1, 0, 1)]), lhs, N)
        rhs = poly_times(linear_product([x_minus(0), x_minus(1)]), base, N)
        compare(rep, "k=%d E+ factor" % k, lhs, rhs, box)


def _closure_cal_E_minus(rep, ks, window, N):
    """calE^-(u) e^{k alpha} X_alpha(v) 1 in its two rewritten forms.

    Keys are (u, v); u runs over nonnegative powers only.
    """
    cE, X = _cur("cal_E_minus"), _cur("X_alpha")
    lo, hi = window
    box = ((0, hi), (lo, hi))
    src = _extend(box, 2)
    one = FockVector.vacuum(0, N)
    malpha = (-1, 1)
    # calE^-(u) 1 = e^{-alpha} X_alpha(u) 1
    a = {(m,): w for (m,), w in _chain([cE], one, [src[0]], N).items()}
    b = {(m,): w for (m,), w in _chain([malpha, X], one, [src[0]], N).items()}
    compare(rep, "calE-(u)1", a, b, (box[0],))
    vv = linear_product([(0, 1, 0), (0, 1, 1)])
    gg = linear_product([(-1, 1, 0), (-1, 1, 1)])
    for k in ks:
        beta, beta1 = (k, -k), (k - 1, 1 - k)
        left = _chain([cE, beta, X], one, src, N)
        moved = _swap(_chain([beta, X, cE], one, (src[1], src[0]), N))
        through = _swap(_chain([beta, X, malpha, X], one, (src[1], src[0]), N))
        final = _swap(_chain([beta1, X, X], one, (src[1], src[0]), N))
        compare(rep, "k=%d F form" % k, poly_times(gg, left, N), poly_times(vv, moved, N), box)
        compare(rep, "k=%d e^-alpha moved left" % k, poly_times(vv, through, N), final, box)
        compare(rep, "k=%d G form" % k, poly_times(gg, left, N), final, box)


def _closure_X_malpha(rep, ks, window, N):
    """X_{-alpha}(u) e^{k alpha} X_alpha(v) 1
    = (u - h/2)^(-k) (u + h/2)^(-k) prod (u - v -+ h/2)^(-1) calE^-(u + h/2)^(-1) e^{(k-1) alpha} X_alpha(v) 1.
    """
    Xm, X = _cur("X_malpha"), _cur("X_alpha")
    cEi = _cur("cal_E_minus", shift=frac("1/2"), inv=True)
    lo, hi = window
    box = ((lo, hi), (lo, hi))
    one = FockVector.vacuum(0, N)
    half = frac("1/2")
    for k in ks:
        beta, beta1 = (k, -k), (k - 1, 1 - k)
        pre = power_product([(-half, -k), (half, -k)], N)
        up = max(0, -min(pre))
        src = ((lo - 2 - max(0, max(pre)), hi + up), (lo - 2, hi))
        lhs = poly_times(linear_product([x_minus(-half), x_minus(half)]), _chain([Xm, beta, X], one, src, N), N)
        rhs = times_u(pre, _chain([cEi, beta1, X], one, src, N), 0, N)
        compare(rep, "k=%d X_-alpha factor" % k, lhs, rhs, box)


def _closure_lambda1(rep, tvs, window, N):
    """Moving e^{lambda_1} to the left through X_{+-alpha}(u) and H^{+-}(u)."""
    lam = LAMBDA[1]
    half = frac("1/2")
    rules = [
        ("X_alpha", _cur("X_alpha"), [(0, half), (1, half)]),
        ("X_malpha", _cur("X_malpha"), [(-half, -half), (half, -half)]),
        ("H_plus", _cur("H_plus"), [(frac("7/4"), half), (frac("-1/4"), -half)]),
        ("H_minus", _cur("H_minus"), []),
    ]
    lo, hi = window
    for tv in tvs:
        v = tv.at(N)
        for label, cur, factors in rules:
            pre = power_product(factors, N)
            src = ((lo - max(pre), hi - min(pre)),)
            lhs = _chain([cur, lam], v, ((lo, hi),), N)
            rhs = times_u(pre, _chain([lam, cur], v, src, N), 0, N)
            compare(rep, "%s %s" % (tv.name, label), lhs, rhs, ((lo, hi),))


def _closure_H_minus(rep, tvs, window, N):
    """H^-(u - h/4) = calE^-(u) calE^-(u + h)^(-1) on F_0."""
    lhs_cur = _cur("H_minus", shift=frac("-1/4"))
    rhs_cur = Compose(_cur("cal_E_minus"), _cur("cal_E_minus", shift=1, inv=True))
    for tv in tvs:
        v = tv.at(N)
        box = (tuple(window),)
        compare(rep, "%s H-" % tv.name, _chain([lhs_cur], v, box, N), _chain([rhs_cur], v, box, N), box)


def _closure_xtilde_product(rep, window, N):
    """Xtilde(u) 1 = X_alpha(u) 1 and (u2 + h) Xtilde(u2) Xtilde(u1) 1 = u2 X_alpha(u2) X_alpha(u1) 1."""
    Xt, X = _cur("Xtilde"), _cur("X_alpha")
    one = FockVector.vacuum(0, N)
    box1 = (tuple(window),)
    compare(rep, "n=1", _chain([Xt], one, box1, N), _chain([X], one, box1, N), box1)
    box = (tuple(window), tuple(window))
    src = _extend(box, 1)
    lhs = poly_times(linear_product([(1, 0, 1)]), _chain([Xt, Xt], one, src, N), N)
    rhs = poly_times(linear_product([(1, 0, 0)]), _chain([X, X], one, src, N), N)
    compare(rep, "n=2", lhs, rhs, box)


def _closure_xtilde_translation(rep, tvs, modes, N):
    """xtilde(-1) 1 = e^alpha 1 and xtilde(r) e^{-alpha} = e^{-alpha} xtilde(r - 2)."""
    Xt = _cur("Xtilde")
    one = FockVector.vacuum(0, N)
    got = Xt.coeffs(one, 0, 0, N).get(0, FockVector.zero(N))
    compare(rep, "xtilde(-1)1", {(0,): got}, {(0,): FockVector.basis((), (1, -1), N)}, ((0, 0),))
    malpha = (-1, 1)
    for tv in tvs:
        v = tv.at(N)
        for r in modes:
            lhs = _chain([Xt, malpha], v, [(-r - 1, -r - 1)], N)
            rhs = _chain([malpha, Xt], v, [(-r + 1, -r + 1)], N)
            compare(rep, "%s xtilde(%d)" % (tv.name, r), {(r,): lhs.get((-r - 1,), FockVector.zero(N))},
                    {(r,): rhs.get((-r + 1,), FockVector.zero(N))}, ((r, r),))


CLOSURE_IDENTITIES = (
    "exchange",
    "E_plus_factor",
    "cal_E_minus_factor",
    "X_malpha_factor",
    "lambda1",
    "H_minus_factor",
    "xtilde_product",
    "xtilde_translation",
)


def check_closure(identity: str, params: dict | None = None, N: int = 2) -> CheckReport:
    """Displayed exchange identities that carry the closure arguments.

    All rational prefactors are cleared by cross-multiplication, except the
    one-variable factors (u + c h)^p, which are finite Laurent polynomials
    mod h^N when expanded in u^(-1).
    """
    if identity not in CLOSURE_IDENTITIES:
        raise ValueError("unknown closure identity %r" % identity)
    params = dict(params or {})
    window = tuple(params.get("window", (-3, 3)))
    ks = tuple(params.get("ks", (-1, 0, 1)))
    tvs = as_test_vectors(params.get("vectors") or small_battery())
    rep = CheckReport("closure:" + identity, {"N": N, "window": list(window),
                                              "convention": "cross-multiplied; one-variable factors expanded in u^-1"})
    if identity == "exchange":
        rep.params["vectors"] = [t.name for t in tvs]
        _closure_exchange(rep, tvs, window, N)
    elif identity == "E_plus_factor":
        rep.params["ks"] = list(ks)
        _closure_E_plus(rep, ks, window, N)
    elif identity == "cal_E_minus_factor":
        rep.params["ks"] = list(ks)
        _closure_cal_E_minus(rep, ks, window, N)
    elif identity == "X_malpha_factor":
        rep.params["ks"] = list(ks)
        _closure_X_malpha(rep, ks, window, N)
    elif identity == "lambda1":
        rep.params["vectors"] = [t.name for t in tvs]
        _closure_lambda1(rep, tvs, window, N)
    elif identity == "H_minus_factor":
        rep.params["vectors"] = [t.name for t in tvs]
        _closure_H_minus(rep, tvs, window, N)
    elif identity == "xtilde_product":
        _closure_xtilde_product(rep, window, N)
    else:
        modes = tuple(params.get("modes", (-1, 0, 1)))
        rep.params["vectors"] = [t.name for t in tvs]
        rep.params["modes"] = list(modes)
        _closure_xtilde_translation(rep, tvs, modes, N)
    return rep


# ----- suite runner ------------------------------------------------------------


SUITES = ("jps1", "comm_int", "rtt", "straightening", "heisenberg", "closure")
BATTERIES = ("small", "battery", "full")


def select_vectors(name: str = "small", seed: int = 0, i: int = 0, order: int = 8) -> list:
    """'small': vacuum and e^alpha; 'battery': the deterministic battery; 'full': battery plus 5 seeded vectors."""
    if name == "small":
        return small_battery(i, order)
    if name == "battery":
        return battery(i, order)
    if name == "full":
        return battery(i, order) + random_vectors(seed, 5, i, order)
    raise ValueError("unknown vector selector %r" % name)


def _defaults(rel):
    return {"jps1": (-4, 4), "comm_int": (-5, 5), "rtt": (-3, 3), "heisenberg": (-3, 3), "closure": (-3, 3)}.get(rel)


def run_suite(selector: str = "all", N: int = 2, window=None, vectors: str = "small", seed: int = 0) -> list:
    """Run one relation family (or all of them); reports are sorted by relation id, then params."""
    if selector == "all":
        rels = SUITES
    elif selector in SUITES:
        rels = (selector,)
    else:
        raise ValueError("unknown relation selector %r" % selector)
    order = max(8, N + 2)
    tvs = select_vectors(vectors, seed, 0, order)
    reports = []
    for rel in rels:
        win = tuple(window) if window is not None else _defaults(rel)
        if rel == "jps1":
            reports.append(check_jps1(tvs, win, N))
        elif rel == "comm_int":
            reports.append(check_comm_int(tvs, win, N))
        elif rel == "rtt":
            for variant in ("IK", "norm"):
                for pat in RTT_PATTERNS:
                    reports.append(check_rtt(pat, tvs, win, N, variant))
        elif rel == "straightening":
            for r in (-1, -2, -3):
                reports.append(check_straightening_ids(r, tvs, N))
        elif rel == "heisenberg":
            reports.append(check_heisenberg(tvs, win, N))
            reports.append(check_kappa_commute(tvs, N=N))
        else:
            for ident in CLOSURE_IDENTITIES:
                reports.append(check_closure(ident, {"window": win, "vectors": tvs}, N))
    reports.sort(key=lambda r: (r.relation, json.dumps(r.params, sort_keys=True, default=str)))
    return reports
