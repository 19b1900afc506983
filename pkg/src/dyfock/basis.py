"""Difference-two monomial bases, straightening, flavor conversion and rank checks.

A monomial x(r_n) ... x(r_1) 1 is stored with its modes rightmost-first,
``modes = (r_1, ..., r_n)``, so evaluation walks the tuple left to right.
The degree of a factor x(r) is -r.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import re
from dataclasses import dataclass, field
from functools import lru_cache

from .arith import HSeries, Rational, binom
from .fock import LAMBDA, FockVector, apply_lattice_shift
from .ops.catalog import catalog
from .ops.currents import SpecCurrent
from .verify import kappa_mode

log = logging.getLogger(__name__)

FLAVORS = {"x": "X_alpha", "xbar": "Xbar", "xtilde": "Xtilde"}


class NoTermination(RuntimeError):
    """Rewriting exceeded its step budget."""


# ----- monomial indices --------------------------------------------------------


@dataclass(frozen=True, order=True)
class MonomialIndex:
    flavor: str = "x"
    modes: tuple = ()
    charge_prefix: int = 0
    sector: int = 0
    heis_prefix: tuple = ()

    def __post_init__(self):
        if self.flavor not in FLAVORS:
            raise ValueError("unknown flavor %r" % self.flavor)
        if self.sector not in (0, 1):
            raise ValueError("sector must be 0 or 1")
        object.__setattr__(self, "modes", tuple(int(r) for r in self.modes))
        object.__setattr__(self, "heis_prefix", tuple(sorted(int(r) for r in self.heis_prefix)))
        if any(r <= 0 for r in self.heis_prefix):
            raise ValueError("Heisenberg prefix entries must be positive")

    @property
    def degree(self) -> int:
        return -sum(self.modes)

    @property
    def charge(self) -> int:
        return len(self.modes)

    def admissible(self) -> bool:
        return is_admissible(self.modes)

    def with_modes(self, modes) -> "MonomialIndex":
        return MonomialIndex(self.flavor, tuple(modes), self.charge_prefix, self.sector, self.heis_prefix)

    def to_text(self) -> str:
        sym = {"x": "x", "xbar": "xb", "xtilde": "xt"}[self.flavor]
        body = "".join("%s(%d)" % (sym, r) for r in reversed(self.modes)) or "1"
        head = []
        if self.heis_prefix:
            head.append("".join("k(%d)" % -r for r in reversed(self.heis_prefix)))
        if self.sector or self.charge_prefix:
            head.append("e[%d,%d]" % (self.sector, self.charge_prefix))
        return " ".join(head + [body])

    def to_dict(self) -> dict:
        return {"flavor": self.flavor, "modes": list(self.modes), "charge_prefix": self.charge_prefix,
                "sector": self.sector, "heis_prefix": list(self.heis_prefix)}


def is_admissible(modes) -> bool:
    """r_1 <= -1 and r_{j+1} <= r_j - 2."""
    if not modes:
        return True
    if modes[0] > -1:
        return False
    return all(b <= a - 2 for a, b in zip(modes, modes[1:]))


def parse_modes(text: str) -> tuple:
    """'-1,-3' -> (-1, -3), listed rightmost factor first."""
    text = text.strip()
    if not text:
        return ()
    if not re.fullmatch(r"-?\d+(\s*,\s*-?\d+)*", text):
        raise ValueError("bad mode list %r" % text)
    return tuple(int(t) for t in text.split(","))


def _sort_key(idx: MonomialIndex):
    return (idx.degree, idx.charge, idx.modes)


def enumerate_basis(d_max: int, n_max: int | None = None, flavor: str = "x") -> list:
    """All admissible indices of degree <= d_max and charge <= n_max."""
    if d_max < 0 or (n_max is not None and n_max < 0):
        raise ValueError("bounds must be nonnegative")
    out = []

    def grow(modes, deg):
        out.append(MonomialIndex(flavor, tuple(modes)))
        if n_max is not None and len(modes) >= n_max:
            return
        nxt = -1 if not modes else modes[-1] - 2
        r = nxt
        while deg - r <= d_max:
            modes.append(r)
            grow(modes, deg - r)
            modes.pop()
            r -= 1

    grow([], 0)
    return sorted(out, key=_sort_key)


# ----- Rogers-Ramanujan counts -------------------------------------------------


def _partitions(d: int, largest: int):
    if d == 0:
        yield ()
        return
    for p in range(min(d, largest), 0, -1):
        for rest in _partitions(d - p, p):
            yield (p,) + rest


@lru_cache(maxsize=None)
def _rr_table(d: int) -> dict:
    counts = {}
    for part in _partitions(d, d):
        if all(a - b >= 2 for a, b in zip(part, part[1:])):
            counts[len(part)] = counts.get(len(part), 0) + 1
    return counts


def rr_count(d: int, n: int | None = None) -> int:
    """Partitions of d into parts >= 1 with pairwise differences >= 2 (exactly n parts if given)."""
    if d < 0:
        raise ValueError("degree must be nonnegative")
    table = _rr_table(d)
    return sum(table.values()) if n is None else table.get(n, 0)


@dataclass
class CharacterTable:
    rows: dict = field(default_factory=dict)  # (n, d) -> count

    @classmethod
    def build(cls, d_max: int) -> "CharacterTable":
        rows = {}
        for idx in enumerate_basis(d_max):
            key = (idx.charge, idx.degree)
            rows[key] = rows.get(key, 0) + 1
        return cls(rows)

    def records(self):
        return [{"charge": n, "degree": d, "count": c, "oracle": rr_count(d, n)}
                for (n, d), c in sorted(self.rows.items())]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=["charge", "degree", "count", "oracle"], lineterminator="\n")
        w.writeheader()
        w.writerows(self.records())
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps({"rows": self.records()}, sort_keys=True)

    def consistent(self) -> bool:
        return all(r["count"] == r["oracle"] for r in self.records())


# ----- evaluation --------------------------------------------------------------


@lru_cache(maxsize=None)
def flavor_current(flavor: str) -> SpecCurrent:
    return SpecCurrent(catalog(FLAVORS[flavor], "norm"))


def apply_modes(flavor: str, modes, v: FockVector, N: int) -> FockVector:
    """Apply the mode coefficients (rightmost first) to v; the mode r is the u^(-r-1) coefficient."""
    cur = flavor_current(flavor)
    for r in modes:
        if v.is_zero():
            return v
        e = -r - 1
        v = cur.coeffs(v, e, e, N).get(e, FockVector.zero(N))
    return v


def prefix_shift(idx: MonomialIndex):
    lam = LAMBDA[idx.sector]
    k = idx.charge_prefix
    return (lam[0] + k, lam[1] - k)


def evaluate_monomial(idx: MonomialIndex, N: int) -> FockVector:
    """kappa-prefix e^{lambda_i + k alpha} (modes applied to the vacuum of F_0), mod h^N."""
    n0 = N + len(idx.heis_prefix)
    v = apply_modes(idx.flavor, idx.modes, FockVector.vacuum(0, n0), n0)
    v = apply_lattice_shift(prefix_shift(idx), v)
    return apply_kappas(idx.heis_prefix, v, N)


def apply_kappas(kappas, v: FockVector, N: int) -> FockVector:
    """kappa^(-r_n) ... kappa^(-r_1) v; v must be known mod h^(N + len(kappas))."""
    order = N + len(kappas)
    if v.order < order:
        raise ValueError("need the vector mod h^%d" % order)
    v = v.truncate(order)
    for r in kappas:
        order -= 1
        v = kappa_mode(-r, v, order)
    return v


def heisenberg_extend(idx: MonomialIndex, kappas, N: int) -> FockVector:
    """kappa^(-r_n) ... kappa^(-r_1) applied to the monomial, mod h^N."""
    full = MonomialIndex(idx.flavor, idx.modes, idx.charge_prefix, idx.sector, tuple(idx.heis_prefix) + tuple(kappas))
    return evaluate_monomial(full, N)


def evaluate_combination(terms: dict, N: int) -> FockVector:
    total = FockVector.zero(N)
    for idx, c in terms.items():
        total = total + evaluate_monomial(idx, N).scale(c.truncate(N))
    return total


# ----- straightening -----------------------------------------------------------


@dataclass
class StraightenedCombination:
    order: int
    terms: dict  # admissible MonomialIndex -> HSeries

    def evaluate(self) -> FockVector:
        return evaluate_combination(self.terms, self.order)

    def to_dict(self) -> dict:
        return {"order": self.order,
                "terms": [{"index": k.to_dict(), "text": k.to_text(), "coeff": c.to_text()}
                          for k, c in sorted(self.terms.items(), key=lambda kv: _sort_key(kv[0]))]}


def _canon(modes) -> tuple:
    return tuple(sorted(modes, reverse=True))


def _priority(modes):
    return (-sum(modes), sum(r * r for r in modes), modes)


def pair_relation(r_hi: int, r_lo: int, m: int) -> list:
    """xbar(r_lo) xbar(r_hi) acting on 1, rewritten by the exact integrability relation.

    The coefficient of u^(-S-2) in Xbar(u) Xbar(u - h), S = r_hi + r_lo, gives
        sum_{j<m} (-h)^j sum_{a+b=S-j} binom(-b-1, j) xbar(a) xbar(b) = 0,
    where pairs with a mode >= 0 vanish on 1.  Returns [(coeff, (a, b))]
    expressing the given pair through the others.
    """
    S = r_hi + r_lo
    target = _canon((r_hi, r_lo))
    mult = 1 if r_hi == r_lo else 2
    out = []
    for j in range(m):
        for b in range(S - j + 1, 0):
            a = S - j - b
            if a > -1:
                continue
            if j == 0 and _canon((a, b)) == target:
                continue
            cf = binom(-b - 1, j) * (-1) ** j
            if cf:
                out.append((HSeries.monomial(-cf / mult, j, m), (a, b)))
    return out


def straighten(idx: MonomialIndex, m: int, budget: int = 200000) -> StraightenedCombination:
    """Admissible xbar combination equal to idx mod h^m."""
    if idx.flavor != "xbar":
        raise ValueError("straightening acts on commuting xbar monomials")
    import heapq

    work = {_canon(idx.modes): HSeries.monomial(1, 0, m)}
    heap = [(_priority(_canon(idx.modes)), _canon(idx.modes))]
    done = {}
    steps = 0
    while heap:
        _, modes = heapq.heappop(heap)
        c = work.pop(modes, None)
        if c is None or c.is_zero():
            continue
        if any(r >= 0 for r in modes):
            continue
        viol = next((j for j in range(len(modes) - 1) if modes[j + 1] > modes[j] - 2), None)
        if viol is None:
            done[modes] = done[modes] + c if modes in done else c
            continue
        steps += 1
        if steps > budget:
            raise NoTermination("straightening exceeded %d rewrites" % budget)
        hi, lo = modes[viol], modes[viol + 1]
        rest = modes[:viol] + modes[viol + 2:]
        log.debug("rewrite %s at pair (%d, %d)", modes, hi, lo)
        for cf, (a, b) in pair_relation(hi, lo, m):
            new = _canon(rest + (a, b))
            term = c * cf
            if term.is_zero():
                continue
            if new in work:
                work[new] = work[new] + term
            else:
                work[new] = term
                heapq.heappush(heap, (_priority(new), new))
    terms = {idx.with_modes(k): v for k, v in done.items() if not v.is_zero()}
    return StraightenedCombination(m, terms)


# ----- flavor conversion -------------------------------------------------------


def _bmax(flavor, w, N):
    return -flavor_current(flavor).low(w, N) - 1


def _pair_series(kind: str, m: int) -> dict:
    """phi(y) for y = h / (u_s - u_r): 1 - y (xbar from x) or 1 / (1 - y) (x from xbar)."""
    one = Rational(1)
    if kind == "bar_from_x":
        return {0: one, 1: -one}
    return {p: one for p in range(m)}


def _convert_pairs(modes, kind, target, m):
    """Expand prod_{r<s} phi(h/(u_s - u_r)) against target-flavor monomials.

    y^p = h^p sum_k binom(p+k-1, k) u_r^k u_s^(-p-k), i.e. |u_r| < |u_s|: it raises
    the mode at position r by k and lowers the one at s by p + k.  Terms are cut
    once a mode exceeds the largest mode acting nontrivially on the partial
    product, which is evaluated along the way.
    """
    n = len(modes)
    phi = _pair_series(kind, m)
    out = {}

    def choices(r, hbud, kcap):
        """Assignments {s: (p, k)} for the pairs (r, s), s > r."""
        ss = list(range(r + 1, n))
        res = []

        def go(i, hb, kleft, acc):
            if i == len(ss):
                res.append(dict(acc))
                return
            s = ss[i]
            for p, cf in phi.items():
                if p > hb or not cf:
                    continue
                ks = [0] if p == 0 else range(0, kleft + 1)
                for k in ks:
                    acc[s] = (p, k)
                    go(i + 1, hb - p, kleft - k, acc)
                    del acc[s]

        go(0, hbud, max(kcap, 0), {})
        return res

    def rec(r, w, lowers, hpow, coef, tmodes):
        if r == n:
            key = tuple(tmodes)
            term = HSeries.monomial(coef, hpow, m)
            out[key] = out[key] + term if key in out else term
            return
        bmax = _bmax(target, w, m)
        kcap = bmax - modes[r] + lowers[r]
        if kcap < 0:
            return
        for ch in choices(r, m - 1 - hpow, kcap):
            K = sum(k for _, k in ch.values())
            t = modes[r] + K - lowers[r]
            if t > bmax:
                continue
            w2 = apply_modes(target, (t,), w, m)
            if w2.is_zero():
                continue
            low2 = list(lowers)
            c2 = coef
            hp = hpow
            for s, (p, k) in ch.items():
                c2 = c2 * phi[p] * binom(p + k - 1, k) if p else c2
                hp += p
                low2[s] += p + k if p else 0
            rec(r + 1, w2, low2, hp, c2, tmodes + [t])

    rec(0, FockVector.vacuum(0, m), [0] * n, 0, Rational(1), [])
    return out


def _convert_tilde(modes, to_x: bool, m):
    """(1 + h/u_r)^(e_r) at position r (counted from 1 on the right), e_r = 1 - r or r - 1."""
    out = {(): HSeries.monomial(1, 0, m)}
    for pos, r in enumerate(modes, start=1):
        e = 1 - pos if to_x else pos - 1
        new = {}
        for key, c in out.items():
            for j in range(m):
                cf = binom(e, j)
                if not cf:
                    continue
                k2 = key + (r - j,)
                term = c * HSeries.monomial(cf, j, m)
                new[k2] = new[k2] + term if k2 in new else term
        out = new
    return out


def convert_flavor(idx: MonomialIndex, target: str, m: int) -> dict:
    """{target-flavor MonomialIndex: HSeries} equal to idx mod h^m."""
    if target not in FLAVORS:
        raise ValueError("unknown flavor %r" % target)
    src = idx.flavor
    one = {idx.modes: HSeries.monomial(1, 0, m)}
    if src == target:
        raw = one
    elif (src, target) == ("xbar", "x"):
        raw = _convert_pairs(idx.modes, "bar_from_x", "x", m)
    elif (src, target) == ("x", "xbar"):
        raw = _convert_pairs(idx.modes, "x_from_bar", "xbar", m)
    elif (src, target) == ("xtilde", "x"):
        raw = _convert_tilde(idx.modes, True, m)
    elif (src, target) == ("x", "xtilde"):
        raw = _convert_tilde(idx.modes, False, m)
    else:
        # through the x flavor
        raw = {}
        for mid, c in convert_flavor(idx, "x", m).items():
            for k, c2 in convert_flavor(mid, target, m).items():
                raw[k.modes] = raw[k.modes] + c * c2 if k.modes in raw else c * c2
    out = {}
    for modes, c in raw.items():
        if c.is_zero():
            continue
        key = MonomialIndex(target, modes, idx.charge_prefix, idx.sector, idx.heis_prefix)
        out[key] = out[key] + c if key in out else c
    return {k: c for k, c in out.items() if not c.is_zero()}


# ----- classical-limit ranks ---------------------------------------------------


def exact_rank(vectors) -> int:
    """Rank over Q of FockVectors at h = 0, in the canonical Fock basis."""
    from sympy import QQ
    from sympy.polys.matrices import DomainMatrix

    cols = sorted({k for v in vectors for k in v.terms}, key=lambda k: (k[1], k[0]))
    if not vectors or not cols:
        return 0
    pos = {k: j for j, k in enumerate(cols)}
    rows = []
    for v in vectors:
        row = [QQ(0)] * len(cols)
        for k, c in v.terms.items():
            x = c.coeffs[0]
            row[pos[k]] = QQ(int(x.numerator), int(x.denominator))
        rows.append(row)
    return DomainMatrix(rows, (len(rows), len(cols)), QQ).rank()


def admissible_of(d: int, n: int, flavor: str = "x") -> list:
    return [idx for idx in enumerate_basis(d, n, flavor) if idx.degree == d and idx.charge == n]


def classical_rank(d: int, n: int) -> tuple:
    """(rank of the admissible x-monomials of charge n, degree d at h = 0, rr_count(d, n))."""
    vecs = [evaluate_monomial(idx, 1) for idx in admissible_of(d, n)]
    return exact_rank(vecs), rr_count(d, n)


def _partitions_all(d: int):
    return list(_partitions(d, d))


def heisenberg_rank(total: int, n: int) -> tuple:
    """Rank at h = 0 of kappa-monomial x admissible monomial of total degree ``total``
    and charge n, next to the expected count sum_a p(a) rr_count(total - a, n)."""
    vecs = []
    expected = 0
    for a in range(total + 1):
        kap = _partitions_all(a)
        adm = admissible_of(total - a, n)
        expected += len(kap) * rr_count(total - a, n)
        for part in kap:
            for idx in adm:
                vecs.append(heisenberg_extend(idx, part, 1))
    return exact_rank(vecs), expected


# ----- semi-infinite stages ----------------------------------------------------


def semi_infinite_stage(i: int, m: int, b: MonomialIndex) -> MonomialIndex:
    """Stage m - 1 form of e^{lambda_i + m alpha} b:
    e^{lambda_i + (m-1) alpha} xtilde(r_n - 2) ... xtilde(r_1 - 2) xtilde(-1) 1."""
    if b.flavor != "xtilde" or not b.admissible():
        raise ValueError("stage descent needs an admissible xtilde monomial")
    modes = (-1,) + tuple(r - 2 for r in b.modes)
    return MonomialIndex("xtilde", modes, m - 1, i, b.heis_prefix)


def stage_form(i: int, m: int, b: MonomialIndex) -> MonomialIndex:
    """e^{lambda_i + m alpha} b as an index."""
    return MonomialIndex("xtilde", b.modes, m, i, b.heis_prefix)


def check_stage(i: int, m: int, b: MonomialIndex, N: int) -> bool:
    return evaluate_monomial(stage_form(i, m, b), N) == evaluate_monomial(semi_infinite_stage(i, m, b), N)


def descent_tail(i: int, k: int) -> tuple:
    """Modes (1-i, 3-i, ..., 2k-1-i), listed left to right, with v_{i,0} = xtilde(1-i) ... xtilde(2k-1-i) v_{i,-k}."""
    return tuple(2 * j + 1 - i for j in range(k))


def tail_parity(i: int) -> str:
    return "odd" if i == 0 else "even"


def evaluate_tail(i: int, k: int, N: int) -> FockVector:
    """xtilde(1-i) ... xtilde(2k-1-i) e^{lambda_i - k alpha} 1."""
    lam = LAMBDA[i]
    v = FockVector.basis((), (lam[0] - k, lam[1] + k), N)
    return apply_modes("xtilde", tuple(reversed(descent_tail(i, k))), v, N)


def check_tail(i: int, k: int, N: int) -> bool:
    modes = descent_tail(i, k)
    parity_ok = all((r % 2 == 1) == (i == 0) for r in modes)
    steps_ok = all(b - a == 2 for a, b in zip(modes, modes[1:]))
    return parity_ok and steps_ok and evaluate_tail(i, k, N) == FockVector.vacuum(i, N)
