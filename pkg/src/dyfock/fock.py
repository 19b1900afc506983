"""Fock spaces F_{i,s}: creation monomials tensored with lattice points, over Q[[h]]/(h^N).

A basis element is a pair ``(mono, point)``.  ``mono`` is a sorted tuple of
``(color, r)`` pairs standing for a product of creation operators a_color(-r),
``point`` is ``(m1, m2)``, the coordinates of mu in the basis eps_1, eps_2.
"""

from __future__ import annotations

import re
from collections import Counter
from typing import NamedTuple

from .arith import HSeries, Rational, frac


class SectorViolation(ValueError):
    pass


class LatticePoint(NamedTuple):
    m1: Rational
    m2: Rational

    @classmethod
    def of(cls, m1, m2) -> "LatticePoint":
        return cls(frac(m1), frac(m2))

    def __add__(self, other):
        return LatticePoint(self.m1 + other[0], self.m2 + other[1])

    def __neg__(self):
        return LatticePoint(-self.m1, -self.m2)


ALPHA = LatticePoint.of(1, -1)
LAMBDA = {0: LatticePoint.of(0, 0), 1: LatticePoint.of(1, 0)}


def sector_point(i: int, k: int = 0, s=0) -> LatticePoint:
    """lambda_i + k*alpha + (s/2)(eps_1 + eps_2)."""
    s = frac(s)
    lam = LAMBDA[i]
    return LatticePoint(lam.m1 + k + s / 2, lam.m2 - k + s / 2)


def charge_of(p, i: int = 0, s=0):
    """k with p = lambda_i + k alpha (+ s shift), or None if p is off the coset."""
    base = sector_point(i, 0, s)
    d1, d2 = p[0] - base.m1, p[1] - base.m2
    if d1 + d2 != 0 or d1.denominator != 1:
        return None
    return int(d1)


def graded_eigenvalue(which: str, p) -> Rational:
    """Eigenvalue of d_eps1, d_eps2, d_alpha or d_{alpha/2} on e^mu."""
    m1, m2 = frac(p[0]), frac(p[1])
    if which == "eps1":
        return m1
    if which == "eps2":
        return m2
    if which == "alpha":
        return m1 - m2
    if which == "alpha2":
        return (m1 - m2) / 2
    if which == "const":
        return Rational(1)
    raise KeyError(which)


def mono_weight(mono) -> int:
    return sum(r for _, r in mono)


def mono_mul(a, b):
    if not a:
        return b
    if not b:
        return a
    return tuple(sorted(a + b))


def mono_counts(mono) -> Counter:
    return Counter(mono)


def counts_to_mono(counts) -> tuple:
    out = []
    for key in sorted(counts):
        out.extend([key] * counts[key])
    return tuple(out)


class FockVector:
    """Finite combination of basis elements with HSeries coefficients."""

    __slots__ = ("terms", "order")

    def __init__(self, terms=None, order: int = 1):
        self.order = order
        clean = {}
        if terms:
            for key, c in terms.items():
                if not isinstance(c, HSeries):
                    c = HSeries.const(c, order)
                c = c.truncate(order)
                if c.order < order:
                    raise ValueError("coefficient order %d below vector order %d" % (c.order, order))
                if not c.is_zero():
                    mono, p = key
                    clean[(tuple(mono), LatticePoint(frac(p[0]), frac(p[1])))] = c
        self.terms = clean

    @classmethod
    def basis(cls, mono=(), point=(0, 0), order: int = 1, coeff=1) -> "FockVector":
        return cls({(tuple(sorted(mono)), LatticePoint.of(*point)): HSeries.const(coeff, order)}, order)

    @classmethod
    def vacuum(cls, i: int = 0, order: int = 1, s=0) -> "FockVector":
        return cls.basis((), sector_point(i, 0, s), order)

    @classmethod
    def zero(cls, order: int = 1) -> "FockVector":
        return cls({}, order)

    @classmethod
    def _raw(cls, terms, order):
        v = cls.__new__(cls)
        v.order = order
        v.terms = terms
        return v

    def is_zero(self) -> bool:
        return not self.terms

    def __bool__(self):
        return bool(self.terms)

    def __len__(self):
        return len(self.terms)

    def items(self):
        return self.terms.items()

    def weight(self) -> int:
        return max((mono_weight(m) for m, _ in self.terms), default=0)

    def truncate(self, order: int) -> "FockVector":
        if order >= self.order:
            return self
        return FockVector({k: c.truncate(order) for k, c in self.terms.items()}, order)

    def lift(self, order: int) -> "FockVector":
        """The same coefficients read mod h^order (zero-padded); a section of truncation."""
        if order <= self.order:
            return self.truncate(order)
        pad = (0,) * (order - self.order)
        return FockVector({k: HSeries(c.coeffs + pad) for k, c in self.terms.items()}, order)

    def _combine(self, other, sign):
        n = min(self.order, other.order)
        out = {k: c.truncate(n) for k, c in self.terms.items()}
        for k, c in other.terms.items():
            c = c.truncate(n)
            if k in out:
                out[k] = out[k] + c if sign > 0 else out[k] - c
            else:
                out[k] = c if sign > 0 else -c
        return FockVector({k: c for k, c in out.items() if not c.is_zero()}, n)

    def __add__(self, other):
        if isinstance(other, int) and other == 0:
            return self
        return self._combine(other, 1)

    __radd__ = __add__

    def __sub__(self, other):
        return self._combine(other, -1)

    def __neg__(self):
        return FockVector._raw({k: -c for k, c in self.terms.items()}, self.order)

    def scale(self, c) -> "FockVector":
        if isinstance(c, HSeries):
            n = min(self.order, c.order)
            return FockVector({k: v.truncate(n) * c.truncate(n) for k, v in self.terms.items()}, n)
        c = frac(c)
        return FockVector({k: v * c for k, v in self.terms.items()}, self.order)

    __rmul__ = scale

    def times_h(self, k: int = 1) -> "FockVector":
        return FockVector({key: c.times_h(k) for key, c in self.terms.items()}, self.order)

    def divide_h(self) -> "FockVector":
        """Divide by h (order drops by one); raises NotDivisible otherwise."""
        return FockVector({k: c.shift_down() for k, c in self.terms.items()}, self.order - 1)

    def __eq__(self, other):
        if isinstance(other, FockVector):
            return self.order == other.order and self.terms == other.terms
        if other == 0:
            return self.is_zero()
        return NotImplemented

    def __hash__(self):
        return hash((self.order, frozenset(self.terms.items())))

    def same_mod(self, other, order: int) -> bool:
        return (self - other).truncate(order).is_zero()

    def classical(self) -> "FockVector":
        return self.truncate(1)

    def sorted_items(self):
        return sorted(self.terms.items(), key=lambda kv: (kv[0][1], kv[0][0]))

    def to_text(self) -> str:
        lines = ["order %d" % self.order]
        for (mono, p), c in self.sorted_items():
            lines.append("e(%s,%s) %s %s" % (p[0], p[1], mono_to_text(mono), c.to_text()))
        return "\n".join(lines)

    @classmethod
    def from_text(cls, text: str) -> "FockVector":
        lines = [ln for ln in text.strip().splitlines() if ln.strip()]
        m = re.fullmatch(r"order (\d+)", lines[0].strip())
        if not m:
            raise ValueError("missing order header")
        order = int(m.group(1))
        terms = {}
        for ln in lines[1:]:
            mm = re.fullmatch(r"e\(([^,]+),([^)]+)\) (\S+) (\[.*\])", ln.strip())
            if not mm:
                raise ValueError("bad term line %r" % ln)
            p = LatticePoint(Rational(mm.group(1)), Rational(mm.group(2)))
            terms[(mono_from_text(mm.group(3)), p)] = HSeries.from_text(mm.group(4))
        return cls(terms, order)

    def __repr__(self):
        if not self.terms:
            return "FockVector(0, order=%d)" % self.order
        parts = []
        for (mono, p), c in self.sorted_items():
            parts.append("(%s) %s e(%s,%s)" % (c.pretty(), mono_to_text(mono), p[0], p[1]))
        return "FockVector(" + " + ".join(parts) + ", order=%d)" % self.order


def mono_to_text(mono) -> str:
    if not mono:
        return "1"
    return "*".join("a%d(-%d)" % (j, r) for j, r in mono)


def mono_from_text(s: str) -> tuple:
    if s == "1":
        return ()
    out = []
    for part in s.split("*"):
        m = re.fullmatch(r"a([12])\(-(\d+)\)", part)
        if not m:
            raise ValueError("bad creation factor %r" % part)
        out.append((int(m.group(1)), int(m.group(2))))
    return tuple(sorted(out))


def apply_mode(j: int, r: int, v: FockVector) -> FockVector:
    """Action of a_j(r) at level 1."""
    if r == 0:
        raise ValueError("a_j(0) is not part of the Heisenberg algebra")
    if r < 0:
        out = {}
        for (mono, p), c in v.terms.items():
            key = (mono_mul(mono, ((j, -r),)), p)
            out[key] = out[key] + c if key in out else c
        return FockVector(out, v.order)
    out = {}
    for (mono, p), c in v.terms.items():
        n = mono.count((j, r))
        if not n:
            continue
        lst = list(mono)
        lst.remove((j, r))
        key = (tuple(lst), p)
        c2 = c * (r * n)
        out[key] = out[key] + c2 if key in out else c2
    return FockVector(out, v.order)


def apply_lattice_shift(beta, v: FockVector, strict_sector=None) -> FockVector:
    """Translate every lattice point by beta.

    With ``strict_sector=(i, s)`` the result must stay on lambda_i + Z alpha.
    """
    beta = (frac(beta[0]), frac(beta[1]))
    out = {}
    for (mono, p), c in v.terms.items():
        q = LatticePoint(p[0] + beta[0], p[1] + beta[1])
        if strict_sector is not None and charge_of(q, *strict_sector) is None:
            raise SectorViolation("point %s leaves sector %s" % (tuple(q), strict_sector))
        out[(mono, q)] = c
    return FockVector._raw(out, v.order)


def classical_project(v: FockVector) -> FockVector:
    return v.truncate(1)
