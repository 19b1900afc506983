"""Normal-ordered operator specs and the catalog of currents.

Every catalog operator is stored in the normal form

    exp(creation) exp(annihilation) e^beta prod (u + c h)^(m * eig)

applied right to left, where ``eig`` is an eigenvalue of d_eps1, d_eps2,
d_alpha, d_{alpha/2} on the *input* lattice point (or the constant 1).

Creation term ``(j, s, c, at_zero)`` contributes s/r (u + c h)^r (or s/r (c h)^r
when ``at_zero``) to the coefficient of a_j(-r).  Annihilation term
``(j, s, c)`` contributes s/r (u + c h)^(-r) to the coefficient of a_j(r).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

from ..arith import Rational, frac

CATALOG_VERSION = "1"


class UnknownOperator(KeyError):
    pass


class NotNormalOrderable(ValueError):
    pass


@dataclass(frozen=True)
class CreationTerm:
    color: int
    sign: Rational
    c: Rational
    at_zero: bool = False


@dataclass(frozen=True)
class AnnihilationTerm:
    color: int
    sign: Rational
    c: Rational


@dataclass(frozen=True)
class GradedTerm:
    c: Rational
    selector: str  # eps1 | eps2 | alpha | alpha2 | const
    mult: Rational


_LINEAR = {
    "eps1": lambda d: d[0],
    "eps2": lambda d: d[1],
    "alpha": lambda d: d[0] - d[1],
    "alpha2": lambda d: (d[0] - d[1]) / 2,
}


def _ct(j, s, c, zero=False):
    return CreationTerm(j, frac(s), frac(c), zero)


def _at(j, s, c):
    return AnnihilationTerm(j, frac(s), frac(c))


def _gt(c, sel, m):
    return GradedTerm(frac(c), sel, frac(m))


@dataclass(frozen=True)
class OperatorSpec:
    name: str
    variant: str
    creation: tuple = ()
    annihilation: tuple = ()
    shift: tuple = (Rational(0), Rational(0))
    graded: tuple = ()
    argument_shift: Rational = Rational(0)
    meta: tuple = field(default=(), compare=False)

    @property
    def key(self):
        return (self.creation, self.annihilation, self.shift, self.graded)

    def upper_bound(self):
        """A global bound on u-exponents, or None when creation modes are present."""
        if self.creation:
            return None
        totals = {}
        for g in self.graded:
            totals[g.selector] = totals.get(g.selector, 0) + g.mult
        if any(totals.values()):
            return None
        return 0

    def factors(self):
        """Primitive factor list, leftmost first."""
        out = []
        if self.creation:
            out.append({"kind": "ExpCreation", "terms": [_term_dict(t) for t in self.creation]})
        if self.annihilation:
            out.append({"kind": "ExpAnnihilation", "terms": [_term_dict(t) for t in self.annihilation]})
        if any(self.shift):
            out.append({"kind": "LatticeShift", "displacement": [str(x) for x in self.shift]})
        for g in self.graded:
            kind = "ScalarBinom" if g.selector == "const" else "GradedPower"
            out.append({"kind": kind, **_term_dict(g)})
        return out

    def describe(self):
        return {
            "name": self.name,
            "variant": self.variant,
            "argument_shift": str(self.argument_shift),
            "factors": self.factors(),
        }

    def renamed(self, name):
        return replace(self, name=name)


def _term_dict(t):
    d = {}
    for k, v in t.__dict__.items():
        d[k] = str(v) if isinstance(v, Rational) else v
    if isinstance(t, CreationTerm):
        d["rule"] = "%s/r * (%s)^r" % (t.sign, "c*h" if t.at_zero else "u + c*h")
    elif isinstance(t, AnnihilationTerm):
        d["rule"] = "%s/r * (u + c*h)^(-r)" % t.sign
    else:
        d["rule"] = "(u + c*h)^(mult * d_%s)" % t.selector
    return d


def _simplify_graded(terms):
    acc = {}
    for g in terms:
        acc[(g.c, g.selector)] = acc.get((g.c, g.selector), Rational(0)) + g.mult
    return tuple(GradedTerm(c, sel, m) for (c, sel), m in sorted(acc.items()) if m)


def _simplify_exp(terms, cls):
    acc = {}
    for t in terms:
        k = (t.color, t.c, getattr(t, "at_zero", None))
        acc[k] = acc.get(k, Rational(0)) + t.sign
    out = []
    for (j, c, z), s in sorted(acc.items(), key=lambda kv: (kv[0][0], kv[0][1], bool(kv[0][2]))):
        if s:
            out.append(cls(j, s, c, z) if cls is CreationTerm else cls(j, s, c))
    return tuple(out)


def make_spec(name, variant, creation=(), annihilation=(), shift=(0, 0), graded=()):
    return OperatorSpec(
        name,
        variant,
        _simplify_exp(creation, CreationTerm),
        _simplify_exp(annihilation, AnnihilationTerm),
        (frac(shift[0]), frac(shift[1])),
        _simplify_graded(graded),
    )


def compose(a: OperatorSpec, b: OperatorSpec, name=None) -> OperatorSpec:
    """Normal form of a(u) b(u) (b applied first)."""
    if a.annihilation and b.creation:
        raise NotNormalOrderable("%s o %s needs an exchange relation" % (a.name, b.name))
    # a's graded part sees the point after b's shift
    extra = []
    for g in a.graded:
        if g.selector == "const":
            continue
        val = _LINEAR[g.selector](b.shift) * g.mult
        if val:
            extra.append(GradedTerm(g.c, "const", val))
    spec = make_spec(
        name or "%s*%s" % (a.name, b.name),
        a.variant if a.variant == b.variant else "mixed",
        a.creation + b.creation,
        a.annihilation + b.annihilation,
        (a.shift[0] + b.shift[0], a.shift[1] + b.shift[1]),
        a.graded + tuple(extra) + b.graded,
    )
    return spec


def inverse(a: OperatorSpec, name=None) -> OperatorSpec:
    """Normal form of a(u)^(-1)."""
    if a.creation and a.annihilation:
        raise NotNormalOrderable("inverse of %s is not normal ordered" % a.name)
    neg_c = tuple(replace(t, sign=-t.sign) for t in a.creation)
    neg_a = tuple(replace(t, sign=-t.sign) for t in a.annihilation)
    neg_g = tuple(replace(g, mult=-g.mult) for g in a.graded)
    g_inv = make_spec("g", a.variant, graded=neg_g)
    s_inv = make_spec("s", a.variant, shift=(-a.shift[0], -a.shift[1]))
    e_inv = make_spec("e", a.variant, creation=neg_c, annihilation=neg_a)
    out = compose(compose(g_inv, s_inv), e_inv)
    return replace(out, name=name or "%s^-1" % a.name, variant=a.variant, argument_shift=a.argument_shift)


def shifted(a: OperatorSpec, s, name=None) -> OperatorSpec:
    """a(u + s h), re-expanding every factor."""
    s = frac(s)
    if not s:
        return a if name is None else replace(a, name=name)
    cre = tuple(t if t.at_zero else replace(t, c=t.c + s) for t in a.creation)
    ann = tuple(replace(t, c=t.c + s) for t in a.annihilation)
    gr = tuple(replace(g, c=g.c + s) for g in a.graded)
    out = make_spec(name or "%s(u%+sh)" % (a.name, s), a.variant, cre, ann, a.shift, gr)
    return replace(out, argument_shift=a.argument_shift + s)


ALPHA = (1, -1)
MALPHA = (-1, 1)


def _E_minus():
    return [_ct(1, -1, "-3/4"), _ct(2, 1, "1/4")]


def _E_minus_at_zero_inv():
    return [_ct(1, 1, "-3/4", True), _ct(2, -1, "1/4", True)]


def _E_plus():
    return [_at(1, 1, "1/4"), _at(2, -1, "1/4")]


def _base(variant):
    sp = {}
    E_minus = make_spec("E_minus", variant, creation=_E_minus())
    E_minus0_inv = make_spec("E_minus0_inv", variant, creation=_E_minus_at_zero_inv())
    E_plus = make_spec("E_plus", variant, annihilation=_E_plus())
    E_zero = make_spec("E_zero", variant, shift=ALPHA, graded=[_gt("1/4", "alpha", 1)])
    sp["E_minus"], sp["E_plus"], sp["E_zero"] = E_minus, E_plus, E_zero
    sp["E_minus0_inv"] = E_minus0_inv
    sp["cal_E_minus"] = compose(E_minus0_inv, E_minus, "cal_E_minus")

    ik_x = compose(compose(E_minus, E_plus), E_zero)
    ik_xm = compose(
        compose(inverse(shifted(E_minus, "1/2")), inverse(shifted(E_plus, "-1/2"))),
        # E^0(u)^(-1) is read as e^(-alpha) (u + h/4)^(-d_alpha), the grading
        # measured on the input point
        make_spec("E_zero_inv", variant, shift=MALPHA, graded=[_gt("-1/4", "alpha", -1)]),
    )
    if variant == "IK":
        sp["X_alpha"] = ik_x.renamed("X_alpha")
        sp["X_malpha"] = ik_xm.renamed("X_malpha")
    else:
        norm_x = make_spec(
            "nx", variant,
            graded=[_gt(0, "alpha2", 1), _gt(1, "alpha2", 1), _gt("1/4", "alpha", -1)],
        )
        norm_xm = make_spec(
            "nxm", variant,
            graded=[_gt("-1/4", "alpha", 1), _gt("-1/2", "alpha2", -1), _gt("1/2", "alpha2", -1)],
        )
        sp["X_alpha"] = compose(compose(E_minus0_inv, ik_x), norm_x, "X_alpha")
        E_minus0 = inverse(E_minus0_inv)
        sp["X_malpha"] = compose(compose(E_minus0, ik_xm), norm_xm, "X_malpha")

    for j in (1, 2):
        ann = [_at(j, -1, "1/2"), _at(j, 1, "-1/2")]
        if variant == "IK":
            gr = [_gt("-1/2", "eps%d" % j, 1), _gt("1/2", "eps%d" % j, -1)]
        elif j == 1:
            gr = [_gt("1/4", "alpha2", 1), _gt("5/4", "alpha2", -1)]
        else:
            gr = [_gt("1/4", "alpha2", 1), _gt("-3/4", "alpha2", -1)]
        sp["k%d_plus" % j] = make_spec("k%d_plus" % j, variant, annihilation=ann, graded=gr)
    sp["k1_minus"] = make_spec("k1_minus", variant, creation=[_ct(2, 1, 1), _ct(2, -1, 0)])
    sp["k2_minus"] = make_spec("k2_minus", variant, creation=[_ct(1, 1, 0), _ct(1, -1, -1)])

    sp["Ebar_plus"] = make_spec("Ebar_plus", variant, annihilation=[_at(1, 1, "-7/4"), _at(2, 1, "1/4")])
    sp["Ebar_zero"] = make_spec("Ebar_zero", variant, graded=[_gt(-1, "alpha2", 1), _gt(0, "alpha2", -1)])
    sp["Xbar"] = compose(compose(sp["X_alpha"], sp["Ebar_plus"]), sp["Ebar_zero"], "Xbar")
    sp["Xtilde"] = compose(
        sp["X_alpha"],
        make_spec("t", variant, graded=[_gt(1, "alpha2", -1), _gt(0, "alpha2", 1)]),
        "Xtilde",
    )

    half = Rational(1, 2)
    for sgn in ("plus", "minus"):
        k1, k2 = sp["k1_" + sgn], sp["k2_" + sgn]
        H = compose(shifted(k2, half), inverse(shifted(k1, half)), "H_" + sgn)
        K = compose(shifted(k1, -half), shifted(k2, half), "K_" + sgn)
        sp["H_" + sgn] = H
        sp["K_" + sgn] = K
    sp["E_current"] = shifted(sp["X_alpha"], half, "E_current")
    sp["F_current"] = shifted(sp["X_malpha"], half, "F_current")
    return {k: replace(v, name=k, variant=variant) for k, v in sp.items()}


_CATALOG = {v: _base(v) for v in ("IK", "norm")}


def catalog(name: str, variant: str = "norm") -> OperatorSpec:
    try:
        return _CATALOG[variant][name]
    except KeyError:
        raise UnknownOperator("%s/%s" % (name, variant)) from None


def names(variant: str = "norm"):
    return sorted(_CATALOG[variant])


def catalog_dump() -> str:
    doc = {
        "catalog_version": CATALOG_VERSION,
        "operators": [catalog(n, v).describe() for v in ("IK", "norm") for n in names(v)],
    }
    return json.dumps(doc, indent=2, sort_keys=True)
