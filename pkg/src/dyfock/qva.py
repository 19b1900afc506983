"""Vertex-operator maps on the Fock modules.

The module map sends the u-coefficients of T^-(u_1) ... T^-(u_k) (one
auxiliary matrix leg per factor) to operator series in z:

    Y(T^-_1(u_1) ... T^-_k(u_k), z) = T^-_1(z+u_1) ... T^-_k(z+u_k)
        T^+_k(z+u_k-hc/2)^{-1} ... T^+_1(z+u_1-hc/2)^{-1}

with level c = 1 on the Fock modules.  Entries of the leg matrices are
extracted independently per leg.  The coefficient of u_1^{k_1} ... is obtained
by distributing divided z-derivatives over the factors carrying u_i.

The Heisenberg map sends K^-(u) 1 to K^-(z+u) K^+(z+u+hc_2/4)^{-1}, c_2 = -2.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product

from .arith import Rational, frac
from .fock import FockVector, mono_weight
from .ops.currents import (
    Compose,
    Current,
    Derivative,
    GeometricInverse,
    Identity,
    InverseNotUnit,
    Scale,
    Shift,
    SpecCurrent,
    Sum,
    t_current,
    unclamped,
)
from .ops.catalog import catalog
from .verify import CheckReport, as_test_vectors, compare

LEVEL = 1
C2 = -2 * LEVEL


@dataclass(frozen=True)
class StateSpec:
    """Coefficient of u_1^{p_1} ... u_k^{p_k} in the (i_l, j_l) leg entries of
    T^-(u_1) ... T^-(u_k) 1.  ``entries=()`` is the vacuum state."""

    entries: tuple = ()
    powers: tuple = ()
    level: Rational = frac(LEVEL)

    def __post_init__(self):
        if len(self.entries) > 2:
            raise ValueError("at most two T^- factors are implemented")
        if len(self.powers) != len(self.entries):
            raise ValueError("one u-power per factor")
        for e in self.entries:
            if tuple(e) not in ((1, 1), (1, 2), (2, 1), (2, 2)):
                raise ValueError("matrix entry out of range: %s" % (e,))
        if any(p < 0 for p in self.powers):
            raise ValueError("u-powers are nonnegative")

    @property
    def arity(self) -> int:
        return len(self.entries)

    def to_dict(self) -> dict:
        return {"entries": [list(e) for e in self.entries], "powers": list(self.powers), "level": str(self.level)}


VACUUM_STATE = StateSpec()


# ----- matrix currents -----------------------------------------------------------


def _mat_mul(a, b):
    """Entrywise (A B)_{ij} = sum_k A_ik B_kj; B's operators act first."""
    out = {}
    for i, j in product((1, 2), repeat=2):
        parts = [Compose(a[i, k], b[k, j]) for k in (1, 2) if a.get((i, k)) is not None and b.get((k, j)) is not None]
        out[i, j] = Sum(parts) if parts else None
    return out


def t_matrix(sign: str, shift=0, variant: str = "norm") -> dict:
    shift = frac(shift)
    m = {}
    for i, j in product((1, 2), repeat=2):
        cur = t_current(i, j, sign, variant)
        m[i, j] = Shift(cur, shift) if shift else cur
    return m


class MatrixInverse:
    """Entries of T^{-1} = sum_{l < terms} (I - T)^l for T = I mod h."""

    def __init__(self, mat: dict, terms: int):
        delta = {}
        for i, j in product((1, 2), repeat=2):
            parts = [Scale(mat[i, j], -1)]
            if i == j:
                parts.insert(0, Identity())
            delta[i, j] = Sum(parts)
        self.delta = delta
        power = {(i, j): (Identity() if i == j else None) for i, j in product((1, 2), repeat=2)}
        acc = {k: [c] if c is not None else [] for k, c in power.items()}
        for _ in range(1, terms):
            power = _mat_mul(delta, power)
            for k, c in power.items():
                if c is not None:
                    acc[k].append(c)
        self.entries = {k: Sum(v) for k, v in acc.items()}

    def check_unit(self, v: FockVector, window, N: int):
        lo, hi = window
        for cur in self.delta.values():
            for w in cur.coeffs(v, lo, hi, N).values():
                if not w.truncate(1).is_zero():
                    raise InverseNotUnit("inverted matrix is not the identity mod h")

    def __getitem__(self, key):
        return self.entries[key]


def _chain(currents):
    """A_1 A_2 ... A_k as one current, A_k acting first."""
    cur = currents[-1]
    for a in reversed(currents[:-1]):
        cur = Compose(a, cur)
    return cur


def _leibniz(k: int):
    return [(a, k - a) for a in range(k + 1)]


def _at(cur, s):
    return Shift(cur, s) if s else cur


def module_vertex_operator(state: StateSpec, N: int, variant: str = "norm", leg_shifts=None) -> tuple:
    """(current, inverses) realizing Y(state, z) on the Fock modules mod h^N.

    Factor order: T^- left factors in leg order, then the inverted T^+ factors in
    reversed leg order.  ``leg_shifts`` substitutes u_l -> u_l + s_l h.
    """
    if state.arity == 0:
        return Identity(), []
    k = state.arity
    shifts = [frac(x) for x in (leg_shifts or (0,) * k)]
    tm = t_matrix("minus", 0, variant)
    invs = {}
    for s in sorted(set(shifts)):
        invs[s] = MatrixInverse(t_matrix("plus", s - state.level / 2, variant), N)
    terms = []
    for inner in product((1, 2), repeat=k):
        for split in product(*[_leibniz(p) for p in state.powers]):
            left = [Derivative(_at(tm[state.entries[l][0], inner[l]], shifts[l]), split[l][0]) for l in range(k)]
            right = [Derivative(invs[shifts[l]][inner[l], state.entries[l][1]], split[l][1]) for l in reversed(range(k))]
            terms.append(_chain(left + right))
    return Sum(terms), list(invs.values())


def y_module_map(state: StateSpec, v: FockVector, window, N: int, variant: str = "norm") -> dict:
    """{z-exponent: coefficient of Y(state, z) v} on the window, mod h^N."""
    lo, hi = window
    if lo > hi:
        raise ValueError("empty window")
    v = v.truncate(N)
    cur, invs = module_vertex_operator(state, N, variant)
    for inv in invs:
        inv.check_unit(v, (min(lo, inv.delta[1, 1].low(v, N)), hi), N)
    return cur.coeffs(v, lo, hi, N)


# ----- restrictedness ------------------------------------------------------------


def restricted_bound(v: FockVector, N: int, variant: str = "norm") -> dict:
    """Certified lower bound on the u-support of each entry of T^+(u) v mod h^N."""
    return {(i, j): t_current(i, j, "plus", variant).low(v, N) for i, j in product((1, 2), repeat=2)}


def check_restricted(vectors, N: int = 3, probe: int = 4, hi: int = 0, variant: str = "norm") -> CheckReport:
    """Each entry of T^+(u) v vanishes mod h^N below the certified bound, and
    T^+(u) - I has h-divisible coefficients; both checked by honest evaluation
    on [bound - probe, hi]."""
    tvs = as_test_vectors(vectors)
    rep = CheckReport("restricted", {"vectors": [t.name for t in tvs], "N": N, "probe": probe, "hi": hi, "variant": variant})
    bounds = {}
    for tv in tvs:
        v = tv.at(N)
        bd = restricted_bound(v, N, variant)
        bounds[tv.name] = {"%d%d" % k: b for k, b in bd.items()}
        for (i, j), b in bd.items():
            lo = min(b, 0) - probe
            with unclamped():
                got = t_current(i, j, "plus", variant).coeffs(v, lo, hi, N)
            below = {(m,): w for m, w in got.items() if m < b}
            compare(rep, "%s t%d%d+ below bound" % (tv.name, i, j), below, {}, ((lo, b - 1),))
            dev = {(m,): (w - v if (m == 0 and i == j) else w).truncate(1) for m, w in got.items()}
            if i == j and 0 not in got and lo <= 0 <= hi:
                dev[(0,)] = -v.truncate(1)
            compare(rep, "%s t%d%d+ mod h" % (tv.name, i, j), dev, {}, ((lo, hi),))
    rep.params["bounds"] = bounds
    return rep


def bound_growth(vectors, N: int, variant: str = "norm") -> list:
    """(a-weight, lowest certified bound) per vector."""
    out = []
    for tv in as_test_vectors(vectors):
        v = tv.at(N)
        w = max((mono_weight(m) for (m, _) in v.terms), default=0)
        out.append((tv.name, w, min(restricted_bound(v, N, variant).values())))
    return out


# ----- vacuum axiom and the classical limit ------------------------------------


def check_vacuum_axiom(vectors, window=(-3, 3), N: int = 2, variant: str = "norm") -> CheckReport:
    tvs = as_test_vectors(vectors)
    rep = CheckReport("vacuum_axiom", {"vectors": [t.name for t in tvs], "window": list(window), "N": N})
    for tv in tvs:
        v = tv.at(N)
        got = {(m,): w for m, w in y_module_map(VACUUM_STATE, v, window, N, variant).items()}
        compare(rep, tv.name, got, {(0,): v} if window[0] <= 0 <= window[1] else {}, (tuple(window),))
    return rep


def _t_classical(i, j, sign, variant):
    """t^{+-}_{ij}(u) = +-(delta_ij - T^{+-}_{ij}(u))/h as a current mod h."""
    return _ScaledByH(t_current(i, j, sign, variant), i == j, -1 if sign == "minus" else 1)


class _ScaledByH(Current):
    """s (delta - A(u))/h, evaluated from A at order N + 1."""

    def __init__(self, inner, diag, s):
        self.inner = inner
        self.diag = diag
        self.s = s
        self.up = inner.up if not diag else max(0, inner.up) if inner.up is not None else None
        self.low_global = inner.low_global if not diag else (None if inner.low_global is None else min(0, inner.low_global))

    def low(self, v, N):
        lb = self.inner.low(v if v.order > N else v.lift(N + 1), N + 1)
        return min(lb, 0) if self.diag else lb

    def _coeffs(self, v, lo, hi, N):
        v1 = v if v.order > N else v.lift(N + 1)
        got = dict(self.inner.coeffs(v1, lo, hi, N + 1))
        out = {}
        for m in set(got) | ({0} if self.diag and lo <= 0 <= hi else set()):
            w = got.get(m, FockVector.zero(N + 1))
            if self.diag and m == 0:
                w = w - v1
            out[m] = (-w if self.s > 0 else w).divide_h().truncate(N)
        return out


def normal_ordered(state: StateSpec, variant: str = "norm") -> Current:
    """:t(z+u_1) ... t(z+u_k): at the state's u-powers, mod h (arity 1 or 2)."""
    tt = {}
    for i, j in product((1, 2), repeat=2):
        tm = _t_classical(i, j, "minus", variant)
        tp = _t_classical(i, j, "plus", variant)
        tt[i, j] = (tm, tp, Sum([tm, tp]))
    if state.arity == 1:
        (e,), (p,) = state.entries, state.powers
        return Derivative(tt[e][2], p)
    if state.arity == 2:
        (e1, e2), (p1, p2) = state.entries, state.powers
        tm1, tp1, t1 = tt[e1]
        t2 = tt[e2][2]
        # :t(w1) t(w2): = t^-(w1) t(w2) + t(w2) t^+(w1)
        return Sum([
            Compose(Derivative(tm1, p1), Derivative(t2, p2)),
            Compose(Derivative(t2, p2), Derivative(tp1, p1)),
        ])
    raise ValueError("normal-ordered products need arity 1 or 2")


def _sub_states(state: StateSpec):
    """Inclusion-exclusion over legs for (T^- - I)...: (sign, substate, identity legs)."""
    k = state.arity
    for keep in product((True, False), repeat=k):
        dropped = [l for l in range(k) if not keep[l]]
        if any(state.entries[l][0] != state.entries[l][1] or state.powers[l] for l in dropped):
            continue
        sub = StateSpec(tuple(state.entries[l] for l in range(k) if keep[l]),
                        tuple(state.powers[l] for l in range(k) if keep[l]), state.level)
        yield (-1) ** len(dropped), sub


def y_of_t_state(state: StateSpec, v: FockVector, window, variant: str = "norm") -> dict:
    """Y of the t^- state (coefficients of (T^- - I)/h per leg), mod h."""
    k = state.arity
    N = k + 1
    v = v if v.order >= N else v.lift(N)
    acc = {}
    for sign, sub in _sub_states(state):
        for m, w in y_module_map(sub, v, window, N, variant).items():
            w = w if sign > 0 else -w
            acc[m] = acc[m] + w if m in acc else w
    out = {}
    for m, w in acc.items():
        for _ in range(k):
            w = w.divide_h()
        out[m] = w.truncate(1)
    return out


def check_normal_ordered_limit(states, vectors, window=(-2, 2), variant: str = "norm") -> CheckReport:
    """Y(t^- state, z) = :t(z+u_1) ... : mod h on each vector."""
    tvs = as_test_vectors(vectors)
    states = list(states)
    rep = CheckReport("normal_ordered_limit", {"states": [s.to_dict() for s in states], "vectors": [t.name for t in tvs],
                                               "window": list(window), "variant": variant})
    lo, hi = window
    for st in states:
        nop = normal_ordered(st, variant)
        for tv in tvs:
            v = tv.at(st.arity + 1)
            lhs = {(m,): w for m, w in y_of_t_state(st, v, window, variant).items()}
            rhs = {(m,): w for m, w in nop.coeffs(v.truncate(1), lo, hi, 1).items()}
            compare(rep, "%s %s" % (tv.name, st.to_dict()), lhs, rhs, (tuple(window),))
    return rep


def classical_states() -> list:
    one = [StateSpec((e,), (p,)) for e in ((1, 1), (1, 2), (2, 1), (2, 2)) for p in (0, 1)]
    two = [StateSpec((e1, e2), (0, 0)) for e1 in ((1, 2), (2, 1), (1, 1)) for e2 in ((1, 2), (2, 1))]
    return one + two


# ----- Heisenberg map ------------------------------------------------------------


def heisenberg_vertex_operator(power: int = 0, c2=C2, variant: str = "norm") -> Current:
    """Coefficient of u^power in K^-(z+u) K^+(z+u+hc_2/4)^{-1}, N-independent part."""
    km = SpecCurrent(catalog("K_minus", variant))
    kp = Shift(SpecCurrent(catalog("K_plus", variant)), frac(c2) / 4)
    return km, kp


def y_heisenberg(power: int, v: FockVector, window, N: int, c2=C2, variant: str = "norm") -> dict:
    km, kp = heisenberg_vertex_operator(power, c2, variant)
    inv = GeometricInverse(kp, N)
    cur = Sum([Compose(Derivative(km, a), Derivative(inv, b)) for a, b in _leibniz(power)])
    return cur.coeffs(v.truncate(N), window[0], window[1], N)


def _k_from_t(sign: str, shift, variant: str, N: int) -> Current:
    """K(u) = k_1(u - h/2) k_2(u + h/2) with k_1 = t_11, k_2 = t_22 - t_21 t_11^{-1} t_12."""
    half = Rational(1, 2)
    t11, t12, t21, t22 = (t_current(i, j, sign, variant) for i, j in ((1, 1), (1, 2), (2, 1), (2, 2)))
    k2 = Sum([t22, Scale(Compose(t21, Compose(GeometricInverse(t11, N), t12)), -1)])
    return Compose(_at(t11, shift - half), _at(k2, shift + half))


QDET_TERMS = ((1, ((1, 1), (2, 2))), (-1, ((2, 1), (1, 2))))
QDET_SHIFTS = (Rational(-1, 2), Rational(1, 2))


def qdet_current(sign: str, variant: str = "norm") -> Current:
    """t_11(u - h/2) t_22(u + h/2) - t_21(u - h/2) t_12(u + h/2)."""
    a, b = QDET_SHIFTS
    parts = []
    for s, ((i1, j1), (i2, j2)) in QDET_TERMS:
        c = Compose(_at(t_current(i1, j1, sign, variant), a), _at(t_current(i2, j2, sign, variant), b))
        parts.append(c if s > 0 else Scale(c, -1))
    return Sum(parts)


def y_qdet_state(power: int, v: FockVector, window, N: int, variant: str = "norm") -> dict:
    """Y of the u^power coefficient of qdet T^-(u) 1 through the two-leg module map."""
    v = v.truncate(N)
    parts = []
    for s, entries in QDET_TERMS:
        cur, invs = module_vertex_operator(StateSpec(entries, (0, 0)), N, variant, QDET_SHIFTS)
        for inv in invs:
            inv.check_unit(v, (min(window[0], inv.delta[1, 1].low(v, N)), window[1]), N)
        parts.append(cur if s > 0 else Scale(cur, -1))
    return Derivative(Sum(parts), power).coeffs(v, window[0], window[1], N)


def check_k_state(vectors, window=(-3, 3), N: int = 2, powers=(0, 1), c2=C2, variant: str = "norm") -> CheckReport:
    """K^-(z+u) K^+(z+u+hc_2/4)^{-1} built from the catalog K^{+-} agrees with
    (a) the same composition assembled from T-matrix entries,
    (b) the module map applied to the state qdet T^-(u) 1, and
    (c) the creation property Y(K^-(u) 1, z) 1 = K^-(z + u) 1 on the vacuum."""
    tvs = as_test_vectors(vectors)
    rep = CheckReport("k_state", {"vectors": [t.name for t in tvs], "window": list(window), "N": N,
                                  "powers": list(powers), "c2": str(c2), "variant": variant})
    lo, hi = window
    km_t = _k_from_t("minus", 0, variant, N)
    kp_t = _k_from_t("plus", frac(c2) / 4, variant, N)
    inv_t = GeometricInverse(kp_t, N)
    for p in powers:
        via_t = Sum([Compose(Derivative(km_t, a), Derivative(inv_t, b)) for a, b in _leibniz(p)])
        for tv in tvs:
            v = tv.at(N)
            lhs = {(m,): w for m, w in y_heisenberg(p, v, window, N, c2, variant).items()}
            rhs = {(m,): w for m, w in via_t.coeffs(v, lo, hi, N).items()}
            compare(rep, "%s u^%d entries" % (tv.name, p), lhs, rhs, (tuple(window),))
            rhs = {(m,): w for m, w in y_qdet_state(p, v, window, N, variant).items()}
            compare(rep, "%s u^%d module map" % (tv.name, p), lhs, rhs, (tuple(window),))
    vac = FockVector.vacuum(0, N)
    km = SpecCurrent(catalog("K_minus", variant))
    for p in powers:
        lhs = {(m,): w for m, w in y_heisenberg(p, vac, window, N, c2, variant).items()}
        rhs = {(m,): w for m, w in Derivative(km, p).coeffs(vac, lo, hi, N).items()}
        compare(rep, "creation u^%d" % p, lhs, rhs, (tuple(window),))
    return rep


def check_k_commutes_x(vectors, window=(-2, 2), N: int = 2, variant: str = "norm") -> CheckReport:
    """The K-state image commutes with X^{+-}(w) on the window box."""
    from .ops.currents import product_series

    tvs = as_test_vectors(vectors)
    rep = CheckReport("k_commutes_x", {"vectors": [t.name for t in tvs], "window": list(window), "N": N, "variant": variant})
    km, kp = heisenberg_vertex_operator(0, C2, variant)
    yk = Compose(km, GeometricInverse(kp, N))
    box = (tuple(window), tuple(window))
    for name in ("X_alpha", "X_malpha"):
        x = SpecCurrent(catalog(name, variant))
        for tv in tvs:
            v = tv.at(N)
            a = product_series([yk, x], v, box, N)
            b = {(m, n): w for (n, m), w in product_series([x, yk], v, box[::-1], N).items()}
            compare(rep, "%s %s" % (tv.name, name), a, b, box)
    return rep
