import json

import pytest
from hypothesis import given, settings, strategies as st

import classical_oracle as oracle
from dyfock.arith import HSeries, frac
from dyfock.fock import FockVector, sector_point
from dyfock.ops.catalog import UnknownOperator, catalog, catalog_dump, compose, inverse, names, shifted
from dyfock.ops.currents import SpecCurrent, product_series, t_action
from dyfock.ops.engine import (
    IncompleteWindow, USeriesVector, WindowUnsound, apply, apply_product, split_halves,
    substitute_shift,
)
from dyfock.verify import _xbar_pair_lower_bound, battery, commutator_mod_h

VAC = FockVector.vacuum(0)


def vac(order):
    return FockVector.vacuum(0, order)


def test_unknown_operator():
    with pytest.raises(UnknownOperator):
        catalog("nope")
    with pytest.raises(UnknownOperator):
        catalog("X_alpha", "other")


def test_xbar_carries_the_lowering_grading():
    spec = catalog("Ebar_zero", "norm")
    rules = {(g.c, g.selector, g.mult) for g in spec.graded}
    # (1 - h/u)^{d_{alpha/2}} = (u - h)^{d_{alpha/2}} u^{-d_{alpha/2}}
    assert rules == {(frac(-1), "alpha2", 1), (frac(0), "alpha2", -1)}
    assert catalog("Xbar").key == compose(compose(catalog("X_alpha"), spec), catalog("Ebar_plus")).key or \
        catalog("Xbar").key == compose(compose(catalog("X_alpha"), catalog("Ebar_plus")), spec).key


@pytest.mark.parametrize("sign", ["plus", "minus"])
def test_composite_catalog_entries(sign):
    half = frac("1/2")
    k1, k2 = catalog("k1_" + sign), catalog("k2_" + sign)
    assert catalog("H_" + sign).key == compose(shifted(k2, half), inverse(shifted(k1, half))).key
    assert catalog("K_" + sign).key == compose(shifted(k1, -half), shifted(k2, half)).key


def test_catalog_dump_is_json():
    doc = json.loads(catalog_dump())
    text = json.dumps(doc)
    for name in ("X_alpha", "X_malpha", "Xbar", "Xtilde", "K_plus", "H_minus", "cal_E_minus"):
        assert name in names() and name in text


def test_x_alpha_on_vacuum_starts_with_lattice_shift():
    sv = apply(catalog("X_alpha"), vac(1), (-3, 0), 1)
    assert sv[0] == FockVector.basis((), sector_point(0, 1))
    assert all(sv[m].is_zero() for m in (-1, -2, -3))
    assert sv.below_window_empty


def test_k1_minus_is_identity_mod_h():
    sv = apply(catalog("k1_minus"), vac(1), (-3, 3), 1)
    assert sv.nonzero() == {(0,): vac(1)}


def test_xbar_has_no_negative_powers_on_vacuum():
    assert apply(catalog("Xbar"), vac(3), (-2, -1), 3).is_zero()


def test_empty_window_is_rejected():
    with pytest.raises(WindowUnsound):
        apply(catalog("X_alpha"), vac(1), (2, 1), 1)


def test_xbar_pair_is_symmetric():
    box = {"u": (-1, 2), "v": (-1, 2)}
    spec = catalog("Xbar")
    sv = apply_product([(spec, "u"), (spec, "v")], vac(2), box, 2)
    assert sv.nonzero()
    for (a, b), w in sv.coeffs.items():
        assert (w - sv[(b, a)]).is_zero()


def test_single_product_reduces_to_apply():
    spec = catalog("X_malpha")
    v = battery()[3].at(2)
    a = apply(spec, v, (-2, 3), 2)
    b = apply_product([(spec, "u")], v, {"u": (-2, 3)}, 2)
    assert a.equals(b)


def test_xbar_pair_vanishes_on_shifted_diagonal():
    spec = catalog("Xbar")
    box = {"u": (0, 5), "v": (0, 5)}
    sv = apply_product([(spec, "u"), (spec, "v")], vac(2), box, 2)
    # on the vacuum nothing sits below u^0 v^0 (the pair bound used by comm_int)
    assert _xbar_pair_lower_bound(vac(2), 2) == 0
    sv = USeriesVector(sv.variables, sv.window, sv.coeffs, 2, True)
    for c in (1, -1):
        out = substitute_shift(sv, "v", "u", c)
        # u^m collects a + b <= m + 1, all inside the box for m <= 4
        assert all(out[(m,)].is_zero() for m in range(0, 5))


def test_substitution_needs_certified_window():
    sv = USeriesVector(("u", "v"), ((0, 1), (0, 1)), {}, 1, False)
    with pytest.raises(IncompleteWindow):
        substitute_shift(sv, "v", "u", 0)


def test_split_halves_examples():
    sv = apply(catalog("X_alpha"), vac(1), (-3, 3), 1)
    neg, pos = split_halves(sv)
    assert neg.is_zero() and pos.equals(sv)
    z = USeriesVector(("u",), ((-1, 1),), {}, 1, True)
    n0, p0 = split_halves(z)
    assert n0.is_zero() and p0.is_zero()
    sv = apply(catalog("k1_plus"), battery()[3].at(2), (-4, 0), 2)
    neg, pos = split_halves(sv)
    assert all((neg[k] + pos[k] - sv[k]).is_zero() for k in sv.coeffs)


def test_t_action_examples():
    t11 = t_action(1, 1, "-", vac(1), (-3, 3), 1)
    assert t11.nonzero() == {(0,): vac(1)}
    t12 = t_action(1, 2, "+", vac(3), (-4, 3), 3)
    assert all(k[0] < 0 for k in t12.nonzero())
    assert all(w.same_mod(FockVector.zero(3), 1) for w in t12.coeffs.values())


@pytest.mark.parametrize("name", ["X_alpha", "X_malpha", "Xtilde", "H_plus", "K_minus"])
def test_h_order_coherence(name):
    v = battery()[3].at(3)
    hi = apply(catalog(name), v, (-3, 3), 3)
    lo = apply(catalog(name), v.truncate(2), (-3, 3), 2)
    keys = set(hi.coeffs) | set(lo.coeffs)
    assert all(hi[k].truncate(2) == lo[k] for k in keys)


def test_widening_does_not_change_coefficients():
    v = battery()[4].at(2)
    narrow = apply(catalog("X_alpha", "IK"), v, (-1, 2), 2)
    wide = apply(catalog("X_alpha", "IK"), v, (-4, 5), 2)
    assert all(narrow[k] == wide[k] for k in [(m,) for m in range(-1, 3)])


# ----- classical limit against an independent sympy model ----------------------

ORACLE_VECTORS = [0, 1, 3]  # vac, e^alpha, a1(-1)
BOX = ((-2, 2), (-2, 2))


def _engine_plain(res):
    return oracle.to_plain({k: oracle.from_fock(w) for k, w in res.items() if not w.is_zero()})


@pytest.mark.parametrize("variant", ["norm", "IK"])
@pytest.mark.parametrize("idx", ORACLE_VECTORS)
def test_single_vertex_operator_matches_oracle(variant, idx):
    v = battery()[idx].at(1)
    for name, s in (("X_alpha", 1), ("X_malpha", -1)):
        sv = apply(catalog(name, variant), v, (-3, 3), 1)
        ours = oracle.to_plain({k[0]: oracle.from_fock(w) for k, w in sv.nonzero().items()})
        theirs = oracle.to_plain(oracle.apply_x(s, oracle.from_fock(v), -3, 3))
        assert ours == theirs


@pytest.mark.parametrize("variant", ["norm", "IK"])
@pytest.mark.parametrize("idx", ORACLE_VECTORS)
def test_vertex_pair_matches_oracle(variant, idx):
    v = battery()[idx].at(1)
    xp = SpecCurrent(catalog("X_alpha", variant))
    xm = SpecCurrent(catalog("X_malpha", variant))
    res = product_series([xp, xm], v, list(BOX), 1)
    assert _engine_plain(res) == oracle.to_plain(oracle.pair_product(1, -1, oracle.from_fock(v), BOX))


@pytest.mark.parametrize("idx", ORACLE_VECTORS)
def test_commutator_mod_h_matches_oracle(idx):
    v = battery()[idx].at(1)
    ours = _engine_plain(commutator_mod_h(v, window=BOX[0]))
    fv = oracle.from_fock(v)
    a = oracle.pair_product(1, -1, fv, BOX)
    b = oracle.pair_product(-1, 1, fv, (BOX[1], BOX[0]))
    diff = {}
    for (x, y), vec in a.items():
        diff.setdefault((x, y), {}).update(vec)
    for (y, x), vec in b.items():
        d = diff.setdefault((x, y), {})
        for q, f in vec.items():
            d[q] = d.get(q, 0) - f
    assert ours == oracle.to_plain(diff)


@pytest.mark.parametrize("idx", ORACLE_VECTORS)
def test_xbar_pair_matches_oracle(idx):
    v = battery()[idx].at(1)
    xb = SpecCurrent(catalog("Xbar"))
    box = ((-1, 3), (-1, 3))
    res = product_series([xb, xb], v, list(box), 1)
    expect = oracle.pair_product(1, 1, oracle.from_fock(v), box, ann=(2, 0))
    assert _engine_plain(res) == oracle.to_plain(expect)


def test_xbar_pair_on_vacuum_starts_at_u_squared():
    res = product_series([SpecCurrent(catalog("Xbar"))] * 2, vac(1), [(0, 2), (0, 0)], 1)
    nz = {k: w for k, w in res.items() if not w.is_zero()}
    assert nz == {(2, 0): FockVector.basis((), sector_point(0, 2))}


def _times_shifted_powers(series, factors, N, window):
    """Multiply {(m,): vector} by prod (u + c h)^e, keeping exponents in the window."""
    from dyfock.arith import shifted_power

    poly = {0: HSeries.const(1, N)}
    for e, c in factors:
        new = {}
        for i, x in poly.items():
            for j, y in shifted_power(e, c, N).items():
                new[i + j] = new.get(i + j, HSeries.zero(N)) + x * y
        poly = new
    out = {}
    for (m,), w in series.items():
        for p, c in poly.items():
            q = m + p
            if window[0] <= q <= window[1]:
                t = w.scale(c)
                out[q] = out[q] + t if q in out else t
    return out


@pytest.mark.parametrize("k", [1, 2, -1])
def test_x_alpha_past_lattice_translation(k):
    # X_alpha(u) e^{k alpha} = u^k (u + h)^k e^{k alpha} X_alpha(u)
    from dyfock.fock import apply_lattice_shift

    N, win = 3, (-2, 8)
    v = FockVector.basis(((1, 1),), (0, 0), N)
    shift = (k, -k)
    lhs = apply(catalog("X_alpha"), apply_lattice_shift(shift, v), win, N)
    inner = apply(catalog("X_alpha"), v, (-14, 14), N)
    moved = {key: apply_lattice_shift(shift, w) for key, w in inner.coeffs.items()}
    rhs = _times_shifted_powers(moved, [(k, 0), (k, 1)], N, win)
    assert all((lhs[q] - rhs.get(q, FockVector.zero(N))).is_zero() for q in range(win[0], win[1] + 1))
    doubled = _times_shifted_powers(moved, [(2 * k, 0), (2 * k, 1)], N, win)
    assert any(not (lhs[q] - doubled.get(q, FockVector.zero(N))).is_zero() for q in range(win[0], win[1] + 1))
