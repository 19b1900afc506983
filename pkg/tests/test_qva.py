import pytest

from dyfock.fock import FockVector, sector_point
from dyfock.ops.catalog import catalog
from dyfock.ops.currents import SpecCurrent
from dyfock.qva import (
    C2, VACUUM_STATE, StateSpec, bound_growth, check_k_commutes_x, check_k_state,
    check_normal_ordered_limit, check_restricted, check_vacuum_axiom, classical_states,
    module_vertex_operator, t_matrix, y_heisenberg, y_module_map,
)
from dyfock.verify import TestVector, battery, small_battery

B = battery()


def test_state_validation():
    assert VACUUM_STATE.arity == 0
    with pytest.raises(ValueError):
        StateSpec(((1, 2),) * 3, (0, 0, 0))
    with pytest.raises(ValueError):
        StateSpec(((1, 3),), (0,))
    with pytest.raises(ValueError):
        StateSpec(((1, 2),), ())
    with pytest.raises(ValueError):
        StateSpec(((1, 2),), (-1,))
    assert StateSpec(((1, 2),), (1,)).to_dict() == {"entries": [[1, 2]], "powers": [1], "level": "1"}


def test_restricted_examples():
    rep = check_restricted(B[:1], 2)
    assert rep.passed and rep.params["bounds"]["vac"]
    v = TestVector("a1(-2) e^alpha", FockVector.basis(((1, 2),), sector_point(0, 1), 8))
    assert check_restricted([v], 3).passed


def test_restricted_on_battery_both_sectors():
    assert check_restricted(B, 3).passed
    assert check_restricted(battery(1), 3).passed


def test_t12_plus_tail_is_h_divisible():
    from dyfock.ops.currents import t_current

    # on the vacuum the entry vanishes; e^{-alpha} and a1(-1) give a genuine tail
    assert not t_current(1, 2, "plus").coeffs(FockVector.vacuum(0, 3), -8, 3, 3)
    for tv in (B[2], B[3]):
        got = t_current(1, 2, "plus").coeffs(tv.at(3), -8, 3, 3)
        assert got and all(m < 0 and w.same_mod(FockVector.zero(3), 1) for m, w in got.items())


@pytest.mark.parametrize("N", [2, 3, 4])
def test_bound_grows_at_most_linearly(N):
    # single modes a_j(-r) at the vacuum point: the bound moves by a fixed step per unit weight
    rows = {name: (w, low) for name, w, low in bound_growth(B, N)}
    for j in (1, 2):
        lows = [rows["a%d(-%d)" % (j, r)][1] for r in (1, 2, 3)]
        steps = [a - b for a, b in zip(lows, lows[1:])]
        assert all(0 <= s <= 4 for s in steps)
    assert rows["vac"][1] == 0


def test_vacuum_state_is_identity():
    assert check_vacuum_axiom(B, (-3, 3), 2).passed
    out = y_module_map(VACUUM_STATE, B[3].at(2), (-2, 2), 2)
    assert out == {0: B[3].at(2)}


def test_module_map_factor_order():
    cur, invs = module_vertex_operator(StateSpec(((1, 2), (2, 1)), (0, 0)), 2)
    assert len(invs) == 1 and len(cur.parts) == 4
    with pytest.raises(ValueError):
        y_module_map(StateSpec(((1, 2),), (0,)), B[0].at(2), (2, 1), 2)


def test_module_map_truncation_coherence():
    st = StateSpec(((1, 2),), (0,))
    hi = y_module_map(st, B[1].at(3), (-2, 2), 3)
    lo = y_module_map(st, B[1].at(2), (-2, 2), 2)
    for m in set(hi) | set(lo):
        assert hi.get(m, FockVector.zero(3)).truncate(2) == lo.get(m, FockVector.zero(2))


def test_normal_ordered_limit_examples():
    st12 = StateSpec(((1, 2),), (0,))
    st11 = StateSpec(((1, 1),), (0,))
    st21 = StateSpec(((2, 1),), (0,))
    assert check_normal_ordered_limit([st12, st11], B[:1]).passed
    assert check_normal_ordered_limit([st21], B[1:2]).passed


def test_normal_ordered_limit_all_states():
    assert check_normal_ordered_limit(classical_states(), small_battery()).passed


def test_k_state_consistency():
    assert check_k_state(small_battery(), (-3, 3), 2).passed


def test_k_state_creation_on_vacuum():
    vac = FockVector.vacuum(0, 2)
    got = y_heisenberg(0, vac, (-3, 3), 2)
    want = SpecCurrent(catalog("K_minus")).coeffs(vac, -3, 3, 2)
    assert got == want


def test_k_state_at_third_order():
    assert check_k_state([B[3]], (-3, 3), 3, (0,)).passed


def test_k_state_detects_wrong_central_shift():
    # the shift hc_2/4 enters at h^2, so the sign of c_2 only shows at N = 3
    assert check_k_state([B[3]], (-3, 3), 2, (0,), c2=-C2).passed
    assert not check_k_state([B[3]], (-3, 3), 3, (0,), c2=-C2).passed


def test_k_state_commutes_with_x():
    assert check_k_commutes_x(small_battery()).passed


def test_t_matrix_entries():
    tm = t_matrix("minus")
    assert set(tm) == {(1, 1), (1, 2), (2, 1), (2, 2)}


def test_module_map_at_classical_order():
    # mod h the inverted T^+ is the identity and its off-diagonal entries vanish
    assert check_k_state(small_battery(), (-2, 2), 1, (0,)).passed
    st = StateSpec(((1, 2),), (0,))
    assert y_module_map(st, B[0].at(1), (-2, 2), 1) == {}
