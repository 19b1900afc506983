import json

import pytest
from hypothesis import given, strategies as st

from dyfock.arith import HSeries, frac
from dyfock.fock import FockVector, sector_point
from dyfock.ops.catalog import catalog
from dyfock.ops.currents import SpecCurrent
from dyfock.verify import (
    CLOSURE_IDENTITIES, RTT_PATTERNS, CheckReport, TestVector, battery, check_closure,
    check_comm_int, check_heisenberg, check_jps1, check_kappa_commute, check_rtt,
    check_straightening_ids, delta_expand, delta_times_current, random_vectors,
    run_suite, select_vectors, small_battery,
)

B = battery()


def named(mono, k=0, i=0, name=None):
    return TestVector(name or "v", FockVector.basis(mono, sector_point(i, k), 8))


def test_report_round_trip():
    rep = CheckReport("x", {"N": 2})
    rep.record("here", (1, 2), FockVector.basis((), (0, 0), 2, 3))
    assert not rep.passed and rep.discrepancy_count == 1
    d = json.loads(rep.to_json())
    assert set(d) == {"relation", "params", "passed", "discrepancy_count", "first_discrepancy"}
    back = CheckReport.from_dict(d)
    assert back.to_dict() == rep.to_dict()
    assert CheckReport("y").passed


def test_delta_examples():
    d = delta_expand(0, ((-3, 2), (-2, 3)), 2)
    assert d[(-1, 0)] == HSeries.const(1, 2)
    assert d[(-2, 1)] == HSeries.const(1, 2)
    d = delta_expand("1/2", ((-3, 2), (-2, 3)), 2)
    assert d[(-1, 0)] == HSeries.const(1, 2)
    assert d[(-2, 0)] == HSeries.monomial(frac("1/2"), 1, 2)


@pytest.mark.parametrize("c", ["0", "1/2", "-1/2", "3/4"])
def test_delta_absorbs_substitution(c):
    # u^p delta(u - v - ch) = (v + ch)^p delta(u - v - ch) on the window
    N = 3
    box = ((-4, 2), (-2, 3))
    d = delta_expand(c, ((-8, 4), (-4, 6)), N)
    p = 2
    lhs = {(a + p, b): x for (a, b), x in d.coeffs.items()}
    rhs = {}
    for (a, b), x in d.coeffs.items():
        for k in range(N):
            from dyfock.arith import binom
            cf = binom(p, k) * frac(c) ** k
            if cf:
                key = (a, b + p - k)
                rhs[key] = rhs.get(key, HSeries.zero(N)) + x * HSeries.monomial(cf, k, N)
    for a in range(box[0][0], box[0][1] + 1):
        for b in range(box[1][0], box[1][1] + 1):
            assert lhs.get((a, b), HSeries.zero(N)) == rhs.get((a, b), HSeries.zero(N))


def test_delta_times_current_on_both_variables_agrees():
    # delta(u - v) A(u) = delta(u - v) A(v) for a current A
    cur = SpecCurrent(catalog("k1_plus"))
    v = B[3].at(2)
    box = ((-2, 2), (-2, 2))
    assert delta_times_current(0, cur, "u", v, box, 2) == delta_times_current(0, cur, "v", v, box, 2)


def test_jps1_vacuum():
    assert check_jps1(B[:1], (-4, 4), 2).passed


def test_jps1_lattice_vector():
    assert check_jps1(B[1:2], (-4, 4), 2).passed


def test_jps1_classical_limit_on_battery():
    assert check_jps1(B[:7], (-3, 3), 1).passed


def test_comm_int_examples():
    assert check_comm_int(B[:1], (-5, 5), 3).passed
    assert check_comm_int(B, (-3, 3), 1).passed
    assert check_comm_int([named(((1, 1),), 1, name="a1(-1) e^alpha")], (-5, 5), 2).passed


@pytest.mark.parametrize("variant", ["IK", "norm"])
@pytest.mark.parametrize("pattern", RTT_PATTERNS)
def test_rtt_on_small_battery(pattern, variant):
    assert check_rtt(pattern, small_battery(), (-3, 3), 2, variant).passed


def test_rtt_minus_minus_classical():
    assert check_rtt(("-", "-"), B, (-3, 3), 1).passed


def test_heisenberg_examples():
    assert check_heisenberg(B[:1], (-3, 3), 2).passed
    assert check_heisenberg([named(((1, 1), (2, 2)), name="a1(-1)a2(-2)")], (-3, 3), 2).passed
    assert check_heisenberg(B, (-3, 3), 1).passed
    assert check_kappa_commute(B[:4], N=2).passed


@pytest.mark.parametrize("r", [-1, -2, -3])
def test_straightening_identities_on_vacuum(r):
    assert check_straightening_ids(r, B[:1], 1).passed
    assert check_straightening_ids(r, B[:1], 2).passed


def test_straightening_identities_on_battery():
    for r in (-1, -2):
        assert check_straightening_ids(r, B, 2).passed


@pytest.mark.parametrize("ident", CLOSURE_IDENTITIES)
def test_closure_identities(ident):
    assert check_closure(ident, {"window": (-3, 3)}, 2).passed


def test_unknown_closure_identity():
    with pytest.raises(ValueError):
        check_closure("nope")


def test_lambda1_relation_on_second_sector():
    vac1 = TestVector("vac1", FockVector.vacuum(1, 8))
    assert check_closure("lambda1", {"window": (-3, 3), "vectors": [vac1]}, 2).passed


def test_random_vectors_are_seeded():
    a = [t.vector for t in random_vectors(7, 3)]
    b = [t.vector for t in random_vectors(7, 3)]
    c = [t.vector for t in random_vectors(8, 3)]
    assert a == b and a != c
    assert len(select_vectors("full")) == len(B) + 5
    with pytest.raises(ValueError):
        select_vectors("bogus")


def test_suite_runner_is_sorted_and_deterministic():
    a = [r.to_dict() for r in run_suite("closure", N=1)]
    b = [r.to_dict() for r in run_suite("closure", N=1)]
    assert a == b and all(r["passed"] for r in a)
    keys = [(r["relation"], json.dumps(r["params"], sort_keys=True)) for r in a]
    assert keys == sorted(keys)
    with pytest.raises(ValueError):
        run_suite("bogus")


def test_monotone_stability_of_reports():
    small = [r.passed for r in run_suite("heisenberg", N=1, window=(-2, 2))]
    large = [r.passed for r in run_suite("heisenberg", N=2, window=(-3, 3))]
    assert small == large == [True, True]


@pytest.mark.slow
@pytest.mark.parametrize("pattern", [("+", "-"), ("-", "-")])
def test_rtt_at_fourth_order(pattern):
    assert check_rtt(pattern, small_battery(), (-2, 2), 4).passed


@pytest.mark.parametrize("pattern", [("+", "-"), ("-", "-")])
def test_rtt_detects_wrong_half_current_shift(monkeypatch, pattern):
    # the h/4 shifts of the split X^{+-} halves only show up from h^3 on
    import dyfock.ops.currents as currents

    monkeypatch.setattr(currents, "_QUARTER", frac(0))
    monkeypatch.setattr(currents, "_BUILDERS", {})
    assert check_rtt(pattern, B[:1], (-2, 2), 3).passed
    assert not check_rtt(pattern, B[:1], (-2, 2), 4).passed


def test_heisenberg_detects_wrongly_shifted_k(monkeypatch):
    from dyfock import verify
    from dyfock.ops.catalog import compose, shifted

    half = frac("1/2")
    honest = verify.K_current

    def skewed(sign, variant="norm"):
        if sign == "plus":
            return honest(sign, variant)
        k1, k2 = catalog("k1_minus", variant), catalog("k2_minus", variant)
        return SpecCurrent(compose(shifted(k1, half), shifted(k2, half)))

    monkeypatch.setattr(verify, "K_current", skewed)
    # both prefactor pairs differ by -2h^2 and the commutator is O(h^2), so the
    # mismatch only shows at h^3
    assert verify.check_heisenberg(B[:1], (-3, 3), 3).passed
    assert not verify.check_heisenberg(B[:1], (-3, 3), 4).passed


def test_heisenberg_at_fourth_order():
    assert check_heisenberg(small_battery(), (-3, 3), 4).passed


@pytest.mark.parametrize("variant", ["IK", "norm"])
def test_second_sector(variant):
    vecs = battery(1)[:2]
    assert all(check_rtt(p, vecs, (-3, 3), 2, variant).passed for p in RTT_PATTERNS)
    assert check_jps1(vecs[:1], (-3, 3), 2, variant).passed
