import itertools
import json

import pytest
from hypothesis import given, strategies as st

from dyfock import basis
from dyfock.arith import HSeries
from dyfock.basis import (
    CharacterTable, MonomialIndex, NoTermination, classical_rank, convert_flavor,
    descent_tail, enumerate_basis, evaluate_combination, evaluate_monomial, exact_rank,
    heisenberg_extend, heisenberg_rank, is_admissible, parse_modes, rr_count,
    semi_infinite_stage, stage_form, straighten, tail_parity, check_stage, check_tail,
)
from dyfock.fock import FockVector, apply_mode, sector_point
from dyfock.verify import kappa_mode


def brute_rr(d, n=None):
    """Partitions of d into distinct parts with pairwise gaps >= 2, by exhaustive search."""
    count = 0
    for k in range(0, d + 1):
        if n is not None and k != n:
            continue
        for parts in itertools.combinations(range(1, d + 1), k):
            if sum(parts) == d and all(b - a >= 2 for a, b in zip(parts, parts[1:])):
                count += 1
    return count


def X(*modes, flavor="x", **kw):
    return MonomialIndex(flavor, modes, **kw)


# ----- enumeration and counts --------------------------------------------------


def test_enumeration_examples():
    assert enumerate_basis(0) == [X()]
    deg5 = [idx.modes for idx in enumerate_basis(5) if idx.degree == 5]
    assert sorted(deg5) == [(-5,), (-1, -4)]
    assert sum(1 for idx in enumerate_basis(8) if idx.degree == 8) == 4


def test_enumeration_order_and_bounds():
    idxs = enumerate_basis(7, 2)
    keys = [(i.degree, i.charge, i.modes) for i in idxs]
    assert keys == sorted(keys) and all(i.charge <= 2 and i.admissible() for i in idxs)
    with pytest.raises(ValueError):
        enumerate_basis(-1)


def test_rr_count_examples():
    assert rr_count(0) == 1 and rr_count(5) == 2 and rr_count(8) == 4


@pytest.mark.parametrize("d", range(0, 13))
def test_counts_match_brute_force(d):
    idxs = [i for i in enumerate_basis(d) if i.degree == d]
    assert len(idxs) == rr_count(d) == brute_rr(d)
    for n in range(0, 5):
        assert sum(1 for i in idxs if i.charge == n) == rr_count(d, n) == brute_rr(d, n)


def test_character_table_exports():
    tab = CharacterTable.build(6)
    assert tab.consistent()
    lines = tab.to_csv().splitlines()
    assert lines[0] == "charge,degree,count,oracle" and len(lines) == len(tab.rows) + 1
    assert json.loads(tab.to_json())["rows"][0] == {"charge": 0, "degree": 0, "count": 1, "oracle": 1}


@given(st.lists(st.integers(-9, 1), max_size=4))
def test_admissibility_definition(modes):
    ok = not modes or (modes[0] <= -1 and all(b <= a - 2 for a, b in zip(modes, modes[1:])))
    assert is_admissible(tuple(modes)) == ok


def test_parse_modes():
    assert parse_modes("-1,-3") == (-1, -3) and parse_modes("") == ()
    with pytest.raises(ValueError):
        parse_modes("-1,,x")


def test_index_validation_and_text():
    with pytest.raises(ValueError):
        MonomialIndex("y")
    with pytest.raises(ValueError):
        MonomialIndex("x", (), 0, 2)
    assert X(-1, -3, flavor="xtilde", charge_prefix=-1).to_text() == "e[0,-1] xt(-3)xt(-1)"


# ----- evaluation --------------------------------------------------------------


def test_evaluation_examples():
    e_alpha = FockVector.basis((), sector_point(0, 1), 1)
    assert evaluate_monomial(X(-1, flavor="xbar"), 1) == e_alpha
    for N in (1, 2, 4):
        assert evaluate_monomial(X(-1, flavor="xtilde"), N) == FockVector.basis((), sector_point(0, 1), N)
    assert evaluate_monomial(X(sector=1), 3) == FockVector.vacuum(1, 3)


def test_heisenberg_extension_examples():
    idx = X(-1, -3)
    assert heisenberg_extend(idx, (), 2) == evaluate_monomial(idx, 2)
    v = heisenberg_extend(X(), (1,), 1)
    vac = FockVector.vacuum(0, 1)
    assert v == apply_mode(1, -1, vac) + apply_mode(2, -1, vac)
    w = evaluate_monomial(X(-1), 4)
    assert kappa_mode(-1, kappa_mode(-2, w, 3), 2) == kappa_mode(-2, kappa_mode(-1, w, 3), 2)


# ----- straightening -----------------------------------------------------------


def test_straighten_examples():
    assert straighten(X(-1, -1, flavor="xbar"), 1).terms == {}
    adm = X(-1, -3, flavor="xbar")
    for m in (1, 2, 3):
        assert straighten(adm, m).terms == {adm: HSeries.const(1, m)}
    comb = straighten(X(-2, -2, flavor="xbar"), 1)
    assert set(comb.terms) == {adm}
    assert comb.evaluate() == evaluate_monomial(X(-2, -2, flavor="xbar"), 1)
    with pytest.raises(ValueError):
        straighten(X(-1, -1), 1)


NON_ADMISSIBLE_PAIRS = [(a, b) for a in range(-5, 0) for b in range(-5, 0) if not is_admissible((a, b))]


@pytest.mark.parametrize("m", [1, 2, 3])
def test_straightening_is_exact_on_pairs(m):
    for modes in NON_ADMISSIBLE_PAIRS:
        idx = X(*modes, flavor="xbar")
        comb = straighten(idx, m)
        assert all(k.admissible() for k in comb.terms)
        assert comb.evaluate() == evaluate_monomial(idx, m), modes


def test_straightening_triples_mod_h_squared():
    for modes in [(-1, -1, -1), (-2, -1, -3), (-1, -2, -2)]:
        idx = X(*modes, flavor="xbar")
        assert straighten(idx, 2).evaluate() == evaluate_monomial(idx, 2)


def test_straightening_needs_the_h_corrections(monkeypatch):
    honest = basis.pair_relation
    monkeypatch.setattr(basis, "pair_relation", lambda hi, lo, m: [t for t in honest(hi, lo, m) if t[0][0]])
    idx = X(-2, -2, flavor="xbar")
    assert straighten(idx, 1).evaluate() == evaluate_monomial(idx, 1)
    assert straighten(idx, 3).evaluate() != evaluate_monomial(idx, 3)


def test_straightening_budget():
    with pytest.raises(NoTermination):
        straighten(X(-1, -1, -1, -1, flavor="xbar"), 2, budget=1)


# ----- flavor conversion -------------------------------------------------------


def test_conversion_mod_h_is_identity():
    for flavor in ("x", "xbar", "xtilde"):
        for target in ("x", "xbar", "xtilde"):
            out = convert_flavor(X(-1, -3, flavor=flavor), target, 1)
            assert out == {X(-1, -3, flavor=target): HSeries.const(1, 1)}


def test_single_xtilde_is_x():
    for m in (1, 2, 3):
        assert convert_flavor(X(-1, flavor="xtilde"), "x", m) == {X(-1): HSeries.const(1, m)}


@pytest.mark.parametrize("src,target", [("xbar", "x"), ("x", "xbar"), ("xtilde", "x"), ("x", "xtilde")])
def test_conversion_is_exact(src, target):
    for modes in [(-1, -1), (-1, -3), (-2, -1)]:
        idx = X(*modes, flavor=src)
        out = convert_flavor(idx, target, 2)
        assert evaluate_combination(out, 2) == evaluate_monomial(idx, 2)
    out = convert_flavor(X(-1, -1, flavor="xbar"), "x", 2)
    assert any(c[0] == 0 and c[1] != 0 for c in (v.coeffs for v in out.values()))


# ----- classical ranks ---------------------------------------------------------


def test_rank_examples():
    assert classical_rank(1, 1) == (1, 1)
    assert classical_rank(4, 2) == (1, 1)
    assert classical_rank(6, 2) == (2, 2)


@pytest.mark.parametrize("d", range(0, 7))
def test_rank_is_full_up_to_degree_six(d):
    for n in range(0, 4):
        rank, expected = classical_rank(d, n)
        assert rank == expected


def test_rank_detects_dependence():
    v = evaluate_monomial(X(-1), 1)
    assert exact_rank([v, v.scale(3)]) == 1 and exact_rank([]) == 0


@pytest.mark.parametrize("total", range(0, 5))
def test_heisenberg_rank_is_full(total):
    for n in (0, 1, 2):
        rank, expected = heisenberg_rank(total, n)
        assert rank == expected


# ----- semi-infinite stages ----------------------------------------------------


def test_stage_examples():
    assert semi_infinite_stage(0, 1, X(flavor="xtilde")) == X(-1, flavor="xtilde")
    assert semi_infinite_stage(0, 0, X(-1, flavor="xtilde")) == X(-1, -3, flavor="xtilde", charge_prefix=-1)
    assert tail_parity(0) == "odd" and tail_parity(1) == "even"
    assert descent_tail(0, 3) == (1, 3, 5) and descent_tail(1, 3) == (0, 2, 4)
    with pytest.raises(ValueError):
        semi_infinite_stage(0, 0, X(-1, -1, flavor="xtilde"))


@pytest.mark.parametrize("i", [0, 1])
def test_stage_coherence(i):
    for b in enumerate_basis(5, flavor="xtilde"):
        for m in (0, 1, 2):
            assert check_stage(i, m, b, 2), (i, m, b)


@pytest.mark.parametrize("i", [0, 1])
def test_stage_coherence_higher_order(i):
    for b in enumerate_basis(3, flavor="xtilde"):
        assert check_stage(i, 1, b, 4)


@pytest.mark.parametrize("i", [0, 1])
@pytest.mark.parametrize("k", [1, 2, 3])
def test_descent_tails(i, k):
    assert check_tail(i, k, 3)


def test_stage_descent_is_not_a_plain_relabel():
    b = X(-1, flavor="xtilde")
    wrong = X(-1, -2, flavor="xtilde", charge_prefix=-1)
    assert evaluate_monomial(stage_form(0, 0, b), 2) != evaluate_monomial(wrong, 2)
