from fractions import Fraction

import pytest

from ising_peel import curves
from ising_peel.enumeration import (
    OracleLimitError,
    RecursionMismatch,
    brute_force_count,
    build_count_table,
    eval_z,
    self_check,
)


@pytest.fixture(scope="module")
def table():
    return build_count_table(5, 5, 7)


def test_small_entries_are_locked(table):
    assert table.get(0, 0, 0) == {0: 1}
    assert table.get(1, 1, 0) == {0: 1}
    assert table.get(2, 0, 0) == {1: 1}
    assert table.get(1, 0, 1) == {1: 1, 2: 1}


def test_brute_force_small_entries():
    assert brute_force_count(0, 0, 0) == {0: 1}
    assert brute_force_count(1, 1, 0) == {0: 1}
    assert brute_force_count(2, 0, 0) == {1: 1}
    assert brute_force_count(1, 0, 1) == {1: 1, 2: 1}


@pytest.mark.parametrize("p,q", [(p, L - p) for L in range(6) for p in range(L + 1)])
def test_recursion_matches_brute_force(table, p, q):
    for n in range(8):
        rec = {m: c for m, c in table.get(p, q, n).items() if c}
        assert rec == brute_force_count(p, q, n), (p, q, n)


def test_self_check_reports_offending_entry():
    tab = build_count_table(3, 0, 4)
    assert self_check(tab, 3, 4) > 0
    tab.entries[(2, 0, 2)] = {**tab.entries[(2, 0, 2)], 4: 99}
    with pytest.raises(RecursionMismatch) as err:
        self_check(tab, 3, 4)
    assert err.value.where == (2, 0, 2, 4)


def test_symmetry_in_p_and_q(table):
    for p in range(6):
        for q in range(6 - p):
            for n in range(8):
                if table.covers(p, q, n) and table.covers(q, p, n):
                    assert table.get(p, q, n) == table.get(q, p, n)


def test_parity_gives_empty_entries(table):
    for p in range(4):
        for q in range(4):
            for n in range(8):
                if (n - p - q) % 2:
                    assert table.get(p, q, n) == {}
                    assert brute_force_count(p, q, n) == {}


def test_brute_force_cap():
    with pytest.raises(OracleLimitError, match="oracle limit"):
        brute_force_count(1, 1, 8)


def test_entries_do_not_change_when_table_grows():
    small = build_count_table(3, 2, 5)
    big = build_count_table(3, 2, 9)
    for key, poly in small.entries.items():
        assert big.entries[key] == poly


def test_coefficients_nonnegative_and_ratio_trend():
    tab = build_count_table(2, 0, 24)
    tc = curves.critical_point(2).t_c
    coeffs = [float(c) for c in tab.poly(2, 0, Fraction(2))]
    assert all(c >= 0 for c in coeffs)
    ratios = [coeffs[n + 2] / coeffs[n] for n in range(10, 22, 2)]
    # the even-step ratio creeps up towards t_c^-2 from below
    assert all(a <= b for a, b in zip(ratios, ratios[1:]))
    assert ratios[-1] < tc ** -2


def test_eval_z_empty_map_is_one():
    for t, nu in [(0.0, 2), (0.01, 3.5), (0.005, 8)]:
        assert eval_z(0, 0, t, nu).value == 1.0


def test_eval_z_edge_map_at_zero_weight():
    assert eval_z(1, 1, 0.0, 2).value == 1.0


def test_eval_z_matches_brute_force_partial_sums():
    t = 0.02
    direct = sum(sum(c * 2 ** m for m, c in brute_force_count(1, 0, n).items()) * t ** n for n in range(8))
    ev = eval_z(1, 0, t, 2, n_terms=7)
    assert ev.partial_sums[-1] == pytest.approx(direct, rel=1e-14)
    # the certified bound must cover the distance to a much longer sum
    longer = eval_z(1, 0, t, 2, n_terms=30).value
    assert ev.certified and abs(longer - ev.value) <= ev.error


def test_eval_z_rejects_supercritical_weight():
    tc = curves.critical_point(2).t_c
    with pytest.raises(ValueError, match="inadmissible"):
        eval_z(1, 1, 1.1 * tc, 2)


def test_tail_extrapolation_within_certified_bound():
    tc = curves.critical_point(2).t_c
    t = 0.7 * tc
    trunc = eval_z(2, 2, t, 2, n_terms=30)
    extra = eval_z(2, 2, t, 2, mode="tail_extrapolate", n_terms=30)
    assert extra.approx and not trunc.approx
    assert abs(extra.value - trunc.value) <= trunc.error
