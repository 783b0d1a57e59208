import pytest

from pebbletep.analyze.statesets import (BddStateSets, compute_state_sets, encodings, is_subcube,
                                         power_of_two_floor)
from pebbletep.compile import compile_wbw_to_ntbp
from pebbletep.pebbling import generate_ro_wbw_strategy


@pytest.mark.parametrize("name", ["ro22", "ro32", "dt32", "bi24"])
def test_bdd_matches_explicit(name, request):
    bp = request.getfixturevalue(name)
    bdd = compute_state_sets(bp, "E", backend="bdd")
    exp = compute_state_sets(bp, "E", backend="explicit")
    for s in bp.states:
        for which in ("F", "A"):
            assert bdd.count(s, which) == exp.count(s, which)
            for i in bdd.nodes:
                assert bdd.proj(s, i, which) == exp.proj(s, i, which)


@pytest.mark.parametrize("sweep", ["E", "all", "sample"])
def test_a_within_f(ro22, sweep):
    sets = compute_state_sets(ro22, sweep, n_samples=500)
    for s in ro22.states:
        assert sets.count(s, "A") <= sets.count(s, "F")
        for i in sets.nodes:
            assert sets.proj(s, i, "A") <= sets.proj(s, i, "F")
    assert sets.describe()["sweep"] == sweep


def test_start_and_accept(ro32):
    sets = BddStateSets(ro32)
    assert sets.count(ro32.start, "F") == sets.total == 2 ** 6
    assert sum(sets.count(a, "A") for a in ro32.accept_states) >= sets.total


def test_projection_sizes_are_powers_of_two(bi44):
    sets = BddStateSets(bi44)
    for s in bi44.states:
        for i in sets.nodes:
            for which in ("F", "A"):
                n = len(sets.proj(s, i, which))
                assert n & (n - 1) == 0


def test_pick_and_contains(ro32):
    sets = BddStateSets(ro32)
    for s in ro32.topo[:10]:
        t = sets.pick(s)
        if t is not None:
            assert sets.contains(s, t, "A") and sets.contains(s, t, "F")


def test_restricted_values():
    bp = compile_wbw_to_ntbp(generate_ro_wbw_strategy(2), 3)
    sets = BddStateSets(bp, values=2)
    assert sets.total == 2 ** 2
    assert sets.count(bp.start) == 4


def test_helpers():
    assert [power_of_two_floor(k) for k in (2, 3, 4, 5, 8, 9)] == [2, 2, 4, 4, 8, 8]
    assert is_subcube({0, 1}, (0, 1, 2, 3), 2)
    assert is_subcube({1, 3}, (0, 1, 2, 3), 2)
    assert not is_subcube({0, 3}, (0, 1, 2, 3), 2)
    assert is_subcube({0, 3}, (0, 1, 3, 2), 2)
    assert len(encodings(4, True)) == 24 and encodings(4, False) == [(0, 1, 2, 3)]


def test_bad_sweep(ro22):
    with pytest.raises(ValueError):
        compute_state_sets(ro22, "everything")
    with pytest.raises(ValueError):
        compute_state_sets(ro22, "all", backend="bdd")
