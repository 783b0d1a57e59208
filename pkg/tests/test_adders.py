import pytest

from pebbletep.analyze.adders import (adder_bp, adder_census, adder_instances, expected_sum, minimal_adder_search,
                                      two_pair_adder_bp)
from pebbletep.bp import BranchingProgram, DETERMINISTIC, final_label, leaf_query, run_deterministic, size
from pebbletep.exceptions import AnalysisError


@pytest.mark.parametrize("k", [2, 3, 4, 5])
def test_single_pair(k):
    rep = adder_census(adder_bp(k), 1)
    assert rep.correct and rep.ok
    assert rep.max_f == 1 and len(rep.last_edges) == k * k
    assert rep.size == k + 1 >= rep.state_bound == k


@pytest.mark.parametrize("k", [2, 3])
def test_two_pairs(k):
    bp = two_pair_adder_bp(k)
    assert size(bp) == 1 + 2 * k + k * k
    rep = adder_census(bp, 2)
    assert rep.ok and rep.max_f == k
    assert rep.edge_bound == k ** 3 and rep.state_bound == k * k


def test_instances_cover_the_grid():
    seen = {vals for vals, _ in adder_instances(3, 2, 2)}
    assert len(seen) == 16
    for vals, inst in adder_instances(3, 2, 2):
        assert run_deterministic(two_pair_adder_bp(2), inst)[0] == expected_sum(vals, 2)


def test_incorrect_program_rejected():
    states = {0: leaf_query(2), 1: final_label(0), 2: final_label(1)}
    bp = BranchingProgram(2, 2, states, [(0, 1, 0), (0, 2, 1)], 0, DETERMINISTIC, "FT")
    with pytest.raises(AnalysisError, match="not a correct adder"):
        adder_census(bp, 1)
    with pytest.raises(ValueError):
        adder_census(adder_bp(2), 3)


def test_brute_force_minimum():
    found, witness = minimal_adder_search(2, 3)
    assert found[1] == 0 and found[2] == 0 and found[3] > 0
    assert adder_census(witness, 1).ok


def test_brute_force_three_values():
    found, _ = minimal_adder_search(3, 3)
    assert found[1] == found[2] == 0
