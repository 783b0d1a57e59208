import numpy as np
import pytest

from pebbletep.analyze.checks import check_bitwise_independence, check_syntactic_read_once, check_thrifty
from pebbletep.bp import ACCEPT_LABEL, BranchingProgram, final_label, func_query, leaf_query
from pebbletep.compile import Encoding, compile_black_to_dtbp, compile_fractional_to_bintbp, compile_wbw_to_ntbp
from pebbletep.pebbling import generate_black_strategy, generate_fractional_strategy, generate_ro_wbw_strategy
from pebbletep.tree import random_instances_matrix


def careless_bp():
    """Reads both leaves, then always asks f1(0, 0)."""
    states = {0: leaf_query(2), 1: leaf_query(3), 2: func_query(1, 0, 0), 3: ACCEPT_LABEL}
    edges = [(0, 1, 0), (0, 1, 1), (1, 2, 0), (1, 2, 1), (2, 3, 1)]
    return BranchingProgram(2, 2, states, edges, 0)


def twice_bp():
    states = {0: leaf_query(2), 1: leaf_query(3), 2: leaf_query(2), 3: ACCEPT_LABEL}
    edges = [(0, 1, 0), (1, 2, 0), (2, 3, 0)]
    return BranchingProgram(2, 2, states, edges, 0)


def test_thrifty_violation_has_witness():
    v = check_thrifty(careless_bp())
    assert not v.ok
    w = v.violations[0]
    assert w.state == 2 and w.instance is not None and w.path[-1] == 3
    assert "f1(0,0)" in w.detail
    assert v.to_dict()["violations"][0]["instance"]["h"] == 2


def test_read_once_violation():
    v = check_syntactic_read_once(twice_bp())
    assert not v.ok and "node 2" in v.violations[0].detail
    assert check_syntactic_read_once(careless_bp()).ok


def test_unused_branches_ignored_by_read_once():
    # a second query of leaf 2 that cannot reach accept does not count
    states = {0: leaf_query(2), 1: leaf_query(3), 2: leaf_query(2), 3: ACCEPT_LABEL, 4: final_label(0)}
    edges = [(0, 1, 0), (1, 3, 0), (1, 2, 1), (2, 4, 0)]
    assert check_syntactic_read_once(BranchingProgram(2, 2, states, edges, 0)).ok


@pytest.mark.parametrize("h,k", [(2, 2), (3, 2), (2, 4), (3, 4), (4, 2)])
def test_compiled_programs_are_thrifty_and_read_once(h, k):
    ro = compile_wbw_to_ntbp(generate_ro_wbw_strategy(h), k)
    assert check_thrifty(ro).ok
    assert check_syntactic_read_once(ro).ok
    dt = compile_black_to_dtbp(generate_black_strategy(h), k)
    assert check_thrifty(dt).ok
    assert check_syntactic_read_once(dt).ok


def test_thrifty_over_uniform_inputs(ro32, rng):
    X = random_instances_matrix(3, 2, "BT", 5000, rng)
    assert check_thrifty(ro32, X).ok


@pytest.mark.parametrize("h,k,d", [(2, 2, 1), (3, 2, 1), (4, 2, 1), (2, 4, 2), (3, 4, 2), (4, 4, 1), (4, 4, 2)])
def test_fractional_programs_bitwise_independent(h, k, d):
    bp = compile_fractional_to_bintbp(generate_fractional_strategy(h, d), k)
    v = check_bitwise_independence(bp)
    assert v.ok and v.info["encoding"] == list(range(k))


def test_encoding_matters():
    bp = compile_fractional_to_bintbp(generate_fractional_strategy(3, 2), 4)
    assert not check_bitwise_independence(bp, encoding=Encoding((0, 3, 1, 2))).ok
    shuffled = compile_fractional_to_bintbp(generate_fractional_strategy(3, 2), 4, Encoding((0, 3, 1, 2)))
    assert not check_bitwise_independence(shuffled).ok
    v = check_bitwise_independence(shuffled, search=True)
    assert v.ok and v.info["encoding"] != [0, 1, 2, 3]


def test_whole_pebbling_program_is_not_bitwise_independent(ro32):
    # black values computed from guessed children send wrong guesses to 0
    v = check_bitwise_independence(ro32)
    assert not v.ok and v.violations


def test_non_power_of_two_restricts():
    bp = compile_wbw_to_ntbp(generate_ro_wbw_strategy(2), 3)
    v = check_bitwise_independence(bp)
    assert v.info["values"] == 2 and v.ok
