import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pebbletep.bp import (ACCEPT_LABEL, DETERMINISTIC, GUESS_LABEL, NONDETERMINISTIC, BranchingProgram,
                          accepts, accepts_batch, backward_matrix, backward_set, bp_from_dict, bp_to_dict,
                          dumps_bp, enumerate_accepting_paths, export_dot, final_label, first_accepting_path,
                          forward_matrix, forward_set, func_query, leaf_query, load, loads_bp, outputs_batch,
                          path_is_consistent, prune, reachable_outputs, run_deterministic, run_deterministic_batch,
                          size, store)
from pebbletep.exceptions import MalformedProgram, ParseError
from pebbletep.tree import TepInstance, evaluate, random_instances_matrix


def leaf_equality_bp(k=2):
    """Accepts iff the two leaves of a height-2 tree are equal; deterministic."""
    states = {0: leaf_query(2), 1: leaf_query(3), 2: leaf_query(3), 3: ACCEPT_LABEL, 4: final_label(0)}
    edges = [(0, 1, 0), (0, 2, 1), (1, 3, 0), (1, 4, 1), (2, 4, 0), (2, 3, 1)]
    return BranchingProgram(2, k, states, edges, 0, DETERMINISTIC, "BT")


def guessing_bp():
    """Guess v2, check it against the leaf, then read f1(v2, v3) with v3 guessed too."""
    states = {0: GUESS_LABEL, 1: leaf_query(2), 2: leaf_query(2), 3: GUESS_LABEL, 4: GUESS_LABEL,
              5: ACCEPT_LABEL}
    edges = [(0, 1, None), (0, 2, None), (1, 3, 0), (2, 4, 1)]
    nid = 6
    for a, g in ((0, 3), (1, 4)):
        for b in (0, 1):
            states[nid] = leaf_query(3)
            states[nid + 1] = func_query(1, a, b)
            edges += [(g, nid, None), (nid, nid + 1, b), (nid + 1, 5, 1)]
            nid += 2
    return BranchingProgram(2, 2, states, edges, 0, NONDETERMINISTIC, "BT")


def test_deterministic_run():
    bp = leaf_equality_bp()
    for u in (0, 1):
        for v in (0, 1):
            inst = TepInstance(2, 2, (u, v), ((0, 0, 0, 0),))
            value, path = run_deterministic(bp, inst)
            assert value == int(u == v)
            assert path_is_consistent(bp, inst, path)
    assert size(bp) == 3


def test_guessing_matches_evaluation():
    bp = guessing_bp()
    X = random_instances_matrix(2, 2, "BT", 200, np.random.default_rng(0))
    got = accepts_batch(bp, X)
    for row, a in zip(X, got):
        inst = TepInstance.from_vector(2, 2, row)
        assert a == accepts(bp, inst) == (evaluate(inst)[1] == 1)


def test_paths_enumerated_in_order():
    bp = guessing_bp()
    inst = TepInstance(2, 2, (1, 0), ((1, 1, 1, 1),))
    paths, truncated = enumerate_accepting_paths(bp, inst)
    assert not truncated and len(paths) == 1
    assert paths[0] == first_accepting_path(bp, inst)
    assert paths[0].states[:2] == (0, 2)
    assert first_accepting_path(bp, inst, through=1) is None


def test_forward_backward_agree_with_matrices():
    bp = guessing_bp()
    X = random_instances_matrix(2, 2, "BT", 50, np.random.default_rng(1))
    R, G = forward_matrix(bp, X), backward_matrix(bp, X)
    for n, row in enumerate(X):
        inst = TepInstance.from_vector(2, 2, row)
        fw, bw = forward_set(bp, inst), backward_set(bp, inst)
        for s in bp.states:
            assert R[bp.index[s], n] == (s in fw)
            assert G[bp.index[s], n] == (s in bw)


def test_structure_validation():
    with pytest.raises(MalformedProgram, match="cycle"):
        BranchingProgram(2, 2, {0: leaf_query(2), 1: leaf_query(3)}, [(0, 1, 0), (1, 0, 0)], 0)
    with pytest.raises(MalformedProgram):
        BranchingProgram(2, 2, {0: leaf_query(2), 1: ACCEPT_LABEL}, [(0, 1, 0)], 0, DETERMINISTIC)
    with pytest.raises(MalformedProgram):
        BranchingProgram(2, 2, {0: leaf_query(1), 1: ACCEPT_LABEL}, [(0, 1, 0)], 0)
    with pytest.raises(MalformedProgram):
        BranchingProgram(2, 2, {0: func_query(1, 0, 2), 1: ACCEPT_LABEL}, [(0, 1, 0)], 0)
    with pytest.raises(MalformedProgram):
        BranchingProgram(2, 2, {0: GUESS_LABEL, 1: ACCEPT_LABEL}, [(0, 1, 0)], 0)
    with pytest.raises(MalformedProgram):
        BranchingProgram(2, 2, {0: ACCEPT_LABEL}, [(0, 0, None)], 0)


def test_ft_outputs():
    k = 3
    states = {0: leaf_query(2)}
    states.update({1 + v: final_label(v) for v in range(k)})
    bp = BranchingProgram(2, k, states, [(0, 1 + v, v) for v in range(k)], 0, DETERMINISTIC, "FT")
    X = random_instances_matrix(2, k, "FT", 30, np.random.default_rng(2))
    assert np.array_equal(run_deterministic_batch(bp, X), X[:, 0])
    assert np.array_equal(outputs_batch(bp, X), 1 << X[:, 0])
    assert reachable_outputs(bp, TepInstance.from_vector(2, k, X[0], "FT")) == {int(X[0, 0])}


def test_prune_keeps_semantics():
    bp = guessing_bp()
    # an unreachable state and a dead end
    states = dict(bp.states)
    states[99] = leaf_query(3)
    states[98] = leaf_query(3)
    edges = list(bp.edges) + [(99, 5, 0), (0, 98, None)]
    bigger = BranchingProgram(2, 2, states, edges, 0)
    small = prune(bigger)
    assert 99 not in small.states and 98 not in small.states
    X = random_instances_matrix(2, 2, "BT", 100, np.random.default_rng(3))
    assert np.array_equal(accepts_batch(small, X), accepts_batch(bigger, X))


def test_json_roundtrip(tmp_path, ro32):
    for bp in (guessing_bp(), leaf_equality_bp(), ro32):
        back = loads_bp(dumps_bp(bp))
        assert bp_to_dict(back) == bp_to_dict(bp)
    store(ro32, tmp_path / "p.json")
    assert bp_to_dict(load(tmp_path / "p.json")) == bp_to_dict(ro32)


def test_json_errors_locate():
    with pytest.raises(ParseError, match="line 2"):
        loads_bp('{"h": 2,\n "k": }')
    data = bp_to_dict(leaf_equality_bp())
    del data["start"]
    with pytest.raises(ParseError, match="start"):
        bp_from_dict(data)
    data = bp_to_dict(leaf_equality_bp())
    data["edges"].append({"from": 3, "to": 0, "label": 0})
    with pytest.raises(MalformedProgram):
        bp_from_dict(data)


def test_dot_export():
    text = export_dot(guessing_bp())
    assert text.startswith("digraph bp {")
    assert "style=dashed" in text and text.count("->") == len(guessing_bp().edges)


@given(st.integers(0, 2 ** 31))
@settings(max_examples=10, deadline=None)
def test_compiled_dtbp_deterministic_run(dt32, seed):
    X = random_instances_matrix(3, 2, "BT", 20, np.random.default_rng(seed))
    for row in X:
        inst = TepInstance.from_vector(3, 2, row)
        value, path = run_deterministic(dt32, inst)
        assert value == evaluate(inst)[1]
