import itertools

import numpy as np
import pytest

from pebbletep.bp import (GUESS, accepts_batch, outputs_batch, run_deterministic, run_deterministic_batch, size)
from pebbletep.compile import (Encoding, check_group, compile_black_to_dtbp, compile_fractional_to_bintbp,
                               compile_group_sft, compile_wbw_to_ntbp, cyclic_group, eliminate_guess_states)
from pebbletep.exceptions import CompileError
from pebbletep.pebbling import (BLACK, FRACTIONAL_BW, WHOLE_BW, PebbleSequence, generate_black_strategy,
                                generate_fractional_strategy, generate_ro_wbw_strategy, increase_white,
                                place_black, decrease_black, remove_white, slide)
from pebbletep.tree import TepInstance, all_instances_matrix, evaluate, evaluate_batch, random_instances_matrix


def truth(X, h, k):
    return evaluate_batch(X, h, k)[:, 1] == 1


@pytest.mark.parametrize("h,k", [(2, 2), (2, 3), (3, 2)])
def test_exhaustive_agreement(h, k):
    X = all_instances_matrix(h, k, "BT")
    want = truth(X, h, k)
    assert np.array_equal(accepts_batch(compile_wbw_to_ntbp(generate_ro_wbw_strategy(h), k), X), want)
    dt = compile_black_to_dtbp(generate_black_strategy(h), k)
    assert np.array_equal(accepts_batch(dt, X), want)
    assert np.array_equal(run_deterministic_batch(dt, X) == 1, want)


@pytest.mark.parametrize("h,k,d", [(2, 2, 1), (3, 2, 1), (2, 4, 2), (3, 4, 2), (3, 4, 1), (4, 4, 2), (4, 2, 1)])
def test_fractional_agreement(h, k, d, rng):
    X = random_instances_matrix(h, k, "BT", 3000, rng)
    bp = compile_fractional_to_bintbp(generate_fractional_strategy(h, d), k)
    assert np.array_equal(accepts_batch(bp, X), truth(X, h, k))


def test_fractional_needs_power_of_two():
    with pytest.raises(CompileError):
        compile_fractional_to_bintbp(generate_fractional_strategy(2, 1), 3)
    with pytest.raises(CompileError):
        compile_fractional_to_bintbp(generate_fractional_strategy(3, 2), 2)


def test_custom_encoding_same_language(rng):
    X = random_instances_matrix(3, 4, "BT", 2000, rng)
    seq = generate_fractional_strategy(3, 2)
    swapped = compile_fractional_to_bintbp(seq, 4, Encoding((2, 0, 3, 1)))
    assert np.array_equal(accepts_batch(swapped, X), truth(X, 3, 4))


def test_keep_guess_states_same_language(rng):
    X = random_instances_matrix(3, 2, "BT", 3000, rng)
    seq = generate_ro_wbw_strategy(3)
    raw = compile_wbw_to_ntbp(seq, 2, keep_guess_states=True)
    assert any(lab.kind == GUESS for lab in raw.states.values())
    done = compile_wbw_to_ntbp(seq, 2)
    assert not any(lab.kind == GUESS for lab in done.states.values())
    assert np.array_equal(accepts_batch(raw, X), accepts_batch(done, X))
    assert np.array_equal(accepts_batch(eliminate_guess_states(raw), X), accepts_batch(done, X))


def test_wrong_game_rejected():
    with pytest.raises(CompileError):
        compile_black_to_dtbp(generate_ro_wbw_strategy(3), 2)
    with pytest.raises(CompileError):
        compile_wbw_to_ntbp(generate_fractional_strategy(3, 2), 4)


def test_white_root_rejected():
    # white on the root is never needed and has no program counterpart
    moves = [increase_white(1), place_black(2), place_black(3), remove_white(1), slide(2),
             decrease_black(3), decrease_black(1)]
    with pytest.raises(CompileError):
        compile_wbw_to_ntbp(PebbleSequence(2, WHOLE_BW, moves), 2)


def test_non_read_once_rejected():
    moves = [place_black(2), decrease_black(2), place_black(2), place_black(3), place_black(1),
             decrease_black(2), decrease_black(3), decrease_black(1)]
    with pytest.raises(CompileError):
        compile_wbw_to_ntbp(PebbleSequence(2, BLACK, moves), 2)


def test_tags_record_layers(ro32):
    layers = {tag["layer"] for tag in ro32.tags.values()}
    assert min(layers) == 0 and len(layers) > 3


def test_encoding_bits():
    e = Encoding.identity(4)
    assert e.bits == 2
    assert [e.bit(3, p) for p in range(2)] == [1, 1]
    assert [e.bit(2, p) for p in range(2)] == [1, 0]
    assert e.decode(2) == 2
    with pytest.raises(CompileError):
        Encoding((0, 0, 1, 2))


def test_group_checks():
    assert check_group(cyclic_group(5)) == 0
    with pytest.raises(CompileError):
        check_group([[0, 0], [0, 1]])
    with pytest.raises(CompileError):
        check_group([[0, 1], [1, 1]])


def sft_instance(h, k, table, leaves):
    flat = tuple(v for row in table for v in row)
    return TepInstance(h, k, tuple(leaves), tuple(flat for _ in range(2 ** (h - 1) - 1)), "FT")


@pytest.mark.parametrize("h,k", [(3, 2), (3, 3), (4, 3)])
@pytest.mark.parametrize("fixed", [True, False])
def test_group_sft(h, k, fixed):
    table = cyclic_group(k)
    bp = compile_group_sft(h, k, table, fixed=fixed)
    for leaves in itertools.islice(itertools.product(range(k), repeat=2 ** (h - 1)), 200):
        inst = sft_instance(h, k, table, leaves)
        assert run_deterministic(bp, inst)[0] == evaluate(inst)[1]
    if fixed:
        assert 2 ** (h - 2) * k <= size(bp) <= 2 ** h * k


def test_group_sft_nonabelian():
    # S_3 as permutations of (0,1,2), composed left to right
    perms = list(itertools.permutations(range(3)))
    table = [[perms.index(tuple(q[p[i]] for i in range(3))) for q in perms] for p in perms]
    bp = compile_group_sft(3, 6, table)
    rng = np.random.default_rng(0)
    for _ in range(100):
        leaves = rng.integers(0, 6, size=4).tolist()
        inst = sft_instance(3, 6, table, leaves)
        assert run_deterministic(bp, inst)[0] == evaluate(inst)[1]


def test_outputs_batch_on_ft(rng):
    bp = compile_group_sft(3, 3, cyclic_group(3))
    X = random_instances_matrix(3, 3, "FT", 50, rng)
    masks = outputs_batch(bp, X)
    assert np.all(masks > 0) and np.all(masks & (masks - 1) == 0)
