from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pebbletep.exceptions import BudgetExceeded, IllegalMove, InvalidSequence, ParseError
from pebbletep.pebbling import (BLACK, FRACTIONAL_BW, WHOLE_BW, PebbleConfig, PebbleSequence, apply_move,
                                config_space_size, critical_time_ok, decrease_black, dumps_sequence,
                                generate_black_strategy, generate_fractional_strategy, generate_ro_wbw_strategy,
                                increase_white, is_read_once, loads_sequence, optimal_peak, optimal_strategy,
                                place_black, remove_white, slide, timeline_tsv, validate_sequence)

H = Fraction(1, 2)


def test_leaf_placement_is_unconditional():
    c = apply_move(PebbleConfig.empty(2), place_black(2), BLACK)
    assert c.b(2) == 1


def test_internal_placement_needs_full_children():
    c = PebbleConfig.empty(2)
    with pytest.raises(IllegalMove):
        apply_move(c, place_black(1), BLACK)
    c = apply_move(c, place_black(2), WHOLE_BW)
    c = apply_move(c, increase_white(3), WHOLE_BW)
    c = apply_move(c, place_black(1), WHOLE_BW)
    assert c.b(1) == 1


def test_white_removal_needs_full_children():
    c = apply_move(PebbleConfig.empty(2), increase_white(1), WHOLE_BW)
    with pytest.raises(IllegalMove):
        apply_move(c, remove_white(1))
    # leaves may always drop their white pebble
    c = apply_move(PebbleConfig.empty(2), increase_white(2), WHOLE_BW)
    assert apply_move(c, remove_white(2)).w(2) == 0


def test_black_game_forbids_white():
    with pytest.raises(IllegalMove):
        apply_move(PebbleConfig.empty(2), increase_white(2), BLACK)


def test_fractional_bounds():
    c = apply_move(PebbleConfig.empty(2), place_black(2, H), FRACTIONAL_BW)
    c = apply_move(c, increase_white(2, H), FRACTIONAL_BW)
    with pytest.raises(IllegalMove):
        apply_move(c, increase_white(2, H), FRACTIONAL_BW)
    with pytest.raises(IllegalMove):
        apply_move(c, decrease_black(2, 1), FRACTIONAL_BW)
    with pytest.raises(IllegalMove):
        apply_move(PebbleConfig.empty(2), place_black(2, H), WHOLE_BW)


def test_slide():
    c = PebbleConfig.empty(2)
    for m in (place_black(2), place_black(3), slide(2)):
        c = apply_move(c, m, BLACK)
    assert (c.b(1), c.b(2), c.b(3)) == (1, 0, 1)


def test_moves_reject_floats_and_bad_children():
    with pytest.raises(TypeError):
        place_black(2, 0.5)
    with pytest.raises(ValueError):
        place_black(2, 1, child=6)
    with pytest.raises(ValueError):
        decrease_black(2, 0)


def test_validator_rejects_leftovers_and_missing_root():
    seq = PebbleSequence(2, BLACK, [place_black(2)])
    with pytest.raises(InvalidSequence):
        validate_sequence(seq)
    seq = PebbleSequence(2, BLACK, [place_black(2), decrease_black(2)])
    with pytest.raises(InvalidSequence, match="root"):
        validate_sequence(seq)
    seq = PebbleSequence(2, FRACTIONAL_BW, [place_black(2, Fraction(1, 3))], denominator=2)
    with pytest.raises(InvalidSequence) as err:
        validate_sequence(seq)
    assert err.value.step == 0


@pytest.mark.parametrize("h", [2, 3, 4, 5])
def test_generators(h):
    assert validate_sequence(generate_black_strategy(h)) == h
    ro = generate_ro_wbw_strategy(h)
    assert validate_sequence(ro) == -(-h // 2) + 1
    assert is_read_once(ro)
    assert critical_time_ok(ro)
    assert validate_sequence(generate_fractional_strategy(h, 2)) <= Fraction(h, 2) + 1
    assert validate_sequence(generate_fractional_strategy(h, 1)) <= -(-h // 2) + 1


def test_black_strategy_is_not_white():
    assert all(m.kind in ("place_black", "decrease_black") for m in generate_black_strategy(4).moves)


def test_read_once_detects_repebbling():
    moves = [place_black(2), decrease_black(2), place_black(2), place_black(3), place_black(1),
             decrease_black(2), decrease_black(3), decrease_black(1)]
    seq = PebbleSequence(2, BLACK, moves)
    validate_sequence(seq)
    assert not is_read_once(seq)


@pytest.mark.parametrize("h,variant,d,want", [
    (2, BLACK, 1, 2), (3, BLACK, 1, 3), (2, WHOLE_BW, 1, 2), (3, WHOLE_BW, 1, 3),
    (2, FRACTIONAL_BW, 2, 2), (3, FRACTIONAL_BW, 2, Fraction(5, 2)),
])
def test_optimal_small(h, variant, d, want):
    assert optimal_peak(h, variant, d) == want
    seq = optimal_strategy(h, variant, d)
    assert validate_sequence(seq) == want


def test_fractional_beats_whole_at_height_three():
    assert optimal_peak(3, FRACTIONAL_BW, 2) < optimal_peak(3, WHOLE_BW, 1)


def test_search_budget():
    assert config_space_size(4, WHOLE_BW) == 3 ** 15
    with pytest.raises(BudgetExceeded):
        optimal_peak(4, WHOLE_BW, 1, cap=1000)


@given(st.sampled_from(["black", "wbw", "f1", "f2"]), st.integers(2, 5))
@settings(max_examples=20, deadline=None)
def test_serialization_roundtrip(kind, h):
    seq = {"black": lambda: generate_black_strategy(h), "wbw": lambda: generate_ro_wbw_strategy(h),
           "f1": lambda: generate_fractional_strategy(h, 1), "f2": lambda: generate_fractional_strategy(h, 2)}[kind]()
    back = loads_sequence(dumps_sequence(seq))
    assert back == seq
    assert validate_sequence(back) == validate_sequence(seq)


def test_timeline_rows():
    seq = generate_ro_wbw_strategy(3)
    lines = timeline_tsv(seq).splitlines()
    assert len(lines) == len(seq.moves) + 2
    assert lines[0].split("\t")[:3] == ["step", "move", "total"]
    assert max(Fraction(r.split("\t")[2]) for r in lines[1:]) == 3


def test_bad_strategy_json():
    with pytest.raises(ParseError):
        loads_sequence('{"h": 2}')
    with pytest.raises(ParseError):
        loads_sequence('[1, 2')
