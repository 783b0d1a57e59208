"""The fixed parameter grid behind ``pebbletep bench``.

Each criterion function returns a ``CriterionResult``; nothing here prints.
"""
import math
import time
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .analyze.adders import adder_bp, adder_census, minimal_adder_search, two_pair_adder_bp
from .analyze.census import entropy_census
from .analyze.checks import check_bitwise_independence, check_syntactic_read_once, check_thrifty
from .analyze.extract import (check_state_determined, extract_bintbp_pebbling, find_input, rontbp_state_config,
                              unpebbled_values)
from .bp import accepts_batch, size
from .compile import (compile_black_to_dtbp, compile_fractional_to_bintbp, compile_group_sft,
                      compile_wbw_to_ntbp, cyclic_group)
from .pebbling import (BLACK, FRACTIONAL_BW, WHOLE_BW, generate_black_strategy, generate_fractional_strategy,
                       generate_ro_wbw_strategy, is_read_once, optimal_peak, validate_sequence)
from .tree import (all_instances_matrix, count_instances, evaluate_batch, hard_input, hard_inputs_matrix,
                   random_instances_matrix, sample_hard_tuples)


@dataclass
class CriterionResult:
    number: int
    title: str
    ok: bool
    details: list = field(default_factory=list)
    seconds: float = 0.0

    def line(self):
        return f"criterion {self.number:>2} {'PASS' if self.ok else 'FAIL'} {self.seconds:8.1f}s  {self.title}"

    def to_dict(self):
        return {"criterion": self.number, "title": self.title, "ok": self.ok, "seconds": round(self.seconds, 3),
                "details": self.details}


def _ceil_half(h):
    return -(-h // 2)


def _fractional_denominators(k):
    return (1, 2) if k >= 4 else (1,)


def criterion_1(cap=None):
    details, ok = [], True
    cases = [(h, BLACK, 1, Fraction(h)) for h in (2, 3, 4)]
    cases += [(h, WHOLE_BW, 1, Fraction(_ceil_half(h) + 1)) for h in (2, 3, 4)]
    cases += [(h, FRACTIONAL_BW, 2, Fraction(h, 2) + 1) for h in (2, 3)]
    for h, variant, d, want in cases:
        got = optimal_peak(h, variant, d, cap)
        ok &= got == want
        details.append(f"{variant} h={h} d={d}: optimal peak {got}, expected {want}")
    return ok, details


def criterion_2():
    details, ok = [], True
    for h in range(2, 6):
        black = validate_sequence(generate_black_strategy(h))
        ro = generate_ro_wbw_strategy(h)
        ro_peak = validate_sequence(ro)
        ro_once = is_read_once(ro)
        frac = {d: validate_sequence(generate_fractional_strategy(h, d)) for d in (1, 2)}
        good = (black == h and ro_peak == _ceil_half(h) + 1 and ro_once
                and frac[2] <= Fraction(h, 2) + 1)
        ok &= good
        details.append(f"h={h}: black {black}, ro-wbw {ro_peak} read-once={ro_once}, fractional d=2 {frac[2]}"
                       f" (d=1 {frac[1]})")
    return ok, details


def _agreement(bp, X, h, k):
    truth = evaluate_batch(X, h, k)[:, 1] == 1
    return int(np.count_nonzero(accepts_batch(bp, X) != truth))


def criterion_3(n_samples=100_000, seed=0):
    details, ok = [], True
    rng = np.random.default_rng(seed)
    compilers = {"wbw->ntbp": (generate_ro_wbw_strategy, compile_wbw_to_ntbp),
                 "black->dtbp": (generate_black_strategy, compile_black_to_dtbp)}
    for h, k in ((2, 2), (3, 2), (4, 2), (4, 4)):
        exhaustive = h <= 3
        if exhaustive:
            X = all_instances_matrix(h, k, "BT")
        else:
            X = random_instances_matrix(h, k, "BT", n_samples, rng)
        for name, (gen, comp) in compilers.items():
            bad = _agreement(comp(gen(h), k), X, h, k)
            ok &= bad == 0
            how = f"all {count_instances(h, k, 'BT')}" if exhaustive else f"{n_samples} sampled"
            details.append(f"{name} h={h} k={k}: {bad} disagreements over {how} instances")
    return ok, details


def criterion_4():
    details, ok = [], True
    for h in (2, 3, 4):
        for k in (2, 4):
            ro = compile_wbw_to_ntbp(generate_ro_wbw_strategy(h), k)
            bound = (2 ** h - 1) * k ** (_ceil_half(h) + 1)
            ok &= size(ro) <= bound
            details.append(f"RONTBP h={h} k={k}: size {size(ro)} <= {bound}")
            for d in _fractional_denominators(k):
                seq = generate_fractional_strategy(h, d)
                bi = compile_fractional_to_bintbp(seq, k)
                layers = len(seq.moves) + 1
                # size <= layers * k^(h/2+1), squared to stay in integers
                good = size(bi) ** 2 <= layers ** 2 * k ** (h + 2)
                ok &= good
                details.append(f"BINTBP h={h} k={k} d={d}: size {size(bi)} <= {layers}*{k}^{h / 2 + 1:g}"
                               f" = {layers * k ** (h / 2 + 1):.1f}")
    for h in (3, 4, 5):
        for k in (2, 3, 4):
            s = size(compile_group_sft(h, k, cyclic_group(k)))
            lo, hi = 2 ** (h - 2) * k, 2 ** h * k
            ok &= lo <= s <= hi
            details.append(f"group SFT h={h} k={k}: size {s} in [{lo}, {hi}]")
    return ok, details


def _hard_sample(h, k, n, rng):
    return hard_inputs_matrix(h, k, sample_hard_tuples(h, k, n, rng))


def criterion_5(n_samples=20_000, seed=0):
    details, ok = [], True
    rng = np.random.default_rng(seed)
    for h in (2, 3, 4):
        for k in (2, 4):
            bp = compile_wbw_to_ntbp(generate_ro_wbw_strategy(h), k)
            small = k ** (2 ** h - 2) <= 1 << 16
            if small:
                inputs, how = "E", "E"
            else:
                inputs = np.vstack([_hard_sample(h, k, n_samples, rng),
                                    random_instances_matrix(h, k, "BT", n_samples, rng)])
                how = f"{n_samples} of E + {n_samples} uniform"
            th = check_thrifty(bp, inputs)
            ro = check_syntactic_read_once(bp)
            ok &= th.ok and ro.ok
            details.append(f"RONTBP h={h} k={k}: thrifty={th.ok} ({how}), read-once={ro.ok}")
    for h in (2, 4):
        for k in (2, 4):
            for d in _fractional_denominators(k):
                bi = check_bitwise_independence(compile_fractional_to_bintbp(generate_fractional_strategy(h, d), k))
                ok &= bi.ok
                details.append(f"BINTBP h={h} k={k} d={d}: bitwise independent={bi.ok}")
    return ok, details


def criterion_6(n_samples=100_000, seed=0):
    details, ok = [], True
    for h in (2, 3):
        good, witnesses, _ = check_state_determined(compile_wbw_to_ntbp(generate_ro_wbw_strategy(h), 2))
        ok &= good
        details.append(f"RONTBP h={h} k=2: configurations state-determined={good} {witnesses[:1]}")
    for h, inputs in ((2, "E"), (4, "sample")):
        bp = compile_fractional_to_bintbp(generate_fractional_strategy(h, 2), 4)
        ext = extract_bintbp_pebbling(bp, inputs, n_samples=n_samples, seed=seed)
        ok &= ext.ok
        counts = {c: n for c, n in ext.to_dict()["violation_counts"].items() if n}
        details.append(f"BINTBP h={h} k=4 over {ext.n_inputs} inputs ({ext.sweep}): violations {counts or 'none'}")
    return ok, details


def criterion_7():
    from .analyze.extract import check_bucket_claim, state_pebble_values
    from .analyze.statesets import BddStateSets
    bp = compile_fractional_to_bintbp(generate_fractional_strategy(2, 2), 4)
    sets = BddStateSets(bp)
    values = state_pebble_values(bp, sets)
    bad = check_bucket_claim(bp, sets, values)
    return not bad and bool(values), [f"{len(values)} states checked, {len(bad)} mismatches"] + bad[:3]


def criterion_8(n_samples=20_000, seed=0):
    details, ok = [], True
    ro = compile_wbw_to_ntbp(generate_ro_wbw_strategy(3), 2)
    r = entropy_census(ro, _ceil_half(3), mode="whole")
    good = r.covered and r.partition_ok and r.implied_bound >= 4 and r.size >= 4
    ok &= good
    details.append(f"RONTBP h=3 k=2 p=2: max bucket {r.max_bucket}, implied bound {r.implied_bound}, size {r.size}")
    bi = compile_fractional_to_bintbp(generate_fractional_strategy(4, 2), 4)
    r = entropy_census(bi, Fraction(4, 2), mode="fractional", n_samples=n_samples, seed=seed)
    good = r.covered and r.partition_ok and r.implied_bound >= 16 and r.size >= 16
    ok &= good
    details.append(f"BINTBP h=4 k=4 p=2: certified max bucket {r.certified_max_bucket}, implied bound"
                   f" {r.implied_bound}, size {r.size}, {r.n_inputs} sampled paths all reach threshold")
    return ok, details


def criterion_9():
    bp = compile_wbw_to_ntbp(generate_ro_wbw_strategy(3), 2)
    r = entropy_census(bp, 2, mode="whole")
    wrong = []
    for values, s in sorted(r.charged.items()):
        inst = hard_input(3, 2, values)
        config = rontbp_state_config(bp, s)
        if find_input(bp, s, unpebbled_values(inst, config), config) != inst:
            wrong.append(values)
    ok = len(r.charged) == 64 and not wrong
    return ok, [f"{len(r.charged)} inputs recovered at their bottleneck states, {len(wrong)} wrong"]


def criterion_10():
    details, ok = [], True
    for k in (2, 3, 4):
        rep = adder_census(adder_bp(k), 1)
        good = rep.max_f == 1 and rep.size >= k and rep.ok
        ok &= good
        details.append(f"adder k={k}: max |F_e| {rep.max_f}, size {rep.size} >= {k}")
    rep = adder_census(two_pair_adder_bp(2), 2)
    good = rep.max_f <= 2 and rep.size >= 4 and rep.ok
    ok &= good
    details.append(f"two-pair adder k=2: max |F_e| {rep.max_f}, size {rep.size} >= 4")
    found, _ = minimal_adder_search(2, 3)
    good = found[1] == 0
    ok &= good
    details.append(f"brute force k=2: correct adders by state count {found}")
    return ok, details


CRITERIA = {
    1: ("optimal pebbling numbers", criterion_1),
    2: ("strategy generator peaks", criterion_2),
    3: ("compiler agreement with evaluation", criterion_3),
    4: ("compiled size bounds", criterion_4),
    5: ("thrift, read-once and bitwise independence", criterion_5),
    6: ("extraction invariants", criterion_6),
    7: ("bucket sizes k^(N-p)", criterion_7),
    8: ("entropy censuses", criterion_8),
    9: ("input recovery at bottleneck states", criterion_9),
    10: ("adder censuses", criterion_10),
}


def run_criterion(n):
    title, fn = CRITERIA[n]
    t0 = time.perf_counter()
    ok, details = fn()
    return CriterionResult(n, title, bool(ok), details, time.perf_counter() - t0)


def run_bench(numbers=None):
    return [run_criterion(n) for n in (numbers or sorted(CRITERIA))]
