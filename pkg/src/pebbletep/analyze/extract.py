"""Pebblings read back from branching programs.

Three readings are implemented.  Along an accepting path of a read-once
program each node is black between its own query and its parent's, and white
between its parent's query and its own.  For a bitwise-independent program
every state carries fractional values computed from the sizes of the
projections of F_s and A_s.  Finally, critical states along a path induce a
fractional pebbling that never exceeds those per-state values.
"""
import bisect
import dataclasses
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from ..bp import ACCEPT, backward_matrix, first_accepting_path, ordered_out_edges
from ..exceptions import AnalysisError, IllegalMove, InvalidSequence
from ..pebbling import (FRACTIONAL_BW, WHOLE_BW, ZERO, PebbleConfig, PebbleSequence, apply_move, decrease_black,
                        increase_white, place_black, remove_white, validate_sequence)
from ..tree import TreeShape, evaluate, hard_input, hard_input_values, is_hard_input
from .statesets import BddStateSets

ONE = Fraction(1)


# -- configurations to moves ------------------------------------------------------

def moves_between(prev, cur, root_flash=False):
    """Legal moves turning ``prev`` into ``cur``, freeing pebbles before adding any.

    Each round first applies, in heap order, every white removal whose
    children are full and every black decrease that no pending move of the
    parent still relies on.  Only when nothing can be freed does it make one
    adding move: the first black increase (sliding from a child whose black
    value drops) or white increase in heap order.  ``root_flash`` places the
    root pebble before anything else and removes it at once.
    """
    n = prev.n_nodes
    moves = []
    c = prev

    def do(move):
        nonlocal c
        c = apply_move(c, move)
        moves.append(move)

    def sliding_child(i):
        for ch in (2 * i, 2 * i + 1):
            if ch <= n and c.b(ch) > cur.b(ch):
                return ch, c.b(ch) - cur.b(ch)
        return None, None

    if root_flash:
        ch, amt = sliding_child(1)
        do(place_black(1, 1, ch, amt))
        do(decrease_black(1))

    def parent_pending(j):
        p = j // 2
        return p >= 1 and (c.b(p) < cur.b(p) or c.w(p) > cur.w(p))

    while c != cur:
        freed = False
        for i in range(1, n + 1):
            if c.w(i) > cur.w(i) and c.children_full(i):
                do(remove_white(i))
                freed = True
            if c.b(i) > cur.b(i) and not parent_pending(i):
                do(decrease_black(i, c.b(i) - cur.b(i)))
                freed = True
        if freed:
            continue
        for i in range(1, n + 1):
            if c.b(i) < cur.b(i) and c.children_full(i) and c.value(i) + cur.b(i) - c.b(i) <= 1:
                ch, amt = sliding_child(i)
                do(place_black(i, cur.b(i) - c.b(i), ch, amt))
                break
            if c.w(i) < cur.w(i) and c.value(i) + cur.w(i) - c.w(i) <= 1:
                do(increase_white(i, cur.w(i) - c.w(i)))
                break
        else:
            raise AnalysisError(f"no legal move from {c.pebbled()} towards {cur.pebbled()}")
    return moves


def _config(n, black, white):
    return PebbleConfig(tuple(black.get(i, ZERO) for i in range(1, n + 1)),
                        tuple(white.get(i, ZERO) for i in range(1, n + 1)))


def _denominator(configs):
    d = 1
    for c in configs:
        for v in c.black + c.white:
            d = math.lcm(d, Fraction(v).denominator)
    return d


# -- read-once programs ----------------------------------------------------------------

@dataclass
class PathPebbling:
    instance: object
    path: object
    configs: list          # one per state on the path, root excluded
    sequence: PebbleSequence
    queries: dict          # node -> position of its query on the path

    def config_at_state(self, s):
        return self.configs[self.path.states.index(s)]


def query_positions(bp, path):
    out = {}
    for t, s in enumerate(path.states):
        lab = bp.states[s]
        if lab.is_query:
            out.setdefault(lab.node, []).append(t)
    return out


def extract_rontbp_pebbling(bp, instance, path=None):
    """Whole black-white pebbling along an accepting path of a read-once program."""
    if path is None:
        path = first_accepting_path(bp, instance)
        if path is None:
            raise AnalysisError("instance has no accepting path")
    elif bp.states[path.states[-1]].kind != ACCEPT:
        raise AnalysisError("path is not accepting")
    shape = TreeShape(bp.h)
    qs = query_positions(bp, path)
    q = {}
    for i in range(1, shape.n_nodes + 1):
        if len(qs.get(i, ())) != 1:
            raise AnalysisError(f"node {i} is queried {len(qs.get(i, ()))} times on the path")
        q[i] = qs[i][0]
    configs = []
    for t in range(len(path.states)):
        black, white = {}, {}
        for i in shape.non_root:
            if q[i] < t <= q[i // 2]:
                black[i] = ONE
            elif q[i // 2] < t <= q[i]:
                white[i] = ONE
        configs.append(_config(shape.n_nodes, black, white))
    moves = []
    for t in range(len(configs) - 1):
        moves.extend(moves_between(configs[t], configs[t + 1], root_flash=(t == q[1])))
    seq = PebbleSequence(bp.h, WHOLE_BW, moves, 1)
    return PathPebbling(instance, path, configs, seq, q)


# -- designated paths in bulk ----------------------------------------------------------

def designated_paths(bp, X, chunk=1 << 13):
    """Lexicographically first accepting path for every row of X (None if rejected).

    Greedy choice of the first edge (by target id, then edge index) whose
    target can still reach accept yields the lexicographically first path.
    """
    X = np.asarray(X)
    out = []
    order = {s: ordered_out_edges(bp, s) for s in bp.states}
    for lo in range(0, X.shape[0], chunk):
        Xc = X[lo:lo + chunk]
        n = Xc.shape[0]
        G = backward_matrix(bp, Xc)
        alive = G[bp.index[bp.start]].copy()
        cur = np.full(n, bp.start, dtype=np.int64)
        states = [[bp.start] for _ in range(n)]
        edges = [[] for _ in range(n)]
        active = alive.copy()
        while active.any():
            for u in np.unique(cur[active]):
                rows = np.flatnonzero(active & (cur == u))
                lab = bp.states[int(u)]
                if lab.kind == ACCEPT:
                    active[rows] = False
                    continue
                vals = Xc[rows, bp.var_of[int(u)]] if lab.is_query else None
                chosen = np.full(len(rows), -1, dtype=np.int64)
                for idx in order[int(u)]:
                    e = bp.edges[idx]
                    ok = G[bp.index[e.dst], rows] & (chosen < 0)
                    if vals is not None:
                        ok &= vals == e.label
                    chosen[ok] = idx
                if (chosen < 0).any():
                    raise AnalysisError("backward reachability and edge choice disagree")
                for r, idx in zip(rows.tolist(), chosen.tolist()):
                    dst = bp.edges[idx].dst
                    edges[r].append(idx)
                    states[r].append(dst)
                    cur[r] = dst
        from ..bp import ComputationPath
        for r in range(n):
            out.append(ComputationPath(tuple(states[r]), tuple(edges[r])) if alive[r] else None)
    return out


# -- fractional values per state ------------------------------------------------------

def _log_k(n, k):
    """log_k n as an exact fraction; n must be a power of two and k = 2**l."""
    if n < 1 or n & (n - 1):
        raise AnalysisError(f"projection size {n} is not a power of two")
    bits = k.bit_length() - 1
    return Fraction(n.bit_length() - 1, bits)


@dataclass
class StateValues:
    black: dict   # node -> Fraction
    white: dict

    def total(self):
        return sum(self.black.values(), ZERO) + sum(self.white.values(), ZERO)

    def value(self, i):
        return self.black.get(i, ZERO) + self.white.get(i, ZERO)


def state_pebble_values(bp, sets):
    """b(i,s) = 1 - log_k|proj F_s|, w(i,s) = log_k(|proj F_s| / |proj A_s|) for states with A_s nonempty."""
    k = sets.values
    if k & (k - 1):
        raise AnalysisError(f"per-state values need a power-of-two alphabet, got {k}")
    out = {}
    for s in bp.topo:
        if sets.count(s, "A") == 0:
            continue
        black, white = {}, {}
        for i in sets.nodes:
            f = _log_k(len(sets.proj(s, i, "F")), k)
            a = _log_k(len(sets.proj(s, i, "A")), k)
            if 1 - f:
                black[i] = 1 - f
            if f - a:
                white[i] = f - a
        out[s] = StateValues(black, white)
    return out


def check_value_claims(bp, values):
    """Range, sum, start and accept claims; returns a list of violation strings."""
    bad = []
    for s, v in values.items():
        for i in set(v.black) | set(v.white):
            b, w = v.black.get(i, ZERO), v.white.get(i, ZERO)
            if not (0 <= b <= 1 and 0 <= w <= 1):
                bad.append(f"rng: state {s} node {i} has b={b}, w={w}")
            if b + w > 1:
                bad.append(f"sum: state {s} node {i} has b+w={b + w}")
    for s, name in [(bp.start, "start")] + [(a, "acc") for a in bp.accept_states]:
        if s in values and values[s].total() != 0:
            bad.append(f"{name}: state {s} has a nonempty configuration")
    return bad


def check_bucket_claim(bp, sets, values):
    """|A_s| = k^(N - p) where p is the total non-root value at s."""
    N = len(sets.nodes)
    bad = []
    for s, v in values.items():
        e = N - v.total()
        count = sets.count(s, "A")
        # count == k^(a/b)  <=>  count^b == k^a
        if e < 0 or count ** e.denominator != sets.values ** e.numerator:
            bad.append(f"inputs: state {s} has |A_s|={count}, expected k^({N}-{v.total()})")
    return bad


# -- critical states -------------------------------------------------------------------

@dataclass
class CriticalPebbling:
    path: object
    critical: dict            # node -> sorted positions
    positions: list           # all critical positions, sorted
    configs: list             # one per path position (interval semantics)
    sequence: PebbleSequence = None
    violations: list = field(default_factory=list)

    def critical_configs(self):
        return [(t, self.configs[t]) for t in self.positions]


def path_signature(bp, path, values):
    """Everything the critical pebbling of a path depends on."""
    out = []
    for s in path.states:
        lab, v = bp.states[s], values[s]
        out.append((lab.node if lab.is_query else None,
                    tuple(sorted(v.black.items())), tuple(sorted(v.white.items()))))
    return tuple(out)


def critical_pebblings(bp, paths, values):
    """critical_pebbling for many paths, sharing work between paths with equal signatures."""
    cache = {}
    out = []
    for path in paths:
        key = path_signature(bp, path, values)
        if key not in cache:
            cache[key] = critical_pebbling(bp, path, values)
        out.append(dataclasses.replace(cache[key], path=path))
    return out


def critical_pebbling(bp, path, values):
    """Critical states and the pebbling they induce along one accepting path.

    Node j carries black value b = b(j, s') from the critical state after the
    last query of j before s' (a critical state of j's parent) through s'.
    It carries white value w = w(j, s') from s' through the first query of j
    after s'.  Simultaneous changes are applied in heap order.
    """
    shape = TreeShape(bp.h)
    m = len(path.states) - 1
    qs = query_positions(bp, path)
    bad = []
    crit = {}
    if not qs.get(1):
        raise AnalysisError("path never queries the root")
    crit[1] = [qs[1][-1]]
    black_needs, white_needs = {}, {}
    for j in shape.non_root:
        parent = j // 2
        mine = set()
        Q = qs.get(j, [])
        for sp in crit.get(parent, []):
            v = values[path.states[sp]]
            b, w = v.black.get(j, ZERO), v.white.get(j, ZERO)
            if b > 0:
                k = bisect.bisect_left(Q, sp) - 1
                if k < 0:
                    bad.append(f"black: node {j} needed at position {sp} but never queried before it")
                else:
                    mine.add(Q[k])
                    black_needs.setdefault(j, []).append((Q[k], sp, b))
            if w > 0:
                k = bisect.bisect_right(Q, sp)
                if k >= len(Q):
                    bad.append(f"white: node {j} needed at position {sp} but never queried after it")
                else:
                    mine.add(Q[k])
                    white_needs.setdefault(j, []).append((sp, Q[k], w))
        crit[j] = sorted(mine)
    positions = sorted({0, m} | {t for ts in crit.values() for t in ts})

    def next_crit(t):
        return positions[bisect.bisect_right(positions, t)]

    configs = []
    black_iv = {j: [(next_crit(s), sp, b) for s, sp, b in needs] for j, needs in black_needs.items()}
    for t in range(m + 1):
        black, white = {}, {}
        for j, ivs in black_iv.items():
            vals = [b for lo, hi, b in ivs if lo <= t <= hi]
            if vals:
                black[j] = max(vals)
        for j, ivs in white_needs.items():
            vals = [w for lo, hi, w in ivs if lo <= t <= hi]
            if vals:
                white[j] = max(vals)
        configs.append(_config(shape.n_nodes, black, white))
    result = CriticalPebbling(path, crit, positions, configs, violations=bad)
    _check_critical(bp, result, values, shape)
    return result


def _check_critical(bp, cp, values, shape):
    bad = cp.violations
    path = cp.path
    for j, ts in cp.critical.items():
        if shape.is_leaf(j):
            continue
        for t in ts:
            v = values[path.states[t]]
            for c in (2 * j, 2 * j + 1):
                if v.value(c) != 1:
                    bad.append(f"children: node {c} has value {v.value(c)} at critical position {t} of {j}")
    for t, c in enumerate(cp.configs):
        v = values[path.states[t]]
        for i in shape.non_root:
            if c.b(i) > v.black.get(i, ZERO) or c.w(i) > v.white.get(i, ZERO):
                bad.append(f"underest: node {i} at position {t} has ({c.b(i)},{c.w(i)}) "
                           f"above ({v.black.get(i, ZERO)},{v.white.get(i, ZERO)})")
            if c.b(i) + c.w(i) > 1:
                bad.append(f"sum: node {i} at position {t} exceeds 1")
    pos = cp.positions
    seq_configs = [cp.configs[t] for t in pos]
    root_at = cp.critical[1][0]
    if not seq_configs[0].is_empty():
        bad.append("start: critical pebbling does not start empty")
    if not seq_configs[-1].is_empty():
        bad.append("acc: critical pebbling does not end empty")
    moves = []
    for n in range(len(pos) - 1):
        prev, cur = seq_configs[n], seq_configs[n + 1]
        for i in range(1, shape.n_nodes + 1):
            if (cur.b(i) > prev.b(i) or cur.w(i) < prev.w(i)) and not prev.children_full(i):
                bad.append(f"incdec: node {i} changes at position {pos[n + 1]} without full children")
        try:
            moves.extend(moves_between(prev, cur, root_flash=(pos[n] == root_at)))
        except (IllegalMove, AnalysisError) as exc:
            bad.append(f"legal: between positions {pos[n]} and {pos[n + 1]}: {exc}")
    cp.sequence = PebbleSequence(bp.h, FRACTIONAL_BW, moves, _denominator(cp.configs))
    try:
        validate_sequence(cp.sequence)
    except InvalidSequence as exc:
        bad.append(f"legal: {exc}")


# -- recovering inputs from states -------------------------------------------------------

def rontbp_state_config(bp, s, sets=None):
    """Whole configuration at s, read from any accepting path of E through s."""
    sets = sets or BddStateSets(bp)
    values = sets.pick(s, "A")
    if values is None:
        raise AnalysisError(f"state {s} lies on no accepting path of E")
    inst = hard_input(bp.h, bp.k, values)
    path = first_accepting_path(bp, inst, through=s)
    return extract_rontbp_pebbling(bp, inst, path).config_at_state(s)


def find_pebbled(bp, s, config, unpebbled):
    """Candidate values of the pebbled nodes at s, explored depth first."""
    shape = TreeShape(bp.h)
    out = []
    seen = set()
    stack = [(s, ())]
    while stack:
        cur, assigned = stack.pop()
        lab = bp.states[cur]
        known = dict(assigned)
        if lab.kind == ACCEPT:
            key = tuple(sorted(known.items()))
            if key not in seen:
                seen.add(key)
                out.append(known)
            continue
        if lab.is_terminal:
            continue
        nxt = []
        if lab.is_query:
            i = lab.node
            ok = True
            if not shape.is_leaf(i):
                for c, val in ((2 * i, lab.x), (2 * i + 1, lab.y)):
                    if config.value(c) > 0:
                        if known.setdefault(c, val) != val:
                            ok = False
                    elif unpebbled[c] != val:
                        ok = False
            if not ok:
                continue
            for idx in ordered_out_edges(bp, cur):
                e = bp.edges[idx]
                if i == 1:
                    if e.label != 1:
                        continue
                    nxt.append((e.dst, known))
                elif config.value(i) > 0:
                    if known.get(i, e.label) == e.label:
                        nxt.append((e.dst, {**known, i: e.label}))
                elif unpebbled[i] == e.label:
                    nxt.append((e.dst, known))
        else:
            for idx in ordered_out_edges(bp, cur):
                nxt.append((bp.edges[idx].dst, known))
        for dst, kn in reversed(nxt):
            stack.append((dst, tuple(sorted(kn.items()))))
    return out


def find_input(bp, s, unpebbled, config=None, sets=None):
    """The unique member of E that agrees with ``unpebbled`` and accepts through s."""
    shape = TreeShape(bp.h)
    if config is None:
        config = rontbp_state_config(bp, s, sets)
    pebbled = [i for i in shape.non_root if config.value(i) > 0]
    missing = [i for i in shape.non_root if config.value(i) == 0 and i not in unpebbled]
    if missing:
        raise AnalysisError(f"values of unpebbled nodes {missing} are required")
    found = []
    for cand in find_pebbled(bp, s, config, unpebbled):
        if any(i not in cand for i in pebbled):
            continue
        values = tuple(cand[i] if i in cand else unpebbled[i] for i in shape.non_root)
        inst = hard_input(bp.h, bp.k, values)
        if first_accepting_path(bp, inst, through=s) is not None and inst not in found:
            found.append(inst)
    if not found:
        raise AnalysisError(f"no input of E is consistent with the given values and accepts through {s}")
    if len(found) > 1:
        raise AnalysisError(f"{len(found)} inputs accept through {s}; uniqueness fails")
    return found[0]


def unpebbled_values(instance, config):
    shape = instance.shape
    nv = evaluate(instance)
    return {i: nv[i] for i in shape.non_root if config.value(i) == 0}


# -- sweeps ------------------------------------------------------------------------------

def _hard_rows(bp, inputs, n_samples, seed, cap):
    """Tuples and instance rows for E, a sample of E, or a given tuple array."""
    from ..tree import hard_inputs_matrix, hard_tuples_array, sample_hard_tuples
    if isinstance(inputs, str):
        if inputs == "E":
            tuples = hard_tuples_array(bp.h, bp.k, cap)
        elif inputs == "sample":
            tuples = sample_hard_tuples(bp.h, bp.k, n_samples, np.random.default_rng(seed))
        else:
            raise ValueError("inputs must be 'E', 'sample' or an array of value tuples")
    else:
        tuples = np.asarray(inputs)
    return tuples, hard_inputs_matrix(bp.h, bp.k, tuples)


def check_state_determined(bp, cap_paths=1000, cap=None):
    """Whole configurations agree at every state over every I in E and every accepting path.

    Returns (ok, witnesses, per-state configurations).
    """
    from ..bp import enumerate_accepting_paths
    tuples, _ = _hard_rows(bp, "E", 0, 0, cap)
    seen, witnesses = {}, []
    for row in tuples.tolist():
        inst = hard_input(bp.h, bp.k, row)
        paths, truncated = enumerate_accepting_paths(bp, inst, cap=cap_paths)
        if truncated:
            raise AnalysisError(f"more than {cap_paths} accepting paths for one input")
        for p in paths:
            pp = extract_rontbp_pebbling(bp, inst, p)
            for t, s in enumerate(p.states):
                c = pp.configs[t]
                prev = seen.setdefault(s, (c, row))
                if prev[0] != c and len(witnesses) < 5:
                    witnesses.append({"state": s, "inputs": [list(prev[1]), list(row)],
                                      "configs": [str(prev[0]), str(c)]})
    return not witnesses, witnesses, {s: c for s, (c, _) in seen.items()}


@dataclass
class FractionalExtraction:
    values: dict                 # state -> StateValues
    n_inputs: int
    sweep: str
    violations: dict             # check name -> list of witness dicts
    seed: int = None

    @property
    def ok(self):
        return not any(self.violations.values())

    def to_dict(self):
        return {
            "sweep": self.sweep, "n_inputs": self.n_inputs, "seed": self.seed, "ok": self.ok,
            "violations": {k: v[:5] for k, v in self.violations.items()},
            "violation_counts": {k: len(v) for k, v in self.violations.items()},
            "states": {str(s): {"black": {str(i): str(b) for i, b in v.black.items()},
                                "white": {str(i): str(w) for i, w in v.white.items()}}
                       for s, v in sorted(self.values.items())},
        }


CLAIMS = ("rng", "sum", "start", "acc", "inputs", "children", "incdec", "underest", "legal", "black", "white")


def extract_bintbp_pebbling(bp, inputs="E", n_samples=100_000, seed=0, cap=None, sets=None):
    """Per-state fractional values and the critical-state pebbling of each input's designated path.

    Every check runs; violations carry the offending state or input.
    """
    sets = sets or BddStateSets(bp)
    values = state_pebble_values(bp, sets)
    violations = {c: [] for c in CLAIMS}
    for msg in check_value_claims(bp, values) + check_bucket_claim(bp, sets, values):
        violations[msg.split(":", 1)[0]].append({"detail": msg})
    tuples, X = _hard_rows(bp, inputs, n_samples, seed, cap)
    paths = designated_paths(bp, X)
    for n, path in enumerate(paths):
        if path is None:
            violations["acc"].append({"input": tuples[n].tolist(), "detail": "input of E rejected"})
    live = [(n, p) for n, p in enumerate(paths) if p is not None]
    for (n, _), cp in zip(live, critical_pebblings(bp, [p for _, p in live], values)):
        for msg in cp.violations:
            violations[msg.split(":", 1)[0]].append({"input": tuples[n].tolist(), "detail": msg})
    sweep = inputs if isinstance(inputs, str) else "given"
    return FractionalExtraction(values, len(tuples), sweep, violations, seed if sweep == "sample" else None)
