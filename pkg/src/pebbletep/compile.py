"""Pebbling strategies to branching programs.

Every compiler here builds one layer of states per pebbling configuration.
A state's tag records what the program knows about the pebbled nodes: a whole
value per pebbled node for the whole-pebble compilers, or the fixed bits of
the pebbled fraction for the bit-level compiler.  Moves become edges between
consecutive layers; guess and forget layers are then short-circuited.
"""
import itertools
from dataclasses import dataclass
from fractions import Fraction

from .bp import (ACCEPT_LABEL, DETERMINISTIC, GUESS, GUESS_LABEL, NONDETERMINISTIC, BranchingProgram,
                 final_label, func_query, leaf_query, prune)
from .exceptions import CompileError, InvalidSequence
from .pebbling import (BLACK, DECREASE_BLACK, INCREASE_WHITE, PLACE_BLACK, REMOVE_WHITE, is_read_once,
                       validate_sequence)
from .tree import TreeShape

_REJECT = "reject"


@dataclass(frozen=True)
class Encoding:
    """Bijection from [k] to l-bit codes; ``codes[v]`` is the code of v."""

    codes: tuple

    def __post_init__(self):
        k = len(self.codes)
        if k < 2 or k & (k - 1):
            raise CompileError(f"an encoding needs a power-of-two alphabet, got {k}")
        if sorted(self.codes) != list(range(k)):
            raise CompileError("encoding is not a bijection onto the l-bit codes")
        object.__setattr__(self, "_decode", {c: v for v, c in enumerate(self.codes)})

    @classmethod
    def identity(cls, k):
        return cls(tuple(range(k)))

    @property
    def k(self):
        return len(self.codes)

    @property
    def bits(self):
        return self.k.bit_length() - 1

    def bit(self, v, p):
        """Bit p of v's code, most significant first."""
        return (self.codes[v] >> (self.bits - 1 - p)) & 1

    def decode(self, code):
        return self._decode[code]


class _Parts:
    """How a node value splits into the units a pebble amount counts."""

    def __init__(self, k, encoding=None):
        self.k = k
        self.encoding = encoding
        self.n = encoding.bits if encoding is not None else 1
        self.radix = 2 if encoding is not None else k

    def part(self, v, p):
        return self.encoding.bit(v, p) if self.encoding is not None else v

    def value(self, parts):
        if self.encoding is None:
            return parts[0]
        code = 0
        for b in parts:
            code = 2 * code + b
        return self.encoding.decode(code)

    def count(self, amount, step):
        units = Fraction(amount) * self.n
        if units.denominator != 1:
            raise CompileError(f"step {step}: amount {amount} is not a multiple of 1/{self.n}")
        return int(units)


def _layouts(seq, parts):
    """Per configuration: node -> (black positions, white positions), root excluded."""
    black, white = {}, {}
    out = [{}]

    def free(j):
        used = set(black.get(j, ())) | set(white.get(j, ()))
        return [p for p in range(parts.n) if p not in used]

    for step, m in enumerate(seq.moves):
        j = m.node
        if m.kind == PLACE_BLACK:
            if j == 1:
                if m.amount != 1:
                    raise CompileError(f"step {step}: the root must be pebbled whole")
            else:
                n = parts.count(m.amount, step)
                black[j] = tuple(black.get(j, ())) + tuple(free(j)[:n])
            if m.child is not None:
                n = parts.count(m.child_amount, step)
                black[m.child] = black[m.child][:len(black[m.child]) - n]
        elif m.kind == DECREASE_BLACK:
            if j != 1:
                n = parts.count(m.amount, step)
                black[j] = black[j][:len(black[j]) - n]
        elif m.kind == INCREASE_WHITE:
            if j == 1:
                raise CompileError(f"step {step}: white pebbles on the root are not compiled")
            n = parts.count(m.amount, step)
            white[j] = tuple(white.get(j, ())) + tuple(free(j)[:n])
        else:
            white[j] = ()
        out.append({i: (black.get(i, ()), white.get(i, ()))
                    for i in sorted(set(black) | set(white)) if black.get(i) or white.get(i)})
    return out


def _slots(layout):
    return tuple((i, p) for i, (bl, wh) in layout.items() for p in sorted(bl + wh))


def _node_value(tag, i, parts):
    try:
        return parts.value([tag[(i, p)] for p in range(parts.n)])
    except KeyError:
        raise CompileError(f"node {i} is not fully pebbled where its value is needed") from None


def _transitions(move, tag, parts, shape, deterministic):
    """State label for one layer state and its (edge label, successor tag) pairs."""
    j = move.node
    if move.kind in (PLACE_BLACK, REMOVE_WHITE):
        if shape.is_leaf(j):
            label = leaf_query(j)
        else:
            label = func_query(j, _node_value(tag, 2 * j, parts), _node_value(tag, 2 * j + 1, parts))
        if j == 1:
            # BT semantics: only outcome 1 continues; released child bits are
            # dropped when the successor tag is projected onto the next layer
            out = [(1, dict(tag))]
            if deterministic:
                out.insert(0, (0, _REJECT))
            return label, out
        fixed = {p: v for (i, p), v in tag.items() if i == j}
        out = []
        for v in range(parts.k):
            if any(parts.part(v, p) != b for p, b in fixed.items()):
                continue
            t = dict(tag)
            if move.kind == PLACE_BLACK:
                for p in range(parts.n):
                    t[(j, p)] = parts.part(v, p)
            out.append((v, t))
        return label, out
    return GUESS_LABEL, None


def _build(seq, parts, deterministic, keep_guess_states):
    shape = TreeShape(seq.h)
    layouts = _layouts(seq, parts)
    slots = [_slots(l) for l in layouts]
    layers = [{(): None}]
    raw_edges = []  # ((t, key), (t + 1, key) | _REJECT, label)
    labels = {}
    for t, move in enumerate(seq.moves):
        nxt = set()
        for key in sorted(layers[t]):
            tag = dict(zip(slots[t], key))
            label, outs = _transitions(move, tag, parts, shape, deterministic)
            labels[(t, key)] = label
            if outs is None:
                outs = _guess_targets(move, tag, layouts[t + 1], parts)
            for edge_label, new in outs:
                if new is _REJECT:
                    raw_edges.append(((t, key), _REJECT, edge_label))
                    continue
                missing = [s for s in slots[t + 1] if s not in new]
                if missing:
                    raise CompileError(f"step {t}: no value known for slots {missing}")
                nkey = tuple(new[s] for s in slots[t + 1])
                nxt.add(nkey)
                raw_edges.append(((t, key), (t + 1, nkey), edge_label))
        layers.append({k: None for k in nxt})
    final_layer = len(seq.moves)
    for key in layers[final_layer]:
        labels[(final_layer, key)] = ACCEPT_LABEL

    ids, tags = {}, {}
    for t, layer in enumerate(layers):
        for key in sorted(layer):
            sid = len(ids)
            ids[(t, key)] = sid
            tags[sid] = _tag_json(t, slots[t], key, parts)
    states = {ids[sk]: lab for sk, lab in labels.items()}
    if deterministic:
        reject = len(ids)
        states[reject] = final_label(0)
    edges = []
    for src, dst, lab in raw_edges:
        edges.append((ids[src], reject if dst is _REJECT else ids[dst], lab))
    bp = BranchingProgram(seq.h, parts.k, states, edges, 0, NONDETERMINISTIC, "BT", tags)
    if not keep_guess_states:
        bp = eliminate_guess_states(bp)
    bp = prune(bp)
    if deterministic:
        bp = BranchingProgram(bp.h, bp.k, bp.states, bp.edges, bp.start, DETERMINISTIC, "BT", bp.tags)
    return bp


def _guess_targets(move, tag, next_layout, parts):
    j = move.node
    if move.kind == DECREASE_BLACK:
        return [(None, dict(tag))]
    # increase_white: every value of the newly fixed white positions
    new_pos = [p for p in next_layout[j][1] if (j, p) not in tag]
    out = []
    for combo in itertools.product(range(parts.radix), repeat=len(new_pos)):
        t = dict(tag)
        for p, v in zip(new_pos, combo):
            t[(j, p)] = v
        out.append((None, t))
    return out


def _tag_json(t, slots, key, parts):
    tag = {"layer": t}
    if parts.encoding is None:
        tag["values"] = {str(i): v for (i, _), v in zip(slots, key)}
    else:
        bits = {}
        for (i, p), v in zip(slots, key):
            bits.setdefault(i, ["?"] * parts.n)[p] = str(v)
        tag["bits"] = {str(i): "".join(b) for i, b in bits.items()}
    return tag


def eliminate_guess_states(bp):
    """Short-circuit every unlabelled state except the start state.

    An edge labelled v into a guess state with e out-edges becomes e edges
    labelled v to that state's out-neighbours; chains are followed through.
    """
    resolved = {}
    for s in reversed(bp.topo):
        if bp.states[s].kind == GUESS and s != bp.start:
            targets = []
            for idx in bp.out_edges[s]:
                targets.extend(resolved[bp.edges[idx].dst])
            resolved[s] = list(dict.fromkeys(targets))
        else:
            resolved[s] = [s]
    keep = {s for s in bp.states if not (bp.states[s].kind == GUESS and s != bp.start)}
    edges, seen = [], set()
    for s in sorted(keep):
        for idx in bp.out_edges[s]:
            e = bp.edges[idx]
            for t in resolved[e.dst]:
                key = (s, t, e.label)
                if key not in seen:
                    seen.add(key)
                    edges.append(key)
    states = {s: bp.states[s] for s in keep}
    tags = {s: bp.tags[s] for s in keep if s in bp.tags}
    return BranchingProgram(bp.h, bp.k, states, edges, bp.start, bp.variant, bp.problem, tags, bp.outputs)


def _validated(seq):
    try:
        return seq.configs(), validate_sequence(seq)
    except InvalidSequence as exc:
        raise CompileError(f"strategy is not a legal pebbling: {exc}") from None


def compile_wbw_to_ntbp(seq, k, keep_guess_states=False):
    """Read-once whole black-white pebbling to a read-once nondeterministic thrifty BP."""
    configs, _ = _validated(seq)
    for c in configs:
        if any(v not in (0, 1) for v in c.black + c.white):
            raise CompileError("strategy uses fractional pebbles")
    if not is_read_once(seq):
        raise CompileError("strategy is not read-once")
    return _build(seq, _Parts(k), False, keep_guess_states)


def compile_black_to_dtbp(seq, k):
    """Black pebbling to a deterministic thrifty BP (root outcome 0 goes to a reject state)."""
    configs, _ = _validated(seq)
    if seq.variant != BLACK and any(any(c.white) for c in configs):
        raise CompileError("strategy uses white pebbles")
    if any(any(v not in (0, 1) for v in c.black) for c in configs):
        raise CompileError("strategy uses fractional pebbles")
    return _build(seq, _Parts(k), True, False)


def compile_fractional_to_bintbp(seq, k, encoding=None, keep_guess_states=False):
    """Fractional black-white pebbling to a BP whose tags fix bits of node values.

    A pebble value of m/l on a node fixes m of its l = log2(k) bits: black
    bits are computed from the queried value, white bits are guessed and
    checked when the white pebble is removed.  Bits are claimed lowest
    position first and black bits are released most recent first.
    """
    if k < 2 or k & (k - 1):
        raise CompileError(f"k={k} is not a power of two")
    encoding = encoding or Encoding.identity(k)
    if encoding.k != k:
        raise CompileError("encoding alphabet does not match k")
    _validated(seq)
    return _build(seq, _Parts(k, encoding), False, keep_guess_states)


# -- group-operation single-function tree evaluation -----------------------------

def check_group(table):
    """Raise CompileError unless ``table`` (k x k) is a group operation on [k]; return the identity."""
    k = len(table)
    if k < 2 or any(len(row) != k for row in table):
        raise CompileError("group table must be k x k with k >= 2")
    if any(not 0 <= v < k for row in table for v in row):
        raise CompileError("group table has values outside [k]")
    for a, b, c in itertools.product(range(k), repeat=3):
        if table[table[a][b]][c] != table[a][table[b][c]]:
            raise CompileError(f"operation is not associative at ({a},{b},{c})")
    ids = [e for e in range(k) if all(table[e][a] == a == table[a][e] for a in range(k))]
    if not ids:
        raise CompileError("operation has no identity")
    e = ids[0]
    for a in range(k):
        if not any(table[a][b] == e == table[b][a] for b in range(k)):
            raise CompileError(f"element {a} has no inverse")
    return e


def cyclic_group(k):
    return [[(a + b) % k for b in range(k)] for a in range(k)]


def compile_group_sft(h, k, table, fixed=True):
    """Width-k layered BP computing the left-associated product of the leaves.

    With ``fixed`` the operation is built in; otherwise every product step
    queries f_1(running product, leaf value), so the program reads the shared
    function from the input.  The output is the root value (FT).
    """
    check_group(table)
    shape = TreeShape(h)
    leaves = list(shape.leaves)
    states, edges, tags = {}, [], {}

    def new(label, tag=None):
        sid = len(states)
        states[sid] = label
        if tag is not None:
            tags[sid] = tag
        return sid

    start = new(leaf_query(leaves[0]), {"layer": 0})
    prev = {}
    finals = {}
    last = len(leaves) - 1
    for t, leaf in enumerate(leaves[1:], start=1):
        cur = {p: new(leaf_query(leaf), {"layer": t, "product": p}) for p in range(k)}
        if t == 1:
            for v in range(k):
                edges.append((start, cur[v], v))
        else:
            _product_edges(prev, cur, k, table, fixed, new, edges, t)
        prev = cur
    finals = {p: new(final_label(p)) for p in range(k)}
    _product_edges(prev, finals, k, table, fixed, new, edges, last + 1)
    return BranchingProgram(h, k, states, edges, start, DETERMINISTIC, "FT", tags)


def _product_edges(prev, cur, k, table, fixed, new, edges, t):
    for p, s in prev.items():
        for v in range(k):
            if fixed:
                edges.append((s, cur[table[p][v]], v))
            else:
                q = new(func_query(1, p, v), {"layer": t, "product": p, "leaf": v})
                edges.append((s, q, v))
                for w in range(k):
                    edges.append((q, cur[w], w))
