"""Black, whole black-white and fractional black-white pebbling of T^h_2.

All pebble values are :class:`fractions.Fraction`; nothing here touches floats.
"""
import json
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .budget import check_budget
from .exceptions import IllegalMove, InvalidSequence, ParseError
from .tree import TreeShape

BLACK = "black"
WHOLE_BW = "wbw"
FRACTIONAL_BW = "fractional"
GAME_VARIANTS = (BLACK, WHOLE_BW, FRACTIONAL_BW)

DECREASE_BLACK = "decrease_black"
INCREASE_WHITE = "increase_white"
REMOVE_WHITE = "remove_white"
PLACE_BLACK = "place_black"
MOVE_KINDS = (DECREASE_BLACK, INCREASE_WHITE, REMOVE_WHITE, PLACE_BLACK)

ZERO = Fraction(0)
ONE = Fraction(1)


def _frac(x):
    if isinstance(x, float):
        raise TypeError("pebble amounts must be exact (int, Fraction or 'p/q' string)")
    return Fraction(x)


@dataclass(frozen=True)
class PebbleMove:
    kind: str
    node: int
    amount: Optional[Fraction] = None
    child: Optional[int] = None
    child_amount: Optional[Fraction] = None

    def __post_init__(self):
        if self.kind not in MOVE_KINDS:
            raise ValueError(f"unknown move kind {self.kind!r}")
        if self.kind == REMOVE_WHITE:
            if self.amount is not None:
                raise ValueError("remove_white takes no amount")
        else:
            object.__setattr__(self, "amount", _frac(self.amount))
            if self.amount <= 0:
                raise ValueError("move amounts must be strictly positive")
        if self.child is not None:
            if self.kind != PLACE_BLACK:
                raise ValueError("only place_black may decrease a child")
            if self.child not in (2 * self.node, 2 * self.node + 1):
                raise ValueError(f"{self.child} is not a child of {self.node}")
            object.__setattr__(self, "child_amount", _frac(self.child_amount))
            if self.child_amount <= 0:
                raise ValueError("child decrease must be strictly positive")
        elif self.child_amount is not None:
            raise ValueError("child_amount given without child")

    @property
    def is_slide(self):
        return self.child is not None

    def __str__(self):
        if self.kind == REMOVE_WHITE:
            return f"remove_white({self.node})"
        extra = f", {self.child}-{self.child_amount}" if self.child is not None else ""
        return f"{self.kind}({self.node}, {self.amount}{extra})"


def decrease_black(i, amount=1):
    return PebbleMove(DECREASE_BLACK, i, amount)


def increase_white(i, amount=1):
    return PebbleMove(INCREASE_WHITE, i, amount)


def remove_white(i):
    return PebbleMove(REMOVE_WHITE, i)


def place_black(i, amount=1, child=None, child_amount=None):
    if child is not None and child_amount is None:
        child_amount = 1
    return PebbleMove(PLACE_BLACK, i, amount, child, child_amount)


def slide(child, amount=1):
    """Whole slide of the black pebble on ``child`` to its parent."""
    return place_black(child // 2, amount, child, amount)


@dataclass(frozen=True)
class PebbleConfig:
    """Black and white values per node; ``black[i - 1]`` belongs to heap node i."""

    black: tuple
    white: tuple

    @classmethod
    def empty(cls, h):
        n = TreeShape(h).n_nodes
        return cls((ZERO,) * n, (ZERO,) * n)

    @property
    def n_nodes(self):
        return len(self.black)

    def b(self, i):
        return self.black[i - 1]

    def w(self, i):
        return self.white[i - 1]

    def value(self, i):
        return self.black[i - 1] + self.white[i - 1]

    def total(self):
        return sum(self.black, ZERO) + sum(self.white, ZERO)

    def non_root_total(self):
        return self.total() - self.value(1)

    def is_empty(self):
        return not any(self.black) and not any(self.white)

    def is_full(self, i):
        return self.value(i) == 1

    def children_full(self, i):
        """Both children of i carry pebble value 1; vacuously true at leaves."""
        if 2 * i > self.n_nodes:
            return True
        return self.is_full(2 * i) and self.is_full(2 * i + 1)

    def check(self):
        for i in range(1, self.n_nodes + 1):
            b, w = self.b(i), self.w(i)
            if not (0 <= b <= 1 and 0 <= w <= 1 and b + w <= 1):
                raise IllegalMove(f"node {i} has b={b}, w={w}")

    def replace(self, black=None, white=None):
        bl = list(self.black)
        wh = list(self.white)
        for i, v in (black or {}).items():
            bl[i - 1] = v
        for i, v in (white or {}).items():
            wh[i - 1] = v
        return PebbleConfig(tuple(bl), tuple(wh))

    def pebbled(self):
        return {i: (self.b(i), self.w(i)) for i in range(1, self.n_nodes + 1) if self.value(i)}


def apply_move(config, move, variant=FRACTIONAL_BW):
    """Successor configuration, or :class:`IllegalMove`."""
    i = move.node
    if not 1 <= i <= config.n_nodes:
        raise IllegalMove(f"node {i} out of range")
    b, w = config.b(i), config.w(i)
    if move.kind == DECREASE_BLACK:
        if move.amount > b:
            raise IllegalMove(f"cannot decrease b({i})={b} by {move.amount}")
        new = config.replace(black={i: b - move.amount})
    elif move.kind == INCREASE_WHITE:
        if variant == BLACK:
            raise IllegalMove("white pebbles are not allowed in black pebbling")
        if b + w + move.amount > 1:
            raise IllegalMove(f"white increase at {i} overflows b+w<=1")
        new = config.replace(white={i: w + move.amount})
    elif move.kind == REMOVE_WHITE:
        if w == 0:
            raise IllegalMove(f"no white pebble on {i}")
        if not config.children_full(i):
            raise IllegalMove(f"children of {i} are not fully pebbled")
        new = config.replace(white={i: ZERO})
    else:
        if not config.children_full(i):
            raise IllegalMove(f"children of {i} are not fully pebbled")
        if b + w + move.amount > 1:
            raise IllegalMove(f"black increase at {i} overflows b+w<=1")
        changes = {i: b + move.amount}
        if move.child is not None:
            if move.child > config.n_nodes:
                raise IllegalMove(f"node {i} has no children")
            cb = config.b(move.child)
            if move.child_amount > cb:
                raise IllegalMove(f"cannot decrease b({move.child})={cb} by {move.child_amount}")
            changes[move.child] = cb - move.child_amount
        new = config.replace(black=changes)
    if variant in (BLACK, WHOLE_BW):
        touched = [i] + ([move.child] if move.child is not None else [])
        for j in touched:
            if new.b(j) not in (0, 1) or new.w(j) not in (0, 1):
                raise IllegalMove(f"fractional value at node {j} under {variant} pebbling")
    return new


@dataclass(frozen=True)
class PebbleSequence:
    h: int
    variant: str
    moves: tuple
    denominator: int = 1

    def __post_init__(self):
        if self.variant not in GAME_VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}")
        object.__setattr__(self, "moves", tuple(self.moves))

    def configs(self):
        """C_1 (empty) through C_t; raises on the first illegal move."""
        cur = PebbleConfig.empty(self.h)
        out = [cur]
        for step, move in enumerate(self.moves):
            try:
                cur = apply_move(cur, move, self.variant)
            except IllegalMove as exc:
                raise InvalidSequence(str(exc), step) from None
            out.append(cur)
        return out


def validate_sequence(seq):
    """Peak pebble value of a legal pebbling; :class:`InvalidSequence` otherwise."""
    for step, move in enumerate(seq.moves):
        for amt in (move.amount, move.child_amount):
            if amt is not None and (amt * seq.denominator).denominator != 1:
                raise InvalidSequence(f"amount {amt} is not a multiple of 1/{seq.denominator}", step)
    configs = seq.configs()
    if not configs[-1].is_empty():
        raise InvalidSequence(f"final configuration is not empty: {configs[-1].pebbled()}")
    if not any(c.b(1) == 1 for c in configs):
        raise InvalidSequence("root never carries a whole black pebble")
    return max(c.total() for c in configs)


def is_read_once(seq):
    """Every node's (b, w) trajectory is zero, one constant nonzero plateau, zero."""
    configs = seq.configs()
    for i in range(1, configs[0].n_nodes + 1):
        phase = 0  # 0 before, 1 on the plateau, 2 after
        plateau = None
        for c in configs:
            val = (c.b(i), c.w(i))
            nonzero = val != (ZERO, ZERO)
            if phase == 0 and nonzero:
                phase, plateau = 1, val
            elif phase == 1 and val != plateau:
                if nonzero:
                    return False
                phase = 2
            elif phase == 2 and nonzero:
                return False
    return True


def critical_time_ok(seq):
    """Some configuration has a whole black pebble on the root and at most
    ceil(h/2) other pebbles (the induction invariant of the read-once strategy)."""
    bound = -(-seq.h // 2)
    return any(c.b(1) == 1 and c.total() - 1 <= bound for c in seq.configs())


# -- strategy generators ------------------------------------------------------

_CRITICAL = object()


def _black_subtree(r, height):
    """Pure black pebbling of T_r that ends with exactly one black pebble, on r."""
    if height == 1:
        yield place_black(r)
        return
    yield from _black_subtree(2 * r, height - 1)
    yield from _black_subtree(2 * r + 1, height - 1)
    yield slide(2 * r)
    yield decrease_black(2 * r + 1)


def _until_critical(gen, out):
    for item in gen:
        if item is _CRITICAL:
            return
        out.append(item)
    raise AssertionError("procedure ended without a critical time")


def _rest(gen, out):
    for item in gen:
        if item is _CRITICAL:
            raise AssertionError("second critical time")
        out.append(item)


def _thirteen_steps(r, height, mode, sub):
    """Height ``height`` procedure built from height ``height - 2`` procedures ``sub``.

    Black mode ends with a black pebble on r at the critical time (yielded as a
    marker); the caller removes that pebble.  Verify mode starts with a white
    pebble on r and removes it.
    """
    a, b = 2 * r, 2 * r + 1
    a1, a2, b1, b2 = 2 * a, 2 * a + 1, 2 * b, 2 * b + 1
    out = []
    g = sub(a1, height - 2, "black")
    _until_critical(g, out)
    _rest(g, out)
    g5 = sub(a2, height - 2, "black")
    _until_critical(g5, out)
    out.append(slide(a1))
    out.append(decrease_black(a2))
    _rest(g5, out)
    g6 = sub(b1, height - 2, "black")
    _until_critical(g6, out)
    out.append(increase_white(b2))
    out.append(slide(b1))
    if mode == "black":
        out.append(slide(a))
        out.append(decrease_black(b))
        yield from out
        yield _CRITICAL
        out = []
    else:
        out.append(remove_white(r))
        out.append(decrease_black(a))
        out.append(decrease_black(b))
    _rest(g6, out)
    _rest(sub(b2, height - 2, "verify"), out)
    yield from out


def _wbw_proc(r, height, mode):
    if height == 1:
        if mode == "black":
            yield place_black(r)
            yield _CRITICAL
        else:
            yield remove_white(r)
        return
    if height == 2:
        yield place_black(2 * r)
        yield place_black(2 * r + 1)
        if mode == "black":
            yield slide(2 * r)
            yield decrease_black(2 * r + 1)
            yield _CRITICAL
        else:
            yield remove_white(r)
            yield decrease_black(2 * r)
            yield decrease_black(2 * r + 1)
        return
    yield from _thirteen_steps(r, height, mode, _wbw_proc)


def _chain_verify(j, height):
    """Remove a whole white pebble from j using only black-computed left
    children and a chain of white pebbles down the right spine."""
    if height == 1:
        yield remove_white(j)
        return
    yield from _black_subtree(2 * j, height - 1)
    yield increase_white(2 * j + 1)
    yield remove_white(j)
    yield decrease_black(2 * j)
    yield from _chain_verify(2 * j + 1, height - 1)


def _half_base(r, mode):
    """Height-3 procedure with half pebbles on the right child (peak 5/2)."""
    a, b = 2 * r, 2 * r + 1
    half = Fraction(1, 2)
    yield place_black(2 * b)
    yield place_black(2 * b + 1)
    yield place_black(b, half, 2 * b, 1)
    yield decrease_black(2 * b + 1)
    yield place_black(2 * a)
    yield place_black(2 * a + 1)
    yield slide(2 * a)
    yield decrease_black(2 * a + 1)
    yield increase_white(b, half)
    if mode == "black":
        yield slide(a)
        yield decrease_black(b, half)
        yield _CRITICAL
    else:
        yield remove_white(r)
        yield decrease_black(a)
        yield decrease_black(b, half)
    yield place_black(2 * b)
    yield place_black(2 * b + 1)
    yield remove_white(b)
    yield decrease_black(2 * b)
    yield decrease_black(2 * b + 1)


def _chain_base(r, mode, height=4):
    """Procedure whose black values are only ever computed from black children
    (white children are used only at r and in verifications)."""
    a, b = 2 * r, 2 * r + 1
    yield from _black_subtree(a, height - 1)
    yield increase_white(b)
    if mode == "black":
        yield slide(a)
        yield _CRITICAL
    else:
        yield remove_white(r)
        yield decrease_black(a)
    yield from _chain_verify(b, height - 1)


def _frac_proc(denominator):
    def proc(r, height, mode):
        if height <= 2:
            yield from _wbw_proc(r, height, mode)
        elif height == 3:
            if denominator == 2:
                yield from _half_base(r, mode)
            else:
                yield from _chain_base(r, mode, 3)
        elif height == 4:
            yield from _chain_base(r, mode)
        else:
            yield from _thirteen_steps(r, height, mode, proc)
    return proc


def _top_level(h, proc):
    gen = proc(1, h, "black")
    moves = []
    _until_critical(gen, moves)
    moves.append(decrease_black(1))
    _rest(gen, moves)
    return moves


def generate_black_strategy(h):
    TreeShape(h)
    moves = list(_black_subtree(1, h)) + [decrease_black(1)]
    return PebbleSequence(h, BLACK, moves, 1)


def generate_ro_wbw_strategy(h):
    """Read-once whole black-white pebbling with ceil(h/2)+1 pebbles."""
    TreeShape(h)
    return PebbleSequence(h, WHOLE_BW, _top_level(h, _wbw_proc), 1)


def generate_fractional_strategy(h, denominator=2):
    """Fractional pebbling with at most h/2+1 pebbles (ceil(h/2)+1 when denominator=1).

    Heights 2 and 4 use whole pebbles, height 3 uses halves on the right child
    of the root (whole pebbles when denominator=1), and larger heights are assembled from these by the same
    two-level recursion as the read-once whole strategy.  For h <= 4 no black
    value is ever computed from a white child except at the root.
    """
    TreeShape(h)
    if denominator not in (1, 2):
        raise ValueError("only denominators 1 and 2 are supported")
    return PebbleSequence(h, FRACTIONAL_BW, _top_level(h, _frac_proc(denominator)), denominator)


# -- exhaustive optimal search ------------------------------------------------

def _pairs_per_node(variant, d):
    if variant == BLACK:
        return 2
    return (d + 1) * (d + 2) // 2


def config_space_size(h, variant, d=1):
    return _pairs_per_node(variant, d) ** TreeShape(h).n_nodes


class _Searcher:
    """Reachability over configurations in units of 1/d, one budget at a time."""

    def __init__(self, h, variant, d):
        self.h = h
        self.n = TreeShape(h).n_nodes
        self.variant = variant
        self.d = d
        self.first_leaf = 2 ** (h - 1)

    def successors(self, bl, wh, budget):
        n, d = self.n, self.d
        total = sum(bl) + sum(wh)
        allow_white = self.variant != BLACK
        for i in range(1, n + 1):
            b, w = bl[i - 1], wh[i - 1]
            if i >= self.first_leaf:
                full = True
            else:
                c1, c2 = 2 * i - 1, 2 * i
                full = bl[c1] + wh[c1] == d and bl[c2] + wh[c2] == d
            for a in range(1, b + 1):
                nb = list(bl)
                nb[i - 1] = b - a
                yield (tuple(nb), wh), decrease_black(i, Fraction(a, d))
            room = d - b - w
            if allow_white:
                for a in range(1, min(room, budget - total) + 1):
                    nw = list(wh)
                    nw[i - 1] = w + a
                    yield (bl, tuple(nw)), increase_white(i, Fraction(a, d))
            if not full:
                continue
            if w and allow_white:
                nw = list(wh)
                nw[i - 1] = 0
                yield (bl, tuple(nw)), remove_white(i)
            for a in range(1, room + 1):
                if total + a <= budget:
                    nb = list(bl)
                    nb[i - 1] = b + a
                    yield (tuple(nb), wh), place_black(i, Fraction(a, d))
                if i < self.first_leaf:
                    for c in (2 * i, 2 * i + 1):
                        for ca in range(1, bl[c - 1] + 1):
                            if total + a - ca <= budget:
                                nb = list(bl)
                                nb[i - 1] = b + a
                                nb[c - 1] -= ca
                                yield (tuple(nb), wh), place_black(i, Fraction(a, d), c, Fraction(ca, d))

    def search(self, budget, cap, want_path=False):
        zero = ((0,) * self.n, (0,) * self.n)
        start = (zero, False)
        goal = (zero, True)
        parent = {start: None}
        queue = deque([start])
        while queue:
            node = queue.popleft()
            if node == goal:
                break
            (bl, wh), done = node
            for (nbl, nwh), move in self.successors(bl, wh, budget):
                nxt = ((nbl, nwh), done or nbl[0] == self.d)
                if nxt not in parent:
                    parent[nxt] = (node, move) if want_path else node
                    if len(parent) > cap:
                        check_budget("pebbling configurations visited", len(parent), cap)
                    queue.append(nxt)
        if goal not in parent:
            return None
        if not want_path:
            return True
        moves = []
        node = goal
        while parent[node] is not None:
            node, move = parent[node]
            moves.append(move)
        return moves[::-1]


def _check_search_args(h, variant, d, cap):
    if variant not in GAME_VARIANTS:
        raise ValueError(f"unknown variant {variant!r}")
    if variant in (BLACK, WHOLE_BW) and d != 1:
        raise ValueError(f"{variant} pebbling uses denominator 1")
    if d < 1:
        raise ValueError("denominator must be positive")
    check_budget(f"configuration space of {variant} h={h} d={d}", config_space_size(h, variant, d), cap)


def optimal_peak(h, variant, d=1, cap=None):
    """Exact minimum peak over strategies whose values are multiples of 1/d."""
    from .budget import default_budget
    cap = default_budget() if cap is None else cap
    _check_search_args(h, variant, d, cap)
    searcher = _Searcher(h, variant, d)
    lo, hi = d, h * d  # black pebbling with h pebbles always succeeds
    while lo < hi:
        mid = (lo + hi) // 2
        if searcher.search(mid, cap):
            hi = mid
        else:
            lo = mid + 1
    return Fraction(lo, d)


def optimal_strategy(h, variant, d=1, cap=None):
    """A strategy attaining :func:`optimal_peak`, from the search's BFS tree."""
    from .budget import default_budget
    cap = default_budget() if cap is None else cap
    peak = optimal_peak(h, variant, d, cap)
    moves = _Searcher(h, variant, d).search(int(peak * d), cap, want_path=True)
    return PebbleSequence(h, variant, moves, d)


# -- serialization ------------------------------------------------------------

def _fmt(q):
    q = Fraction(q)
    return f"{q.numerator}/{q.denominator}"


def move_to_dict(move):
    out = {"kind": move.kind, "node": move.node}
    if move.amount is not None:
        out["amount"] = _fmt(move.amount)
    if move.child is not None:
        out["child"] = move.child
        out["child_amount"] = _fmt(move.child_amount)
    return out


def move_from_dict(data):
    amount = data.get("amount")
    child_amount = data.get("child_amount")
    return PebbleMove(
        data["kind"],
        int(data["node"]),
        Fraction(amount) if amount is not None else None,
        data.get("child"),
        Fraction(child_amount) if child_amount is not None else None,
    )


def sequence_to_dict(seq):
    return {
        "h": seq.h,
        "variant": seq.variant,
        "denominator": seq.denominator,
        "moves": [move_to_dict(m) for m in seq.moves],
    }


def sequence_from_dict(data):
    try:
        moves = [move_from_dict(m) for m in data["moves"]]
        return PebbleSequence(int(data["h"]), data["variant"], moves, int(data.get("denominator", 1)))
    except KeyError as exc:
        raise ParseError(f"missing field {exc}") from None
    except (TypeError, ValueError, ZeroDivisionError) as exc:
        raise ParseError(str(exc)) from None


def dumps_sequence(seq):
    return json.dumps(sequence_to_dict(seq), sort_keys=True)


def loads_sequence(text):
    try:
        return sequence_from_dict(json.loads(text))
    except json.JSONDecodeError as exc:
        raise ParseError(f"line {exc.lineno} col {exc.colno}: {exc.msg}") from None


def timeline_tsv(seq):
    """Per-step pebble values, one row per configuration."""
    configs = seq.configs()
    n = configs[0].n_nodes
    header = ["step", "move", "total"] + [f"{c}{i}" for i in range(1, n + 1) for c in "bw"]
    rows = ["\t".join(header)]
    for step, c in enumerate(configs):
        move = str(seq.moves[step - 1]) if step else "-"
        vals = [str(v) for i in range(1, n + 1) for v in (c.b(i), c.w(i))]
        rows.append("\t".join([str(step), move, str(c.total())] + vals))
    return "\n".join(rows) + "\n"
