"""Entropy census: distribute E over bottleneck states and bound the largest bucket."""
import ast
import math
import operator
from dataclasses import dataclass, field
from fractions import Fraction

from ..bp import size
from ..exceptions import AnalysisError
from ..pebbling import ZERO
from .checks import check_bitwise_independence, check_syntactic_read_once
from .extract import _hard_rows, designated_paths, rontbp_state_config, state_pebble_values
from .statesets import BddStateSets

MODES = ("whole", "fractional")


@dataclass
class CensusReport:
    mode: str
    threshold: Fraction
    size: int
    total: int                     # |E|
    n_inputs: int                  # inputs actually walked
    exhaustive: bool
    buckets: dict                  # state -> number of walked inputs charged to it
    unreached: list                # walked inputs whose designated path never reaches the threshold
    covered: bool                  # every accepting path of every I in E crosses a threshold state
    certified_max_bucket: int      # max |A_s| over threshold states
    levels: dict = field(default_factory=dict)   # state -> pebble total, threshold states only
    charged: dict = field(default_factory=dict)  # value tuple -> state, exhaustive walks only
    seed: int = None

    @property
    def max_bucket(self):
        """Exact largest bucket when the walk was exhaustive, else the certified bound."""
        if self.exhaustive:
            return max(self.buckets.values(), default=0)
        return self.certified_max_bucket

    @property
    def implied_bound(self):
        if not self.covered or self.max_bucket == 0:
            return Fraction(0)
        return Fraction(self.total, self.max_bucket)

    @property
    def certified_bound(self):
        if not self.covered or self.certified_max_bucket == 0:
            return Fraction(0)
        return Fraction(self.total, self.certified_max_bucket)

    @property
    def partition_ok(self):
        return sum(self.buckets.values()) + len(self.unreached) == self.n_inputs and not self.unreached

    def to_dict(self):
        return {
            "mode": self.mode,
            "threshold": str(self.threshold),
            "size": self.size,
            "total_inputs": self.total,
            "walked_inputs": self.n_inputs,
            "exhaustive": self.exhaustive,
            "seed": self.seed,
            "covered": self.covered,
            "max_bucket": self.max_bucket,
            "implied_bound": str(self.implied_bound),
            "certified_max_bucket": self.certified_max_bucket,
            "certified_bound": str(self.certified_bound),
            "partition_ok": self.partition_ok,
            "unreached": [list(u) for u in self.unreached[:5]],
            "buckets": {str(s): c for s, c in sorted(self.buckets.items())},
            "levels": {str(s): str(p) for s, p in sorted(self.levels.items())},
        }


def detect_mode(bp, sets=None):
    """'fractional' for bitwise-independent programs, 'whole' for read-once ones."""
    if (bp.k & (bp.k - 1)) == 0 and check_bitwise_independence(bp, sets=sets).ok:
        return "fractional"
    if check_syntactic_read_once(bp).ok:
        return "whole"
    raise AnalysisError("no pebbling extraction applies: program is neither bitwise independent nor read-once")


def pebble_levels(bp, mode, sets):
    """Total non-root pebble value at every state lying on an accepting path of E."""
    if mode == "fractional":
        return {s: v.total() for s, v in state_pebble_values(bp, sets).items()}
    out = {}
    for s in bp.topo:
        if sets.count(s, "A"):
            c = rontbp_state_config(bp, s, sets)
            out[s] = sum((c.b(i) + c.w(i) for i in sets.nodes), ZERO)
    return out


def _avoids(bp, sets, blocked):
    """Does some input of E have an accepting path avoiding every blocked state?"""
    bdd = sets.bdd
    R = {s: bdd.false for s in bp.states}
    if bp.start in blocked:
        return False
    R[bp.start] = sets.domain
    for s in bp.topo:
        if R[s] == bdd.false or s in blocked:
            continue
        lab = bp.states[s]
        for idx in bp.out_edges[s]:
            e = bp.edges[idx]
            if e.dst not in blocked:
                R[e.dst] = R[e.dst] | (R[s] & sets.consistency(lab, e.label))
    return any(R[a] != bdd.false for a in bp.accept_states)


def entropy_census(bp, threshold, mode="auto", inputs="auto", n_samples=100_000, seed=0, cap=1 << 20,
                   sets=None):
    """Charge each I in E to the first state on its designated path with >= threshold pebbles.

    When |E| is at most ``cap`` every input is walked and bucket sizes are exact;
    otherwise ``n_samples`` inputs are walked and the bound is certified by
    |A_s|, which contains every input charged to s.
    """
    sets = sets or BddStateSets(bp)
    if mode == "auto":
        mode = detect_mode(bp, sets)
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES} or 'auto'")
    threshold = Fraction(threshold)
    levels = pebble_levels(bp, mode, sets)
    heavy = {s for s, p in levels.items() if p >= threshold}
    total = sets.total
    if inputs == "auto":
        inputs = "E" if total <= cap else "sample"
    tuples, X = _hard_rows(bp, inputs, n_samples, seed, None if inputs != "E" else cap)
    buckets, unreached, charged = {}, [], {}
    for row, path in zip(tuples.tolist(), designated_paths(bp, X)):
        hit = None if path is None else next((s for s in path.states if s in heavy), None)
        if hit is None:
            unreached.append(tuple(row))
        else:
            buckets[hit] = buckets.get(hit, 0) + 1
            if inputs == "E":
                charged[tuple(row)] = hit
    return CensusReport(
        mode=mode, threshold=threshold, size=size(bp), total=total, n_inputs=len(tuples),
        exhaustive=(inputs == "E"), buckets=buckets, unreached=unreached,
        covered=not _avoids(bp, sets, heavy),
        certified_max_bucket=max((sets.count(s, "A") for s in heavy), default=0),
        levels={s: levels[s] for s in heavy}, charged=charged, seed=None if inputs == "E" else seed,
    )


_OPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul, ast.Div: operator.truediv}
_FUNCS = {"ceil": math.ceil, "floor": math.floor}


def parse_threshold(text, h):
    """Arithmetic in h with + - * /, ceil and floor, evaluated exactly: 'h/2', 'ceil(h/2)', '3/2'."""
    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, int):
            return Fraction(node.value)
        if isinstance(node, ast.Name) and node.id == "h":
            return Fraction(h)
        if isinstance(node, ast.BinOp) and type(node.op) in _OPS:
            return _OPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, ast.USub):
            return -ev(node.operand)
        if (isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and node.func.id in _FUNCS
                and len(node.args) == 1):
            return Fraction(_FUNCS[node.func.id](ev(node.args[0])))
        raise ValueError(f"cannot parse threshold {text!r}")

    try:
        return ev(ast.parse(text.strip(), mode="eval"))
    except (SyntaxError, ZeroDivisionError):
        raise ValueError(f"cannot parse threshold {text!r}") from None
