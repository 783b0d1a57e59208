"""Counting arguments for modular adders.

A one-pair adder reads leaves u, v of a height-2 tree and outputs u + v mod k.
A two-pair adder reads leaves u, v, w, x of a height-3 tree and outputs the
pair (u + v, w + x) mod k, encoded as s*k + t.  In a correct deterministic
program the edge entering a final state pins down few inputs, so the number of
such edges, and with it the number of states, must be large.
"""
import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from ..bp import DETERMINISTIC, FINAL, BranchingProgram, final_label, leaf_query, run_deterministic, size
from ..exceptions import AnalysisError
from ..tree import TepInstance, leaf_var, n_variables

ARITIES = (1, 2)


def adder_bp(k):
    """Layered width-k adder: query u, then v from one of k states, then output."""
    states = {0: leaf_query(2)}
    edges = []
    for u in range(k):
        states[1 + u] = leaf_query(3)
        edges.append((0, 1 + u, u))
    for r in range(k):
        states[1 + k + r] = final_label(r)
    for u, v in itertools.product(range(k), repeat=2):
        edges.append((1 + u, 1 + k + (u + v) % k, v))
    return BranchingProgram(2, k, states, edges, 0, DETERMINISTIC, "FT")


def two_pair_adder_bp(k):
    """Adds u+v into one of k states, then reads w and x; 1 + 2k + k^2 query states."""
    states, edges = {0: leaf_query(4)}, []
    nid = itertools.count(1)
    after_u = {u: next(nid) for u in range(k)}
    after_sum = {s: next(nid) for s in range(k)}
    after_w = {(s, w): next(nid) for s in range(k) for w in range(k)}
    finals = {o: next(nid) for o in range(k * k)}
    for u, sid in after_u.items():
        states[sid] = leaf_query(5)
        edges.append((0, sid, u))
    for s, sid in after_sum.items():
        states[sid] = leaf_query(6)
    for (s, w), sid in after_w.items():
        states[sid] = leaf_query(7)
    for o, sid in finals.items():
        states[sid] = final_label(o)
    for u, v in itertools.product(range(k), repeat=2):
        edges.append((after_u[u], after_sum[(u + v) % k], v))
    for s, w in itertools.product(range(k), repeat=2):
        edges.append((after_sum[s], after_w[(s, w)], w))
    for (s, w), x in itertools.product(after_w, range(k)):
        edges.append((after_w[(s, w)], finals[s * k + (w + x) % k], x))
    return BranchingProgram(3, k, states, edges, 0, DETERMINISTIC, "FT", outputs=k * k)


def _leaves(pairs):
    return (2, 3) if pairs == 1 else (4, 5, 6, 7)


def adder_instances(h, k, pairs):
    """Every assignment of the summand leaves; other variables are zero."""
    leaves = _leaves(pairs)
    for vals in itertools.product(range(k), repeat=len(leaves)):
        vec = np.zeros(n_variables(h, k), dtype=np.int64)
        for i, v in zip(leaves, vals):
            vec[leaf_var(h, i)] = v
        yield vals, TepInstance.from_vector(h, k, vec, "FT")


def expected_sum(vals, k):
    if len(vals) == 2:
        return (vals[0] + vals[1]) % k
    return ((vals[0] + vals[1]) % k) * k + (vals[2] + vals[3]) % k


@dataclass
class AdderReport:
    pairs: int
    k: int
    size: int
    correct: bool
    last_edges: dict = field(default_factory=dict)   # edge index -> |F_e|
    wrong: list = field(default_factory=list)

    @property
    def limit(self):
        return 1 if self.pairs == 1 else self.k

    @property
    def max_f(self):
        return max(self.last_edges.values(), default=0)

    @property
    def fe_ok(self):
        return self.correct and self.max_f <= self.limit

    @property
    def edge_bound(self):
        """Last edges needed: k^(2*pairs) inputs, at most ``limit`` per edge."""
        return self.k ** (2 * self.pairs) // self.limit

    @property
    def state_bound(self):
        """Each state has k outgoing edges."""
        return math.ceil(self.edge_bound / self.k)

    @property
    def ok(self):
        return self.fe_ok and len(self.last_edges) >= self.edge_bound and self.size >= self.state_bound

    def to_dict(self):
        return {"pairs": self.pairs, "k": self.k, "size": self.size, "correct": self.correct, "ok": self.ok,
                "max_f_e": self.max_f, "f_e_limit": self.limit, "last_edges_used": len(self.last_edges),
                "edge_bound": self.edge_bound, "state_bound": self.state_bound,
                "wrong": [list(w) for w in self.wrong[:5]]}


def adder_census(bp, pairs, k=None):
    """|F_e| for every edge entering a final state, after checking correctness exhaustively."""
    if pairs not in ARITIES:
        raise ValueError(f"pairs must be one of {ARITIES}")
    k = k or bp.k
    h = 2 if pairs == 1 else 3
    if (bp.h, bp.k, bp.variant) != (h, k, DETERMINISTIC):
        raise AnalysisError(f"expected a deterministic program with h={h}, k={k}")
    counts, wrong = {}, []
    for vals, inst in adder_instances(h, k, pairs):
        value, path = run_deterministic(bp, inst)
        if value != expected_sum(vals, k):
            wrong.append(vals)
            continue
        last = path.edges[-1]
        counts[last] = counts.get(last, 0) + 1
    if wrong:
        raise AnalysisError(f"program is not a correct adder, e.g. on leaves {wrong[0]}")
    return AdderReport(pairs, k, size(bp), True, counts, wrong)


# -- exhaustive search at tiny sizes ------------------------------------------------------

def _programs(n, k):
    """Deterministic one-pair programs with n query states 0..n-1 in topological order.

    Targets n..n+k-1 are the finals with values 0..k-1.
    """
    per_state = []
    for s in range(n):
        targets = list(range(s + 1, n + k))
        per_state.append([(q, outs) for q in (0, 1) for outs in itertools.product(targets, repeat=k)])
    return itertools.product(*per_state)


def _computes_sum(prog, n, k):
    for u, v in itertools.product(range(k), repeat=2):
        s = 0
        while s < n:
            q, outs = prog[s]
            s = outs[(u, v)[q]]
        if s - n != (u + v) % k:
            return False
    return True


def minimal_adder_search(k=2, max_states=3):
    """Count correct one-pair adders with n query states for every n up to ``max_states``.

    Returns ({n: number correct}, smallest correct program or None).
    """
    found, witness = {}, None
    for n in range(1, max_states + 1):
        found[n] = 0
        for prog in _programs(n, k):
            if _computes_sum(prog, n, k):
                found[n] += 1
                if witness is None:
                    witness = _to_bp(prog, n, k)
    return found, witness


def _to_bp(prog, n, k):
    states = {s: leaf_query(2 + prog[s][0]) for s in range(n)}
    states.update({n + v: final_label(v) for v in range(k)})
    edges = [(s, t, lbl) for s in range(n) for lbl, t in enumerate(prog[s][1])]
    return BranchingProgram(2, k, states, edges, 0, DETERMINISTIC, "FT")
