"""Structural checks: thrift, syntactic read-once, bitwise independence."""
import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..bp import FUNC, backward_matrix, first_accepting_path, forward_matrix
from ..exceptions import BudgetExceeded
from ..tree import TepInstance, evaluate_batch, hard_inputs_matrix, hard_tuples_array
from .statesets import compute_state_sets, encodings, is_subcube, power_of_two_floor


@dataclass
class Violation:
    state: int
    instance: Optional[TepInstance] = None
    path: Optional[tuple] = None
    detail: str = ""

    def to_dict(self):
        from ..tree import instance_to_dict
        out = {"state": self.state, "detail": self.detail}
        if self.instance is not None:
            out["instance"] = instance_to_dict(self.instance)
        if self.path is not None:
            out["path"] = list(self.path)
        return out


@dataclass
class Verdict:
    prop: str
    ok: bool
    violations: list = field(default_factory=list)
    info: dict = field(default_factory=dict)

    def __bool__(self):
        return self.ok

    def to_dict(self):
        return {"property": self.prop, "ok": self.ok, "info": self.info,
                "violations": [v.to_dict() for v in self.violations]}


def _input_matrix(bp, inputs, cap):
    if isinstance(inputs, str):
        if inputs != "E":
            raise ValueError("inputs must be 'E' or an instance matrix")
        return hard_inputs_matrix(bp.h, bp.k, hard_tuples_array(bp.h, bp.k, cap))
    return np.asarray(inputs)


def check_thrifty(bp, inputs="E", max_witnesses=5, cap=None, chunk=1 << 13):
    """Every function query on every accepting path uses the true child values."""
    X = _input_matrix(bp, inputs, cap)
    queries = [(s, bp.states[s]) for s in bp.topo if bp.states[s].kind == FUNC]
    violations, n_bad = [], 0
    for lo in range(0, X.shape[0], chunk):
        Xc = X[lo:lo + chunk]
        V = evaluate_batch(Xc, bp.h, bp.k)
        R = forward_matrix(bp, Xc)
        G = backward_matrix(bp, Xc)
        for s, lab in queries:
            row = bp.index[s]
            bad = R[row] & G[row] & ((V[:, 2 * lab.node] != lab.x) | (V[:, 2 * lab.node + 1] != lab.y))
            hits = np.flatnonzero(bad)
            n_bad += len(hits)
            for n in hits[:max(0, max_witnesses - len(violations))]:
                inst = TepInstance.from_vector(bp.h, bp.k, Xc[n])
                path = first_accepting_path(bp, inst, through=s)
                violations.append(Violation(s, inst, path.states if path else None,
                                            f"{lab} queried but children are "
                                            f"({V[n, 2 * lab.node]},{V[n, 2 * lab.node + 1]})"))
    return Verdict("thrifty", n_bad == 0, violations, {"inputs": int(X.shape[0]), "bad_pairs": int(n_bad)})


def _useful(bp):
    reach = {bp.start}
    for s in bp.topo:
        if s in reach:
            reach.update(bp.edges[i].dst for i in bp.out_edges[s])
    co = set(bp.accept_states)
    for s in reversed(bp.topo):
        if any(bp.edges[i].dst in co for i in bp.out_edges[s]):
            co.add(s)
    return reach & co


def check_syntactic_read_once(bp):
    """No start-to-accept graph path contains two states querying the same node."""
    useful = _useful(bp)
    desc = {}
    for s in reversed(bp.topo):
        mask = 0
        for idx in bp.out_edges[s]:
            t = bp.edges[idx].dst
            mask |= desc[t] | (1 << bp.index[t])
        desc[s] = mask
    by_node = {}
    for s in bp.topo:
        lab = bp.states[s]
        if lab.is_query and s in useful:
            by_node.setdefault(lab.node, []).append(s)
    violations = []
    for node, qs in sorted(by_node.items()):
        bits = 0
        for s in qs:
            bits |= 1 << bp.index[s]
        for s in qs:
            hit = desc[s] & bits
            if hit:
                t = bp.topo[(hit & -hit).bit_length() - 1]
                violations.append(Violation(s, detail=f"node {node} is queried at {s} and again at {t}"))
                break
    return Verdict("read-once", not violations, violations)


def check_bitwise_independence(bp, encoding=None, search=False, sets=None):
    """F_s and A_s factor over nodes and, under one encoding, over bits.

    When k is not a power of two the check runs on E restricted to the
    largest power of two below k.  ``search`` tries every encoding when the
    value width is at most two bits and the identity otherwise.
    """
    values = power_of_two_floor(bp.k)
    bits = values.bit_length() - 1
    if sets is None:
        sets = compute_state_sets(bp, "E", values=values if values != bp.k else None)
    violations, subsets = [], set()
    for s in bp.topo:
        for which in ("F", "A"):
            if not sets.is_node_product(s, which):
                violations.append(Violation(s, detail=f"{which}_s is not the product of its node projections"))
            for i in sets.nodes:
                subsets.add(sets.proj(s, i, which))
    info = {"sweep": sets.sweep, "values": values}
    if violations:
        return Verdict("bitwise-independent", False, violations, info)
    if encoding is not None:
        candidates = [tuple(encoding.codes)]
    else:
        if search and bits > 2:
            warnings.warn("encoding search is exhaustive only up to 2 bits; trying the identity")
            search = False
        candidates = encodings(values, search)
    for codes in candidates:
        bad = [S for S in subsets if S and not is_subcube(S, codes, bits)]
        if not bad:
            info["encoding"] = list(codes)
            return Verdict("bitwise-independent", True, [], info)
    worst = sorted(bad, key=sorted)[0]
    for s in bp.topo:
        for which in ("F", "A"):
            for i in sets.nodes:
                if sets.proj(s, i, which) == worst:
                    info["tried"] = len(candidates)
                    return Verdict("bitwise-independent", False, [Violation(
                        s, detail=f"proj({which}_s, {i}) = {sorted(worst)} is not a bit product")], info)
    raise AssertionError("unreachable")
