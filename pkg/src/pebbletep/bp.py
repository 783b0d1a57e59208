"""k-way branching programs over Tree Evaluation instances.

A program is an acyclic multigraph.  Query states read one k-ary input
variable (a leaf value or one function-table entry); guess states have
unlabelled edges that are always consistent; final and accept states are
terminal.  Batch routines take the flat instance matrix of :mod:`pebbletep.tree`.
"""
import heapq
import json
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .exceptions import MalformedProgram, ParseError
from .tree import TreeShape, func_var, leaf_var, n_variables

LEAF, FUNC, GUESS, FINAL, ACCEPT = "leaf", "func", "guess", "final", "accept"
KINDS = (LEAF, FUNC, GUESS, FINAL, ACCEPT)
DETERMINISTIC = "deterministic"
NONDETERMINISTIC = "nondeterministic"

CHUNK = 1 << 14


@dataclass(frozen=True)
class StateLabel:
    kind: str
    node: Optional[int] = None
    x: Optional[int] = None
    y: Optional[int] = None
    value: Optional[int] = None

    @property
    def is_query(self):
        return self.kind in (LEAF, FUNC)

    @property
    def is_terminal(self):
        return self.kind in (FINAL, ACCEPT)

    def __str__(self):
        if self.kind == LEAF:
            return f"l{self.node}"
        if self.kind == FUNC:
            return f"f{self.node}({self.x},{self.y})"
        if self.kind == FINAL:
            return f"final {self.value}"
        return self.kind


def leaf_query(i):
    return StateLabel(LEAF, node=i)


def func_query(i, x, y):
    return StateLabel(FUNC, node=i, x=x, y=y)


GUESS_LABEL = StateLabel(GUESS)
ACCEPT_LABEL = StateLabel(ACCEPT)


def final_label(v):
    return StateLabel(FINAL, value=v)


class Edge(NamedTuple):
    src: int
    dst: int
    label: Optional[int]


class ComputationPath(NamedTuple):
    states: tuple
    edges: tuple  # edge indices; len(edges) == len(states) - 1


class BranchingProgram:
    """Immutable after construction; structure is validated eagerly."""

    def __init__(self, h, k, states, edges, start, variant=NONDETERMINISTIC, problem="BT", tags=None,
                 outputs=None):
        self.h = h
        self.k = k
        self.variant = variant
        self.problem = problem
        # number of distinct final values; tuple-valued problems need more than k
        self.outputs = outputs if outputs is not None else (2 if problem == "BT" else k)
        self.start = start
        self.states = dict(states)
        self.edges = tuple(Edge(*e) for e in edges)
        self.tags = dict(tags or {})
        self._validate()

    # -- structure -----------------------------------------------------------

    def _validate(self):
        shape = TreeShape(self.h)
        if self.variant not in (DETERMINISTIC, NONDETERMINISTIC):
            raise MalformedProgram(f"unknown variant {self.variant!r}")
        if self.problem not in ("BT", "FT"):
            raise MalformedProgram(f"unknown problem {self.problem!r}")
        if self.start not in self.states:
            raise MalformedProgram(f"start state {self.start} does not exist")
        out = {s: [] for s in self.states}
        indeg = {s: 0 for s in self.states}
        for idx, e in enumerate(self.edges):
            if e.src not in self.states or e.dst not in self.states:
                raise MalformedProgram(f"edge {idx} references a missing state")
            out[e.src].append(idx)
            indeg[e.dst] += 1
        self.out_edges = out
        for s, lab in self.states.items():
            if lab.kind not in KINDS:
                raise MalformedProgram(f"state {s}: unknown kind {lab.kind!r}")
            if lab.is_query:
                if lab.node is None or not 1 <= lab.node <= shape.n_nodes:
                    raise MalformedProgram(f"state {s}: bad node {lab.node}")
                if lab.kind == LEAF and not shape.is_leaf(lab.node):
                    raise MalformedProgram(f"state {s}: node {lab.node} is not a leaf")
                if lab.kind == FUNC:
                    if shape.is_leaf(lab.node):
                        raise MalformedProgram(f"state {s}: node {lab.node} has no function")
                    if not (0 <= lab.x < self.k and 0 <= lab.y < self.k):
                        raise MalformedProgram(f"state {s}: arguments outside [k]")
                hi = self.outcome_range(lab)
                for idx in out[s]:
                    lbl = self.edges[idx].label
                    if lbl is None or not 0 <= lbl < hi:
                        raise MalformedProgram(f"edge {idx} from query state {s} has label {lbl}")
                if self.variant == DETERMINISTIC:
                    labels = sorted(self.edges[idx].label for idx in out[s])
                    if labels != list(range(hi)):
                        raise MalformedProgram(f"deterministic state {s} needs one edge per outcome 0..{hi - 1}")
            elif lab.kind == GUESS:
                if self.variant == DETERMINISTIC:
                    raise MalformedProgram(f"deterministic program has guess state {s}")
                if any(self.edges[idx].label is not None for idx in out[s]):
                    raise MalformedProgram(f"guess state {s} has a labelled edge")
            else:
                if out[s]:
                    raise MalformedProgram(f"terminal state {s} has outgoing edges")
                if lab.kind == FINAL and (lab.value is None or not 0 <= lab.value < self.outputs):
                    raise MalformedProgram(f"final state {s} has bad value {lab.value}")
        # Kahn's algorithm, smallest id first so the order is reproducible
        ready = [s for s, d in indeg.items() if d == 0]
        heapq.heapify(ready)
        order = []
        while ready:
            s = heapq.heappop(ready)
            order.append(s)
            for idx in out[s]:
                t = self.edges[idx].dst
                indeg[t] -= 1
                if indeg[t] == 0:
                    heapq.heappush(ready, t)
        if len(order) != len(self.states):
            raise MalformedProgram("state graph has a cycle")
        self.topo = tuple(order)
        self.index = {s: n for n, s in enumerate(order)}
        self.accept_states = tuple(s for s, lab in self.states.items() if lab.kind == ACCEPT)
        self.var_of = {s: self._var(lab) for s, lab in self.states.items() if lab.is_query}

    def outcome_range(self, label):
        if self.problem == "BT" and label.kind == FUNC and label.node == 1:
            return 2
        return self.k

    def _var(self, lab):
        if lab.kind == LEAF:
            return leaf_var(self.h, lab.node)
        return func_var(self.h, self.k, lab.node, lab.x, lab.y)

    @property
    def n_variables(self):
        return n_variables(self.h, self.k)

    def query_states(self, node=None):
        return [s for s in self.topo if self.states[s].is_query and (node is None or self.states[s].node == node)]

    def __repr__(self):
        return (f"BranchingProgram(h={self.h}, k={self.k}, {self.variant}, {self.problem}, "
                f"states={len(self.states)}, edges={len(self.edges)}, size={size(self)})")


def size(bp):
    """Number of non-final, non-accept states."""
    return sum(1 for lab in bp.states.values() if not lab.is_terminal)


def _check_instance(bp, instance):
    if (instance.h, instance.k) != (bp.h, bp.k):
        raise ValueError(f"instance is ({instance.h},{instance.k}), program is ({bp.h},{bp.k})")


def _consistent(bp, s, label, vec):
    lab = bp.states[s]
    if lab.kind == GUESS:
        return True
    return vec[bp.var_of[s]] == label


# -- single-instance semantics ------------------------------------------------

def forward_set(bp, instance):
    """States reachable from start along edges consistent with ``instance``."""
    vec = instance.to_vector().tolist()
    seen = {bp.start}
    for s in bp.topo:
        if s not in seen:
            continue
        for idx in bp.out_edges[s]:
            e = bp.edges[idx]
            if _consistent(bp, s, e.label, vec):
                seen.add(e.dst)
    return seen


def backward_set(bp, instance, targets=None):
    """States from which some state in ``targets`` (default: accept) is reachable consistently."""
    vec = instance.to_vector().tolist()
    good = set(bp.accept_states if targets is None else targets)
    for s in reversed(bp.topo):
        if s in good:
            continue
        for idx in bp.out_edges[s]:
            e = bp.edges[idx]
            if e.dst in good and _consistent(bp, s, e.label, vec):
                good.add(s)
                break
    return good


def accepts(bp, instance):
    """Nondeterministic semantics: an accepting consistent path exists."""
    _check_instance(bp, instance)
    return bool(forward_set(bp, instance) & set(bp.accept_states))


def reachable_outputs(bp, instance):
    """Values of the final states reachable on consistent paths (accept counts as 1)."""
    _check_instance(bp, instance)
    fwd = forward_set(bp, instance)
    out = set()
    for s in fwd:
        lab = bp.states[s]
        if lab.kind == FINAL:
            out.add(lab.value)
        elif lab.kind == ACCEPT:
            out.add(1)
    return out


def run_deterministic(bp, instance):
    """Output value and the unique maximal consistent path."""
    _check_instance(bp, instance)
    if bp.variant != DETERMINISTIC:
        raise MalformedProgram("run_deterministic needs a deterministic program")
    vec = instance.to_vector().tolist()
    s = bp.start
    states, edges = [s], []
    while True:
        lab = bp.states[s]
        if lab.kind == ACCEPT:
            return 1, ComputationPath(tuple(states), tuple(edges))
        if lab.kind == FINAL:
            return lab.value, ComputationPath(tuple(states), tuple(edges))
        answer = vec[bp.var_of[s]]
        for idx in bp.out_edges[s]:
            if bp.edges[idx].label == answer:
                break
        else:
            raise MalformedProgram(f"dead end at state {s} ({lab}) on answer {answer}")
        edges.append(idx)
        s = bp.edges[idx].dst
        states.append(s)


def path_is_consistent(bp, instance, path):
    vec = instance.to_vector().tolist()
    if not path.states or path.states[0] != bp.start or len(path.edges) != len(path.states) - 1:
        return False
    for n, idx in enumerate(path.edges):
        e = bp.edges[idx]
        if e.src != path.states[n] or e.dst != path.states[n + 1]:
            return False
        if not _consistent(bp, e.src, e.label, vec):
            return False
    return True


def ordered_out_edges(bp, s):
    """Out-edges of s ordered by (target id, edge index)."""
    return sorted(bp.out_edges[s], key=lambda idx: (bp.edges[idx].dst, idx))


def enumerate_accepting_paths(bp, instance, cap=1000, through=None):
    """Accepting consistent paths in lexicographic order; returns (paths, truncated).

    ``through`` restricts to paths visiting that state.
    """
    _check_instance(bp, instance)
    vec = instance.to_vector().tolist()
    good = backward_set(bp, instance)
    if through is not None:
        via = backward_set(bp, instance, targets=[through])
        fwd = forward_set(bp, instance)
        if through not in fwd or through not in good:
            return [], False
    paths = []
    truncated = False
    stack = [(bp.start, (bp.start,), ())]
    if bp.start not in good:
        return [], False
    # explicit stack, children pushed in reverse so the first edge is explored first
    while stack:
        s, states, edges = stack.pop()
        if bp.states[s].kind == ACCEPT:
            if through is None or through in states:
                if len(paths) >= cap:
                    truncated = True
                    break
                paths.append(ComputationPath(states, edges))
            continue
        nxt = []
        for idx in ordered_out_edges(bp, s):
            e = bp.edges[idx]
            if e.dst not in good or not _consistent(bp, s, e.label, vec):
                continue
            if through is not None and through not in states and e.dst != through and e.dst not in via:
                continue
            nxt.append((e.dst, states + (e.dst,), edges + (idx,)))
        stack.extend(reversed(nxt))
    return paths, truncated


def first_accepting_path(bp, instance, through=None):
    paths, _ = enumerate_accepting_paths(bp, instance, cap=1, through=through)
    return paths[0] if paths else None


# -- batch semantics ----------------------------------------------------------

def forward_matrix(bp, X):
    """Bool array (n_states, n_inputs): row bp.index[s] says whether s is reachable."""
    X = np.asarray(X)
    R = np.zeros((len(bp.topo), X.shape[0]), dtype=bool)
    R[bp.index[bp.start]] = True
    for s in bp.topo:
        row = R[bp.index[s]]
        if not row.any():
            continue
        lab = bp.states[s]
        vals = X[:, bp.var_of[s]] if lab.is_query else None
        for idx in bp.out_edges[s]:
            e = bp.edges[idx]
            if vals is None:
                R[bp.index[e.dst]] |= row
            else:
                R[bp.index[e.dst]] |= row & (vals == e.label)
    return R


def backward_matrix(bp, X, targets=None):
    """Bool array (n_states, n_inputs): can the state reach ``targets`` (default accept)."""
    X = np.asarray(X)
    G = np.zeros((len(bp.topo), X.shape[0]), dtype=bool)
    for t in (bp.accept_states if targets is None else targets):
        G[bp.index[t]] = True
    for s in reversed(bp.topo):
        lab = bp.states[s]
        if lab.is_terminal:
            continue
        row = G[bp.index[s]]
        vals = X[:, bp.var_of[s]] if lab.is_query else None
        for idx in bp.out_edges[s]:
            e = bp.edges[idx]
            tgt = G[bp.index[e.dst]]
            row |= tgt if vals is None else tgt & (vals == e.label)
    return G


def accepts_batch(bp, X):
    X = np.asarray(X)
    out = np.zeros(X.shape[0], dtype=bool)
    for lo in range(0, X.shape[0], CHUNK):
        R = forward_matrix(bp, X[lo:lo + CHUNK])
        for a in bp.accept_states:
            out[lo:lo + CHUNK] |= R[bp.index[a]]
    return out


def outputs_batch(bp, X):
    """For FT programs: bitmask over [k] of reachable final values per input."""
    if bp.outputs > 62:
        raise ValueError("outputs_batch supports at most 62 distinct final values")
    X = np.asarray(X)
    out = np.zeros(X.shape[0], dtype=np.int64)
    finals = [(s, lab.value if lab.kind == FINAL else 1) for s, lab in bp.states.items() if lab.is_terminal]
    for lo in range(0, X.shape[0], CHUNK):
        R = forward_matrix(bp, X[lo:lo + CHUNK])
        for s, v in finals:
            out[lo:lo + CHUNK] |= R[bp.index[s]].astype(np.int64) << v
    return out


def run_deterministic_batch(bp, X):
    """Output value of a deterministic program on every row of X."""
    if bp.variant != DETERMINISTIC:
        raise MalformedProgram("run_deterministic_batch needs a deterministic program")
    masks = outputs_batch(bp, X)
    if np.any(masks == 0) or np.any(masks & (masks - 1)):
        raise MalformedProgram("some input does not end in exactly one final state")
    return np.log2(masks).astype(np.int64)


# -- transformations ------------------------------------------------------------

def prune(bp):
    """Drop states not on any graph path from start to a terminal state."""
    reach = {bp.start}
    for s in bp.topo:
        if s in reach:
            reach.update(bp.edges[idx].dst for idx in bp.out_edges[s])
    co = {s for s, lab in bp.states.items() if lab.is_terminal}
    for s in reversed(bp.topo):
        if any(bp.edges[idx].dst in co for idx in bp.out_edges[s]):
            co.add(s)
    keep = reach & co
    keep.add(bp.start)
    states = {s: lab for s, lab in bp.states.items() if s in keep}
    edges = [e for e in bp.edges if e.src in keep and e.dst in keep]
    tags = {s: t for s, t in bp.tags.items() if s in keep}
    return BranchingProgram(bp.h, bp.k, states, edges, bp.start, bp.variant, bp.problem, tags, bp.outputs)


# -- serialization ------------------------------------------------------------

def _label_to_dict(lab):
    out = {"kind": lab.kind}
    for f in ("node", "x", "y", "value"):
        v = getattr(lab, f)
        if v is not None:
            out[f] = v
    return out


def bp_to_dict(bp):
    states = []
    for s in sorted(bp.states):
        entry = {"id": s, "label": _label_to_dict(bp.states[s])}
        if s in bp.tags:
            entry["tag"] = bp.tags[s]
        states.append(entry)
    out = {
        "h": bp.h,
        "k": bp.k,
        "variant": bp.variant,
        "problem": bp.problem,
        "start": bp.start,
        "states": states,
        "edges": [
            {"from": e.src, "to": e.dst, **({"label": e.label} if e.label is not None else {})}
            for e in bp.edges
        ],
    }
    if bp.outputs != (2 if bp.problem == "BT" else bp.k):
        out["outputs"] = bp.outputs
    return out


def bp_from_dict(data):
    for field in ("h", "k", "variant", "problem", "start", "states", "edges"):
        if field not in data:
            raise ParseError(f"missing field {field!r}")
    states, tags = {}, {}
    for n, entry in enumerate(data["states"]):
        try:
            lab = entry["label"]
            sid = int(entry["id"])
            if sid in states:
                raise ParseError(f"states[{n}]: duplicate id {sid}")
            states[sid] = StateLabel(lab["kind"], lab.get("node"), lab.get("x"), lab.get("y"), lab.get("value"))
        except (KeyError, TypeError) as exc:
            raise ParseError(f"states[{n}]: missing or bad field {exc}") from None
        if "tag" in entry:
            tags[sid] = entry["tag"]
    edges = []
    for n, e in enumerate(data["edges"]):
        try:
            edges.append(Edge(int(e["from"]), int(e["to"]), e.get("label")))
        except (KeyError, TypeError) as exc:
            raise ParseError(f"edges[{n}]: missing or bad field {exc}") from None
    return BranchingProgram(int(data["h"]), int(data["k"]), states, edges, int(data["start"]),
                            data["variant"], data["problem"], tags, data.get("outputs"))


def dumps_bp(bp):
    return json.dumps(bp_to_dict(bp), sort_keys=True)


def loads_bp(text):
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"line {exc.lineno} col {exc.colno}: {exc.msg}") from None
    return bp_from_dict(data)


def store(bp, path):
    with open(path, "w") as fh:
        fh.write(dumps_bp(bp))
        fh.write("\n")


def load(path):
    with open(path) as fh:
        return loads_bp(fh.read())


def _tag_text(tag):
    if tag is None:
        return ""
    if isinstance(tag, dict) and "values" in tag:
        return " ".join(f"v{n}={v}" for n, v in sorted(tag["values"].items(), key=lambda kv: int(kv[0])))
    return json.dumps(tag, sort_keys=True)


def export_dot(bp):
    lines = [f'digraph bp {{', '  rankdir=TB;']
    for s in sorted(bp.states):
        lab = bp.states[s]
        shape = "doublecircle" if lab.kind == ACCEPT else "box" if lab.kind == FINAL else "ellipse"
        text = f"{s}: {lab}"
        tag = _tag_text(bp.tags.get(s))
        if tag:
            text += f"\\n{tag}"
        text = text.replace('"', '\\"')
        lines.append(f'  s{s} [label="{text}", shape={shape}];')
    for e in bp.edges:
        attr = f' [label="{e.label}"]' if e.label is not None else " [style=dashed]"
        lines.append(f"  s{e.src} -> s{e.dst}{attr};")
    lines.append("}")
    return "\n".join(lines) + "\n"
