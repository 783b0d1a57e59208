"""Per-state input sets F_s and A_s.

F_s holds the non-root node-value tuples of sweep inputs that reach s on some
consistent path; A_s those that reach s on an accepting one.  Over the hard
family E a tuple determines its input, so both sets can be held exactly as
BDDs over the bits of the node values.  Other sweeps (all instances, random
samples) are held as explicit Python sets.
"""
import itertools
import math

import numpy as np

from ..bp import FUNC, GUESS, LEAF, backward_matrix, forward_matrix
from ..budget import check_budget
from ..tree import (TreeShape, all_instances_matrix, count_instances, evaluate_batch, hard_input,
                    hard_inputs_matrix, hard_tuples_array, random_instances_matrix)

try:  # the CUDD bindings are much faster; the pure-Python package is a fallback
    from dd.cudd import BDD
except ImportError:  # pragma: no cover
    from dd.autoref import BDD

SWEEPS = ("E", "all", "sample")


def power_of_two_floor(k):
    return 1 << (k.bit_length() - 1)


class StateSets:
    """Common interface; ``values`` is the alphabet the sets range over."""

    sweep = None

    def __init__(self, bp, values):
        self.bp = bp
        self.values = values
        self.nodes = tuple(TreeShape(bp.h).non_root)
        self._proj = {}

    def count(self, s, which="F"):
        raise NotImplementedError

    def _project(self, s, i, which):
        raise NotImplementedError

    def proj(self, s, i, which="F"):
        key = (s, i, which)
        if key not in self._proj:
            self._proj[key] = frozenset(self._project(s, i, which))
        return self._proj[key]

    def is_node_product(self, s, which="F"):
        """|S| equals the product of its per-node projection sizes."""
        return self.count(s, which) == math.prod(len(self.proj(s, i, which)) for i in self.nodes)

    def describe(self):
        return {"sweep": self.sweep, "values": self.values}


class BddStateSets(StateSets):
    """Exact sets over E (or E restricted to values below ``values``)."""

    sweep = "E"

    def __init__(self, bp, values=None):
        super().__init__(bp, values or bp.k)
        self.width = max(1, (bp.k - 1).bit_length())
        self.bdd = BDD()
        self.names = {i: [f"n{i}b{j}" for j in range(self.width)] for i in self.nodes}
        self.bdd.declare(*[v for i in self.nodes for v in self.names[i]])
        self.nvars = len(self.nodes) * self.width
        self._eq = {}
        dom = self.bdd.true
        if self.values < (1 << self.width):
            for i in self.nodes:
                dom &= self._or(self.eq(i, u) for u in range(self.values))
        self.domain = dom
        self.total = self.values ** len(self.nodes)
        self._cons = {}
        self._run()

    def _or(self, items):
        out = self.bdd.false
        for u in items:
            out |= u
        return out

    def eq(self, i, u):
        """Predicate v_i == u (false for u outside the alphabet)."""
        key = (i, u)
        if key not in self._eq:
            if not 0 <= u < self.values:
                self._eq[key] = self.bdd.false
            else:
                cube = self.bdd.true
                for j, name in enumerate(self.names[i]):
                    bit = (u >> (self.width - 1 - j)) & 1
                    cube &= self.bdd.var(name) if bit else ~self.bdd.var(name)
                self._eq[key] = cube
        return self._eq[key]

    def consistency(self, label, value):
        """Inputs of E on which a query with this label answers ``value``."""
        key = (label, value)
        if key in self._cons:
            return self._cons[key]
        if label.kind == GUESS:
            out = self.bdd.true
        elif label.kind == LEAF:
            out = self.eq(label.node, value)
        elif label.node == 1:
            out = self.bdd.true if value == 1 else self.bdd.false
        else:
            i = label.node
            match = self.eq(2 * i, label.x) & self.eq(2 * i + 1, label.y)
            if value == 0:
                out = ~match | self.eq(i, 0)
            else:
                out = match & self.eq(i, value)
        self._cons[key] = out
        return out

    def _run(self):
        bp, false = self.bp, self.bdd.false
        F = {s: false for s in bp.states}
        F[bp.start] = self.domain
        for s in bp.topo:
            if F[s] == false:
                continue
            lab = bp.states[s]
            for idx in bp.out_edges[s]:
                e = bp.edges[idx]
                F[e.dst] = F[e.dst] | (F[s] & self.consistency(lab, e.label))
        G = {s: false for s in bp.states}
        for a in bp.accept_states:
            G[a] = self.domain
        for s in reversed(bp.topo):
            lab = bp.states[s]
            if lab.is_terminal:
                continue
            acc = G[s]
            for idx in bp.out_edges[s]:
                e = bp.edges[idx]
                if G[e.dst] != false:
                    acc = acc | (G[e.dst] & self.consistency(lab, e.label))
            G[s] = acc
        self.F = F
        self.A = {s: F[s] & G[s] for s in bp.states}

    def _set(self, s, which):
        return self.F[s] if which == "F" else self.A[s]

    def count(self, s, which="F"):
        u = self._set(s, which)
        if u == self.bdd.false:
            return 0
        return int(round(self.bdd.count(u, nvars=self.nvars)))

    def _project(self, s, i, which):
        u = self._set(s, which)
        return [v for v in range(self.values) if (u & self.eq(i, v)) != self.bdd.false]

    def contains(self, s, values, which="F"):
        assign = {}
        for i, v in zip(self.nodes, values):
            for j, name in enumerate(self.names[i]):
                assign[name] = bool((v >> (self.width - 1 - j)) & 1)
        return self.bdd.let(assign, self._set(s, which)) == self.bdd.true

    def pick(self, s, which="A"):
        """Some tuple in the set, or None."""
        u = self._set(s, which)
        if u == self.bdd.false:
            return None
        assign = self.bdd.pick(u, care_vars=set(v for i in self.nodes for v in self.names[i]))
        return tuple(
            sum(int(assign[name]) << (self.width - 1 - j) for j, name in enumerate(self.names[i]))
            for i in self.nodes
        )


class ExplicitStateSets(StateSets):
    """Sets of node-value tuples collected by simulating every sweep input."""

    def __init__(self, bp, X, sweep, values=None, chunk=1 << 14):
        super().__init__(bp, values or bp.k)
        self.sweep = sweep
        X = np.asarray(X)
        self.n_inputs = X.shape[0]
        F = {s: set() for s in bp.states}
        A = {s: set() for s in bp.states}
        first = 2
        for lo in range(0, X.shape[0], chunk):
            Xc = X[lo:lo + chunk]
            V = evaluate_batch(Xc, bp.h, bp.k)[:, first:]
            rows = [tuple(r) for r in V.tolist()]
            R = forward_matrix(bp, Xc)
            G = backward_matrix(bp, Xc)
            for s in bp.states:
                r = R[bp.index[s]]
                F[s].update(rows[n] for n in np.flatnonzero(r))
                A[s].update(rows[n] for n in np.flatnonzero(r & G[bp.index[s]]))
        self.F, self.A = F, A

    def count(self, s, which="F"):
        return len(self.F[s] if which == "F" else self.A[s])

    def _project(self, s, i, which):
        col = i - 2
        return {t[col] for t in (self.F[s] if which == "F" else self.A[s])}

    def contains(self, s, values, which="F"):
        return tuple(values) in (self.F[s] if which == "F" else self.A[s])

    def pick(self, s, which="A"):
        S = self.F[s] if which == "F" else self.A[s]
        return min(S) if S else None


def compute_state_sets(bp, sweep="E", backend="auto", n_samples=100_000, seed=0, cap=None, values=None):
    """F_s and A_s for every state over the named sweep set.

    ``values`` restricts E to node values below it (used for the
    power-of-two sub-program when k is not a power of two).
    """
    if sweep not in SWEEPS:
        raise ValueError(f"sweep must be one of {SWEEPS}")
    if sweep == "E":
        if backend in ("auto", "bdd"):
            return BddStateSets(bp, values)
        vals = values or bp.k
        tuples = hard_tuples_array(bp.h, vals, cap)
        return ExplicitStateSets(bp, hard_inputs_matrix(bp.h, bp.k, tuples), "E", vals)
    if backend == "bdd":
        raise ValueError("the BDD backend only covers the sweep E")
    if sweep == "all":
        check_budget("instance count", count_instances(bp.h, bp.k, "BT"), cap)
        return ExplicitStateSets(bp, all_instances_matrix(bp.h, bp.k, "BT", cap), "all")
    rng = np.random.default_rng(seed)
    sets = ExplicitStateSets(bp, random_instances_matrix(bp.h, bp.k, "BT", n_samples, rng), "sample")
    sets.seed = seed
    return sets


def tuple_to_instance(bp, values):
    return hard_input(bp.h, bp.k, values)


def is_subcube(values, codes, bits):
    """Do the codes of ``values`` form a product of per-bit sets?"""
    cs = [codes[v] for v in values]
    size = 1
    for p in range(bits):
        size *= len({(c >> (bits - 1 - p)) & 1 for c in cs})
    return size == len(set(cs))


def encodings(k, search):
    """Candidate encodings: identity only, or every bijection of [k] onto codes."""
    if not search:
        return [tuple(range(k))]
    return list(itertools.permutations(range(k)))
