"""Tree Evaluation Problem instances over the complete binary tree of height h.

Nodes use heap numbering: the root is 1, node i has children 2i and 2i+1 and
the leaves are 2**(h-1) .. 2**h - 1.  An instance is also viewed as a flat
vector of k-ary variables (the inputs a branching program queries): the leaf
values in heap order followed by every function table, row-major in the first
argument, for internal nodes 1, 2, ...
"""
import itertools
import json
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .budget import check_budget
from .exceptions import ParseError

MAX_K = 2 ** 16
VARIANTS = ("FT", "BT")


class NodeRelations(NamedTuple):
    parent: Optional[int]
    left: Optional[int]
    right: Optional[int]
    sibling: Optional[int]


@dataclass(frozen=True)
class TreeShape:
    h: int

    def __post_init__(self):
        if self.h < 2:
            raise ValueError(f"height must be >= 2, got {self.h}")

    @property
    def n_nodes(self):
        return 2 ** self.h - 1

    @property
    def N(self):
        """Number of non-root nodes."""
        return 2 ** self.h - 2

    @property
    def first_leaf(self):
        return 2 ** (self.h - 1)

    @property
    def leaves(self):
        return range(self.first_leaf, 2 ** self.h)

    @property
    def internal(self):
        return range(1, self.first_leaf)

    @property
    def non_root(self):
        return range(2, 2 ** self.h)

    def is_leaf(self, i):
        return i >= self.first_leaf

    def relations(self, i):
        return node_relations(self, i)


def node_relations(shape, i):
    """Parent, children and sibling of node ``i`` (None where absent)."""
    if not 1 <= i <= shape.n_nodes:
        raise IndexError(f"node {i} out of range 1..{shape.n_nodes}")
    parent = i // 2 if i > 1 else None
    sibling = i ^ 1 if i > 1 else None
    if shape.is_leaf(i):
        return NodeRelations(parent, None, None, sibling)
    return NodeRelations(parent, 2 * i, 2 * i + 1, sibling)


def n_variables(h, k):
    shape = TreeShape(h)
    return shape.first_leaf + (shape.first_leaf - 1) * k * k


def leaf_var(h, i):
    return i - 2 ** (h - 1)


def func_var(h, k, i, x, y):
    return 2 ** (h - 1) + (i - 1) * k * k + x * k + y


def _check_k(k):
    if not 2 <= k <= MAX_K:
        raise ValueError(f"k must be in 2..{MAX_K}, got {k}")


@dataclass(frozen=True)
class TepInstance:
    """One instance of FT(h,2,k) or BT(h,2,k).

    ``tables[i - 1]`` is the flat k*k table of internal node i, so
    ``f_i(x, y) == tables[i - 1][x * k + y]``.
    """

    h: int
    k: int
    leaves: tuple
    tables: tuple
    variant: str = "BT"

    def __post_init__(self):
        shape = TreeShape(self.h)
        _check_k(self.k)
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be FT or BT, got {self.variant!r}")
        if len(self.leaves) != shape.first_leaf:
            raise ValueError(f"expected {shape.first_leaf} leaf values, got {len(self.leaves)}")
        if len(self.tables) != shape.first_leaf - 1:
            raise ValueError(f"expected {shape.first_leaf - 1} tables, got {len(self.tables)}")
        k = self.k
        if any(not 0 <= v < k for v in self.leaves):
            raise ValueError("leaf value outside [k]")
        for i, table in enumerate(self.tables, start=1):
            if len(table) != k * k:
                raise ValueError(f"table of node {i} must have {k * k} entries")
            hi = 2 if (i == 1 and self.variant == "BT") else k
            if any(not 0 <= v < hi for v in table):
                raise ValueError(f"table of node {i} has a value outside [{hi}]")

    @property
    def shape(self):
        return TreeShape(self.h)

    def leaf(self, i):
        return self.leaves[i - self.shape.first_leaf]

    def f(self, i, x, y):
        return self.tables[i - 1][x * self.k + y]

    def variable(self, index):
        first = 2 ** (self.h - 1)
        if index < first:
            return self.leaves[index]
        index -= first
        kk = self.k * self.k
        return self.tables[index // kk][index % kk]

    def to_vector(self):
        out = list(self.leaves)
        for table in self.tables:
            out.extend(table)
        return np.asarray(out, dtype=np.int64)

    @classmethod
    def from_vector(cls, h, k, vector, variant="BT"):
        vector = [int(v) for v in vector]
        first = 2 ** (h - 1)
        kk = k * k
        tables = tuple(tuple(vector[first + j * kk:first + (j + 1) * kk]) for j in range(first - 1))
        return cls(h, k, tuple(vector[:first]), tables, variant)


@dataclass(frozen=True)
class NodeValues:
    """Value of every node; ``nv[i]`` is the value of heap node i."""

    values: tuple

    def __getitem__(self, i):
        return self.values[i - 1]

    @property
    def root(self):
        return self.values[0]

    def non_root(self):
        return self.values[1:]


def evaluate(instance):
    n = instance.shape.n_nodes
    vals = [0] * (n + 1)
    first = instance.shape.first_leaf
    for i in range(first, n + 1):
        vals[i] = instance.leaves[i - first]
    for i in range(first - 1, 0, -1):
        vals[i] = instance.f(i, vals[2 * i], vals[2 * i + 1])
    return NodeValues(tuple(vals[1:]))


def evaluate_batch(X, h, k):
    """Node values for every row of the flat instance matrix ``X``.

    Returns an int array of shape (n, 2**h) whose column i holds node i
    (column 0 is unused and left at zero).
    """
    X = np.asarray(X)
    shape = TreeShape(h)
    first = shape.first_leaf
    out = np.zeros((X.shape[0], 2 ** h), dtype=np.int64)
    out[:, first:] = X[:, :first]
    kk = k * k
    for i in range(first - 1, 0, -1):
        col = first + (i - 1) * kk + out[:, 2 * i] * k + out[:, 2 * i + 1]
        out[:, i] = np.take_along_axis(X, col[:, None], axis=1)[:, 0]
    return out


# -- the hard input family E ------------------------------------------------

def hard_input(h, k, values):
    """The member of E whose non-root node values are ``values`` (nodes 2..2**h-1)."""
    shape = TreeShape(h)
    if len(values) != shape.N:
        raise ValueError(f"need {shape.N} values, got {len(values)}")
    v = (None, 1) + tuple(values)  # v[i] is node i; root value is 1
    tables = [(1,) * (k * k)]
    for i in range(2, shape.first_leaf):
        table = [0] * (k * k)
        table[v[2 * i] * k + v[2 * i + 1]] = v[i]
        tables.append(tuple(table))
    leaves = tuple(v[i] for i in shape.leaves)
    return TepInstance(h, k, leaves, tuple(tables), "BT")


def hard_input_values(instance):
    """Inverse of :func:`hard_input`: the non-root node values as a tuple."""
    return evaluate(instance).non_root()


def is_hard_input(instance):
    if instance.variant != "BT":
        return False
    try:
        return instance == hard_input(instance.h, instance.k, hard_input_values(instance))
    except ValueError:
        return False


def iter_hard_tuples(h, k):
    """All N-tuples in lexicographic order (lowest node index most significant)."""
    return itertools.product(range(k), repeat=TreeShape(h).N)


def enumerate_hard_inputs(h, k):
    _check_k(k)
    for values in iter_hard_tuples(h, k):
        yield hard_input(h, k, values)


def hard_tuples_array(h, k, cap=None):
    N = TreeShape(h).N
    total = k ** N
    check_budget("hard input count", total, cap)
    return _mixed_radix(np.arange(total, dtype=np.int64), [k] * N)


def sample_hard_tuples(h, k, n, rng):
    return rng.integers(0, k, size=(n, TreeShape(h).N), dtype=np.int64)


def hard_inputs_matrix(h, k, tuples):
    """Flat instance matrix for the members of E given by rows of ``tuples``."""
    tuples = np.asarray(tuples, dtype=np.int64)
    shape = TreeShape(h)
    n = tuples.shape[0]
    first = shape.first_leaf
    kk = k * k
    X = np.zeros((n, n_variables(h, k)), dtype=np.int64)

    def val(i):
        return tuples[:, i - 2]

    X[:, :first] = tuples[:, first - 2:]
    X[:, first:first + kk] = 1
    rows = np.arange(n)
    for i in range(2, first):
        col = first + (i - 1) * kk + val(2 * i) * k + val(2 * i + 1)
        X[rows, col] = val(i)
    return X


# -- exhaustive instance spaces ----------------------------------------------

def variable_domains(h, k, variant):
    shape = TreeShape(h)
    root_hi = 2 if variant == "BT" else k
    return [k] * shape.first_leaf + [root_hi] * (k * k) + [k] * (k * k * (shape.first_leaf - 2))


def count_instances(h, k, variant):
    total = 1
    for d in variable_domains(h, k, variant):
        total *= d
    return total


def _mixed_radix(indices, radices):
    """Digits of ``indices`` with the first radix most significant."""
    out = np.zeros((len(indices), len(radices)), dtype=np.int64)
    rest = np.array(indices, dtype=np.int64)
    for col in range(len(radices) - 1, -1, -1):
        out[:, col] = rest % radices[col]
        rest //= radices[col]
    return out


def enumerate_all_instances(h, k, variant="BT", cap=None):
    """Every instance of FT/BT(h,2,k) once, lexicographic in the flat variable vector."""
    total = count_instances(h, k, variant)
    check_budget(f"instance count of {variant}({h},2,{k})", total, cap)
    for digits in itertools.product(*[range(d) for d in variable_domains(h, k, variant)]):
        yield TepInstance.from_vector(h, k, digits, variant)


def all_instances_matrix(h, k, variant="BT", cap=None, start=0, stop=None):
    """Rows ``start:stop`` of the exhaustive enumeration, as a flat matrix."""
    total = count_instances(h, k, variant)
    check_budget(f"instance count of {variant}({h},2,{k})", total, cap)
    stop = total if stop is None else min(stop, total)
    return _mixed_radix(np.arange(start, stop, dtype=np.int64), variable_domains(h, k, variant))


def random_instances_matrix(h, k, variant, n, rng):
    highs = np.asarray(variable_domains(h, k, variant))
    return rng.integers(0, highs, size=(n, len(highs)), dtype=np.int64)


# -- serialization -------------------------------------------------------------

def instance_to_dict(instance):
    k = instance.k
    return {
        "h": instance.h,
        "k": k,
        "variant": instance.variant,
        "leaves": list(instance.leaves),
        "tables": {
            str(i): [list(t[r * k:(r + 1) * k]) for r in range(k)]
            for i, t in enumerate(instance.tables, start=1)
        },
    }


def instance_from_dict(data):
    try:
        h, k = int(data["h"]), int(data["k"])
        variant = data.get("variant", "BT")
        first = 2 ** (h - 1)
        tables = []
        for i in range(1, first):
            rows = data["tables"][str(i)]
            if len(rows) != k or any(len(r) != k for r in rows):
                raise ParseError(f"table {i} must be {k}x{k}")
            tables.append(tuple(int(v) for r in rows for v in r))
        return TepInstance(h, k, tuple(int(v) for v in data["leaves"]), tuple(tables), variant)
    except KeyError as exc:
        raise ParseError(f"missing field {exc}") from None
    except (TypeError, ValueError) as exc:
        raise ParseError(str(exc)) from None


def dumps_instance(instance):
    return json.dumps(instance_to_dict(instance), sort_keys=True)


def loads_instance(text):
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"line {exc.lineno} col {exc.colno}: {exc.msg}") from None
    return instance_from_dict(data)
