"""scikit-learn wrapper around the strategy → branching program pipeline.

Nothing is learned: ``fit`` builds a pebbling strategy for the tree height,
compiles it and, if labels are given, checks the compiled program against
them.  ``predict`` then runs the program on rows of instance vectors.
"""
import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_is_fitted

from .bp import accepts_batch, size
from .compile import compile_black_to_dtbp, compile_fractional_to_bintbp, compile_wbw_to_ntbp
from .exceptions import CompileError
from .pebbling import (generate_black_strategy, generate_fractional_strategy, generate_ro_wbw_strategy,
                       validate_sequence)
from .tree import n_variables

STRATEGIES = ("black", "wbw", "fractional")


class PebblingBPClassifier(ClassifierMixin, BaseEstimator):
    """Decides BT instances with a branching program compiled from a pebbling.

    Parameters
    ----------
    h, k : tree height and alphabet size.
    strategy : "black" (deterministic), "wbw" (read-once nondeterministic) or
        "fractional" (bitwise independent, k a power of two).
    denominator : fractional granularity, 1 or 2; by default 2 when k has at
        least two bits, else 1.
    check_labels : when fitting with y, raise if the program disagrees with it.
    """

    def __init__(self, h=3, k=2, strategy="wbw", denominator=None, check_labels=True):
        self.h = h
        self.k = k
        self.strategy = strategy
        self.denominator = denominator
        self.check_labels = check_labels

    def _compile(self):
        if self.strategy == "black":
            seq = generate_black_strategy(self.h)
            return seq, compile_black_to_dtbp(seq, self.k)
        if self.strategy == "wbw":
            seq = generate_ro_wbw_strategy(self.h)
            return seq, compile_wbw_to_ntbp(seq, self.k)
        if self.strategy == "fractional":
            d = self.denominator or (2 if self.k >= 4 else 1)
            seq = generate_fractional_strategy(self.h, d)
            return seq, compile_fractional_to_bintbp(seq, self.k)
        raise ValueError(f"strategy must be one of {STRATEGIES}, got {self.strategy!r}")

    def _check_X(self, X):
        X = np.asarray(X, dtype=np.int64)
        width = n_variables(self.h, self.k)
        if X.ndim != 2 or X.shape[1] != width:
            raise ValueError(f"expected rows of {width} variables for h={self.h}, k={self.k}")
        return X

    def fit(self, X=None, y=None):
        self.strategy_, self.bp_ = self._compile()
        self.peak_ = validate_sequence(self.strategy_)
        self.size_ = size(self.bp_)
        self.classes_ = np.array([0, 1])
        self.n_features_in_ = n_variables(self.h, self.k)
        if X is not None and y is not None and self.check_labels:
            wrong = np.flatnonzero(self.predict(X) != np.asarray(y))
            if wrong.size:
                raise CompileError(f"compiled program disagrees with {wrong.size} labels, first at row {wrong[0]}")
        return self

    def predict(self, X):
        check_is_fitted(self, "bp_")
        return accepts_batch(self.bp_, self._check_X(X)).astype(np.int64)
