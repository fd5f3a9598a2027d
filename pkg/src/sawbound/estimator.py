"""Estimator-style wrapper around a transfer matrix.

``fit`` builds (or loads) the symbolic matrix and certifies primitivity;
``predict`` maps rows of edge-class weights to certified upper bounds.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .gmatrix import DEFAULT_MAX_EXTENSIONS, GMatrix, build_gmatrix, load_gmatrix
from .lattice import builtin_lattice
from .spectral import DEFAULT_TOL, is_primitive, lambda_many, mu_upper_bound_many, structure_matrix
from .exceptions import NotPrimitiveError
from .scan import domain_contains


def check_weights(X, n_features: int | None = None) -> np.ndarray:
    """Validate a 2-d array of strictly positive, finite weight rows."""
    X = check_array(X, dtype=np.float64, ensure_2d=True)
    if n_features is not None and X.shape[1] != n_features:
        raise ValueError(f"X has {X.shape[1]} columns; expected {n_features}")
    if np.any(X <= 0):
        raise ValueError("weights must be strictly positive")
    return X


class ConnectiveConstantBound(BaseEstimator):
    """Certified upper bound on the weighted connective constant.

    Parameters
    ----------
    lattice, scheme : builtin lattice name and weighting scheme.
    mode : "saw" or "sat".
    m, n : prefix and walk lengths, 0 <= m < n.
    tol : relative width target for the eigenvalue enclosure.
    max_extensions : search budget for the matrix build.
    matrix_path : load a saved matrix instead of building one.
    """

    def __init__(
        self,
        lattice: str = "square",
        scheme: str = "general",
        mode: str = "saw",
        m: int = 1,
        n: int = 2,
        tol: float = DEFAULT_TOL,
        max_extensions: int = DEFAULT_MAX_EXTENSIONS,
        matrix_path: str | None = None,
    ):
        self.lattice = lattice
        self.scheme = scheme
        self.mode = mode
        self.m = m
        self.n = n
        self.tol = tol
        self.max_extensions = max_extensions
        self.matrix_path = matrix_path

    def fit(self, X=None, y=None):
        if self.matrix_path is not None:
            g = load_gmatrix(self.matrix_path)
        else:
            g = build_gmatrix(
                builtin_lattice(self.lattice, self.scheme),
                self.m,
                self.n,
                self.mode,
                max_extensions=self.max_extensions,
            )
        if not is_primitive(structure_matrix(g)):
            raise NotPrimitiveError(f"transfer matrix for ({g.m},{g.n}) is not primitive")
        self.gmatrix_: GMatrix = g
        self.primitive_ = True
        self.n_features_in_ = g.d
        self.feature_names_in_ = np.array(g.labels, dtype=object)
        if X is not None:
            check_weights(X, g.d)
        return self

    def predict(self, X) -> np.ndarray:
        """Certified value of the bound for each row of X."""
        return np.array([b.value for b in self._bounds(X)])

    def predict_bracket(self, X) -> np.ndarray:
        """(lower, upper) enclosure of the bound for each row of X."""
        return np.array([(b.lower, b.upper) for b in self._bounds(X)]).reshape(-1, 2)

    def transform(self, X) -> np.ndarray:
        """Certified Perron eigenvalue of the transfer matrix for each row of X."""
        check_is_fitted(self, "gmatrix_")
        X = check_weights(X, self.n_features_in_)
        return np.array([b.value for b in lambda_many(self.gmatrix_, X, self.tol)])

    def domain_membership(self, X) -> list[bool | None]:
        """True/False/None (undecided) membership in the certified convergence region."""
        check_is_fitted(self, "gmatrix_")
        X = check_array(X, dtype=np.float64, ensure_2d=True)
        return [domain_contains(self.gmatrix_, row, self.tol) for row in X]

    def _bounds(self, X):
        check_is_fitted(self, "gmatrix_")
        X = check_weights(X, self.n_features_in_)
        return mu_upper_bound_many(self.gmatrix_, X, self.tol)
