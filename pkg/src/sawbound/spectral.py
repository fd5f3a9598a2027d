"""Primitivity certification and enclosures of the Perron eigenvalue."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .exceptions import ConvergenceError, NotPrimitiveError
from .gmatrix import GMatrix

EPS = float(np.finfo(float).eps)
# Relative rounding allowance per floating-point operation on a path,
# counted in units of machine epsilon (two units of roundoff).
ULPS_PER_OP = 1.0
DEFAULT_TOL = 1e-12
DEFAULT_MAX_ITER = 10**6


@dataclass(frozen=True)
class CertifiedBound:
    value: float
    lower: float
    upper: float
    iterations: int
    tolerance: float

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def contains(self, x: float, slack: float = 0.0) -> bool:
        return self.lower - slack <= x <= self.upper + slack

    def __str__(self) -> str:
        return f"{self.value:.15g} [{self.lower:.17g}, {self.upper:.17g}]"


def structure_matrix(g: GMatrix) -> np.ndarray:
    """Boolean nonzero pattern; valid for every positive weight vector."""
    return np.array([[bool(p) for p in row] for row in g.entries], dtype=bool).reshape(g.t, g.t)


def _bool_matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return (a.astype(np.int64) @ b.astype(np.int64)) > 0


def bool_power(b: np.ndarray, k: int) -> np.ndarray:
    b = np.asarray(b, dtype=bool)
    result = np.eye(b.shape[0], dtype=bool)
    base = b.copy()
    while k:
        if k & 1:
            result = _bool_matmul(result, base)
        k >>= 1
        if k:
            base = _bool_matmul(base, base)
    return result


def is_primitive(b: np.ndarray) -> bool:
    """True iff the pattern's (t^2 - 2t + 2)-th boolean power is all true."""
    b = np.asarray(b, dtype=bool)
    if b.ndim != 2 or b.shape[0] != b.shape[1] or b.shape[0] == 0:
        raise ValueError("expected a nonempty square boolean matrix")
    t = b.shape[0]
    return bool(bool_power(b, t * t - 2 * t + 2).all())


def _collatz_batch(
    M: np.ndarray,
    tol: float,
    max_iter: int,
    extra_rel_error: float,
    start: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized power iteration with Collatz-Wielandt brackets.

    M has shape (N, t, t).  Returns inflated (lower, upper, iterations) of
    length N.  Raises ConvergenceError listing the first failing index.
    """
    N, t, _ = M.shape
    v = np.ones((N, t)) if start is None else np.array(start, dtype=float)
    inflate = (ULPS_PER_OP * (t + 1)) * EPS + extra_rel_error
    lower = np.zeros(N)
    upper = np.full(N, np.inf)
    iters = np.zeros(N, dtype=np.int64)
    active = np.arange(N)
    for it in range(1, max_iter + 1):
        w = np.einsum("nij,nj->ni", M[active], v[active])
        if np.any(w <= 0):
            bad = active[np.any(w <= 0, axis=1)][0]
            raise ConvergenceError(
                f"power iterate has a zero component at point {bad}: matrix is reducible"
            )
        ratios = w / v[active]
        lo = ratios.min(axis=1) * (1 - inflate)
        hi = ratios.max(axis=1) * (1 + inflate)
        lower[active] = np.maximum(lower[active], lo)
        upper[active] = np.minimum(upper[active], hi)
        iters[active] = it
        v[active] = w / w.max(axis=1, keepdims=True)
        mid = np.sqrt(lower[active] * upper[active])
        done = (upper[active] - lower[active]) <= tol * mid
        active = active[~done]
        if active.size == 0:
            return lower, upper, iters
    raise ConvergenceError(f"no convergence within {max_iter} iterations at point {active[0]}")


def _certify_batch(
    M: np.ndarray, tol: float, max_iter: int, extra_rel_error: float
) -> list[CertifiedBound]:
    M = np.asarray(M, dtype=float)
    if M.ndim == 2:
        M = M[None]
    if np.any(M < 0) or not np.all(np.isfinite(M)):
        raise ValueError("matrix must be finite and nonnegative")
    if tol <= 0:
        raise ValueError("tol must be positive")
    try:
        lower, upper, iters = _collatz_batch(M, tol, max_iter, extra_rel_error)
    except ConvergenceError:
        # one retry from a perturbed start vector
        rng = np.random.default_rng(0)
        start = 1.0 + 0.5 * rng.random((M.shape[0], M.shape[1]))
        lower, upper, iters = _collatz_batch(M, tol, max_iter, extra_rel_error, start)
    return [
        CertifiedBound(float(np.sqrt(lo * hi)), float(lo), float(hi), int(k), tol)
        for lo, hi, k in zip(lower, upper, iters)
    ]


def dominant_eigenvalue(
    M: np.ndarray,
    tol: float = DEFAULT_TOL,
    *,
    max_iter: int = DEFAULT_MAX_ITER,
    entry_rel_error: float = 0.0,
) -> CertifiedBound:
    """Certified enclosure of the Perron eigenvalue of an irreducible nonnegative matrix.

    For any positive vector v, min_i (Mv)_i / v_i <= lambda <= max_i (Mv)_i / v_i.
    The bracket is widened by a rounding allowance covering the
    matrix-vector product, the division and ``entry_rel_error`` (relative
    error already present in the entries of M).
    """
    return _certify_batch(M, tol, max_iter, entry_rel_error)[0]


def entry_rel_error(g: GMatrix) -> float:
    """Relative evaluation error allowance for the numeric entries of g."""
    # each term: d powers (+1 ulp each, pow is correctly rounded to ~1 ulp),
    # d multiplications and the coefficient product; then summing the terms.
    return ULPS_PER_OP * (3 * g.d + 1 + g.max_terms) * EPS


def require_primitive(g: GMatrix) -> None:
    if not is_primitive(structure_matrix(g)):
        raise NotPrimitiveError(
            f"the ({g.m},{g.n}) {g.mode.value} matrix for {g.lattice_name}/{g.scheme} is not "
            "primitive; no bound can be certified"
        )


def _check_weights(g: GMatrix, Z: np.ndarray) -> np.ndarray:
    Z = np.asarray(Z, dtype=float)
    if Z.ndim == 1:
        Z = Z[None]
    if Z.shape[1] != g.d:
        raise ValueError(f"weight vectors must have {g.d} entries ({', '.join(g.labels)})")
    if not np.all(np.isfinite(Z)) or np.any(Z <= 0):
        raise ValueError("weights must be finite and strictly positive")
    return Z


def lambda_many(
    g: GMatrix, Z: np.ndarray, tol: float = DEFAULT_TOL, *, max_iter: int = DEFAULT_MAX_ITER
) -> list[CertifiedBound]:
    """Certified Perron eigenvalue of g at each row of Z (primitivity not rechecked)."""
    Z = _check_weights(g, Z)
    return _certify_batch(g.evaluate_many(Z), tol, max_iter, entry_rel_error(g))


def lambda_at(g: GMatrix, z: Sequence[float], tol: float = DEFAULT_TOL) -> CertifiedBound:
    return lambda_many(g, np.asarray(z, dtype=float)[None], tol)[0]


def _root_outward(b: CertifiedBound, k: int) -> CertifiedBound:
    if k == 1:
        return b
    lo = np.nextafter(b.lower ** (1.0 / k), 0.0)
    hi = np.nextafter(b.upper ** (1.0 / k), np.inf)
    return CertifiedBound(float(b.value ** (1.0 / k)), float(lo), float(hi), b.iterations, b.tolerance)


def mu_upper_bound(g: GMatrix, z: Sequence[float], tol: float = DEFAULT_TOL) -> CertifiedBound:
    """Enclosure of lambda_1(G(z))^(1/(n-m)), an upper bound on the weighted connective constant."""
    require_primitive(g)
    return _root_outward(lambda_at(g, z, tol), g.block)


def mu_upper_bound_many(g: GMatrix, Z: np.ndarray, tol: float = DEFAULT_TOL) -> list[CertifiedBound]:
    require_primitive(g)
    return [_root_outward(b, g.block) for b in lambda_many(g, Z, tol)]
