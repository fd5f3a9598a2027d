from __future__ import annotations

import numpy as np
import pytest

from conftest import cached_matrix
from sawbound.exceptions import NotPrimitiveError
from sawbound.spectral import (
    bool_power,
    dominant_eigenvalue,
    is_primitive,
    lambda_at,
    lambda_many,
    mu_upper_bound,
    mu_upper_bound_many,
    structure_matrix,
)


def wielandt(t):
    """Primitive pattern whose exponent is exactly t^2 - 2t + 2."""
    b = np.zeros((t, t), dtype=bool)
    for i in range(t - 1):
        b[i, i + 1] = True
    b[t - 1, 0] = b[t - 1, 1] = True
    return b


def exponent(b):
    k, p = 1, b.copy()
    while not p.all():
        p = (p.astype(int) @ b.astype(int)) > 0
        k += 1
        if k > 100:
            return None
    return k


@pytest.mark.parametrize("t", [2, 3, 4, 6])
def test_wielandt_exponent_is_tight(t):
    b = wielandt(t)
    assert exponent(b) == t * t - 2 * t + 2
    assert is_primitive(b)
    assert not bool_power(b, t * t - 2 * t + 1).all()


def test_imprimitive_patterns():
    assert not is_primitive(np.array([[0, 1], [1, 0]], dtype=bool))
    assert not is_primitive(np.array([[1, 0], [0, 1]], dtype=bool))
    cycle = np.roll(np.eye(4, dtype=bool), 1, axis=1)
    assert not is_primitive(cycle)
    with pytest.raises(ValueError):
        is_primitive(np.ones((2, 3), dtype=bool))


def test_bool_power_matches_integer_power():
    rng = np.random.default_rng(0)
    for _ in range(20):
        b = rng.random((5, 5)) < 0.3
        k = int(rng.integers(0, 9))
        want = np.linalg.matrix_power(b.astype(np.int64), k) > 0
        assert np.array_equal(bool_power(b, k), want)


def test_enclosure_contains_dense_eigenvalue():
    rng = np.random.default_rng(1)
    for _ in range(50):
        t = int(rng.integers(1, 8))
        M = rng.random((t, t)) + 0.01
        true = max(abs(np.linalg.eigvals(M)))
        b = dominant_eigenvalue(M)
        assert b.lower <= b.value <= b.upper
        assert b.contains(true, slack=1e-12 * true)
        assert b.width <= 1e-12 * b.value * 1.01


def test_sparse_primitive_matrix_converges():
    M = wielandt(5).astype(float) * 0.7
    b = dominant_eigenvalue(M)
    assert b.contains(max(abs(np.linalg.eigvals(M))), slack=1e-12)


def test_rejects_negative_entries():
    with pytest.raises(ValueError):
        dominant_eigenvalue(np.array([[1.0, -1.0], [1.0, 1.0]]))
    with pytest.raises(ValueError):
        dominant_eigenvalue(np.ones((2, 2)), tol=0)


def test_mu_upper_bound_matches_dense_root():
    g = cached_matrix("square", "general", "saw", 1, 4)
    for z in [(1.0, 1.0), (0.3, 0.8)]:
        dense = max(abs(np.linalg.eigvals(g.evaluate(z)))) ** (1 / 3)
        b = mu_upper_bound(g, z)
        assert b.contains(dense, slack=1e-13)
    assert mu_upper_bound(g, (1.0, 1.0)).upper < 3.0


def test_batch_matches_single():
    g = cached_matrix("triangular", "xz", "saw", 1, 3)
    Z = np.array([[0.2, 0.9], [1.0, 1.0], [0.5, 0.01]])
    many = mu_upper_bound_many(g, Z)
    for z, b in zip(Z, many):
        single = mu_upper_bound(g, z)
        assert single.lower <= b.value <= single.upper
    assert [x.value for x in lambda_many(g, Z)] == pytest.approx([lambda_at(g, z).value for z in Z], rel=1e-12)


def test_bound_is_monotone_in_weights():
    g = cached_matrix("cubic", "xy-equal", "sat", 1, 3)
    lo = mu_upper_bound(g, (0.3, 0.4))
    hi = mu_upper_bound(g, (0.35, 0.4))
    assert lo.upper < hi.lower


def test_not_primitive_raises():
    # hexagonal with m = 0 alternates between the two vertex classes
    g = cached_matrix("hexagonal", "general", "saw", 0, 1)
    assert not is_primitive(structure_matrix(g))
    with pytest.raises(NotPrimitiveError):
        mu_upper_bound(g, (1.0, 1.0, 1.0))


@pytest.mark.parametrize("z", [(1.0, 0.0), (1.0, -0.5), (1.0, float("nan")), (1.0,)])
def test_weight_validation(z):
    with pytest.raises(ValueError):
        mu_upper_bound(cached_matrix("square", "general", "saw", 1, 2), z)
