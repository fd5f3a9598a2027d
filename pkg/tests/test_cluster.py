from __future__ import annotations

import math

import numpy as np
import pytest

from conftest import cached_matrix
from oracles import evaluate, naive_sat_histograms, restrict, square_neighbors
from sawbound.cluster import (
    CIRCUIT_MIN_COUNTS,
    KPInstance,
    anchored_sat_bound,
    exact_partial_polys,
    find_epsilon0,
    format_certificate,
    kp_check,
    save_certificate,
)
from sawbound.exceptions import HypothesisError
from sawbound.poly import Poly


@pytest.fixture(scope="module")
def g():
    return cached_matrix("square", "general", "sat", 1, 2)


@pytest.fixture(scope="module")
def long_hist():
    return naive_sat_histograms(square_neighbors, (0, 0), 11, 2)


def test_exact_partial_matches_oracle():
    hist = naive_sat_histograms(square_neighbors, (0, 0), 8, 2)
    assert exact_partial_polys(8) == [Poly(2, h) for h in hist]
    assert exact_partial_polys(8, CIRCUIT_MIN_COUNTS) == [Poly(2, h) for h in restrict(hist, (2, 2))]


@pytest.mark.parametrize("z", [(0.1, 0.1), (0.05, 0.25), (0.2, 0.15)])
def test_anchored_bound_dominates_longer_partial_sums(g, long_hist, z):
    b = anchored_sat_bound(g, z, L=5)
    assert b.converged
    truth = sum(evaluate(h, z) for h in long_hist[1:])
    assert truth <= b.total
    assert b.exact_partial <= b.total
    restricted = anchored_sat_bound(g, z, L=5, min_counts=(2, 2))
    rtruth = sum(evaluate(h, z) for h in restrict(long_hist, (2, 2))[1:])
    assert rtruth <= restricted.total < b.total


def test_scale_point_keeps_rigour(g, long_hist):
    z = (0.02, 0.4)
    b = anchored_sat_bound(g, z, L=6, min_counts=(2, 2), scale_point=(0.1, 0.4))
    rtruth = sum(evaluate(h, z) for h in restrict(long_hist, (2, 2))[1:])
    assert rtruth <= b.total
    with pytest.raises(ValueError):
        anchored_sat_bound(g, z, L=6, scale_point=(0.01, 0.4))


def test_tail_shrinks_with_L(g):
    z = (0.1, 0.2)
    tails = [anchored_sat_bound(g, z, L=L).tail_bound for L in (4, 6, 8)]
    assert tails[0] > tails[1] > tails[2]


def test_hypothesis_errors(g):
    with pytest.raises(HypothesisError):
        anchored_sat_bound(g, (0.4, 0.4))
    with pytest.raises(ValueError):
        anchored_sat_bound(cached_matrix("square", "general", "saw", 1, 2), (0.1, 0.1))
    with pytest.raises(ValueError):
        anchored_sat_bound(g, (0.1, 0.1), L=1)
    with pytest.raises(ValueError):
        KPInstance(0.1, 0.1, 0.0)


def test_kp_check_small_epsilon(g):
    res = kp_check(KPInstance(0.01, 0.5, 0.1), g)
    assert res.verdict is True
    cert = res.certificate
    assert cert["total"] <= 0.1
    assert cert["total"] == pytest.approx(cert["exact_partial"] + cert["tail_bound"], rel=1e-12)
    assert cert["z"] == pytest.approx((0.01 * math.exp(0.1), 0.5 * math.exp(0.1)))


def test_kp_check_fails_or_undecided(g):
    assert kp_check(KPInstance(0.5, 0.99, 0.1), g).verdict is None
    assert kp_check(KPInstance(0.1, 0.4, 0.1), g).verdict is False
    full = kp_check(KPInstance(0.01, 0.5, 0.1), g, circuits_only=False)
    # the unrestricted trail sum includes single edges, so it exceeds kpT
    assert full.verdict is False


def test_find_epsilon0(g, tmp_path):
    res = find_epsilon0([0.5], 0.1, g, iterations=12)
    assert 0 < res.epsilon0 < 1
    assert kp_check(KPInstance(res.epsilon0, 0.5, 0.1), g).verdict is True
    assert any(v is not True for _, v in res.checked)
    save_certificate(res.certificate, tmp_path / "cert.txt")
    text = (tmp_path / "cert.txt").read_text()
    assert text == format_certificate(res.certificate)
    assert "verdict: True" in text


def test_find_epsilon0_hypotheses(g):
    with pytest.raises(HypothesisError):
        find_epsilon0([1.0], 0.1, g)
    with pytest.raises(HypothesisError):
        find_epsilon0([0.95], 0.1, g)


def test_find_epsilon0_with_linear_f(g):
    res = find_epsilon0([0.3, 1.0], 0.1, g, iterations=10)
    assert res.epsilon0 > 0
    for eps in (res.epsilon0, -res.epsilon0):
        assert kp_check(KPInstance(eps, 0.3 + eps, 0.1), g).verdict is True


def test_find_epsilon0_zero_f_exceeds_horizontal_point(g):
    # with alpha = 0 the horizontal-only trail sum 2u/(1-u), u = eps e^kpT,
    # reaches kpT at u = kpT / (2 + kpT); circuits need vertical edges, so
    # the certified epsilon0 is at least that point
    res = find_epsilon0([0.0], 0.1, g, iterations=15)
    assert res.epsilon0 >= (0.1 / 2.1) / math.exp(0.1)


def test_total_increases_with_kpT(g):
    totals = []
    for kpT in (0.05, 0.1, 0.2):
        cert = kp_check(KPInstance(0.01, 0.3, kpT), g).certificate
        totals.append(cert["total"])
    assert totals == sorted(totals)
