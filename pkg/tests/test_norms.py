import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fraudadv.norms import NormWeights, custom_norm, l2, linf, parse_gamma, weight_vector


def w1(h, v, a=0.5, b=0.5):
    return float(weight_vector(NormWeights(np.array([h], float), np.array([v], float), a, b))[0])


def test_corner_weights():
    assert w1(1, 1) == 1.0
    assert w1(0, 1, 0.3, 0.9) == 0.0
    assert w1(0, 0, 0.2, 0.7) == 0.7
    assert w1(1, 0, 0.2, 0.7) == 0.2


def test_custom_norm_hand_value():
    w = NormWeights(np.array([1.0, 0.0]), np.array([1.0, 1.0]))
    assert custom_norm(np.array([1.0, 1.0]), w) == pytest.approx(1.0)
    assert custom_norm(np.zeros(2), w) == 0.0


def test_reduces_to_plain_norm():
    p = np.array([3.0, -4.0, 1.0])
    w = NormWeights(np.zeros(3), np.zeros(3), alpha=0.3, beta=1.0)
    assert custom_norm(p, w) == pytest.approx(l2(p))
    w = NormWeights(np.zeros(3), np.zeros(3), alpha=0.3, beta=1.0, gamma=math.inf)
    assert custom_norm(p, w) == pytest.approx(linf(p))


def test_plain_norms():
    assert l2(np.array([3.0, 4.0])) == 5.0
    assert linf(np.array([3.0, -4.0])) == 4.0
    assert l2(np.zeros(3)) == 0.0 and linf(np.zeros(3)) == 0.0
    assert linf(np.zeros(0)) == 0.0


def test_zero_weight_seminorm():
    w = NormWeights(np.array([0.0, 1.0]), np.array([1.0, 0.0]), 0.5, 0.5)
    assert custom_norm(np.array([7.0, 0.0]), w) == 0.0


def test_validation():
    with pytest.raises(ValueError):
        NormWeights(np.zeros(2), np.zeros(3))
    with pytest.raises(ValueError):
        NormWeights(np.zeros(2), np.zeros(2), alpha=1.5)
    with pytest.raises(ValueError):
        NormWeights(np.zeros(2), np.array([0.0, 2.0]))
    with pytest.raises(ValueError):
        NormWeights(np.zeros(2), np.zeros(2), gamma=3.0)
    with pytest.raises(ValueError):
        custom_norm(np.zeros(3), NormWeights(np.zeros(2), np.zeros(2)))


def test_parse_gamma():
    assert parse_gamma("2") == 2.0
    assert math.isinf(parse_gamma("inf"))
    with pytest.raises(ValueError):
        parse_gamma("1")


def test_homogeneity_and_triangle_random_pairs():
    rng = np.random.default_rng(0)
    m, n = 12, 10_000
    w = NormWeights(rng.integers(0, 2, m).astype(float), rng.uniform(size=m),
                    float(rng.uniform()), float(rng.uniform()))
    P = rng.normal(size=(n, m)) * rng.choice([1e-3, 1.0, 1e3], size=(n, 1))
    Q = rng.normal(size=(n, m))
    c = rng.normal(size=n) * 10
    nP, nQ = custom_norm(P, w), custom_norm(Q, w)
    assert np.max(np.abs(custom_norm(c[:, None] * P, w) - np.abs(c) * nP) / (1 + nP * np.abs(c))) <= 1e-9
    assert np.all(custom_norm(P + Q, w) <= nP + nQ + 1e-9 * (1 + nP + nQ))


@settings(max_examples=200, deadline=None)
@given(st.floats(0, 1), st.floats(0, 1), st.floats(0, 1))
def test_four_quadrant_ordering(a, v_hi, v_lo):
    v_hi, v_lo = max(v_hi, v_lo), min(v_hi, v_lo)
    ci, cu = w1(1, v_hi, a, a), w1(1, v_lo, a, a)
    ui, uu = w1(0, v_hi, a, a), w1(0, v_lo, a, a)
    assert ci >= cu >= uu >= ui
    assert w1(1, 1, a, a) >= w1(0, 0, a, a) >= w1(0, 1, a, a)
