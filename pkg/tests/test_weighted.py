import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dwelljsr import _backend
from dwelljsr.weighted import (
    BisectionError, BudgetExceededError, Stability, WeightedProduct, WeightedSystem, canonical_word,
    classify, dilate, gripenberg, precondition, rho_k_exact, sandwich, wjsr_bisection, wjsr_bisection_bracket,
)

from conftest import A1, A2, RHO_EX1_W11, RHO_EX1_W12, example1
from oracles import brute_closed_max, brute_rho_k, random_system


def rotations(word):
    return {word[i:] + word[:i] for i in range(len(word))}


def test_system_validation():
    with pytest.raises(ValueError):
        WeightedSystem((A1,), (0.0,))
    with pytest.raises(ValueError):
        WeightedSystem((A1, np.eye(3)), (1, 1))
    with pytest.raises(ValueError):
        WeightedSystem((A1,), (1, 2))
    with pytest.raises(ValueError):
        WeightedSystem((), ())


def test_product_order_and_label():
    s = example1()
    p = WeightedProduct.of(s, (1, 0, 0))
    np.testing.assert_allclose(p.matrix, A1 @ A1 @ A2)
    assert p.weight == 4
    assert p.label(s) == "112"


def test_dilate():
    s = example1()
    same = dilate(s, 1.0)
    for a, b in zip(same.matrices, s.matrices):
        np.testing.assert_array_equal(a, b)
    n = dilate(s, 1 / RHO_EX1_W12)
    assert WeightedProduct.of(n, (1, 0, 0)).normalized_radius() == pytest.approx(1.0, abs=1e-9)
    ab = dilate(dilate(s, 0.7), 1.3)
    for x, y in zip(ab.matrices, dilate(s, 0.7 * 1.3).matrices):
        np.testing.assert_allclose(x, y, rtol=1e-14)
    with pytest.raises(ValueError):
        dilate(s, 0.0)


def test_rho_k_exact_k1():
    s = WeightedSystem.unit((A1, A2))
    assert rho_k_exact(s, 1)[0] == pytest.approx(max(np.linalg.norm(A1, 2), np.linalg.norm(A2, 2)))


def test_rho_k_exact_example1_trend():
    s = example1((1, 1))
    vals = [rho_k_exact(s, k)[0] for k in (2, 4, 8, 12)]
    assert vals[0] >= RHO_EX1_W11 - 1e-12
    assert all(v >= RHO_EX1_W11 - 1e-12 for v in vals)
    assert vals[-1] < vals[0]


@pytest.mark.parametrize("weights,limit", [((1, 1), 3.0), ((2, 1), 2.0)])
def test_rho_k_exact_commuting_trend(weights, limit):
    s = WeightedSystem((np.array([[3.0, 1.0], [0.0, 3.0]]), 2 * np.eye(2)), weights)
    vals = [rho_k_exact(s, k)[0] for k in range(1, 13)]
    assert all(v >= limit - 1e-12 for v in vals)
    assert all(b <= a + 1e-12 for a, b in zip(vals, vals[1:]))


def test_rho_k_budget():
    with pytest.raises(BudgetExceededError):
        rho_k_exact(example1(), 20, budget=1000)


@given(st.integers(0, 10**6), st.integers(1, 5))
def test_rho_k_matches_brute_force(seed, k):
    rng = np.random.default_rng(seed)
    mats, w = random_system(rng, m=int(rng.integers(1, 4)))
    s = WeightedSystem(mats, w)
    val, word = rho_k_exact(s, k)
    assert val == pytest.approx(brute_rho_k(mats, w, k), rel=1e-10)
    assert WeightedProduct.of(s, word).normalized_norm() == pytest.approx(val, rel=1e-10)


def test_gripenberg_single_matrix():
    A = np.array([[0.5, 2.0], [0.0, 0.9]])
    b = gripenberg(WeightedSystem((A,), (1.5,)), eps=1e-6)
    assert b.converged
    r = 0.9 ** (1 / 1.5)
    assert b.lower == pytest.approx(r, abs=1e-12)
    assert b.lower <= r + 1e-12 <= b.upper + 1e-12
    assert b.upper - b.lower <= 1e-6 + 1e-12


def test_gripenberg_example1():
    b = gripenberg(example1(), eps=1e-6)
    assert b.lower >= RHO_EX1_W12 - 1e-6
    assert b.lower <= RHO_EX1_W12 + 1e-12 <= b.upper
    assert (1, 0, 0) in rotations(b.witness) or (0, 0, 1) in rotations(b.witness)
    assert sorted(b.witness) == [0, 0, 1]


@given(st.integers(0, 10**6))
def test_gripenberg_lower_dominates_closed_products(seed):
    rng = np.random.default_rng(seed)
    mats, w = random_system(rng, d=2)
    b = gripenberg(WeightedSystem(mats, w), eps=1e-3, budget=20_000)
    oracle = brute_closed_max(mats, w, 5)
    # the oracle value is a lower bound on rho, so it must sit below the upper end
    assert oracle <= b.upper + 1e-12
    assert b.lower <= b.upper


@given(st.integers(0, 10**6))
def test_gripenberg_upper_dominates_rho_k(seed):
    rng = np.random.default_rng(seed)
    mats, w = random_system(rng, d=2)
    s = WeightedSystem(mats, w)
    b = gripenberg(s, eps=1e-3, budget=20_000)
    # rho <= rho_k for every k, and rho <= upper; lower <= rho
    assert b.lower <= min(rho_k_exact(s, k)[0] for k in range(1, 7)) + 1e-12


def test_precondition_ignores_dilation():
    mats, w = random_system(np.random.default_rng(5), d=3)
    d = dilate(WeightedSystem(mats, w), 2.0)
    np.testing.assert_array_equal(precondition(mats, w), precondition(d.matrices, d.weights))


def test_precondition_normalises_rotation():
    R = 1.5 * np.array([[math.cos(0.4), -math.sin(0.4)], [math.sin(0.4), math.cos(0.4)]])
    S = np.array([[1.0, 3.0], [0.0, 1.0]])
    A = S @ R @ np.linalg.inv(S)
    T = precondition([A], [1.0])
    assert np.linalg.norm(np.linalg.inv(T) @ A @ T, 2) == pytest.approx(1.5, rel=1e-6)


@settings(max_examples=20)
@given(st.integers(0, 10**6), st.sampled_from([0.5, 2.0]))
def test_bracket_homogeneity(seed, lam):
    mats, w = random_system(np.random.default_rng(seed))
    s = WeightedSystem(mats, w)
    eps = 1e-6
    b0 = gripenberg(s, eps, budget=20_000)
    b1 = gripenberg(dilate(s, lam), eps, budget=20_000)
    assert abs(b1.lower - lam * b0.lower) <= 2 * eps
    assert abs(b1.upper - lam * b0.upper) <= 2 * eps


def test_gripenberg_budget_flag():
    b = gripenberg(example1((1, 1)), eps=1e-12, budget=50)
    assert not b.converged
    assert b.lower <= RHO_EX1_W11 + 1e-12 <= b.upper


def test_gripenberg_is_deterministic():
    a = gripenberg(example1(), eps=1e-5)
    b = gripenberg(example1(), eps=1e-5)
    assert (a.lower, a.upper, a.witness, a.nodes) == (b.lower, b.upper, b.witness, b.nodes)


def test_canonical_word():
    assert canonical_word((1, 0, 0)) == (0, 0, 1)
    assert canonical_word((0, 1, 0, 1)) == (0, 1)
    assert canonical_word(()) == ()


def test_classify_examples():
    assert classify(WeightedSystem.unit((0.5 * np.eye(2),))) is Stability.STABLE_STRICT
    assert classify(WeightedSystem.unit((2 * np.eye(2),))) is Stability.UNSTABLE
    R = np.array([[math.cos(1), -math.sin(1)], [math.sin(1), math.cos(1)]])
    assert classify(WeightedSystem.unit((R,))) is Stability.MARGINAL


@settings(max_examples=40)
@given(st.integers(0, 10**6))
def test_classification_ignores_weights(seed):
    rng = np.random.default_rng(seed)
    mats, w = random_system(rng, d=2)
    # keep the family away from the marginal case
    scale = rng.choice([0.5, 2.0]) / max(max(abs(np.linalg.eigvals(A))) for A in mats)
    mats = tuple(scale * A for A in mats)
    c1 = classify(WeightedSystem(mats, w), eps=1e-3, budget=20_000)
    c2 = classify(WeightedSystem(mats, tuple(rng.uniform(0.1, 5, len(mats)))), eps=1e-3, budget=20_000)
    assert c1 is c2


def test_sandwich():
    lo, hi = sandwich(4.0, (1.0, 2.0))
    assert (lo, hi) == (2.0, 4.0)
    lo, hi = sandwich(0.25, (1.0, 2.0))
    assert (lo, hi) == (0.25, 0.5)
    assert sandwich(0.0, (1.0,)) == (0.0, 0.0)


def test_bisection_single_matrix():
    A = np.array([[0.5, 2.0], [0.0, 0.9]])
    assert wjsr_bisection(WeightedSystem((A,), (1.5,)), 1e-8) == pytest.approx(0.9 ** (1 / 1.5), abs=1e-8)


def test_bisection_example1():
    r = wjsr_bisection_bracket(example1(), 1e-6)
    assert r.lower - 1e-12 <= RHO_EX1_W12 <= r.upper + 1e-12
    assert r.upper - r.lower <= 1e-6
    assert r.value == pytest.approx(RHO_EX1_W12, abs=1e-6)


@pytest.mark.parametrize("weights,expected", [((1, 1), 3.0), ((2, 1), 2.0)])
def test_bisection_commuting(weights, expected):
    s = WeightedSystem((np.array([[3.0, 1.0], [0.0, 3.0]]), 2 * np.eye(2)), weights)
    assert wjsr_bisection(s, 1e-7) == pytest.approx(expected, abs=1e-6)


@settings(max_examples=25)
@given(st.integers(0, 10**6))
def test_bisection_agrees_with_gripenberg(seed):
    rng = np.random.default_rng(seed)
    mats, w = random_system(rng, d=2)
    s = WeightedSystem(mats, w)
    b = gripenberg(s, eps=1e-4, budget=50_000)
    try:
        r = wjsr_bisection_bracket(s, 1e-4, budget=50_000)
    except BisectionError as exc:
        r = exc
    assert r.lower <= b.upper + 1e-9 and b.lower <= r.upper + 1e-9


def test_bisection_failure_reports_bracket():
    def never(sys, eps):
        from dwelljsr.weighted import JsrBracket
        return JsrBracket(0.0, math.inf, (0,), False, 0)
    with pytest.raises(BisectionError) as info:
        wjsr_bisection_bracket(example1(), 1e-6, inner=never)
    assert info.value.lower <= RHO_EX1_W12 <= info.value.upper


@pytest.mark.skipif("compiled" not in _backend.available(), reason="compiled kernels not built")
def test_rho_k_backends_agree():
    s = example1((1, 1))
    try:
        _backend.use("python")
        a = rho_k_exact(s, 8)
        _backend.use("compiled")
        b = rho_k_exact(s, 8)
    finally:
        _backend.use("compiled")
    assert a[1] == b[1]
    assert a[0] == pytest.approx(b[0], rel=1e-13)
