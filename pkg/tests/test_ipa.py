import math

import numpy as np
import pytest

from dwelljsr.ipa import (
    Candidate, IpaStatus, NilpotentError, ReducibleError, canonical_word, candidate_from_word, certify,
    extremality_excess, find_candidate, run_ipa, verify_eps_extremal,
)
from dwelljsr.linalg import EigenResult
from dwelljsr.mixed import discretize
from dwelljsr.polytope import SymPolytope, same_up_to_sign
from dwelljsr.weighted import WeightedProduct, WeightedSystem, gripenberg

from conftest import A1, A2, RHO_EX1_W11, RHO_EX1_W12, example1, example2
from oracles import brute_closed_max


def test_canonical_word_product_notation():
    # A1 A1 A2 applies A2 first
    assert canonical_word((1, 0, 0)) == (1, 0, 0)
    assert canonical_word((0, 1, 0)) == (1, 0, 0)
    assert canonical_word((0, 0, 1)) == (1, 0, 0)


def test_single_matrix_candidate():
    A = np.array([[2.0, 1.0], [0.0, 0.5]])
    c = find_candidate(WeightedSystem((A,), (2.0,)), 4)
    assert c.modes == (0,)
    assert c.rho_c == pytest.approx(math.sqrt(2.0))


def test_example1_candidate():
    s = example1()
    c = find_candidate(s, 6)
    assert c.product.label(s) == "112"
    assert c.rho_c == pytest.approx(RHO_EX1_W12, abs=1e-12)
    v = c.v0
    assert v[1] / v[0] == pytest.approx(0.366025403784439, abs=1e-12)


def test_candidate_dominates_enumeration():
    s = example1((1, 1))
    c = find_candidate(s, 6)
    assert c.rho_c == pytest.approx(brute_closed_max(s.matrices, s.weights, 6), rel=1e-12)


def test_nilpotent_family():
    N = np.array([[0.0, 1.0], [0.0, 0.0]])
    with pytest.raises(NilpotentError):
        find_candidate(WeightedSystem.unit((N,)), 4)


def test_example1_polytope_vertices():
    s = example1()
    c, out = certify(s, max_len=6)
    assert out.status is IpaStatus.CONVERGED
    assert out.polytope.size == 7
    At = [A / c.rho_c ** a for A, a in zip(s.matrices, s.weights)]
    v0 = c.v0
    v1, v2 = At[0] @ v0, At[1] @ v0
    v3, v4 = At[0] @ v1, At[0] @ v2
    v5, v6 = At[0] @ v3, At[1] @ v4
    expected = [v0, v1, v2, v3, v4, v5, v6]
    for u in expected:
        assert any(same_up_to_sign(u, w, 1e-9) for w in out.polytope.vertices)


def test_example1_unit_weights():
    c, out = certify(example1((1, 1)), max_len=6)
    assert out.converged
    assert c.rho_c == pytest.approx(RHO_EX1_W11, abs=1e-12)


def test_converged_polytope_is_extremal():
    s = example1()
    c, out = certify(s)
    assert verify_eps_extremal(s, out.polytope, c.rho_c, 0.0)
    assert abs(extremality_excess(s, out.polytope, c.rho_c)) < 1e-12


def test_shrunk_polytope_is_not_extremal():
    s = example1()
    c, out = certify(s)
    V = np.array(out.polytope.vertices)
    V[0] *= 0.9
    assert not verify_eps_extremal(s, SymPolytope(V), c.rho_c, 0.0)


def test_partial_polytope_eps_search():
    s = example1((1, 1))
    c = find_candidate(s, 6)
    out = run_ipa(s, c, k_max=1)
    assert out.status is IpaStatus.BUDGET_EXCEEDED
    eps = extremality_excess(s, out.polytope, c.rho_c)
    assert eps > 1e-6
    assert verify_eps_extremal(s, out.polytope, c.rho_c, eps)
    assert not verify_eps_extremal(s, out.polytope, c.rho_c, 0.5 * eps)
    # the certified upper bound rho e^eps is sound
    b = gripenberg(s, eps=1e-6)
    assert b.lower <= c.rho_c * math.exp(eps) + 1e-12


def test_vertex_budget():
    # a short candidate that is not an s.m.p.: the polytope grows without bound
    ws = WeightedSystem((np.array([[2.0, 1.0], [0.0, 0.5]]), np.array([[0.5, 0.0], [3.0, 2.0]])), (1.0, 1.0))
    cand = candidate_from_word(ws, (0,))
    out = run_ipa(ws, cand, k_max=500, max_vertices=40)
    assert out.status is IpaStatus.BUDGET_EXCEEDED
    assert out.iterations < 500
    # the last round starts at most 40 pairs and adds at most two images of each
    assert len(out.raw_vertices) <= 40 + 2 * 40


def test_degenerate_leading_eigenvalue():
    R = np.array([[0.0, -1.0], [1.0, 0.0]])
    s = WeightedSystem.unit((R,))
    out = run_ipa(s, find_candidate(s, 3))
    assert out.status is IpaStatus.DEGENERATE
    assert out.polytope is None


def test_spanning_completion():
    s = WeightedSystem.unit((np.diag([0.5, 1 / 3]),))
    c, out = certify(s, max_len=2)
    assert out.status is IpaStatus.CONVERGED
    assert out.completed_span
    assert out.polytope.spans
    assert verify_eps_extremal(s, out.polytope, c.rho_c, 0.0)


def test_reducible_family_reported():
    # both modes keep span{e1} invariant; with rho_c underestimated the orbit
    # of e1 grows along that line forever and the rank stalls at 1
    fam = WeightedSystem.unit((np.diag([1.0, 0.2]), np.diag([0.999, 0.1])))
    cand = find_candidate(fam, 2)
    low = Candidate(cand.product, 0.9, EigenResult(1.0, np.array([1.0, 0.0]), True, 1.0))
    with pytest.raises(ReducibleError) as info:
        run_ipa(fam, low, k_max=50, complete_span=False)
    assert info.value.rank == 1 and info.value.dim == 2


def test_workers_do_not_change_result():
    s = example1((1, 1))
    c = find_candidate(s, 6)
    a = run_ipa(s, c, workers=1)
    b = run_ipa(s, c, workers=4)
    assert a.trace == b.trace
    np.testing.assert_array_equal(a.polytope.vertices, b.polytope.vertices)


def test_example2_discretized_candidate():
    ms = example2()
    ws = discretize(ms, 1.0)
    c = find_candidate(ws, 6)
    assert len(c.modes) == 5
    assert sorted(c.modes) == [0, 0, 1, 2, 2]
    word = canonical_word(c.modes)
    # e^{B2} A1 e^{B1} e^{B2} A1 in application order, or its reversal (an exact tie)
    smp = canonical_word((0, 2, 1, 0, 2))
    assert word == smp or word == canonical_word(tuple(reversed(smp)))


def test_candidate_from_word():
    s = example1()
    c = candidate_from_word(s, (0, 1, 0))
    assert c.product.label(s) == "112"
