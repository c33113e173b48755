import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dwelljsr import _backend
from dwelljsr._pykernels import spectral_norm, spectral_radius
from dwelljsr.ipa import find_candidate, run_ipa

from conftest import example1

py = _backend.python_kernels
cc = _backend.compiled_kernels
needs_compiled = pytest.mark.skipif(cc is None, reason="compiled kernels not built")


def family(seed, E=3, d=3, graph=False):
    rng = np.random.default_rng(seed)
    mats = np.ascontiguousarray(rng.standard_normal((E, d, d)))
    weights = rng.uniform(0.5, 2.0, E)
    if graph:
        tails = rng.integers(0, 2, E).astype(np.intp)
        heads = rng.integers(0, 2, E).astype(np.intp)
    else:
        tails = np.zeros(E, dtype=np.intp)
        heads = np.zeros(E, dtype=np.intp)
    return mats, weights, tails, heads


def test_use_and_available():
    before = _backend.BACKEND
    assert "python" in _backend.available()
    try:
        _backend.use("python")
        assert _backend.kernels is py and _backend.BACKEND == "python"
        with pytest.raises(ValueError):
            _backend.use("fortran")
    finally:
        _backend.use(before)


@settings(max_examples=30)
@given(st.integers(0, 10**6), st.integers(1, 4))
def test_reference_spectral_helpers(seed, d):
    M = np.random.default_rng(seed).standard_normal((d, d))
    assert spectral_radius(M) == pytest.approx(max(abs(np.linalg.eigvals(M))), rel=1e-10, abs=1e-14)
    assert spectral_norm(M) == pytest.approx(np.linalg.norm(M, 2), rel=1e-10, abs=1e-14)


@needs_compiled
@settings(max_examples=30)
@given(st.integers(0, 10**6), st.booleans())
def test_paths_max_norm_parity(seed, graph):
    args = family(seed, graph=graph)
    v1, w1 = py.paths_max_norm(*args, 4)
    v2, w2 = cc.paths_max_norm(*args, 4)
    assert v1 == pytest.approx(v2, rel=1e-12)
    assert tuple(w1) == tuple(w2) or v1 == pytest.approx(v2, rel=1e-12)


@needs_compiled
@settings(max_examples=30)
@given(st.integers(0, 10**6), st.booleans())
def test_closed_path_search_parity(seed, graph):
    args = family(seed, graph=graph)
    b1, ws1, n1, t1 = py.closed_path_search(*args, 6, 8.0, 1e-9, 10**6)
    b2, ws2, n2, t2 = cc.closed_path_search(*args, 6, 8.0, 1e-9, 10**6)
    assert b1 == pytest.approx(b2, rel=1e-12)
    assert (n1, t1) == (n2, t2)
    assert [tuple(w) for w in ws1] == [tuple(w) for w in ws2]


@needs_compiled
@settings(max_examples=30)
@given(st.integers(0, 10**6), st.integers(2, 6), st.integers(2, 6))
def test_simplex_parity(seed, m, n):
    # max c.x s.t. Ax <= b, x >= 0 with b > 0, so the slack basis is feasible
    rng = np.random.default_rng(seed)
    A = rng.uniform(-1, 2, (m, n))
    b = rng.uniform(0.5, 2, m)
    c = rng.uniform(0, 1, n)
    T = np.zeros((m + 1, n + m + 1))
    T[:m, :n], T[:m, n:n + m], T[:m, -1] = A, np.eye(m), b
    T[m, :n] = -c
    out = []
    for k in (py, cc):
        Tk, basis = T.copy(), np.arange(n, n + m, dtype=np.intp)
        status, iters = k.simplex_iterate(Tk, basis, n + m, 500, 1e-12, 1e-12, 50)
        out.append((status, iters, Tk, basis))
    (s1, i1, T1, b1), (s2, i2, T2, b2) = out
    assert (s1, i1) == (s2, i2)
    np.testing.assert_array_equal(b1, b2)
    np.testing.assert_allclose(T1, T2, rtol=1e-10, atol=1e-10)


@needs_compiled
def test_end_to_end_parity():
    ws = example1()
    res = {}
    before = _backend.BACKEND
    try:
        for name in ("python", "compiled"):
            _backend.use(name)
            cand = find_candidate(ws, 6)
            out = run_ipa(ws, cand)
            res[name] = (cand.rho_c, cand.modes, out.status, out.iterations, out.polytope.size)
    finally:
        _backend.use(before)
    assert res["python"][1:] == res["compiled"][1:]
    assert res["python"][0] == pytest.approx(res["compiled"][0], rel=1e-14)
