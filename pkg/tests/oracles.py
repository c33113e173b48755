"""Independent reference computations used as test oracles."""
import itertools
import math

import mpmath
import numpy as np
from scipy.optimize import linprog


def mp_expm(M, t=1.0):
    return np.array(mpmath.expm(mpmath.matrix((t * np.asarray(M)).tolist())).tolist(), dtype=float)


def mp_logm(M):
    L = mpmath.logm(mpmath.matrix(np.asarray(M).tolist()))
    return np.array([[complex(L[i, j]).real for j in range(L.cols)] for i in range(L.rows)])


def mp_radius(M):
    ev = mpmath.eig(mpmath.matrix(np.asarray(M).tolist()), left=False, right=False)
    return float(max(abs(e) for e in ev))


def highs_gauge(V, x):
    """``min sum |c|`` with ``V.T c = x`` via scipy/HiGHS."""
    V = np.asarray(V, dtype=float)
    N = V.shape[0]
    res = linprog(np.ones(2 * N), A_eq=np.hstack([V.T, -V.T]), b_eq=x, bounds=(0, None), method="highs")
    return res.fun if res.status == 0 else math.inf


def brute_rho_k(mats, weights, k):
    """``max ||A_w||^(1/|w|)`` over all words of length ``k``, by plain enumeration."""
    best = 0.0
    for word in itertools.product(range(len(mats)), repeat=k):
        M = np.eye(mats[0].shape[0])
        for i in word:
            M = mats[i] @ M
        best = max(best, np.linalg.norm(M, 2) ** (1.0 / sum(weights[i] for i in word)))
    return best


def brute_closed_max(mats, weights, max_len):
    """``max rho(A_w)^(1/|w|)`` over all words up to ``max_len``."""
    best = 0.0
    for k in range(1, max_len + 1):
        for word in itertools.product(range(len(mats)), repeat=k):
            M = np.eye(mats[0].shape[0])
            for i in word:
                M = mats[i] @ M
            r = max(abs(np.linalg.eigvals(M)))
            best = max(best, r ** (1.0 / sum(weights[i] for i in word)))
    return best


def random_system(rng, d=None, m=2, wmin=0.5, wmax=2.0):
    d = d or int(rng.integers(2, 4))
    mats = tuple(rng.standard_normal((d, d)) for _ in range(m))
    weights = tuple(float(w) for w in rng.uniform(wmin, wmax, m))
    return mats, weights
