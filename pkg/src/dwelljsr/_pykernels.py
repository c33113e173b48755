"""Pure numpy implementations of the hot kernels.

These are the reference semantics for the compiled module ``_kernels``; both
expose the same three functions with identical signatures.
"""
from __future__ import annotations

import math

import numpy as np

OPTIMAL, UNBOUNDED, ITERATION_LIMIT = 0, 1, 2


def simplex_iterate(T, basis, n_enter, max_iter, opttol, pivtol, dantzig_limit):
    """Run primal simplex pivots on a dense tableau in place.

    ``T`` has the constraint rows first and the reduced-cost row last; the
    right-hand side is the last column. Only columns ``< n_enter`` may enter.
    Dantzig's rule is used for the first ``dantzig_limit`` pivots, then
    Bland's rule, which cannot cycle.
    """
    m = T.shape[0] - 1
    rhs = T.shape[1] - 1
    iters = 0
    while iters < max_iter:
        cost = T[m, :n_enter]
        if iters < dantzig_limit:
            j = int(np.argmin(cost))
            if cost[j] >= -opttol:
                return OPTIMAL, iters
        else:
            neg = np.flatnonzero(cost < -opttol)
            if neg.size == 0:
                return OPTIMAL, iters
            j = int(neg[0])
        col = T[:m, j]
        rows = np.flatnonzero(col > pivtol)
        if rows.size == 0:
            return UNBOUNDED, iters
        ratios = T[rows, rhs] / col[rows]
        best = ratios.min()
        tied = rows[ratios <= best + 1e-12 * max(1.0, abs(best))]
        r = int(tied[np.argmin(basis[tied])])
        T[r] /= T[r, j]
        piv = T[:, j].copy()
        piv[r] = 0.0
        T -= np.outer(piv, T[r])
        basis[r] = j
        iters += 1
    return ITERATION_LIMIT, iters


def spectral_radius(M):
    d = M.shape[0]
    if d == 1:
        return abs(M[0, 0])
    if d == 2:
        a, b, c, e = M[0, 0], M[0, 1], M[1, 0], M[1, 1]
        h = 0.5 * (a + e)
        disc = (0.5 * (a - e)) ** 2 + b * c
        if disc >= 0.0:
            return abs(h) + math.sqrt(disc)
        return math.sqrt(abs(a * e - b * c))
    return float(np.max(np.abs(np.linalg.eigvals(M))))


def spectral_norm(M):
    d = M.shape[0]
    if M.shape == (1, 1):
        return abs(M[0, 0])
    if M.shape == (2, 2):
        a, b, c, e = M[0, 0], M[0, 1], M[1, 0], M[1, 1]
        return 0.5 * (math.hypot(a + e, b - c) + math.hypot(a - e, b + c))
    if d == 0:
        return 0.0
    return float(np.linalg.norm(M, 2))


def _root(value, weight):
    if value <= 0.0:
        return 0.0
    return math.exp(math.log(value) / weight)


def paths_max_norm(mats, weights, tails, heads, k):
    """Maximise ``||A_{e_k} ... A_{e_1}||^(1/w)`` over all edge paths of length ``k``.

    Returns ``(value, word)`` with ``word`` in traversal order.
    """
    E, d = mats.shape[0], mats.shape[1]
    best = [-1.0, ()]
    word = [0] * k
    prods = np.empty((k + 1, d, d))
    prods[0] = np.eye(d)

    def rec(t, w):
        for e in range(E):
            if t > 0 and tails[e] != heads[word[t - 1]]:
                continue
            word[t] = e
            prods[t + 1] = mats[e] @ prods[t]
            wt = w + weights[e]
            if t + 1 == k:
                v = _root(spectral_norm(prods[t + 1]), wt)
                if v > best[0]:
                    best[0] = v
                    best[1] = tuple(word)
            else:
                rec(t + 1, wt)

    if k >= 1:
        rec(0, 0.0)
    return best[0], best[1]


def closed_path_search(mats, weights, tails, heads, max_len, max_weight, tie_rtol, max_nodes):
    """Search Lyndon closed paths for the largest normalised spectral radius.

    Words are enumerated as prenecklaces over the edge alphabet, so every
    closed path is visited once per rotation class. Prefixes whose weight
    exceeds ``max_weight`` are pruned. Returns ``(best, words, nodes, truncated)``
    where ``words`` holds every Lyndon closed path within ``tie_rtol`` of the
    best value, in enumeration order.
    """
    E, d = mats.shape[0], mats.shape[1]
    a = [0] * (max_len + 1)
    prods = np.empty((max_len + 1, d, d))
    prods[0] = np.eye(d)
    wsum = [0.0] * (max_len + 1)
    state = {"best": -1.0, "hits": [], "nodes": 0, "truncated": False}
    limit = max_weight + 1e-12

    def consider(t):
        v = _root(spectral_radius(prods[t]), wsum[t])
        best = state["best"]
        if v > best:
            state["best"] = v
            cut = v * (1.0 - tie_rtol)
            state["hits"] = [h for h in state["hits"] if h[0] >= cut]
            state["hits"].append((v, tuple(a[1 : t + 1])))
        elif v >= best * (1.0 - tie_rtol):
            state["hits"].append((v, tuple(a[1 : t + 1])))

    def rec(t, p):
        lo = a[t - p] if t > 1 else 0
        for c in range(lo, E):
            if t > 1 and tails[c] != heads[a[t - 1]]:
                continue
            wt = wsum[t - 1] + weights[c]
            if wt > limit:
                continue
            if state["nodes"] >= max_nodes:
                state["truncated"] = True
                return
            state["nodes"] += 1
            a[t] = c
            wsum[t] = wt
            prods[t] = mats[c] @ prods[t - 1]
            q = p if (t > 1 and c == a[t - p]) else t
            if q == t and heads[c] == tails[a[1]]:
                consider(t)
            if t < max_len:
                rec(t + 1, q)

    if max_len >= 1:
        rec(1, 1)
    best = state["best"]
    cut = best * (1.0 - tie_rtol)
    words = [w for v, w in state["hits"] if v >= cut]
    return best, words, state["nodes"], state["truncated"]
