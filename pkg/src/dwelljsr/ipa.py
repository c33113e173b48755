"""Invariant polytope algorithm for weighted systems.

A candidate spectrum-maximising product is found by enumerating simple
closed words; its leading eigenvector seeds a vertex set that is grown by
the normalised modes until no image leaves the current polytope. On
termination the polytope is extremal and the candidate's normalised
spectral radius is the weighted joint spectral radius.
"""
from __future__ import annotations

import enum
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import _backend
from .linalg import EigenResult, leading_eigenpair
from .polytope import SymPolytope, gauge, reduce_vertices, same_up_to_sign
from .weighted import WeightedProduct, WeightedSystem

ETA = 1e-10
TIE_RTOL = 1e-10
MAX_VERTICES = 1000


class NilpotentError(RuntimeError):
    """Every enumerated product has zero spectral radius."""


class ReducibleError(RuntimeError):
    """The vertex set stays inside a proper invariant subspace."""

    def __init__(self, rank: int, dim: int, rounds: int):
        super().__init__(
            f"vertex set spans only {rank} of {dim} dimensions after {rounds} rounds; "
            "the family looks reducible, restrict it to an invariant subspace"
        )
        self.rank = rank
        self.dim = dim


class IpaStatus(enum.Enum):
    CONVERGED = "converged"
    BUDGET_EXCEEDED = "budget_exceeded"
    DEGENERATE = "degenerate_leading_eigenvalue"


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get("DWELLJSR_THREADS", "1")))
    except ValueError:
        return 1


def canonical_word(word: Sequence[int]) -> tuple[int, ...]:
    """Application-order word whose product notation is the least rotation.

    Product notation lists the last-applied factor first, so ``A1 A1 A2``
    (apply ``A2`` first) is ``(1, 0, 0)`` in application order and ``"112"``
    when printed.
    """
    rev = tuple(reversed(tuple(word)))
    if not rev:
        return rev
    best = min(rev[i:] + rev[:i] for i in range(len(rev)))
    return tuple(reversed(best))


def _search_key(word):
    return (len(word), tuple(reversed(word)))


@dataclass(frozen=True, eq=False)
class Candidate:
    """Simple product with the largest normalised spectral radius found.

    ``ties`` lists other canonical words whose value agrees within the tie
    tolerance; they seed the polytope too.
    """

    product: WeightedProduct
    rho_c: float
    eigen: EigenResult
    ties: tuple[tuple[int, ...], ...] = ()
    nodes: int = 0
    truncated: bool = False

    @property
    def modes(self) -> tuple[int, ...]:
        return self.product.modes

    @property
    def v0(self) -> np.ndarray | None:
        return self.eigen.vector


def find_candidate(sys: WeightedSystem, max_len: int, max_weight: float | None = None,
                   tie_rtol: float = TIE_RTOL, max_nodes: int = 10**7) -> Candidate:
    """Search all simple products up to ``max_len`` factors (and ``max_weight``).

    Ties are broken by fewer factors, then by the lexicographically least
    product-notation word.
    """
    if max_len < 1:
        raise ValueError("max_len must be at least 1")
    z = np.zeros(sys.size, dtype=np.intp)
    best, words, nodes, truncated = _backend.kernels.closed_path_search(
        sys.stacked(), np.asarray(sys.weights, dtype=float), z, z.copy(), int(max_len),
        math.inf if max_weight is None else float(max_weight), float(tie_rtol), int(max_nodes),
    )
    if best <= 0.0:
        raise NilpotentError("all products up to the search length are nilpotent")
    words = sorted({canonical_word(w) for w in words}, key=_search_key)
    prod = WeightedProduct.of(sys, words[0])
    return Candidate(
        product=prod,
        rho_c=prod.normalized_radius(),
        eigen=leading_eigenpair(prod.matrix),
        ties=tuple(words[1:]),
        nodes=int(nodes),
        truncated=bool(truncated),
    )


def candidate_from_word(sys: WeightedSystem, word: Sequence[int]) -> Candidate:
    prod = WeightedProduct.of(sys, canonical_word(word))
    return Candidate(product=prod, rho_c=prod.normalized_radius(), eigen=leading_eigenpair(prod.matrix))


@dataclass(frozen=True, eq=False)
class IpaOutcome:
    """Result of the invariant polytope algorithm.

    ``polytope`` is the reduced vertex set (``None`` when degenerate).
    ``trace`` records the raw vertex count after each round.
    """

    status: IpaStatus
    polytope: SymPolytope | None
    iterations: int
    rho: float
    trace: tuple[int, ...] = ()
    raw_vertices: np.ndarray | None = field(default=None, repr=False)
    completed_span: bool = False

    @property
    def converged(self) -> bool:
        return self.status is IpaStatus.CONVERGED


def _span_rank(V: list[np.ndarray]) -> int:
    M = np.array(V)
    return int(np.linalg.matrix_rank(M, tol=1e-10 * max(1.0, np.abs(M).max())))


def _complement(V: list[np.ndarray], d: int) -> np.ndarray:
    _, s, vt = np.linalg.svd(np.array(V))
    r = int(np.sum(s > 1e-10 * s[0]))
    return vt[r:]


class _Grower:
    """Vertex-set growth shared by the weighted and graph variants."""

    def __init__(self, eta: float, workers: int):
        self.eta = eta
        self.workers = workers
        self._pool = ThreadPoolExecutor(workers) if workers > 1 else None

    def close(self):
        if self._pool is not None:
            self._pool.shutdown()

    def norms(self, V: np.ndarray, ys: list[np.ndarray]) -> list[float]:
        if self._pool is None or len(ys) < 8:
            return [gauge(V, y) for y in ys]
        return list(self._pool.map(lambda y: gauge(V, y), ys))

    def insert(self, V: list[np.ndarray], ys: list[np.ndarray]) -> list[np.ndarray]:
        """Add every image not strictly inside ``absco(V)``; returns the new vertices.

        Norms are first evaluated against a snapshot (in parallel); a point
        interior to the snapshot is interior to any superset, so only the
        rest are re-checked sequentially in the given order.
        """
        snap = np.array(V)
        pre = self.norms(snap, ys)
        added: list[np.ndarray] = []
        for y, n0 in zip(ys, pre):
            if n0 < 1.0 - self.eta:
                continue
            if any(same_up_to_sign(y, u) for u in V):
                continue
            if added and gauge(np.array(V), y) < 1.0 - self.eta:
                continue
            V.append(y)
            added.append(y)
        return added


def run_ipa(sys: WeightedSystem, cand: Candidate, k_max: int = 100, eta: float = ETA,
            workers: int | None = None, seed_ties: bool = True,
            complete_span: bool = True, stall_rounds: int = 3,
            max_vertices: int = MAX_VERTICES) -> IpaOutcome:
    """Grow an invariant polytope for the normalised family ``A_i / rho_c^alpha_i``.

    Growth stops with ``budget_exceeded`` after ``k_max`` rounds or once more
    than ``max_vertices`` vertex pairs are stored.
    """
    rho = cand.rho_c
    if not cand.eigen.is_unique_simple or cand.v0 is None:
        return IpaOutcome(IpaStatus.DEGENERATE, None, 0, rho)
    At = [A / rho ** a for A, a in zip(sys.matrices, sys.weights)]
    d = sys.dim

    V: list[np.ndarray] = [cand.v0.copy()]
    if seed_ties:
        for w in cand.ties:
            e = leading_eigenpair(WeightedProduct.of(sys, w).matrix)
            if e.is_unique_simple and e.vector is not None:
                if not any(same_up_to_sign(e.vector, u) for u in V):
                    V.append(e.vector.copy())
    R = list(V)
    trace = [len(V)]
    grower = _Grower(eta, workers or default_workers())
    completed = False
    k = 0
    stall = 0
    last_rank = _span_rank(V)
    try:
        while k < k_max and len(V) <= max_vertices:
            if not R:
                if complete_span and _span_rank(V) < d:
                    scale = 1e-2 * min(np.linalg.norm(v) for v in V)
                    extra = [scale * c for c in _complement(V, d)]
                    V.extend(extra)
                    R = extra
                    completed = True
                else:
                    break
            k += 1
            ys = [A @ v for v in R for A in At]
            R = grower.insert(V, ys)
            trace.append(len(V))
            rank = _span_rank(V)
            if rank < d and R:
                stall = stall + 1 if rank == last_rank else 0
                if stall >= stall_rounds:
                    raise ReducibleError(rank, d, k)
            last_rank = rank
    finally:
        grower.close()

    done = not R and (not complete_span or _span_rank(V) == d)
    status = IpaStatus.CONVERGED if done else IpaStatus.BUDGET_EXCEEDED
    raw = np.array(V)
    return IpaOutcome(
        status=status,
        polytope=SymPolytope(reduce_vertices(raw)),
        iterations=k,
        rho=rho,
        trace=tuple(trace),
        raw_vertices=raw,
        completed_span=completed,
    )


def extremality_excess(sys: WeightedSystem, P: SymPolytope, rho: float,
                       continuous: Sequence[np.ndarray] = (), tau: float | None = None) -> float:
    """Smallest ``eps`` with ``A_i P`` inside ``e^{alpha_i eps} rho^{alpha_i} P`` for every mode.

    Flow modes ``e^{tau B}`` (weight ``tau``) are included when ``continuous``
    is given. May be negative when ``P`` is strictly contracted.
    """
    from .linalg import expm

    ops = list(zip(sys.matrices, sys.weights))
    if continuous:
        if tau is None:
            raise ValueError("tau is required with continuous modes")
        ops += [(expm(B, tau), tau) for B in continuous]
    eps = -math.inf
    for A, a in ops:
        n = max(gauge(P.vertices, A @ v) for v in P.vertices)
        val = (math.log(n) - a * math.log(rho)) / a if n > 0 else -math.inf
        eps = max(eps, val)
    return eps


def verify_eps_extremal(sys: WeightedSystem, P: SymPolytope, rho: float, eps: float,
                        continuous: Sequence[np.ndarray] = (), tau: float | None = None) -> bool:
    """Check ``||A_i v||_P <= e^{alpha_i eps} rho^{alpha_i} + 1e-12`` at every vertex."""
    from .linalg import expm

    if not P.spans:
        return False
    ops = list(zip(sys.matrices, sys.weights))
    if continuous:
        if tau is None:
            raise ValueError("tau is required with continuous modes")
        ops += [(expm(B, tau), tau) for B in continuous]
    for A, a in ops:
        bound = math.exp(a * eps) * rho ** a + 1e-12
        for v in P.vertices:
            if gauge(P.vertices, A @ v) > bound:
                return False
    return True


def certify(sys: WeightedSystem, max_len: int = 8, k_max: int = 100, eta: float = ETA,
            max_weight: float | None = None, workers: int | None = None) -> tuple[Candidate, IpaOutcome]:
    """Candidate search followed by the polytope algorithm."""
    cand = find_candidate(sys, max_len, max_weight)
    return cand, run_ipa(sys, cand, k_max, eta, workers)


__all__ = [
    "Candidate", "IpaOutcome", "IpaStatus", "NilpotentError", "ReducibleError",
    "canonical_word", "candidate_from_word", "certify", "extremality_excess",
    "find_candidate", "run_ipa", "verify_eps_extremal",
]
