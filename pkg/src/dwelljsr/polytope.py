"""Symmetric polytopes ``absco(V)`` and the norms and LPs built on them."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .lp import LpNumericalError, LpStatus, solve_standard


class SeminormError(ValueError):
    """The vertex set does not span the space, so the gauge is only a seminorm."""


class ShiftInfeasibleError(RuntimeError):
    def __init__(self, vertex: int, mode: int, delta: float):
        super().__init__(
            f"shift LP infeasible at vertex {vertex} for mode {mode}; delta={delta} is too large"
        )
        self.vertex = vertex
        self.mode = mode
        self.delta = delta


@dataclass(frozen=True, eq=False)
class SymPolytope:
    """The absolutely convex hull of a finite vertex list (stored one per ``±`` pair)."""

    vertices: np.ndarray

    def __post_init__(self):
        V = np.array(self.vertices, dtype=float, ndmin=2)
        if V.ndim != 2 or V.shape[0] == 0:
            raise ValueError("a polytope needs at least one vertex")
        if not np.all(np.isfinite(V)):
            raise ValueError("vertices must be finite")
        V.setflags(write=False)
        object.__setattr__(self, "vertices", V)

    @property
    def dim(self) -> int:
        return int(self.vertices.shape[1])

    @property
    def size(self) -> int:
        return int(self.vertices.shape[0])

    @property
    def rank(self) -> int:
        return int(np.linalg.matrix_rank(self.vertices, tol=1e-10 * max(1.0, np.abs(self.vertices).max())))

    @property
    def spans(self) -> bool:
        return self.rank == self.dim

    def all_vertices(self) -> np.ndarray:
        """Vertices with their negatives, ``v0, -v0, v1, -v1, ...``."""
        V = self.vertices
        out = np.empty((2 * V.shape[0], V.shape[1]))
        out[0::2] = V
        out[1::2] = -V
        return out


def gauge(V: np.ndarray, x) -> float:
    """Minkowski functional of ``absco(V)`` at ``x``; ``inf`` outside the span of ``V``.

    Solves ``min sum(t + s)`` subject to ``V.T (t - s) = x`` with ``t, s >= 0``.
    """
    x = np.asarray(x, dtype=float).reshape(-1)
    if not np.any(x):
        return 0.0
    N = V.shape[0]
    A = np.hstack([V.T, -V.T])
    status, z, obj, *_ = solve_standard(np.ones(2 * N), A, x)
    if status is LpStatus.INFEASIBLE:
        return math.inf
    if status is not LpStatus.OPTIMAL:  # pragma: no cover
        raise LpNumericalError(f"polytope norm LP ended with {status}")
    return float(obj)


def polytope_norm(P: SymPolytope, x, *, allow_seminorm: bool = False) -> float:
    """Minkowski functional of ``P`` at ``x``.

    Raises :class:`SeminormError` when ``P`` does not span, unless
    ``allow_seminorm`` is set, in which case ``inf`` is returned for points
    outside the span.
    """
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.shape[0] != P.dim:
        raise ValueError(f"point has dimension {x.shape[0]}, polytope has {P.dim}")
    if not allow_seminorm and not P.spans:
        raise SeminormError(f"vertex set has rank {P.rank} < {P.dim}")
    return gauge(P.vertices, x)


def is_interior(P: SymPolytope, x, eta: float = 1e-10) -> bool:
    """True when ``x`` lies strictly inside ``(1 - eta) P``."""
    return polytope_norm(P, x, allow_seminorm=True) < 1.0 - eta


def induced_norm(P: SymPolytope, A, Q: SymPolytope | None = None) -> float:
    """Operator norm of ``A`` from ``||.||_P`` to ``||.||_Q`` (``Q = P`` by default).

    The maximum over a polytope is attained at a vertex, so this is
    ``max_v ||A v||_Q``.
    """
    Q = P if Q is None else Q
    A = np.asarray(A, dtype=float)
    return max(gauge(Q.vertices, A @ v) for v in P.vertices)


def same_up_to_sign(x, y, rtol: float = 1e-9) -> bool:
    scale = max(np.linalg.norm(x), np.linalg.norm(y), 1e-300)
    return min(np.linalg.norm(x - y), np.linalg.norm(x + y)) <= rtol * scale


def dedupe(V: np.ndarray, rtol: float = 1e-9) -> np.ndarray:
    """Drop vertices that repeat an earlier one up to sign."""
    keep: list[np.ndarray] = []
    for v in V:
        if np.linalg.norm(v) == 0.0:
            continue
        if not any(same_up_to_sign(v, u, rtol) for u in keep):
            keep.append(v)
    return np.array(keep).reshape(-1, V.shape[1])


def reduce_vertices(V, eta: float = 1e-12) -> np.ndarray:
    """Remove duplicates and every vertex lying strictly inside ``absco`` of the others.

    The absolutely convex hull is unchanged. Removal is sequential, which is
    safe because discarding an interior point never changes the hull.
    """
    V = dedupe(np.asarray(V, dtype=float))
    keep = list(range(V.shape[0]))
    for i in range(V.shape[0]):
        others = [j for j in keep if j != i]
        if not others:
            continue
        if gauge(V[others], V[i]) < 1.0 - eta:
            keep.remove(i)
    return V[keep]


def reduce(P: SymPolytope, eta: float = 1e-12) -> SymPolytope:
    return SymPolytope(reduce_vertices(P.vertices, eta))


@dataclass(frozen=True)
class ShiftResult:
    """Outcome of the shift LP.

    ``mu`` is the certified value (maximum over modes). ``vertex_mu[i, k]``
    is the smallest admissible shift for mode ``i`` at vertex ``k``;
    ``slack`` holds ``mu - vertex_mu``.
    """

    mu: float
    argmax_mode: int
    argmax_vertex: int
    mode_mu: np.ndarray
    vertex_mu: np.ndarray
    delta: float
    slack: np.ndarray = field(repr=False)


def vertex_shift(V: np.ndarray, B: np.ndarray, v: np.ndarray, delta: float) -> float:
    """Smallest ``mu`` with ``v + delta (B - mu I) v`` in ``absco(V)``, or ``nan`` if none."""
    N, d = V.shape
    # variables: t (N), s (N), mu+ , mu-, slack for sum(t+s) <= 1
    n = 2 * N + 3
    A = np.zeros((d + 1, n))
    A[:d, :N] = V.T
    A[:d, N : 2 * N] = -V.T
    A[:d, 2 * N] = delta * v
    A[:d, 2 * N + 1] = -delta * v
    A[d, : 2 * N] = 1.0
    A[d, 2 * N + 2] = 1.0
    b = np.concatenate([v + delta * (B @ v), [1.0]])
    c = np.zeros(n)
    c[2 * N] = 1.0
    c[2 * N + 1] = -1.0
    status, z, obj, *_ = solve_standard(c, A, b, n_slack=1)
    if status is LpStatus.INFEASIBLE:
        return math.nan
    if status is not LpStatus.OPTIMAL:  # pragma: no cover
        raise LpNumericalError(f"shift LP ended with {status}")
    return float(obj)


def mu_shift(P: SymPolytope, Bset, delta: float = 1e-4) -> ShiftResult:
    """Smallest ``mu`` such that ``v + delta (B - mu I) v`` stays in ``P`` for all vertices and modes.

    The joint LP decouples over vertices and modes, so it is solved as one
    small LP per pair; the result is their maximum. For small ``delta`` this
    bounds the growth rate of ``x' = B x`` in the norm of ``P`` from above.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    Bs = [np.asarray(B, dtype=float) for B in Bset]
    if not Bs:
        raise ValueError("need at least one continuous mode")
    V = np.asarray(P.vertices)
    vm = np.empty((len(Bs), V.shape[0]))
    for i, B in enumerate(Bs):
        if B.shape != (P.dim, P.dim):
            raise ValueError(f"mode {i} has shape {B.shape}, expected {(P.dim, P.dim)}")
        for k, v in enumerate(V):
            mu = vertex_shift(V, B, v, delta)
            if math.isnan(mu):
                raise ShiftInfeasibleError(k, i, delta)
            vm[i, k] = mu
    mode_mu = vm.max(axis=1)
    i = int(np.argmax(mode_mu))
    mu = float(mode_mu[i])
    return ShiftResult(
        mu=mu,
        argmax_mode=i,
        argmax_vertex=int(np.argmax(vm[i])),
        mode_mu=mode_mu,
        vertex_mu=vm,
        delta=delta,
        slack=mu - vm,
    )


def mu_extrapolated(P: SymPolytope, Bset, delta: float = 1e-4) -> float:
    """Richardson estimate ``2 mu(delta/2) - mu(delta)`` of the ``delta -> 0`` limit."""
    return 2.0 * mu_shift(P, Bset, delta / 2).mu - mu_shift(P, Bset, delta).mu


def outline(P: SymPolytope) -> np.ndarray:
    """Boundary polygon of a planar polytope, counter-clockwise, starting at angle ``-pi``."""
    if P.dim != 2:
        raise ValueError("outline is only defined in the plane")
    W = reduce_vertices(P.vertices)
    pts = np.vstack([W, -W])
    ang = np.arctan2(pts[:, 1], pts[:, 0])
    return pts[np.argsort(ang, kind="stable")]
