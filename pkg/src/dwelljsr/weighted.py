"""Weighted joint spectral radius: systems, exact finite-length values, bracketing."""
from __future__ import annotations

import enum
import heapq
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.optimize

from . import _backend
from .linalg import as_square, operator_norm, spectral_radius


class BudgetExceededError(RuntimeError):
    pass


class BisectionError(RuntimeError):
    def __init__(self, msg: str, lower: float, upper: float):
        super().__init__(f"{msg} (last bracket [{lower!r}, {upper!r}])")
        self.lower = lower
        self.upper = upper


@dataclass(frozen=True, eq=False)
class WeightedSystem:
    """Finite family of square matrices with positive weights (durations)."""

    matrices: tuple[np.ndarray, ...]
    weights: tuple[float, ...]
    labels: tuple[str, ...] = ()

    def __post_init__(self):
        mats = tuple(as_square(A, f"matrix {i}") for i, A in enumerate(self.matrices))
        if not mats:
            raise ValueError("a system needs at least one matrix")
        d = mats[0].shape[0]
        for i, A in enumerate(mats):
            if A.shape != (d, d):
                raise ValueError(f"matrix {i} has shape {A.shape}, expected {(d, d)}")
            A.setflags(write=False)
        w = tuple(float(a) for a in self.weights)
        if len(w) != len(mats):
            raise ValueError(f"{len(mats)} matrices but {len(w)} weights")
        if any(not (a > 0 and math.isfinite(a)) for a in w):
            raise ValueError("weights must be positive and finite")
        labels = tuple(self.labels) or tuple(str(i + 1) for i in range(len(mats)))
        if len(labels) != len(mats):
            raise ValueError("one label per matrix")
        object.__setattr__(self, "matrices", mats)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "labels", labels)

    @classmethod
    def unit(cls, matrices, labels=()) -> "WeightedSystem":
        return cls(tuple(matrices), tuple(1.0 for _ in matrices), tuple(labels))

    @property
    def dim(self) -> int:
        return int(self.matrices[0].shape[0])

    @property
    def size(self) -> int:
        return len(self.matrices)

    def stacked(self) -> np.ndarray:
        return np.ascontiguousarray(np.stack(self.matrices))

    def product(self, modes: Sequence[int]) -> "WeightedProduct":
        return WeightedProduct.of(self, modes)


@dataclass(frozen=True, eq=False)
class WeightedProduct:
    """Product ``A_{i_k} ... A_{i_1}``; ``modes`` lists ``i_1, ..., i_k`` in application order."""

    modes: tuple[int, ...]
    matrix: np.ndarray
    weight: float

    @classmethod
    def of(cls, sys: WeightedSystem, modes: Sequence[int]) -> "WeightedProduct":
        modes = tuple(int(i) for i in modes)
        if not modes:
            raise ValueError("empty product")
        P = sys.matrices[modes[0]].copy()
        for i in modes[1:]:
            P = sys.matrices[i] @ P
        return cls(modes, P, float(sum(sys.weights[i] for i in modes)))

    def normalized_radius(self) -> float:
        return _root(spectral_radius(self.matrix), self.weight)

    def normalized_norm(self) -> float:
        return _root(operator_norm(self.matrix), self.weight)

    def label(self, sys: WeightedSystem) -> str:
        """Product notation, leftmost factor first (``"112"`` is ``A1 A1 A2``)."""
        labs = [sys.labels[i] for i in reversed(self.modes)]
        sep = "" if all(len(s) == 1 for s in labs) else " "
        return sep.join(labs)


def _root(value: float, weight: float) -> float:
    if value <= 0.0:
        return 0.0
    return math.exp(math.log(value) / weight)


def dilate(sys: WeightedSystem, lam: float) -> WeightedSystem:
    """``(lam^alpha_i A_i)`` with the weights unchanged."""
    if not lam > 0:
        raise ValueError("dilation factor must be positive")
    mats = tuple(lam ** a * A for A, a in zip(sys.matrices, sys.weights))
    return WeightedSystem(mats, sys.weights, sys.labels)


def _single_vertex(n: int):
    z = np.zeros(n, dtype=np.intp)
    return z, z.copy()


def rho_k_exact(sys: WeightedSystem, k: int, budget: int = 10**7) -> tuple[float, tuple[int, ...]]:
    """``max ||Pi||^(1/|Pi|)`` over all products of exactly ``k`` factors.

    Returns the value and a maximising word (application order).
    """
    if k < 1:
        raise ValueError("k must be positive")
    if sys.size ** k > budget:
        raise BudgetExceededError(f"{sys.size}^{k} products exceed the budget {budget}")
    tails, heads = _single_vertex(sys.size)
    val, word = _backend.kernels.paths_max_norm(
        sys.stacked(), np.asarray(sys.weights, dtype=float), tails, heads, k
    )
    return float(val), tuple(int(i) for i in word)


# --- similarity preconditioning -------------------------------------------------

def _tri(theta: np.ndarray, d: int) -> np.ndarray:
    L = np.zeros((d, d))
    L[np.tril_indices(d, -1)] = theta[d:]
    L[np.diag_indices(d)] = np.exp(np.clip(theta[:d], -30.0, 30.0))
    return L


def _eigenbasis_start(M: np.ndarray) -> np.ndarray | None:
    """``theta`` of the lower-triangular ``L`` with ``L L^T = T T^T``, ``T`` a real eigenbasis of ``M``.

    In that basis ``M`` is block diagonal with 2x2 rotation-scaling blocks,
    so its spectral norm equals its spectral radius when ``M`` is
    diagonalisable. Returns ``None`` for ill-conditioned bases.
    """
    d = M.shape[0]
    ev, U = np.linalg.eig(M)
    cols, k = [], 0
    while k < d:
        u = U[:, k]
        if abs(ev[k].imag) > 1e-12 and k + 1 < d:
            cols += [u.real, u.imag]
            k += 2
        else:
            cols.append(u.real)
            k += 1
    T = np.array(cols[:d]).T
    if not np.all(np.isfinite(T)) or np.linalg.cond(T) > 1e8:
        return None
    T = T / np.linalg.norm(T, axis=0)
    try:
        L = np.linalg.cholesky(T @ T.T)
    except np.linalg.LinAlgError:
        return None
    return np.concatenate([np.log(np.diag(L)), L[np.tril_indices(d, -1)]])


def precondition(mats: Sequence[np.ndarray], weights: Sequence[float], maxiter: int = 4000) -> np.ndarray:
    """A similarity ``T`` making ``max ||T^-1 A_i T||^(1/alpha_i)`` small.

    Any ``T`` yields a valid norm ``||T^-1 x||``, so this only affects how
    fast the branch and bound closes. ``T`` is lower triangular with a
    positive diagonal, searched by Nelder-Mead from the best of the identity
    and the real eigenbases of all products of length at most two.
    """
    d = mats[0].shape[0]
    if d == 1:
        return np.eye(1)
    # the search runs on the family divided by its own scale and rounded to
    # 12 digits, so dilated families get the same T; T only affects speed
    scale = max(_root(spectral_radius(A), a) for A, a in zip(mats, weights))
    if scale <= 0.0:
        scale = max(_root(operator_norm(A), a) for A, a in zip(mats, weights)) or 1.0
    unit = [np.vectorize(lambda x: float(f"{x:.12g}"))(A / scale ** a) for A, a in zip(mats, weights)]

    def f(theta):
        L = _tri(theta, d)
        Li = np.linalg.inv(L)
        return max(
            _root(operator_norm(Li @ A @ L), a) for A, a in zip(unit, weights)
        )

    starts = [np.zeros(d + d * (d - 1) // 2)]
    prods = unit + [A @ B for A in unit for B in unit]
    for M in prods:
        th = _eigenbasis_start(M)
        if th is not None:
            starts.append(th)
    vals = [f(th) for th in starts]
    theta0 = starts[int(np.argmin(vals))]
    res = scipy.optimize.minimize(
        f, theta0, method="Nelder-Mead",
        options={"maxiter": maxiter, "xatol": 1e-8, "fatol": 1e-10, "adaptive": True},
    )
    best = res.x if res.fun < f(theta0) else theta0
    return _tri(best, d)


# --- branch and bound ----------------------------------------------------------

@dataclass(frozen=True)
class JsrBracket:
    """Certified bracket ``lower <= rho <= upper``.

    ``lower`` is realised by the product ``witness`` (application order).
    """

    lower: float
    upper: float
    witness: tuple[int, ...]
    converged: bool
    nodes: int
    transform: np.ndarray | None = field(default=None, repr=False)

    @property
    def width(self) -> float:
        return self.upper - self.lower


def gripenberg(sys: WeightedSystem, eps: float = 1e-6, budget: int = 200_000,
               transform: np.ndarray | bool = True, max_depth: int = 200) -> JsrBracket:
    """Best-first branch and bound for the weighted joint spectral radius.

    Products are expanded in order of decreasing ``||Pi||^(1/|Pi|)``; a node
    is discarded once that value falls below ``lambda + eps`` where
    ``lambda`` is the best normalised spectral radius seen so far. The
    discarded and unexpanded nodes always form a cut set, so
    ``upper = max(lambda + eps, largest open node)`` is valid even when the
    node budget or ``max_depth`` stops the search.

    ``transform`` may be a similarity matrix ``T`` (norm ``||T^-1 x||_2``),
    ``True`` to compute one with :func:`precondition`, or ``False``.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    if transform is True:
        T = precondition(sys.matrices, sys.weights)
    elif transform is False or transform is None:
        T = np.eye(sys.dim)
    else:
        T = np.asarray(transform, dtype=float)
    Ti = np.linalg.inv(T)
    mats = [Ti @ A @ T for A in sys.matrices]
    w = sys.weights

    lam = -1.0
    witness: tuple[int, ...] = ()
    for i, A in enumerate(sys.matrices):
        r = _root(spectral_radius(A), w[i])
        if r > lam:
            lam, witness = r, (i,)

    # nodes hold Pi = exp(s) Q with ||Q|| = 1, so long products cannot overflow;
    # words are cons cells (last mode, prefix) so extending one is O(1)
    heap: list = []
    frozen = 0.0
    counter = 0
    nodes = 0

    def unroll(cell):
        out = []
        while cell is not None:
            out.append(cell[0])
            cell = cell[1]
        return tuple(reversed(out))

    def push(M, s, word, depth, wt):
        nonlocal lam, witness, counter, frozen
        n = operator_norm(M)
        if n == 0.0:
            return
        s = s + math.log(n)
        Q = M / n
        rq = spectral_radius(Q)
        if rq > 0.0:
            r = math.exp((s + math.log(rq)) / wt)
            # powers of the incumbent only repeat it up to round-off
            if r > lam * (1.0 + 1e-13):
                lam, witness = r, unroll(word)
        nv = math.exp(s / wt)
        if nv >= lam + eps:
            if depth >= max_depth:
                frozen = max(frozen, nv)
            else:
                heapq.heappush(heap, (-nv, counter, word, depth, wt, s, Q))
                counter += 1

    for i, A in enumerate(mats):
        nodes += 1
        push(A, 0.0, (i, None), 1, w[i])

    while heap and nodes < budget:
        negv, _, word, depth, wt, s, Q = heapq.heappop(heap)
        if -negv < lam + eps:
            continue
        for i, A in enumerate(mats):
            nodes += 1
            push(A @ Q, s, (i, word), depth + 1, wt + w[i])

    open_max = frozen if frozen >= lam + eps else 0.0
    while heap:
        negv = heap[0][0]
        if -negv >= lam + eps:
            open_max = max(open_max, -negv)
            break
        heapq.heappop(heap)
    converged = open_max == 0.0
    upper = max(lam + eps, open_max)
    return JsrBracket(lower=lam, upper=upper, witness=canonical_word(witness),
                      converged=converged, nodes=nodes, transform=T)


def canonical_word(word: Sequence[int]) -> tuple[int, ...]:
    """Primitive root of ``word`` in its lexicographically least rotation."""
    word = tuple(word)
    n = len(word)
    if n == 0:
        return word
    for p in range(1, n + 1):
        if n % p == 0 and word == word[:p] * (n // p):
            word = word[:p]
            break
    return min(word[i:] + word[:i] for i in range(len(word)))


class Stability(enum.Enum):
    STABLE_STRICT = "stable_strict"
    MARGINAL = "marginal"
    UNSTABLE = "unstable"


def classify(sys: WeightedSystem, eps: float = 1e-6, budget: int = 200_000,
             bracket: JsrBracket | None = None) -> Stability:
    """Compare the joint spectral radius of the unweighted family with 1."""
    b = bracket if bracket is not None else gripenberg(WeightedSystem.unit(sys.matrices), eps, budget)
    if b.lower > 1.0:
        return Stability.UNSTABLE
    if b.upper < 1.0:
        return Stability.STABLE_STRICT
    return Stability.MARGINAL


def sandwich(rho_unit: float, weights: Sequence[float]) -> tuple[float, float]:
    """Bounds on the weighted radius from the unweighted one."""
    lo, hi = min(weights), max(weights)
    if rho_unit <= 0:
        return 0.0, 0.0
    a, b = rho_unit ** (1.0 / hi), rho_unit ** (1.0 / lo)
    return min(a, b), max(a, b)


@dataclass(frozen=True)
class BisectionResult:
    value: float
    lower: float
    upper: float
    steps: int


def wjsr_bisection_bracket(sys: WeightedSystem, tol: float = 1e-6,
                           inner: Callable[[WeightedSystem, float], JsrBracket] | None = None,
                           max_steps: int = 200, budget: int = 200_000) -> BisectionResult:
    """Weighted radius by bisection on the dilation factor.

    At a trial value ``r`` the unweighted family ``A_i / r^alpha_i`` is
    bracketed by ``inner`` (default: :func:`gripenberg`); the sandwich
    bounds then narrow the weighted bracket whatever the classification.
    When a step makes no progress the inner accuracy is halved and its
    depth cap raised before giving up.
    """
    w = sys.weights
    T = precondition(sys.matrices, w)
    Ti = np.linalg.inv(T)
    lo = max(_root(spectral_radius(A), a) for A, a in zip(sys.matrices, w))
    hi = max(_root(operator_norm(Ti @ A @ T), a) for A, a in zip(sys.matrices, w))
    max_depth = 200
    if inner is None:
        def inner(s, eps):
            return gripenberg(s, eps, budget, transform=T, max_depth=max_depth)
    steps = 0
    stalls = 0
    while hi - lo > tol and steps < max_steps:
        steps += 1
        r = 0.5 * (lo + hi)
        unit = WeightedSystem.unit(dilate(sys, 1.0 / r).matrices)
        eps = max(tol * min(1.0, min(w)) / (4.0 * hi), 1e-14) / (2 ** stalls)
        b = inner(unit, eps)
        wl, _ = sandwich(b.lower, w)
        _, wu = sandwich(b.upper, w)
        new_lo, new_hi = max(lo, r * wl), min(hi, r * wu)
        if new_lo <= lo and new_hi >= hi:
            stalls += 1
            max_depth *= 4  # the default inner solver's cap limits how fine it can decide
            if stalls > 5:
                raise BisectionError("inner solver cannot decide near the radius", lo, hi)
            continue
        lo, hi = new_lo, new_hi
    if hi - lo > tol:
        raise BisectionError("step limit reached", lo, hi)
    return BisectionResult(value=0.5 * (lo + hi), lower=lo, upper=hi, steps=steps)


def wjsr_bisection(sys: WeightedSystem, tol: float = 1e-6,
                   inner: Callable[[WeightedSystem, float], JsrBracket] | None = None) -> float:
    """Weighted joint spectral radius to absolute accuracy ``tol``."""
    return wjsr_bisection_bracket(sys, tol, inner).value
