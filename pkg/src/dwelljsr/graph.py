"""Weighted and mixed systems on multigraphs: paths, candidates, multinorms."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import _backend
from .ipa import ETA, MAX_VERTICES, TIE_RTOL, IpaStatus, NilpotentError, ReducibleError, _Grower, default_workers
from .linalg import EigenResult, expm, leading_eigenpair, operator_norm, spectral_radius
from .mixed import BoundsReport
from .polytope import SymPolytope, gauge, mu_shift, reduce_vertices, same_up_to_sign
from .weighted import BudgetExceededError, WeightedSystem


@dataclass(frozen=True, eq=False)
class Edge:
    """Operator ``A: L_tail -> L_head`` with weight ``alpha``.

    ``tag`` is free-form provenance, e.g. ``("jump", k)`` or ``("flow", k)``.
    """

    tail: int
    head: int
    A: np.ndarray
    alpha: float
    label: str = ""
    tag: tuple | None = None


@dataclass(frozen=True, eq=False)
class GraphSystem:
    dims: tuple[int, ...]
    edges: tuple[Edge, ...]
    continuous: tuple[tuple[np.ndarray, ...], ...] = ()

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        if not dims or any(d < 1 for d in dims):
            raise ValueError("every vertex needs a positive dimension")
        n = len(dims)
        edges = []
        for k, e in enumerate(self.edges):
            if not (0 <= e.tail < n and 0 <= e.head < n):
                raise ValueError(f"edge {k} has endpoints outside the graph")
            A = np.array(e.A, dtype=float, ndmin=2)
            if A.shape != (dims[e.head], dims[e.tail]):
                raise ValueError(f"edge {k} operator has shape {A.shape}, expected {(dims[e.head], dims[e.tail])}")
            if not np.all(np.isfinite(A)):
                raise ValueError(f"edge {k} operator has non-finite entries")
            a = float(e.alpha)
            if not (a > 0 and math.isfinite(a)):
                raise ValueError(f"edge {k} needs a positive weight")
            A.setflags(write=False)
            edges.append(Edge(e.tail, e.head, A, a, e.label or f"e{k}", e.tag))
        if not edges:
            raise ValueError("a graph system needs at least one edge")
        cont = tuple(self.continuous) or tuple(() for _ in dims)
        if len(cont) != n:
            raise ValueError("one continuous family per vertex")
        cont = tuple(
            tuple(np.asarray(B, dtype=float).reshape(dims[i], dims[i]) for B in fam)
            for i, fam in enumerate(cont)
        )
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "edges", tuple(edges))
        object.__setattr__(self, "continuous", cont)
        if not self._strongly_connected():
            raise ValueError("the multigraph must be strongly connected")

    @property
    def n(self) -> int:
        return len(self.dims)

    def _reach(self, forward: bool) -> set[int]:
        seen = {0}
        stack = [0]
        while stack:
            u = stack.pop()
            for e in self.edges:
                a, b = (e.tail, e.head) if forward else (e.head, e.tail)
                if a == u and b not in seen:
                    seen.add(b)
                    stack.append(b)
        return seen

    def _strongly_connected(self) -> bool:
        return len(self._reach(True)) == self.n and len(self._reach(False)) == self.n

    def out_edges(self, i: int) -> list[int]:
        return [k for k, e in enumerate(self.edges) if e.tail == i]

    @property
    def uniform_dim(self) -> int | None:
        return self.dims[0] if len(set(self.dims)) == 1 else None

    def arrays(self):
        mats = np.ascontiguousarray(np.stack([e.A for e in self.edges]))
        w = np.array([e.alpha for e in self.edges], dtype=float)
        tails = np.array([e.tail for e in self.edges], dtype=np.intp)
        heads = np.array([e.head for e in self.edges], dtype=np.intp)
        return mats, w, tails, heads

    @classmethod
    def from_weighted(cls, sys: WeightedSystem) -> "GraphSystem":
        """One vertex with a self-loop per mode: the unconstrained system as a graph."""
        edges = tuple(
            Edge(0, 0, A, a, lab, ("mode", i))
            for i, (A, a, lab) in enumerate(zip(sys.matrices, sys.weights, sys.labels))
        )
        return cls((sys.dim,), edges)


@dataclass(frozen=True, eq=False)
class GraphPath:
    """Edges in traversal order with their composed operator."""

    edges: tuple[int, ...]
    weight: float
    matrix: np.ndarray
    start: int
    end: int

    @property
    def closed(self) -> bool:
        return self.start == self.end

    @classmethod
    def of(cls, gs: GraphSystem, edges: Sequence[int]) -> "GraphPath":
        edges = tuple(int(k) for k in edges)
        if not edges:
            raise ValueError("empty path")
        first = gs.edges[edges[0]]
        M = first.A.copy()
        w = first.alpha
        for a, b in zip(edges, edges[1:]):
            if gs.edges[a].head != gs.edges[b].tail:
                raise ValueError(f"edges {a} and {b} do not connect")
            M = gs.edges[b].A @ M
            w += gs.edges[b].alpha
        return cls(edges, w, M, first.tail, gs.edges[edges[-1]].head)

    def then(self, gs: GraphSystem, other: "GraphPath") -> "GraphPath":
        return GraphPath.of(gs, self.edges + other.edges)

    def normalized_radius(self) -> float:
        if not self.closed:
            raise ValueError("spectral radius needs a closed path")
        r = spectral_radius(self.matrix)
        return math.exp(math.log(r) / self.weight) if r > 0 else 0.0

    def label(self, gs: GraphSystem) -> str:
        """Product notation (last edge first)."""
        labs = [gs.edges[k].label for k in reversed(self.edges)]
        sep = "" if all(len(s) == 1 for s in labs) else " "
        return sep.join(labs)


def power_label(labels: Sequence[str]) -> str:
    """Compress runs: ``["B1", "B1", "A2"] -> "B1^2 A2"``."""
    out = []
    i = 0
    while i < len(labels):
        j = i
        while j < len(labels) and labels[j] == labels[i]:
            j += 1
        out.append(labels[i] if j - i == 1 else f"{labels[i]}^{j - i}")
        i = j
    return " ".join(out)


def _path_count(gs: GraphSystem, k: int) -> int:
    C = np.zeros((gs.n, gs.n), dtype=object)
    for e in gs.edges:
        C[e.head, e.tail] += 1
    M = np.identity(gs.n, dtype=object)
    for _ in range(k):
        M = C.dot(M)
    return int(sum(M.flatten()))


def graph_rho_k_exact(gs: GraphSystem, k: int, budget: int = 10**7) -> tuple[float, tuple[int, ...]]:
    """``max ||Pi_w||^(1/|w|)`` over all paths with exactly ``k`` edges."""
    if k < 1:
        raise ValueError("k must be positive")
    if _path_count(gs, k) > budget:
        raise BudgetExceededError(f"more than {budget} paths of length {k}")
    if gs.uniform_dim is not None:
        val, word = _backend.kernels.paths_max_norm(*gs.arrays(), k)
        return float(val), tuple(int(i) for i in word)
    best = [-1.0, ()]

    def rec(path, M, w):
        if len(path) == k:
            n = operator_norm(M)
            v = math.exp(math.log(n) / w) if n > 0 else 0.0
            if v > best[0]:
                best[0], best[1] = v, tuple(path)
            return
        for e in gs.out_edges(gs.edges[path[-1]].head):
            E = gs.edges[e]
            rec(path + [e], E.A @ M, w + E.alpha)

    for e, E in enumerate(gs.edges):
        rec([e], E.A, E.alpha)
    return best[0], best[1]


def _closed_search_generic(gs, max_len, max_weight, tie_rtol, max_nodes):
    """Prenecklace search over edges for graphs with unequal vertex dimensions."""
    E = len(gs.edges)
    a = [0] * (max_len + 1)
    state = {"best": -1.0, "hits": [], "nodes": 0, "truncated": False}
    limit = max_weight + 1e-12

    def rec(t, p, M, w):
        lo = a[t - p] if t > 1 else 0
        for c in range(lo, E):
            e = gs.edges[c]
            if t > 1 and e.tail != gs.edges[a[t - 1]].head:
                continue
            wt = w + e.alpha
            if wt > limit:
                continue
            if state["nodes"] >= max_nodes:
                state["truncated"] = True
                return
            state["nodes"] += 1
            a[t] = c
            P = e.A if M is None else e.A @ M
            q = p if (t > 1 and c == a[t - p]) else t
            if q == t and e.head == gs.edges[a[1]].tail:
                r = spectral_radius(P)
                v = math.exp(math.log(r) / wt) if r > 0 else 0.0
                if v > state["best"]:
                    state["best"] = v
                    cut = v * (1 - tie_rtol)
                    state["hits"] = [h for h in state["hits"] if h[0] >= cut]
                    state["hits"].append((v, tuple(a[1 : t + 1])))
                elif v >= state["best"] * (1 - tie_rtol):
                    state["hits"].append((v, tuple(a[1 : t + 1])))
            if t < max_len:
                rec(t + 1, q, P, wt)

    rec(1, 1, None, 0.0)
    best = state["best"]
    words = [w for v, w in state["hits"] if v >= best * (1 - tie_rtol)]
    return best, words, state["nodes"], state["truncated"]


def canonical_cycle(gs: GraphSystem, edges: Sequence[int]) -> tuple[int, ...]:
    """Rotation of a closed path starting at its least vertex with the least product-notation word."""
    edges = tuple(edges)
    n = len(edges)
    rots = [edges[i:] + edges[:i] for i in range(n)]
    root = min(gs.edges[r[0]].tail for r in rots)
    rots = [r for r in rots if gs.edges[r[0]].tail == root]
    return min(rots, key=lambda r: tuple(reversed(r)))


@dataclass(frozen=True, eq=False)
class GraphCandidate:
    path: GraphPath
    rho_c: float
    eigen: EigenResult
    ties: tuple[tuple[int, ...], ...] = ()
    nodes: int = 0
    truncated: bool = False

    @property
    def base(self) -> int:
        return self.path.start


def graph_find_candidate(gs: GraphSystem, max_len: int, max_weight: float | None = None,
                         tie_rtol: float = TIE_RTOL, max_nodes: int = 10**7) -> GraphCandidate:
    """Simple closed path maximising ``rho(Pi)^(1/|w|)`` among paths up to ``max_len`` edges."""
    if max_len < 1:
        raise ValueError("max_len must be at least 1")
    mw = math.inf if max_weight is None else float(max_weight)
    if gs.uniform_dim is not None:
        best, words, nodes, trunc = _backend.kernels.closed_path_search(
            *gs.arrays(), int(max_len), mw, float(tie_rtol), int(max_nodes)
        )
    else:
        best, words, nodes, trunc = _closed_search_generic(gs, max_len, mw, tie_rtol, max_nodes)
    if best <= 0.0:
        raise NilpotentError("all closed paths up to the search length are nilpotent")
    words = sorted({canonical_cycle(gs, w) for w in words},
                   key=lambda w: (len(w), gs.edges[w[0]].tail, tuple(reversed(w))))
    path = GraphPath.of(gs, words[0])
    return GraphCandidate(path, path.normalized_radius(), leading_eigenpair(path.matrix),
                          tuple(words[1:]), int(nodes), bool(trunc))


def graph_candidate_from_path(gs: GraphSystem, edges: Sequence[int]) -> GraphCandidate:
    path = GraphPath.of(gs, canonical_cycle(gs, edges))
    return GraphCandidate(path, path.normalized_radius(), leading_eigenpair(path.matrix))


@dataclass(frozen=True, eq=False)
class Multinorm:
    polytopes: tuple[SymPolytope, ...]

    def norm(self, i: int, x) -> float:
        return gauge(self.polytopes[i].vertices, x)

    @property
    def spans(self) -> bool:
        return all(P.spans for P in self.polytopes)


@dataclass(frozen=True, eq=False)
class GraphIpaOutcome:
    status: IpaStatus
    multinorm: Multinorm | None
    rho: float
    iterations: int
    trace: tuple[tuple[int, ...], ...] = ()
    completed_span: bool = False
    raw: tuple[np.ndarray, ...] = field(default=(), repr=False)

    @property
    def converged(self) -> bool:
        return self.status is IpaStatus.CONVERGED


def _rank(V):
    if not V:
        return 0
    M = np.array(V)
    return int(np.linalg.matrix_rank(M, tol=1e-10 * max(1.0, np.abs(M).max())))


def graph_ipa(gs: GraphSystem, cand: GraphCandidate, k_max: int = 100, eta: float = ETA,
              workers: int | None = None, complete_span: bool = True,
              stall_rounds: int = 3, max_vertices: int = MAX_VERTICES) -> GraphIpaOutcome:
    """Polytope multinorm growth on a graph.

    The base vertex is seeded with the candidate's leading eigenvector and
    every other vertex on the cycle with its partial-product image. Each
    round maps the newest points of vertex ``i`` along every edge leaving
    ``i`` and keeps the images not strictly inside the target polytope.
    Growth stops after ``k_max`` rounds or once more than ``max_vertices``
    vertex pairs are stored in total.
    """
    rho = cand.rho_c
    if not cand.eigen.is_unique_simple or cand.eigen.vector is None:
        return GraphIpaOutcome(IpaStatus.DEGENERATE, None, rho, 0)
    At = [e.A / rho ** e.alpha for e in gs.edges]
    n = gs.n
    V: list[list[np.ndarray]] = [[] for _ in range(n)]
    R: list[list[np.ndarray]] = [[] for _ in range(n)]

    def seed(i, y):
        if not any(same_up_to_sign(y, u) for u in V[i]) and (not V[i] or gauge(np.array(V[i]), y) >= 1 - eta):
            V[i].append(y)
            R[i].append(y)

    x = cand.eigen.vector.copy()
    seed(cand.base, x)
    for k in cand.path.edges[:-1]:
        x = At[k] @ x
        seed(gs.edges[k].head, x)
    for w in cand.ties:
        p = GraphPath.of(gs, w)
        e = leading_eigenpair(p.matrix)
        if e.is_unique_simple and e.vector is not None:
            x = e.vector.copy()
            seed(p.start, x)
            for k in w[:-1]:
                x = At[k] @ x
                seed(gs.edges[k].head, x)

    grower = _Grower(eta, workers or default_workers())
    trace = [tuple(len(v) for v in V)]
    completed = False
    stall = 0
    last = tuple(_rank(v) for v in V)
    rounds = 0
    try:
        while rounds < k_max and sum(len(v) for v in V) <= max_vertices:
            if not any(R):
                short = [i for i in range(n) if _rank(V[i]) < gs.dims[i]]
                if complete_span and short:
                    for i in short:
                        if V[i]:
                            _, s, vt = np.linalg.svd(np.array(V[i]))
                            r = int(np.sum(s > 1e-10 * s[0]))
                            scale = 1e-2 * min(np.linalg.norm(v) for v in V[i])
                            extra = [scale * c for c in vt[r:]]
                        else:
                            extra = [1e-2 * c for c in np.eye(gs.dims[i])]
                        V[i].extend(extra)
                        R[i].extend(extra)
                    completed = True
                else:
                    break
            rounds += 1
            images: list[list[np.ndarray]] = [[] for _ in range(n)]
            for i in range(n):
                for v in R[i]:
                    for k in gs.out_edges(i):
                        images[gs.edges[k].head].append(At[k] @ v)
            R = [[] for _ in range(n)]
            for j in range(n):
                if not images[j]:
                    continue
                if not V[j]:
                    V[j].append(images[j][0])
                    R[j].append(images[j][0])
                    images[j] = images[j][1:]
                R[j].extend(grower.insert(V[j], images[j]))
            trace.append(tuple(len(v) for v in V))
            ranks = tuple(_rank(v) for v in V)
            if any(R) and any(r < d for r, d in zip(ranks, gs.dims)):
                stall = stall + 1 if ranks == last else 0
                if stall >= stall_rounds:
                    i = next(i for i, (r, d) in enumerate(zip(ranks, gs.dims)) if r < d)
                    raise ReducibleError(ranks[i], gs.dims[i], rounds)
            last = ranks
    finally:
        grower.close()

    spans = all(_rank(V[i]) == gs.dims[i] for i in range(n))
    done = not any(R) and (spans or not complete_span)
    polys = tuple(SymPolytope(reduce_vertices(np.array(v))) if v else SymPolytope(np.zeros((1, gs.dims[i])))
                  for i, v in enumerate(V))
    return GraphIpaOutcome(
        IpaStatus.CONVERGED if done else IpaStatus.BUDGET_EXCEEDED,
        Multinorm(polys), rho, rounds, tuple(trace), completed,
        tuple(np.array(v) for v in V),
    )


def edge_excess(gs: GraphSystem, mn: Multinorm, rho: float) -> float:
    """Smallest ``eps`` with ``rho^-alpha ||A v||_head <= e^{alpha eps}`` on every edge and vertex."""
    eps = -math.inf
    for e in gs.edges:
        Pt, Ph = mn.polytopes[e.tail], mn.polytopes[e.head]
        nmax = max(gauge(Ph.vertices, e.A @ v) for v in Pt.vertices)
        if nmax > 0:
            eps = max(eps, (math.log(nmax) - e.alpha * math.log(rho)) / e.alpha)
    return eps


def verify_multinorm(gs: GraphSystem, mn: Multinorm, rho: float, eps: float,
                     delta: float = 1e-4) -> bool:
    """Extremality of ``mn`` up to ``eps``, including per-vertex flows when present.

    Edges: ``rho^-alpha ||A v||_head <= e^{alpha eps} + 1e-12`` at every
    vertex ``v`` of the tail polytope. Flows: the shift bound of each
    vertex family must not exceed ``log rho + eps``.
    """
    if len(mn.polytopes) != gs.n:
        raise ValueError("one polytope per graph vertex")
    for i, P in enumerate(mn.polytopes):
        if P.dim != gs.dims[i]:
            raise ValueError(f"polytope {i} has dimension {P.dim}, vertex space has {gs.dims[i]}")
    if not mn.spans:
        return False
    for e in gs.edges:
        Pt, Ph = mn.polytopes[e.tail], mn.polytopes[e.head]
        bound = math.exp(e.alpha * eps) + 1e-12
        scale = rho ** (-e.alpha)
        for v in Pt.vertices:
            if scale * gauge(Ph.vertices, e.A @ v) > bound:
                return False
    for i, fam in enumerate(gs.continuous):
        if fam and mu_shift(mn.polytopes[i], fam, delta).mu > math.log(rho) + eps + 1e-12:
            return False
    return True


def with_flow_loops(gs: GraphSystem, tau: float) -> GraphSystem:
    """Materialise each vertex's continuous modes as self-loops ``e^{tau B}`` of weight ``tau``."""
    edges = list(gs.edges)
    for i, fam in enumerate(gs.continuous):
        for j, B in enumerate(fam):
            edges.append(Edge(i, i, expm(B, tau), tau, f"~B{i + 1}.{j + 1}", ("flow", i, j)))
    return GraphSystem(gs.dims, tuple(edges), tuple(() for _ in gs.dims))


def multinorm_mu(mn: Multinorm, flows: Sequence[Sequence[np.ndarray]], gs: GraphSystem,
                 delta: float) -> tuple[float | None, float | None, list[float | None]]:
    """Flow and edge growth bounds in a multinorm.

    Returns ``(mu_flow, mu_jump, per_vertex_flow)``: ``mu_flow`` is the
    largest per-vertex shift bound, ``mu_jump`` the largest
    ``log ||A_e||_{tail -> head} / alpha_e`` over edges.
    """
    per = []
    for i, fam in enumerate(flows):
        per.append(mu_shift(mn.polytopes[i], fam, delta).mu if len(fam) else None)
    flows_mu = [p for p in per if p is not None]
    mu_flow = max(flows_mu) if flows_mu else None
    mu_jump = None
    for e in gs.edges:
        Pt, Ph = mn.polytopes[e.tail], mn.polytopes[e.head]
        nmax = max(gauge(Ph.vertices, e.A @ v) for v in Pt.vertices)
        val = math.log(nmax) / e.alpha if nmax > 0 else -math.inf
        mu_jump = val if mu_jump is None else max(mu_jump, val)
    return mu_flow, mu_jump, per


def graph_bounds(gs: GraphSystem, tau: float | None = None, *, max_len: int = 8,
                 max_weight: float | None = None, k_max: int = 100, eta: float = ETA,
                 delta: float = 1e-4, workers: int | None = None,
                 flows: Sequence[Sequence[np.ndarray]] | None = None) -> BoundsReport:
    """Bracket for a (mixed) system on a graph.

    With per-vertex continuous families and ``tau`` given, the flows are
    discretised as self-loops first. ``flows`` overrides the per-vertex
    generators used for the upper bound.
    """
    has_flows = any(len(f) for f in gs.continuous)
    if has_flows and tau is None:
        raise ValueError("tau is required when vertices carry continuous modes")
    work = with_flow_loops(gs, tau) if has_flows else gs
    flows = gs.continuous if flows is None else flows
    cand = graph_find_candidate(work, max_len, max_weight)
    beta = math.log(cand.rho_c) if cand.rho_c > 0 else -math.inf
    out = graph_ipa(work, cand, k_max, eta, workers)
    mu = mu_flow = mu_jump = eps = None
    per = []
    if out.multinorm is not None and out.multinorm.spans:
        eps = edge_excess(work, out.multinorm, cand.rho_c)
        mu_flow, mu_jump, per = multinorm_mu(out.multinorm, flows, work, delta)
        vals = [v for v in (mu_flow, mu_jump) if v is not None]
        mu = max(vals) if vals else None
    return BoundsReport(
        tau=float(tau) if tau is not None else math.nan,
        beta=beta,
        mu=mu,
        rho=cand.rho_c,
        witness=cand.path.edges,
        witness_label=power_label([work.edges[k].label for k in reversed(cand.path.edges)]),
        status=out.status.value,
        iterations=out.iterations,
        eps_extremal=eps,
        mu_flow=mu_flow,
        mu_jump=mu_jump,
        delta=delta,
        certificate=out.multinorm,
        trace=out.trace,
        extra={"vertex_mu": per, "graph": work, "candidate": cand},
    )
