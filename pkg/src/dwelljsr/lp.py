"""Dense two-phase primal simplex for the small LPs used throughout the package.

Problems have the form::

    minimise    c @ x
    subject to  A_eq @ x == b_eq
                A_ub @ x <= b_ub
                lb <= x <= ub

with ``lb`` possibly ``-inf`` and ``ub`` possibly ``+inf``. The pivot loop runs
in the compiled kernel when available.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from . import _backend

FEASTOL = 1e-9
OPTTOL = 1e-9
PIVTOL = 1e-11
MAX_ITER = 100_000


class LpNumericalError(RuntimeError):
    """A solve that was expected to succeed stopped at the iteration cap."""


class LpStatus(enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    ITERATION_LIMIT = "iteration_limit"


@dataclass(frozen=True)
class LpProblem:
    c: np.ndarray
    A_eq: np.ndarray | None = None
    b_eq: np.ndarray | None = None
    A_ub: np.ndarray | None = None
    b_ub: np.ndarray | None = None
    lb: np.ndarray | None = None
    ub: np.ndarray | None = None

    @property
    def n(self) -> int:
        return int(np.asarray(self.c).shape[0])


@dataclass(frozen=True)
class LpSolution:
    status: LpStatus
    x: np.ndarray | None
    objective_value: float
    iterations: int
    phase1_iterations: int = 0
    dropped_rows: tuple[int, ...] = field(default_factory=tuple)

    @property
    def ok(self) -> bool:
        return self.status is LpStatus.OPTIMAL


def _rows(A, b, n, name):
    if A is None:
        return np.zeros((0, n)), np.zeros(0)
    A = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.asarray(b, dtype=float).reshape(-1)
    if A.shape[1] != n or A.shape[0] != b.shape[0]:
        raise ValueError(f"{name} has shape {A.shape} incompatible with {n} variables and rhs {b.shape}")
    return A, b


def to_standard_form(p: LpProblem):
    """Rewrite ``p`` as ``min cs @ z + const`` s.t. ``As @ z == bs``, ``z >= 0``.

    Returns ``(cs, As, bs, const, recover, n_slack_rows)`` where ``recover(z)``
    maps a standard-form point back to the original variables. Rows are
    ordered: equalities, inequalities, finite upper bounds.
    """
    c = np.asarray(p.c, dtype=float).reshape(-1)
    n = c.shape[0]
    Aeq, beq = _rows(p.A_eq, p.b_eq, n, "A_eq")
    Aub, bub = _rows(p.A_ub, p.b_ub, n, "A_ub")
    lb = np.zeros(n) if p.lb is None else np.asarray(p.lb, dtype=float).reshape(-1)
    ub = np.full(n, np.inf) if p.ub is None else np.asarray(p.ub, dtype=float).reshape(-1)
    if lb.shape != (n,) or ub.shape != (n,):
        raise ValueError("bounds must have one entry per variable")
    if np.any(lb > ub):
        raise ValueError("lower bound exceeds upper bound")
    for arr in (c, Aeq, beq, Aub, bub):
        if not np.all(np.isfinite(arr)):
            raise ValueError("LP data must be finite")

    # x = shift + M @ z for z >= 0
    cols = []
    shift = np.zeros(n)
    bound_rows = []
    for j in range(n):
        if np.isfinite(lb[j]):
            shift[j] = lb[j]
            cols.append((j, 1.0))
            if np.isfinite(ub[j]):
                bound_rows.append((len(cols) - 1, ub[j] - lb[j]))
        elif np.isfinite(ub[j]):
            shift[j] = ub[j]
            cols.append((j, -1.0))
        else:
            cols.append((j, 1.0))
            cols.append((j, -1.0))
    nz = len(cols)
    M = np.zeros((n, nz))
    for k, (j, s) in enumerate(cols):
        M[j, k] = s

    n_ub = Aub.shape[0] + len(bound_rows)
    rows_eq = Aeq @ M
    rhs_eq = beq - Aeq @ shift
    rows_ub = np.zeros((n_ub, nz))
    rhs_ub = np.zeros(n_ub)
    rows_ub[: Aub.shape[0]] = Aub @ M
    rhs_ub[: Aub.shape[0]] = bub - Aub @ shift
    for r, (k, cap) in enumerate(bound_rows, start=Aub.shape[0]):
        rows_ub[r, k] = 1.0
        rhs_ub[r] = cap

    m_eq = rows_eq.shape[0]
    As = np.zeros((m_eq + n_ub, nz + n_ub))
    As[:m_eq, :nz] = rows_eq
    As[m_eq:, :nz] = rows_ub
    As[m_eq:, nz:] = np.eye(n_ub)
    bs = np.concatenate([rhs_eq, rhs_ub])
    cs = np.concatenate([M.T @ c, np.zeros(n_ub)])
    const = float(c @ shift)

    def recover(z):
        return shift + M @ z[:nz]

    return cs, As, bs, const, recover, n_ub


def _run(T, basis, n_enter, max_iter, dantzig_limit):
    status, iters = _backend.kernels.simplex_iterate(
        T, basis, n_enter, max_iter, OPTTOL, PIVTOL, dantzig_limit
    )
    return int(status), int(iters)


def solve_standard(cs, As, bs, *, n_slack: int = 0, max_iter: int = MAX_ITER,
                   feastol: float = FEASTOL):
    """Solve ``min cs @ z`` s.t. ``As @ z == bs``, ``z >= 0``.

    The last ``n_slack`` columns of ``As`` must be slack columns of the last
    ``n_slack`` rows (identity block); they seed the initial basis when the
    row's right-hand side is nonnegative.

    Returns ``(status, z, objective, iterations, phase1_iterations, dropped)``.
    """
    As = np.array(As, dtype=float)
    bs = np.array(bs, dtype=float)
    m, nz = As.shape
    if m == 0:
        if np.any(cs < -OPTTOL):
            return LpStatus.UNBOUNDED, None, -np.inf, 0, 0, ()
        return LpStatus.OPTIMAL, np.zeros(nz), 0.0, 0, 0, ()
    neg = bs < 0
    As[neg] *= -1.0
    bs[neg] *= -1.0

    basis = np.full(m, -1, dtype=np.intp)
    first_slack_row = m - n_slack
    for i in range(first_slack_row, m):
        if not neg[i]:
            basis[i] = nz - n_slack + (i - first_slack_row)
    need = np.flatnonzero(basis < 0)
    n_art = need.size
    T = np.zeros((m + 1, nz + n_art + 1))
    T[:m, :nz] = As
    T[:m, -1] = bs
    for k, i in enumerate(need):
        T[i, nz + k] = 1.0
        basis[i] = nz + k
    dantzig_limit = 50 * (m + nz)

    it1 = 0
    dropped: list[int] = []
    if n_art:
        T[m, :nz] = -As[need].sum(axis=0)
        T[m, -1] = -bs[need].sum()
        status, it1 = _run(T, basis, nz, max_iter, dantzig_limit)
        if status == 2:
            return LpStatus.ITERATION_LIMIT, None, np.nan, it1, it1, ()
        infeas = -T[m, -1]
        if infeas > feastol * max(1.0, float(np.abs(bs).max())):
            return LpStatus.INFEASIBLE, None, np.nan, it1, it1, ()
        # drive zero-level artificials out of the basis
        for i in range(m):
            if basis[i] >= nz:
                row = T[i, :nz]
                cand = np.flatnonzero(np.abs(row) > 1e-9)
                if cand.size:
                    j = int(cand[np.argmax(np.abs(row[cand]))])
                    T[i] /= T[i, j]
                    piv = T[:, j].copy()
                    piv[i] = 0.0
                    T -= np.outer(piv, T[i])
                    basis[i] = j
                else:
                    dropped.append(i)
        if dropped:
            keep = np.setdiff1d(np.arange(m), dropped)
            T = np.ascontiguousarray(np.vstack([T[keep], T[m:]]))
            basis = np.ascontiguousarray(basis[keep])
            m = keep.size
        T = np.ascontiguousarray(np.delete(T, np.s_[nz : nz + n_art], axis=1))

    T[m, :] = 0.0
    T[m, :nz] = cs
    cb = cs[basis]
    T[m, :] -= cb @ T[:m, :]
    status, it2 = _run(T, basis, nz, max_iter - it1, dantzig_limit)
    iters = it1 + it2
    if status == 1:
        return LpStatus.UNBOUNDED, None, -np.inf, iters, it1, tuple(dropped)
    if status == 2:
        return LpStatus.ITERATION_LIMIT, None, np.nan, iters, it1, tuple(dropped)

    z = np.zeros(nz)
    z[basis] = T[:m, -1]
    # recompute basic values from the original data to shed pivot round-off
    keep = np.setdiff1d(np.arange(As.shape[0]), dropped)
    B = As[np.ix_(keep, basis)]
    try:
        if np.linalg.cond(B) < 1e10:
            zb = np.linalg.solve(B, bs[keep])
            if np.all(zb > -1e-9 * max(1.0, float(np.abs(zb).max()))):
                z[:] = 0.0
                z[basis] = zb
    except np.linalg.LinAlgError:  # pragma: no cover
        pass
    z = np.maximum(z, 0.0)
    return LpStatus.OPTIMAL, z, float(cs @ z), iters, it1, tuple(dropped)


def solve(p: LpProblem, *, max_iter: int = MAX_ITER, feastol: float = FEASTOL) -> LpSolution:
    """Solve ``p`` with the two-phase simplex method."""
    cs, As, bs, const, recover, n_slack = to_standard_form(p)
    status, z, obj, iters, it1, dropped = solve_standard(
        cs, As, bs, n_slack=n_slack, max_iter=max_iter, feastol=feastol
    )
    if status is not LpStatus.OPTIMAL:
        return LpSolution(status, None, obj, iters, it1, dropped)
    x = recover(z)
    return LpSolution(status, x, float(np.asarray(p.c, dtype=float) @ x), iters, it1, dropped)


def dual_problem(p: LpProblem) -> LpProblem:
    """Dual of an LP in the form ``min c@x, A_eq x = b_eq, A_ub x <= b_ub, x >= 0``.

    The dual is ``max b_eq@y + b_ub@w`` s.t. ``A_eq.T y + A_ub.T w <= c``,
    ``w <= 0``, returned as a minimisation of the negated objective.
    """
    if p.lb is not None and np.any(np.asarray(p.lb) != 0):
        raise ValueError("dual_problem expects x >= 0")
    if p.ub is not None and np.any(np.isfinite(p.ub)):
        raise ValueError("dual_problem expects no finite upper bounds")
    c = np.asarray(p.c, dtype=float)
    n = c.shape[0]
    Aeq, beq = _rows(p.A_eq, p.b_eq, n, "A_eq")
    Aub, bub = _rows(p.A_ub, p.b_ub, n, "A_ub")
    me, mi = Aeq.shape[0], Aub.shape[0]
    cd = -np.concatenate([beq, bub])
    A = np.hstack([Aeq.T, Aub.T])
    lb = np.concatenate([np.full(me, -np.inf), np.full(mi, -np.inf)])
    ub = np.concatenate([np.full(me, np.inf), np.zeros(mi)])
    return LpProblem(c=cd, A_ub=A, b_ub=c, lb=lb, ub=ub)
