"""Dense matrix primitives: spectral radius, norms, leading eigenpairs, exp and log."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from ._pykernels import spectral_norm as _norm_small
from ._pykernels import spectral_radius as _radius_small

#: relative modulus gap below which two eigenvalues count as tied
EIG_GAP_RTOL = 1e-8


class BranchCutError(ValueError):
    """Raised when a real logarithm would cross the branch cut."""

    def __init__(self, eigenvalue: complex):
        super().__init__(f"eigenvalue {eigenvalue} lies on the closed negative real axis")
        self.eigenvalue = eigenvalue


@dataclass(frozen=True)
class EigenResult:
    """Leading eigenpair of a square matrix.

    ``vector`` is a real unit vector whose largest-magnitude entry is
    positive, or ``None`` when the leading eigenvalue is not real.
    ``is_unique_simple`` is true when exactly one eigenvalue attains the
    spectral radius and it is simple.
    """

    value: complex
    vector: np.ndarray | None
    is_unique_simple: bool
    modulus_gap: float


def as_square(M, name: str = "matrix") -> np.ndarray:
    A = np.asarray(M, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"{name} must be square, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError(f"{name} has non-finite entries")
    return A


def spectral_radius(M) -> float:
    """Largest eigenvalue modulus."""
    A = as_square(M)
    if A.shape[0] <= 2:
        return float(_radius_small(A))
    return float(np.max(np.abs(np.linalg.eigvals(A))))


def operator_norm(M) -> float:
    """Spectral norm (largest singular value)."""
    A = np.asarray(M, dtype=float)
    if A.ndim != 2:
        raise ValueError("operator_norm expects a matrix")
    if A.size == 0:
        return 0.0
    if A.shape[0] <= 2 and A.shape[1] <= 2 and A.shape[0] == A.shape[1]:
        return float(_norm_small(A))
    return float(np.linalg.norm(A, 2))


def _canonical_sign(v: np.ndarray) -> np.ndarray:
    v = v / np.linalg.norm(v)
    k = int(np.argmax(np.abs(v)))
    return v if v[k] > 0 else -v


def leading_eigenpair(M) -> EigenResult:
    """Leading eigenvalue, its eigenvector and a uniqueness flag."""
    A = as_square(M)
    d = A.shape[0]
    w = np.linalg.eigvals(A)
    order = np.argsort(-np.abs(w), kind="stable")
    w = w[order]
    top = w[0]
    r = abs(top)
    gap = 1.0 if d == 1 else (r - abs(w[1])) / r if r > 0 else 0.0
    real = abs(top.imag) <= 1e-12 * max(r, 1e-300)
    unique = bool(r > 0 and gap > EIG_GAP_RTOL and real)
    vec = None
    if real and r > 0:
        lam = float(top.real)
        # null vector of A - lam I; the SVD keeps it accurate for defective cases
        _, s, vt = np.linalg.svd(A - lam * np.eye(d))
        vec = _canonical_sign(vt[-1])
        top = complex(lam, 0.0)
    return EigenResult(value=complex(top), vector=vec, is_unique_simple=unique, modulus_gap=float(gap))


def expm(M, t: float = 1.0) -> np.ndarray:
    """Matrix exponential ``exp(t M)`` by scaling and squaring with Pade approximants."""
    A = as_square(M)
    return np.asarray(scipy.linalg.expm(t * A), dtype=float)


def logm(M) -> np.ndarray:
    """Principal real logarithm.

    Raises :class:`BranchCutError` if an eigenvalue lies on ``(-inf, 0]``.
    """
    A = as_square(M)
    w = np.linalg.eigvals(A)
    scale = max(1.0, float(np.max(np.abs(w))))
    for lam in w:
        if lam.real <= 0 and abs(lam.imag) <= 1e-12 * scale:
            raise BranchCutError(complex(lam))
    L = scipy.linalg.logm(A)
    L = np.asarray(L)
    if np.iscomplexobj(L):
        L = L.real
    return np.asarray(L, dtype=float)


def product(mats, word) -> np.ndarray:
    """``A_{w_k} ... A_{w_1}`` for a word given in application order."""
    d = np.asarray(mats[word[0]]).shape[0] if len(word) else None
    if d is None:
        raise ValueError("empty word")
    P = np.asarray(mats[word[0]], dtype=float).copy()
    for i in word[1:]:
        P = np.asarray(mats[i], dtype=float) @ P
    return P
