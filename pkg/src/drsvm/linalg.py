"""Dense symmetric linear algebra shared by the reduction and kernel modules.

Symmetric matrices are plain ``numpy`` arrays; :func:`sym_matrix` validates
and returns an exactly symmetric copy.
"""
from __future__ import annotations

from typing import NamedTuple

import numpy as np

__all__ = [
    "EigenDecomposition",
    "sym_matrix",
    "eig_sym",
    "jacobi_eigh",
    "covariance",
    "psd_project",
]


class EigenDecomposition(NamedTuple):
    """Eigenvalues sorted descending with matching orthonormal columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def sym_matrix(m, tol: float = 1e-10) -> np.ndarray:
    """Validate a square, finite, (nearly) symmetric matrix.

    Returns a float copy whose lower triangle mirrors the upper one exactly.
    """
    a = np.array(m, dtype=float, copy=True)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise ValueError(f"expected a non-empty square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    scale = max(1.0, float(np.max(np.abs(a))))
    if np.max(np.abs(a - a.T)) > tol * scale:
        raise ValueError("matrix is not symmetric")
    iu = np.triu_indices(a.shape[0], 1)
    a.T[iu] = a[iu]
    return a


def _fix_signs(vecs: np.ndarray) -> np.ndarray:
    # largest-magnitude component positive; argmax picks the lowest index on ties
    idx = np.argmax(np.abs(vecs), axis=0)
    signs = np.sign(vecs[idx, np.arange(vecs.shape[1])])
    signs[signs == 0] = 1.0
    return vecs * signs


def eig_sym(m, method: str = "lapack") -> EigenDecomposition:
    """Full eigendecomposition of a symmetric matrix.

    Parameters
    ----------
    m : array_like, shape (n, n)
        Symmetric input.
    method : {"lapack", "jacobi"}
        ``"lapack"`` calls ``numpy.linalg.eigh``; ``"jacobi"`` runs
        :func:`jacobi_eigh` (slow, intended for small matrices and for
        cross-checking).

    Returns
    -------
    EigenDecomposition
        Eigenvalues descending; each eigenvector has its largest-magnitude
        component positive.
    """
    a = sym_matrix(m)
    if method == "lapack":
        w, v = np.linalg.eigh(a)
    elif method == "jacobi":
        w, v = jacobi_eigh(a)
    else:
        raise ValueError(f"unknown eigensolver {method!r}")
    order = np.argsort(-w, kind="stable")
    return EigenDecomposition(w[order], _fix_signs(v[:, order]))


def jacobi_eigh(a: np.ndarray, tol: float = 1e-12, max_sweeps: int = 100):
    """Cyclic Jacobi eigenvalue iteration for a symmetric matrix.

    Sweeps over all (p, q) pairs until the off-diagonal Frobenius norm falls
    below ``tol`` times the Frobenius norm of the input. Returns unsorted
    ``(eigenvalues, eigenvectors)``.
    """
    a = np.array(a, dtype=float, copy=True)
    n = a.shape[0]
    v = np.eye(n)
    norm = max(np.linalg.norm(a), np.finfo(float).tiny)
    for _ in range(max_sweeps):
        off = np.sqrt(max(np.sum(a * a) - np.sum(np.diag(a) ** 2), 0.0))
        if off <= tol * norm:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= 1e-300:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                if theta == 0.0:
                    t = 1.0
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                ap = a[:, p].copy()
                aq = a[:, q].copy()
                a[:, p] = c * ap - s * aq
                a[:, q] = s * ap + c * aq
                rp = a[p, :].copy()
                rq = a[q, :].copy()
                a[p, :] = c * rp - s * rq
                a[q, :] = s * rp + c * rq
                a[p, q] = a[q, p] = 0.0
                vp = v[:, p].copy()
                v[:, p] = c * vp - s * v[:, q]
                v[:, q] = s * vp + c * v[:, q]
    else:
        raise RuntimeError(f"Jacobi iteration did not converge in {max_sweeps} sweeps")
    return np.diag(a).copy(), v


def covariance(data):
    """Sample mean and covariance with divisor M (population form).

    Parameters
    ----------
    data : array_like, shape (M, N)
        One sample per row, ``M >= 2``.

    Returns
    -------
    mean : ndarray, shape (N,)
    cov : ndarray, shape (N, N)
    """
    x = np.asarray(data, dtype=float)
    if x.ndim != 2:
        raise ValueError("data must be a 2-D array with samples as rows")
    if x.shape[0] < 2:
        raise ValueError("covariance needs at least 2 samples")
    if not np.all(np.isfinite(x)):
        raise ValueError("data has non-finite entries")
    mean = x.mean(axis=0)
    xc = x - mean
    cov = xc.T @ xc / x.shape[0]
    return mean, sym_matrix(cov)


def _psd_part(a: np.ndarray) -> np.ndarray:
    # no validation; callers pass symmetric input
    w, v = np.linalg.eigh(a)
    w = np.maximum(w, 0.0)
    out = (v * w) @ v.T
    return 0.5 * (out + out.T)


def psd_project(m) -> np.ndarray:
    """Nearest positive semidefinite matrix in Frobenius norm (negative
    eigenvalues clamped to zero)."""
    return _psd_part(sym_matrix(m))
