"""Principal component analysis fitted on training rows only."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import covariance, eig_sym

__all__ = ["PcaModel", "pca_fit", "pca_transform", "pca_choose_k"]


@dataclass(frozen=True, eq=False)
class PcaModel:
    mean: np.ndarray
    basis: np.ndarray  # (N, K), orthonormal columns
    spectrum: np.ndarray  # all N covariance eigenvalues, descending

    @property
    def k_dim(self) -> int:
        return self.basis.shape[1]


def pca_fit(train, k_dim: int | None = None) -> PcaModel:
    """Fit mean and the leading ``k_dim`` covariance eigenvectors.

    The full spectrum is kept for reporting. ``k_dim=None`` keeps all
    components.
    """
    x = np.atleast_2d(np.asarray(train, dtype=float))
    mean, cov = covariance(x)
    n = x.shape[1]
    k = n if k_dim is None else int(k_dim)
    if not 1 <= k <= n:
        raise ValueError(f"k_dim must be in [1, {n}], got {k_dim}")
    eig = eig_sym(cov)
    # round-off can leave tiny negative eigenvalues of a PSD matrix
    spectrum = np.maximum(eig.eigenvalues, 0.0)
    return PcaModel(mean, eig.eigenvectors[:, :k].copy(), spectrum)


def pca_transform(model: PcaModel, rows) -> np.ndarray:
    """Project rows: ``y_ij = (x_i - u) . v_j`` with the training mean ``u``."""
    x = np.atleast_2d(np.asarray(rows, dtype=float))
    if x.shape[1] != len(model.mean):
        raise ValueError(f"expected {len(model.mean)} features, got {x.shape[1]}")
    return (x - model.mean) @ model.basis


def pca_choose_k(spectrum, threshold: float = 0.95) -> int:
    """Smallest ``K`` whose leading eigenvalues hold strictly more than
    ``threshold`` of the total; 1 for an all-zero spectrum."""
    s = np.asarray(spectrum, dtype=float).reshape(-1)
    if s.size == 0:
        raise ValueError("empty spectrum")
    if np.any(s < 0):
        raise ValueError("spectrum entries must be non-negative")
    if not 0.0 < threshold <= 1.0:
        raise ValueError("threshold must lie in (0, 1]")
    total = s.sum()
    if total == 0:
        return 1
    ratios = np.cumsum(s) / total
    hits = np.nonzero(ratios > threshold)[0]
    return int(hits[0]) + 1 if hits.size else len(s)
