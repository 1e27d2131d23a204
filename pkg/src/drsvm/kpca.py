"""Kernel PCA with out-of-sample projection.

Coefficient vectors are scaled so that ``lambda_j (alpha_j . alpha_j) = 1``,
where ``lambda_j`` is an eigenvalue of the centred kernel matrix. Kernel
columns of new points are double-centred with the training statistics
before projection, so training points reproduce their fit-time coordinates.
"""
from __future__ import annotations

from dataclasses import dataclass
import warnings

import numpy as np

from .kernels import KernelSpec, cross_kernel, kernel_matrix
from .linalg import eig_sym

__all__ = ["KpcaModel", "kpca_fit", "kpca_transform", "DROP_RATIO"]

DROP_RATIO = 1e-10


@dataclass(frozen=True, eq=False)
class KpcaModel:
    kernel: KernelSpec
    train_rows: np.ndarray
    alphas: np.ndarray  # (T, K), column j is alpha_j
    spectrum: np.ndarray  # all eigenvalues of the centred kernel matrix, descending
    column_means: np.ndarray  # mean of each training kernel column
    grand_mean: float

    @property
    def k_dim(self) -> int:
        return self.alphas.shape[1]


def kpca_fit(train, kernel: KernelSpec, k_dim: int) -> KpcaModel:
    x = np.atleast_2d(np.asarray(train, dtype=float))
    t = x.shape[0]
    if t < 2:
        raise ValueError("kernel PCA needs at least 2 training rows")
    if not 1 <= k_dim <= t:
        raise ValueError(f"k_dim must be in [1, {t}], got {k_dim}")
    k = kernel_matrix(kernel, x)
    col_means = k.mean(axis=0)
    grand = float(col_means.mean())
    kc = k - col_means[None, :] - col_means[:, None] + grand
    eig = eig_sym(0.5 * (kc + kc.T))
    lam = eig.eigenvalues
    if lam[0] <= 1e-12 * max(1.0, float(np.abs(k).max())):
        raise ValueError("degenerate feature-space variance: centred kernel matrix has no positive eigenvalue")
    keep = np.nonzero(lam > DROP_RATIO * lam[0])[0]
    n_keep = min(k_dim, len(keep))
    if n_keep < k_dim:
        warnings.warn(
            f"only {n_keep} kernel PCA components exceed the drop threshold; "
            f"truncating from the requested {k_dim}",
            RuntimeWarning,
            stacklevel=2,
        )
    alphas = eig.eigenvectors[:, :n_keep] / np.sqrt(lam[:n_keep])
    return KpcaModel(kernel, x.copy(), alphas, lam.copy(), col_means, grand)


def kpca_transform(model: KpcaModel, rows) -> np.ndarray:
    """Reduced coordinates ``y_j(x) = sum_n alpha_jn k~(x_n, x)``."""
    x = np.atleast_2d(np.asarray(rows, dtype=float))
    if x.shape[1] != model.train_rows.shape[1]:
        raise ValueError(f"expected {model.train_rows.shape[1]} features, got {x.shape[1]}")
    kt = cross_kernel(model.kernel, x, model.train_rows)  # (n, T)
    kt = kt - model.column_means[None, :] - kt.mean(axis=1, keepdims=True) + model.grand_mean
    # one product per component so a column never depends on how many
    # components were kept (a single matmul may block differently)
    out = np.empty((kt.shape[0], model.k_dim))
    for j in range(model.k_dim):
        out[:, j] = kt @ model.alphas[:, j]
    return out
