"""Binary kernel SVM trained by sequential minimal optimization.

The dual ``max sum(alpha) - 1/2 sum alpha_i alpha_j l_i l_j k(x_i, x_j)``
subject to ``sum alpha_i l_i = 0`` and ``0 <= alpha <= C`` is solved by
pairwise coordinate ascent, always updating the maximal KKT-violating pair.
"""
from __future__ import annotations

from collections import OrderedDict
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConvergenceError
from .kernels import KernelSpec, cross_kernel, kernel_matrix

__all__ = [
    "ConvergenceError",
    "TrainingSet",
    "SvmModel",
    "to_svm_labels",
    "from_svm_labels",
    "train",
    "decision",
    "classify",
    "save_model",
    "load_model",
]

DEFAULT_C = 1000.0
FULL_CACHE_LIMIT = 4000
MODEL_HEADER = "drsvm-svm-model 1"


def to_svm_labels(labels) -> np.ndarray:
    """Map dataset labels idle=0 / busy=1 to -1 / +1."""
    labels = np.asarray(labels)
    return np.where(labels == 1, 1, -1).astype(np.int64)


def from_svm_labels(labels) -> np.ndarray:
    return (np.asarray(labels) > 0).astype(np.int64)


@dataclass(frozen=True, eq=False)
class TrainingSet:
    features: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        x = np.atleast_2d(np.asarray(self.features, dtype=float))
        y = np.asarray(self.labels).reshape(-1)
        if len(x) != len(y):
            raise ValueError("features and labels have different lengths")
        if not np.all(np.isin(y, (-1, 1))):
            raise ValueError("SVM labels must be -1 or +1")
        if not (np.any(y == 1) and np.any(y == -1)):
            raise ValueError("training set needs at least one sample of each label")
        if not np.all(np.isfinite(x)):
            raise ValueError("training features must be finite")
        object.__setattr__(self, "features", x)
        object.__setattr__(self, "labels", y.astype(np.int64))


@dataclass(frozen=True, eq=False)
class SvmModel:
    """Trained decision function ``f(x) = sum alpha_i l_i k(x_i, x) + b``.

    Only samples with ``alpha > 0`` are stored.
    """

    kernel: KernelSpec
    support_vectors: np.ndarray
    alphas: np.ndarray
    sv_labels: np.ndarray
    bias: float
    c_param: float
    iterations: int = 0

    @property
    def dim(self) -> int:
        return self.support_vectors.shape[1]

    @property
    def dual_coef(self) -> np.ndarray:
        return self.alphas * self.sv_labels


class _Columns:
    """Kernel column access: full matrix for small problems, LRU rows otherwise."""

    def __init__(self, kernel, x, max_rows=512):
        self.n = len(x)
        if self.n <= FULL_CACHE_LIMIT:
            self.full = kernel_matrix(kernel, x)
            self.diag = np.diag(self.full).copy()
        else:
            self.full = None
            self.kernel, self.x = kernel, x
            self.cache = OrderedDict()
            self.max_rows = max_rows
            self.diag = np.array([cross_kernel(kernel, r[None], r[None])[0, 0] for r in x])

    def __getitem__(self, i):
        if self.full is not None:
            return self.full[i]
        col = self.cache.get(i)
        if col is None:
            col = cross_kernel(self.kernel, self.x, self.x[i][None])[:, 0]
            self.cache[i] = col
            if len(self.cache) > self.max_rows:
                self.cache.popitem(last=False)
        else:
            self.cache.move_to_end(i)
        return col


def train(
    data: TrainingSet,
    kernel: KernelSpec,
    c_param: float = DEFAULT_C,
    tol: float = 1e-3,
    max_iter: int = 10_000_000,
    check_objective: bool = False,
) -> SvmModel:
    """Train a soft-margin kernel SVM.

    Parameters
    ----------
    data : TrainingSet
    kernel : KernelSpec
    c_param : float
        Box constraint ``C``; large values approach the hard-margin machine.
    tol : float
        Stop when the maximal KKT violation ``m(alpha) - M(alpha)`` drops
        below this value.
    max_iter : int
        Budget of pair updates.
    check_objective : bool
        Assert after every update that the dual objective did not decrease.

    Raises
    ------
    ConvergenceError
        If ``max_iter`` pair updates do not reach ``tol``.
    """
    if not c_param > 0:
        raise ValueError("c_param must be positive")
    x, y = data.features, data.labels.astype(float)
    n = len(y)
    cols = _Columns(kernel, x)
    alpha = np.zeros(n)
    grad = -np.ones(n)  # gradient of 1/2 a'Qa - e'a
    C = float(c_param)
    objective = 0.0

    it = 0
    while True:
        score = -y * grad
        up = np.where(y > 0, alpha < C, alpha > 0)
        low = np.where(y > 0, alpha > 0, alpha < C)
        s_up = np.where(up, score, -np.inf)
        s_low = np.where(low, score, np.inf)
        i = int(np.argmax(s_up))
        j = int(np.argmin(s_low))
        gap = s_up[i] - s_low[j]
        if gap < tol:
            break
        if it >= max_iter:
            raise ConvergenceError(
                f"SMO did not converge in {max_iter} updates (max KKT violation {gap:.3g})",
                violation=float(gap),
            )
        ki, kj = cols[i], cols[j]
        eta = max(cols.diag[i] + cols.diag[j] - 2.0 * ki[j], 1e-12)
        bound_i = C - alpha[i] if y[i] > 0 else alpha[i]
        bound_j = alpha[j] if y[j] > 0 else C - alpha[j]
        t = min(gap / eta, bound_i, bound_j)

        alpha[i] += y[i] * t
        alpha[j] -= y[j] * t
        # snap to the box to keep bounds exact
        if t == bound_i:
            alpha[i] = C if y[i] > 0 else 0.0
        if t == bound_j:
            alpha[j] = 0.0 if y[j] > 0 else C
        grad += t * y * (ki - kj)
        it += 1

        if check_objective:
            # Qa = grad + 1
            dual = float(alpha.sum() - 0.5 * alpha @ (grad + 1.0))
            if dual < objective - 1e-9 * max(1.0, abs(objective)):
                raise AssertionError(f"dual objective decreased at update {it}")
            objective = dual

    score = -y * grad
    free = (alpha > 0) & (alpha < C)
    if np.any(free):
        bias = float(np.mean(score[free]))
    else:
        up = np.where(y > 0, alpha < C, alpha > 0)
        low = np.where(y > 0, alpha > 0, alpha < C)
        bias = 0.5 * (float(np.max(score[up])) + float(np.min(score[low])))

    sv = alpha > 0
    return SvmModel(
        kernel=kernel,
        support_vectors=x[sv].copy(),
        alphas=alpha[sv].copy(),
        sv_labels=data.labels[sv].copy(),
        bias=bias,
        c_param=C,
        iterations=it,
    )


def decision(model: SvmModel, x) -> np.ndarray | float:
    """Decision value(s) ``f(x)``; scalar for a single row."""
    arr = np.asarray(x, dtype=float)
    single = arr.ndim == 1
    rows = np.atleast_2d(arr)
    if rows.shape[1] != model.dim:
        raise ValueError(f"expected {model.dim} features, got {rows.shape[1]}")
    values = cross_kernel(model.kernel, rows, model.support_vectors) @ model.dual_coef + model.bias
    return float(values[0]) if single else values


def classify(model: SvmModel, x):
    """Sign of the decision value; an exact zero maps to +1."""
    values = decision(model, x)
    return np.where(np.asarray(values) >= 0, 1, -1) if np.ndim(values) else (1 if values >= 0 else -1)


def save_model(model: SvmModel, path) -> None:
    """Write a model as plain text: header, kernel, scalars, one SV per line."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [
        MODEL_HEADER,
        f"kernel={model.kernel}",
        f"c={model.c_param!r}",
        f"bias={model.bias!r}",
        f"dim={model.dim}",
        f"n_sv={len(model.alphas)}",
    ]
    for a, l, row in zip(model.alphas, model.sv_labels, model.support_vectors):
        lines.append(",".join([repr(float(a)), str(int(l))] + [repr(float(v)) for v in row]))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_model(path) -> SvmModel:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or lines[0].strip() != MODEL_HEADER:
        raise ValueError(f"{path}: not a model file (missing header {MODEL_HEADER!r})")
    meta = {}
    for line in lines[1:6]:
        key, eq, val = line.partition("=")
        if not eq:
            raise ValueError(f"{path}: malformed header line {line!r}")
        meta[key] = val
    try:
        kernel = KernelSpec.parse(meta["kernel"])
        c, bias = float(meta["c"]), float(meta["bias"])
        dim, n_sv = int(meta["dim"]), int(meta["n_sv"])
    except KeyError as exc:
        raise ValueError(f"{path}: missing header field {exc}") from None
    body = [l for l in lines[6:] if l.strip()]
    if len(body) != n_sv:
        raise ValueError(f"{path}: expected {n_sv} support vectors, found {len(body)}")
    rows = np.array([[float(v) for v in l.split(",")] for l in body]).reshape(n_sv, dim + 2)
    return SvmModel(kernel, rows[:, 2:].copy(), rows[:, 0].copy(), rows[:, 1].astype(np.int64), bias, c)
