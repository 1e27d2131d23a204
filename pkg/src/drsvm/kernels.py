"""Kernel functions, kernel matrices and feature-space centering.

Families and parameters::

    polynomial        (x.z + 1)^d
    rbf               exp(-gamma |x - z|^2)
    neural            tanh(x.z + b)
    heavy_tailed_rbf  exp(-gamma |x^a - z^a|^b)     (x^a componentwise)
    gaussian_rbf      exp(-|x - z|^2 / (2 sigma^2))

A :class:`KernelSpec` round-trips through strings such as
``heavy_tailed_rbf:gamma=1,a=1,b=1``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
import math

import numpy as np

from .linalg import sym_matrix

__all__ = [
    "FAMILIES",
    "KernelSpec",
    "kernel_eval",
    "kernel_matrix",
    "cross_kernel",
    "center_kernel",
    "sq_distances",
]

FAMILIES = {
    "polynomial": ("d",),
    "rbf": ("gamma",),
    "neural": ("b",),
    "heavy_tailed_rbf": ("gamma", "a", "b"),
    "gaussian_rbf": ("sigma",),
}


@dataclass(frozen=True)
class KernelSpec:
    family: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown kernel family {self.family!r}")
        expected = set(FAMILIES[self.family])
        if set(self.params) != expected:
            raise ValueError(
                f"{self.family} kernel takes parameters {sorted(expected)}, got {sorted(self.params)}"
            )
        p = {k: float(v) for k, v in self.params.items()}
        if self.family == "polynomial":
            if p["d"] < 1 or p["d"] != int(p["d"]):
                raise ValueError("polynomial degree d must be an integer >= 1")
            p["d"] = int(p["d"])
        for key in ("gamma", "sigma", "a"):
            if key in p and not p[key] > 0:
                raise ValueError(f"{key} must be positive")
        if self.family == "heavy_tailed_rbf" and not p["b"] > 0:
            raise ValueError("b must be positive for the heavy-tailed kernel")
        if not all(math.isfinite(v) for v in p.values()):
            raise ValueError("kernel parameters must be finite")
        object.__setattr__(self, "params", p)

    def __hash__(self):
        return hash((self.family, tuple(sorted(self.params.items()))))

    @classmethod
    def parse(cls, text: str) -> "KernelSpec":
        """Parse ``family:key=val{,key=val}``."""
        family, sep, rest = text.strip().partition(":")
        if not sep or not rest:
            raise ValueError(f"kernel spec must look like family:key=val,..., got {text!r}")
        params = {}
        for item in rest.split(","):
            key, eq, val = item.partition("=")
            if not eq:
                raise ValueError(f"bad kernel parameter {item!r} in {text!r}")
            key = key.strip()
            if key in params:
                raise ValueError(f"duplicate kernel parameter {key!r}")
            params[key] = float(val)
        return cls(family.strip(), params)

    def __str__(self) -> str:
        items = ",".join(f"{k}={_fmt(self.params[k])}" for k in FAMILIES[self.family])
        return f"{self.family}:{items}"

    @classmethod
    def polynomial(cls, d=2):
        return cls("polynomial", {"d": d})

    @classmethod
    def rbf(cls, gamma=1.0):
        return cls("rbf", {"gamma": gamma})

    @classmethod
    def neural(cls, b=0.0):
        return cls("neural", {"b": b})

    @classmethod
    def heavy_tailed_rbf(cls, gamma=1.0, a=1.0, b=1.0):
        return cls("heavy_tailed_rbf", {"gamma": gamma, "a": a, "b": b})

    @classmethod
    def gaussian_rbf(cls, sigma=5.5 / math.sqrt(2.0)):
        return cls("gaussian_rbf", {"sigma": sigma})


def _fmt(v) -> str:
    if isinstance(v, int) or float(v).is_integer():
        return str(int(v))
    return repr(float(v))


def sq_distances(x, z) -> np.ndarray:
    """Pairwise squared Euclidean distances from explicit differences.

    Avoids the ``|x|^2 + |z|^2 - 2 x.z`` expansion, which cancels badly for
    near-duplicate points.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    z = np.atleast_2d(np.asarray(z, dtype=float))
    if x.shape[1] != z.shape[1]:
        raise ValueError(f"dimension mismatch: {x.shape[1]} vs {z.shape[1]}")
    out = np.empty((x.shape[0], z.shape[0]))
    # chunk to bound the (rows, cols, dim) temporary
    step = max(1, 2_000_000 // max(1, z.shape[0] * x.shape[1]))
    for start in range(0, x.shape[0], step):
        diff = x[start : start + step, None, :] - z[None, :, :]
        out[start : start + step] = np.einsum("ijk,ijk->ij", diff, diff)
    return out


def _powered(x, a: float) -> np.ndarray:
    if a == 1.0:
        return x
    if not float(a).is_integer() and np.any(x < 0):
        raise ValueError("heavy-tailed kernel with fractional a needs non-negative inputs")
    return np.power(x, a)


def cross_kernel(spec: KernelSpec, x, z) -> np.ndarray:
    """Kernel values ``k(x_i, z_j)`` for all row pairs, shape ``(len(x), len(z))``."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    z = np.atleast_2d(np.asarray(z, dtype=float))
    if x.shape[1] != z.shape[1]:
        raise ValueError(f"dimension mismatch: {x.shape[1]} vs {z.shape[1]}")
    p = spec.params
    fam = spec.family
    if fam == "polynomial":
        return (x @ z.T + 1.0) ** p["d"]
    if fam == "neural":
        return np.tanh(x @ z.T + p["b"])
    if fam == "rbf":
        return np.exp(-p["gamma"] * sq_distances(x, z))
    if fam == "gaussian_rbf":
        return np.exp(-sq_distances(x, z) / (2.0 * p["sigma"] ** 2))
    if fam == "heavy_tailed_rbf":
        d2 = sq_distances(_powered(x, p["a"]), _powered(z, p["a"]))
        return np.exp(-p["gamma"] * d2 ** (p["b"] / 2.0))
    raise AssertionError(fam)


def kernel_eval(spec: KernelSpec, x, z) -> float:
    x = np.asarray(x, dtype=float).reshape(-1)
    z = np.asarray(z, dtype=float).reshape(-1)
    if x.shape != z.shape:
        raise ValueError(f"length mismatch: {x.shape[0]} vs {z.shape[0]}")
    return float(cross_kernel(spec, x[None, :], z[None, :])[0, 0])


def kernel_matrix(spec: KernelSpec, rows) -> np.ndarray:
    """Symmetric kernel matrix ``K_ij = k(x_i, x_j)``."""
    x = np.atleast_2d(np.asarray(rows, dtype=float))
    if x.shape[0] < 1:
        raise ValueError("kernel_matrix needs at least one sample")
    k = cross_kernel(spec, x, x)
    return 0.5 * (k + k.T)


def center_kernel(k) -> np.ndarray:
    """Double-centre a kernel matrix: ``K - 1K - K1 + 1K1`` with ``1_ij = 1/M``."""
    k = sym_matrix(k, tol=1e-8)
    row = k.mean(axis=0)
    out = k - row[None, :] - row[:, None] + row.mean()
    return 0.5 * (out + out.T)
