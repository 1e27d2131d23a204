"""Maximum variance unfolding and its landmark approximation.

* :func:`build_knn` builds the symmetrized k-nearest-neighbour graph.
* :func:`solve_mvu` learns the full inner-product matrix (small problems).
* :func:`choose_landmarks` / :func:`landmark_set` build the reconstruction
  matrix ``Q`` with ``x_i ~ sum_j Q_ij a_j``.
* :func:`solve_lmvu` learns the landmark inner-product matrix ``A`` and
  returns ``Q A Q^T`` in factored form.
* :func:`embed` turns an inner-product matrix into coordinates.

All of it is transductive: points are embedded jointly, there is no
out-of-sample map.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components, minimum_spanning_tree

from .kernels import sq_distances
from .linalg import _fix_signs, eig_sym
from .errors import ConvergenceError
from .sdp import solve_sdp_eq, solve_sdp_ipm

__all__ = [
    "NeighborGraph",
    "GramSolution",
    "LandmarkSet",
    "MvuEmbedding",
    "build_knn",
    "solve_mvu",
    "choose_landmarks",
    "landmark_set",
    "solve_lmvu",
    "embed",
    "centering_basis",
    "MAX_FULL_MVU",
]

MAX_FULL_MVU = 300
FEAS_TOL = 1e-4
OBJ_TOL = 1e-3


@dataclass(frozen=True, eq=False)
class NeighborGraph:
    """Undirected k-NN graph.

    Attributes
    ----------
    num_points : int
    k : int
    edges : ndarray of int, shape (E, 2)
        Pairs ``(i, j)`` with ``i < j``, sorted lexicographically.
    sq_dist : ndarray, shape (E,)
        ``|x_i - x_j|^2`` for each edge.
    n_bridges : int
        Edges added to join components (0 unless ``connect=True``).
    """

    num_points: int
    k: int
    edges: np.ndarray
    sq_dist: np.ndarray
    n_bridges: int = 0

    def adjacency(self) -> sp.csr_matrix:
        m = self.num_points
        i, j = self.edges[:, 0], self.edges[:, 1]
        data = np.ones(len(i))
        a = sp.coo_matrix((data, (i, j)), shape=(m, m))
        return (a + a.T).tocsr()


def build_knn(points, k: int, connect: bool = False) -> NeighborGraph:
    """Symmetrized k-NN graph with exact squared distances.

    ``i`` and ``j`` are joined when either is among the other's ``k`` nearest
    neighbours; distance ties go to the lower index. A disconnected graph is
    an error unless ``connect`` is set, in which case components are joined
    by their shortest connecting edges (a minimum spanning tree over
    components).
    """
    x = np.atleast_2d(np.asarray(points, dtype=float))
    m = x.shape[0]
    if k < 1 or m < k + 1:
        raise ValueError(f"need at least k+1 = {k + 1} points and k >= 1, got {m} points")
    d = sq_distances(x, x)
    np.fill_diagonal(d, np.inf)
    nbrs = np.argsort(d, axis=1, kind="stable")[:, :k]
    rows = np.repeat(np.arange(m), k)
    cols = nbrs.reshape(-1)
    pairs = np.unique(np.stack([np.minimum(rows, cols), np.maximum(rows, cols)], axis=1), axis=0)
    graph = NeighborGraph(m, k, pairs, d[pairs[:, 0], pairs[:, 1]])

    n_comp, labels = connected_components(graph.adjacency(), directed=False)
    if n_comp == 1:
        return graph
    if not connect:
        sizes = np.bincount(labels)
        small = int(np.argmin(sizes))
        members = np.nonzero(labels == small)[0]
        raise ValueError(
            f"k-NN graph (k={k}) is disconnected: {n_comp} components; smallest has "
            f"{sizes[small]} points (indices {members[:10].tolist()})"
        )
    bridges = _bridge_components(d, labels, n_comp)
    pairs = np.unique(np.concatenate([pairs, bridges]), axis=0)
    return NeighborGraph(m, k, pairs, d[pairs[:, 0], pairs[:, 1]], n_bridges=len(bridges))


def _bridge_components(d, labels, n_comp):
    best = np.full((n_comp, n_comp), np.inf)
    arg = {}
    for a in range(n_comp):
        ia = np.nonzero(labels == a)[0]
        for b in range(a + 1, n_comp):
            ib = np.nonzero(labels == b)[0]
            sub = d[np.ix_(ia, ib)]
            flat = int(np.argmin(sub))
            r, c = divmod(flat, sub.shape[1])
            best[a, b] = sub[r, c]
            arg[a, b] = (ia[r], ib[c])
    # shift so zero distances still count as MST edges
    weights = np.where(np.isfinite(best), best + 1.0, 0.0)
    tree = minimum_spanning_tree(sp.csr_matrix(np.triu(weights, 1))).tocoo()
    out = []
    for a, b in zip(tree.row, tree.col):
        a, b = min(a, b), max(a, b)
        i, j = arg[a, b]
        out.append((min(i, j), max(i, j)))
    return np.array(out, dtype=np.int64).reshape(-1, 2)


@dataclass(eq=False)
class GramSolution:
    """Learned inner-product matrix, possibly stored as ``factor @ factor.T``."""

    objective: float
    max_violation: float
    iterations: int = 0
    history: list = field(default_factory=list)
    factor: Optional[np.ndarray] = None
    _gram: Optional[np.ndarray] = None
    landmark_gram: Optional[np.ndarray] = None

    @classmethod
    def from_gram(cls, gram, max_violation: float = 0.0) -> "GramSolution":
        """Wrap an explicit inner-product matrix."""
        g = np.array(gram, dtype=float)
        return cls(float(np.trace(g)), max_violation, _gram=g)

    @property
    def gram(self) -> np.ndarray:
        if self._gram is None:
            self._gram = self.factor @ self.factor.T
        return self._gram

    @property
    def num_points(self) -> int:
        return (self.factor if self._gram is None else self._gram).shape[0]


def solve_mvu(graph: NeighborGraph, *, tol: float = 1e-9, max_iter: int = 100, trace_path=None) -> GramSolution:
    """Maximize ``trace(I)`` over centred PSD ``I`` preserving every edge length.

    A PSD matrix with zero grand sum has ``I 1 = 0``, so ``I = P B P^T``
    with ``P`` spanning the complement of the ones vector; the program is
    solved over ``B`` by an interior-point method.

    Raises
    ------
    ValueError
        For graphs above :data:`MAX_FULL_MVU` points (use the landmark form).
    ConvergenceError
        If a constraint is violated by more than ``1e-4 * max(1, max D)`` or
        the relative duality gap is above ``1e-3``.
    """
    m = graph.num_points
    if m > MAX_FULL_MVU:
        raise ValueError(f"full MVU is limited to {MAX_FULL_MVU} points; use solve_lmvu")
    basis = centering_basis(np.ones(m))
    g = basis[graph.edges[:, 0]] - basis[graph.edges[:, 1]]
    res = solve_sdp_eq(m - 1, basis.T @ basis, g, graph.sq_dist, tol=tol, max_iter=max_iter, trace_path=trace_path)
    gram = basis @ res.x @ basis.T
    gram = 0.5 * (gram + gram.T)
    res.max_violation = max(res.max_violation, abs(float(gram.sum())))
    _check_feasible(res, graph)
    _check_gap(res)
    return GramSolution(
        objective=float(np.trace(gram)),
        max_violation=res.max_violation,
        iterations=res.iterations,
        history=res.history,
        _gram=gram,
    )


def _check_gap(res):
    if not res.rel_gap <= OBJ_TOL:
        raise ConvergenceError(
            f"SDP solver stopped after {res.iterations} iterations with relative "
            f"duality gap {res.rel_gap:.3g} (limit {OBJ_TOL:.3g})",
            violation=res.rel_gap,
        )


def _check_feasible(res, graph):
    limit = FEAS_TOL * max(1.0, float(np.max(graph.sq_dist, initial=0.0)))
    if res.max_violation > limit:
        raise ConvergenceError(
            f"SDP solver stopped after {res.iterations} iterations with constraint "
            f"violation {res.max_violation:.3g} (limit {limit:.3g})",
            violation=res.max_violation,
        )


@dataclass(frozen=True, eq=False)
class LandmarkSet:
    indices: np.ndarray
    q: np.ndarray  # (M, m), rows sum to 1

    @property
    def m(self) -> int:
        return len(self.indices)


def landmark_set(points, indices, r: int = 4, ridge: float = 1e-6) -> LandmarkSet:
    """Reconstruction matrix for fixed landmark positions.

    Each non-landmark point is written as an affine combination of its
    ``min(r, m)`` nearest landmarks, with weights from a ridge-regularized
    least-squares fit constrained to sum to one. Landmark rows are indicators.
    """
    x = np.atleast_2d(np.asarray(points, dtype=float))
    idx = np.asarray(indices, dtype=np.int64).reshape(-1)
    mpts = x.shape[0]
    if idx.size == 0 or idx.size > mpts or len(np.unique(idx)) != idx.size:
        raise ValueError("landmark indices must be distinct and at most the number of points")
    if np.any(idx < 0) or np.any(idx >= mpts):
        raise ValueError("landmark index out of range")
    nl = idx.size
    rr = min(r, nl)
    q = np.zeros((mpts, nl))
    q[idx, np.arange(nl)] = 1.0
    is_landmark = np.zeros(mpts, dtype=bool)
    is_landmark[idx] = True
    others = np.nonzero(~is_landmark)[0]
    if others.size:
        lm = x[idx]
        d = sq_distances(x[others], lm)
        near = np.argsort(d, axis=1, kind="stable")[:, :rr]
        ones = np.ones(rr)
        for row, i in enumerate(others):
            nb = near[row]
            z = lm[nb] - x[i]
            g = z @ z.T
            g[np.diag_indices(rr)] += ridge * max(np.trace(g), 1e-12)
            w = np.linalg.solve(g, ones)
            q[i, nb] = w / w.sum()
    return LandmarkSet(idx.copy(), q)


def choose_landmarks(points, m: int, seed: int, r: int = 4, ridge: float = 1e-6) -> LandmarkSet:
    """Draw ``m`` landmark positions uniformly without replacement, then
    build ``Q`` with :func:`landmark_set`."""
    mpts = np.atleast_2d(np.asarray(points)).shape[0]
    if not 1 <= m <= mpts:
        raise ValueError(f"need 1 <= m <= {mpts} landmarks, got {m}")
    idx = np.sort(np.random.default_rng(seed).choice(mpts, size=m, replace=False))
    return landmark_set(points, idx, r=r, ridge=ridge)


def centering_basis(s) -> np.ndarray:
    """Basis ``P`` (m x (m-1)) of the orthogonal complement of ``s``.

    Column ``j`` is ``e_j - (s_j / s_k) e_k`` with ``k`` the entry of
    largest magnitude, so ``P^T s = 0`` exactly in exact arithmetic and the
    basis stays sparse and well scaled.
    """
    s = np.asarray(s, dtype=float).reshape(-1)
    k = int(np.argmax(np.abs(s)))
    if s[k] == 0:
        raise ValueError("centering vector is zero")
    basis = np.delete(np.eye(len(s)), k, axis=1)
    basis[k, :] = -np.delete(s, k) / s[k]
    return basis


def solve_lmvu(
    graph: NeighborGraph,
    landmarks: LandmarkSet,
    *,
    gap_tol: float = 1e-4,
    max_iter: int = 100,
    trace_path=None,
) -> GramSolution:
    """Maximize ``trace(Q A Q^T)`` over PSD landmark Gram ``A``.

    Constraints: ``sum(Q A Q^T) = 0`` and reconstructed neighbour distances
    no longer than the input ones. For PSD ``A`` the centering constraint
    holds iff ``A s = 0`` with ``s = Q^T 1``, so ``A = P B P^T`` with
    ``P`` spanning the complement of ``s`` and the problem is solved over
    the ``(m-1) x (m-1)`` matrix ``B`` by an interior-point method.

    Parameters
    ----------
    graph : NeighborGraph
    landmarks : LandmarkSet
    gap_tol : float
        Target relative duality gap.
    max_iter : int
        Interior-point iteration budget.
    trace_path : path-like, optional
        Write per-iteration solver diagnostics to this CSV file.

    Raises
    ------
    ConvergenceError
        If the certified relative gap is above ``1e-3`` or a constraint is
        violated by more than ``1e-4 * max(1, max D)``.
    """
    q = landmarks.q
    if q.shape[0] != graph.num_points:
        raise ValueError("landmark matrix and graph disagree on the number of points")
    nl = q.shape[1]
    s = q.sum(axis=0)
    if nl == 1:
        # a single landmark reconstructs every point at the same place
        a = np.zeros((1, 1))
        return GramSolution(0.0, 0.0, 0, [], factor=np.zeros((graph.num_points, 1)), landmark_gram=a)
    basis = centering_basis(s)
    g = (q[graph.edges[:, 0]] - q[graph.edges[:, 1]]) @ basis
    active = np.any(g != 0, axis=1)
    objective = basis.T @ (q.T @ q) @ basis
    res = solve_sdp_ipm(
        nl - 1, objective, g[active], graph.sq_dist[active],
        rank_one=True, gap_tol=gap_tol, max_iter=max_iter, trace_path=trace_path,
    )
    _check_feasible(res, graph)
    _check_gap(res)
    a = basis @ res.x @ basis.T
    a = 0.5 * (a + a.T)
    w, v = np.linalg.eigh(res.x)
    w = np.maximum(w, 0.0)
    factor = q @ (basis @ (v * np.sqrt(w)))
    return GramSolution(
        objective=float(np.sum(factor * factor)),
        max_violation=res.max_violation,
        iterations=res.iterations,
        history=res.history,
        factor=factor,
        landmark_gram=a,
    )


@dataclass(frozen=True, eq=False)
class MvuEmbedding:
    coords: np.ndarray  # (M, K)
    spectrum: np.ndarray  # (M,), descending, non-negative

    def shares(self) -> np.ndarray:
        total = self.spectrum.sum()
        return self.spectrum / total if total > 0 else self.spectrum.copy()


def embed(solution: GramSolution, k_dim: int) -> MvuEmbedding:
    """Coordinates ``y_ij = sqrt(lambda_j) v_ij`` from the top ``k_dim``
    eigenpairs of the (re-centred) inner-product matrix.

    Negative eigenvalues (solver round-off) are clamped to zero.
    """
    mpts = solution.num_points
    if not 1 <= k_dim <= mpts:
        raise ValueError(f"k_dim must be in [1, {mpts}], got {k_dim}")
    if solution._gram is None:
        f = solution.factor - solution.factor.mean(axis=0)
        u, sv, _ = np.linalg.svd(f, full_matrices=False)
        lam = np.zeros(mpts)
        lam[: len(sv)] = sv**2
        vecs = np.zeros((mpts, k_dim))
        r = min(k_dim, u.shape[1])
        vecs[:, :r] = _fix_signs(u[:, :r])
    else:
        gm = solution._gram
        row = gm.mean(axis=0)
        gc = gm - row[None, :] - row[:, None] + row.mean()
        eig = eig_sym(0.5 * (gc + gc.T))
        lam = np.maximum(eig.eigenvalues, 0.0)
        vecs = eig.eigenvectors[:, :k_dim]
    coords = vecs * np.sqrt(lam[:k_dim])
    return MvuEmbedding(coords, lam)
