"""Small dense semidefinite programs solved by primal-dual interior points.

Both solvers maximize ``<C, X>`` over positive semidefinite ``X``:

* :func:`solve_sdp_ipm` takes upper-bounded rows ``<A_e, X> <= u_e``. Its
  primal iterates stay strictly feasible and it reports a certified
  duality gap.
* :func:`solve_sdp_eq` takes rank-one equality rows ``g_k^T X g_k = b_k``
  and starts from an infeasible point.

Symmetric matrices are handled in ``svec`` form (upper triangle, off-diagonal
entries scaled by sqrt(2)) where a vector form is needed, so that
``<A, X> = svec(A) . svec(X)``.
"""
from __future__ import annotations

import csv
from functools import lru_cache
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.linalg


_syrk = scipy.linalg.get_blas_funcs("syrk", dtype=np.float64)

__all__ = ["SdpResult", "svec", "smat", "svec_outer", "solve_sdp_ipm", "solve_sdp_eq"]

_SQRT2 = np.sqrt(2.0)


@lru_cache(maxsize=64)
def _triu(n):
    iu, ju = np.triu_indices(n)
    iu.flags.writeable = False
    ju.flags.writeable = False
    return iu, ju


def svec(a) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    n = a.shape[0]
    iu, ju = _triu(n)
    return a[iu, ju] * np.where(iu == ju, 1.0, _SQRT2)


def smat(v, n: int) -> np.ndarray:
    iu, ju = _triu(n)
    out = np.zeros((n, n))
    vals = v * np.where(iu == ju, 1.0, 1.0 / _SQRT2)
    out[iu, ju] = vals
    out[ju, iu] = vals
    return out


def svec_outer(g) -> np.ndarray:
    """``svec(g g^T)`` for each row ``g`` of a 2-D array."""
    g = np.atleast_2d(np.asarray(g, dtype=float))
    e, n = g.shape
    gt = np.ascontiguousarray(g.T)
    out = np.empty((n * (n + 1) // 2, e))
    pos = 0
    # row i of the upper triangle is contiguous in svec order
    for i in range(n):
        seg = out[pos : pos + n - i]
        np.multiply(gt[i], gt[i:], out=seg)
        seg[1:] *= _SQRT2
        pos += n - i
    return out.T


@dataclass
class SdpResult:
    x: np.ndarray
    objective: float
    max_violation: float
    iterations: int
    converged: bool
    history: list = field(default_factory=list)
    rel_gap: float = float("nan")  # relative duality gap at exit


def _svec_basis(n):
    # U with U @ svec(X) == vec(X) for symmetric X
    iu, ju = _triu(n)
    p = len(iu)
    u = np.zeros((n * n, p))
    k = np.arange(p)
    diag = iu == ju
    u[iu[diag] * n + ju[diag], k[diag]] = 1.0
    off = ~diag
    u[iu[off] * n + ju[off], k[off]] = 1.0 / _SQRT2
    u[ju[off] * n + iu[off], k[off]] = 1.0 / _SQRT2
    return u


def solve_sdp_ipm(
    n: int,
    objective,
    rows,
    upper,
    *,
    gap_tol: float = 1e-6,
    max_iter: int = 100,
    rank_one: bool = False,
    x0=None,
    trace_path=None,
) -> SdpResult:
    """Maximize ``<objective, X>`` over PSD ``X`` with ``<A_e, X> <= upper_e``.

    Primal-dual interior-point method with Nesterov-Todd scaling and a
    Mehrotra predictor-corrector step. The primal iterate is kept strictly
    feasible, so the returned matrix satisfies every constraint; the dual
    starts infeasible and is driven to feasibility alongside the gap.

    Parameters
    ----------
    n : int
        Order of ``X``.
    objective : array_like, shape (n, n)
    rows : ndarray, shape (n_con, n(n+1)/2) or (n_con, n)
        ``svec`` of each constraint matrix, or with ``rank_one`` the vectors
        ``g_e`` of rank-one constraint matrices ``A_e = g_e g_e^T``.
    upper : array_like, shape (n_con,)
        Right-hand sides; they must be positive so that a small multiple of
        the identity is strictly feasible. Non-positive entries are lifted
        to a tiny positive value and the resulting violation is reported.
    gap_tol : float
        Stop when the duality gap and the dual residual fall below
        ``gap_tol`` relative to the objective scale.
    max_iter : int
        Iteration budget.
    rank_one : bool
        Interpret ``rows`` as rank-one factors; this makes the scaled
        constraint rows cheap to form.
    x0 : array_like, shape (n, n), optional
        Positive semidefinite starting guess. It is shrunk until strictly
        feasible and a small multiple of the identity is added.
    trace_path : path-like, optional
        If given, write per-iteration diagnostics as CSV.
    """
    p = n * (n + 1) // 2
    rows = np.atleast_2d(np.asarray(rows, dtype=float))
    if rows.shape[1] != (n if rank_one else p):
        raise ValueError(f"constraint rows must have {n if rank_one else p} columns, got {rows.shape[1]}")
    d_orig = np.asarray(upper, dtype=float).reshape(-1)
    if d_orig.shape != (rows.shape[0],):
        raise ValueError("bounds must match the number of constraint rows")
    # equilibrate rows, scale bounds and objective to O(1)
    if rank_one:
        g_norm = np.linalg.norm(rows, axis=1)
        g_norm[g_norm == 0] = 1.0
        g_unit = rows / g_norm[:, None]
        norms = g_norm**2  # |svec(g g^T)| = |g|^2
        f = svec_outer(g_unit)
    else:
        norms = np.linalg.norm(rows, axis=1)
        norms[norms == 0] = 1.0
        f = rows / norms[:, None]
    scale = max(1.0, float(np.max(np.abs(d_orig / norms)))) if d_orig.size else 1.0
    d = np.maximum(d_orig / norms / scale, 1e-12)
    c_full = -svec(objective)
    c_scale = max(float(np.max(np.abs(c_full))), 1e-300)
    c = c_full / c_scale
    u = _svec_basis(n)
    eye = svec(np.eye(n))

    x = _interior_start(f, d, eye, None if x0 is None else svec(x0) / scale)
    slack = d - f @ x
    y = np.ones(len(d))
    z = eye.copy()
    nu = len(d) + n
    # smallest eigenvalue of sum_e A_e; positive when the rows bound the feasible set
    load_min = float(np.linalg.eigvalsh(smat(f.sum(axis=0), n))[0]) if len(d) else 0.0
    history = []
    converged = False
    rel_gap = np.inf
    it = 0
    for it in range(1, max_iter + 1):
        xm, zm = smat(x, n), smat(z, n)
        r_dual = c + f.T @ y - z
        gap = float(slack @ y + np.sum(xm * zm))
        pobj = float(c @ x)
        rel_dual = _inf_norm(r_dual) / max(1.0, _inf_norm(c))
        if history and rel_dual > 1e3 * max(gap_tol, history[-1][3]):
            # numerical breakdown near the boundary: keep the previous iterate
            x, slack, y, z = prev
            break
        # certified gap: shift y along the all-ones direction until the dual
        # slack c + F^T y is PSD; the shifted y is dual feasible
        z_feas = np.linalg.eigvalsh(smat(c + f.T @ y, n))[0]
        shift = max(0.0, -z_feas) / load_min if load_min > 0 else (0.0 if z_feas >= 0 else np.inf)
        dual_bound = -float(d @ y) - shift * float(d.sum())
        rel_gap = (pobj - dual_bound) / max(1.0, abs(pobj))
        history.append((it - 1, -pobj * c_scale * scale, (pobj - dual_bound) * c_scale * scale, rel_dual))
        if rel_gap <= gap_tol:
            converged = True
            break
        prev = (x, slack, y, z)
        mu = gap / nu

        # Nesterov-Todd scaling W = R R^T with W Z W = X
        try:
            lx = np.linalg.cholesky(xm)
        except np.linalg.LinAlgError:
            break
        lam, vec = np.linalg.eigh(lx.T @ zm @ lx)
        lam = np.maximum(lam, 1e-300)
        r_mat = lx @ (vec * lam ** -0.25)
        r_inv = (vec * lam ** 0.25).T @ scipy.linalg.solve_triangular(lx, np.eye(n), lower=True)
        smap = u.T @ np.kron(r_mat, r_mat) @ u  # svec(V) -> svec(R V R^T)
        fs = svec_outer(g_unit @ r_mat) if rank_one else f @ smap
        dy = y / slack
        # upper triangle of fs^T diag(y/s) fs + I via a symmetric rank-k update
        kkt = _syrk(1.0, fs * np.sqrt(dy)[:, None], trans=1)
        kkt[np.diag_indices_from(kkt)] += 1.0
        try:
            factor = scipy.linalg.cho_factor(kkt, lower=False, check_finite=False)
        except np.linalg.LinAlgError:
            break
        # scaled point V = R^-1 X R^-T = R^T Z R
        v_mat = r_inv @ xm @ r_inv.T
        v_mat = 0.5 * (v_mat + v_mat.T)
        lv, qv = np.linalg.eigh(v_mat)
        lv = np.maximum(lv, 1e-300)
        v_inv = (qv / lv) @ qv.T
        v_isqrt = qv * lv ** -0.5

        def direction(target, corr_lin, corr_sdp):
            # linear block: s y + s dy + y ds = target - corr_lin, with ds = -F dx
            # cone block (scaled): dX~ + dZ~ = target V^-1 - V - corr_sdp
            rhs_lin = (target - corr_lin) / slack - y
            rhs_sdp = target * v_inv - v_mat - corr_sdp
            dxs = scipy.linalg.cho_solve(factor, svec(rhs_sdp) - smap.T @ (r_dual + f.T @ rhs_lin))
            dx = smap @ dxs
            ds = -f @ dx
            dyv = rhs_lin - dy * ds
            dxs_m = smat(dxs, n)
            dzs_m = rhs_sdp - dxs_m
            dz = svec(r_inv.T @ dzs_m @ r_inv)
            return dx, ds, dyv, dz, dxs_m, dzs_m

        def max_step(ds, dyv, dxs_m, dzs_m):
            a = np.inf
            for val, dv in ((slack, ds), (y, dyv)):
                neg = dv < 0
                if np.any(neg):
                    a = min(a, float(np.min(-val[neg] / dv[neg])))
            for dmat in (dxs_m, dzs_m):
                # V + a dM stays PD iff 1 + a eig(V^-1/2 dM V^-1/2) > 0
                e = np.linalg.eigvalsh(v_isqrt.T @ dmat @ v_isqrt)
                if e[0] < 0:
                    a = min(a, -1.0 / e[0])
            return a

        def lyap_inv(m):
            # E with V E + E V = m
            mt = qv.T @ m @ qv
            return qv @ (mt / (lv[:, None] + lv[None, :])) @ qv.T

        dx, ds, dyv, dz, dxs_m, dzs_m = direction(0.0, 0.0, 0.0)
        a_aff = min(1.0, max_step(ds, dyv, dxs_m, dzs_m))
        gap_aff = float((slack + a_aff * ds) @ (y + a_aff * dyv))
        gap_aff += float(np.sum((v_mat + a_aff * dxs_m) * (v_mat + a_aff * dzs_m)))
        sigma = min(1.0, (max(gap_aff, 0.0) / gap) ** 3)
        corr_sdp = lyap_inv(dxs_m @ dzs_m + dzs_m @ dxs_m)
        dx, ds, dyv, dz, dxs_m, dzs_m = direction(sigma * mu, ds * dyv, corr_sdp)
        step = min(1.0, 0.98 * max_step(ds, dyv, dxs_m, dzs_m))
        x = x + step * dx
        slack = d - f @ x
        y = y + step * dyv
        z = z + step * dz

    xmat = smat(x, n) * scale
    values = np.sum((rows @ xmat) * rows, axis=1) if rank_one else rows @ svec(xmat)
    max_violation = float(np.max(np.maximum(values - d_orig, 0.0), initial=0.0))
    objective_value = float(np.sum(np.asarray(objective) * xmat))
    if trace_path is not None:
        _write_ipm_trace(trace_path, history)
    return SdpResult(xmat, objective_value, max_violation, it, converged, history, float(rel_gap))


def solve_sdp_eq(
    n: int,
    objective,
    rows,
    rhs,
    *,
    tol: float = 1e-9,
    max_iter: int = 100,
    trace_path=None,
) -> SdpResult:
    """Maximize ``<objective, X>`` over PSD ``X`` with ``g_k^T X g_k = b_k``.

    Infeasible-start primal-dual interior-point method (Nesterov-Todd
    scaling, Mehrotra predictor-corrector, separate primal and dual step
    lengths) for rank-one equality rows. The Schur complement is
    ``(G W G^T) o (G W G^T)``, so no ``svec``-sized matrices are formed.
    The feasible set should have a positive definite point.

    Parameters
    ----------
    n : int
        Order of ``X``.
    objective : array_like, shape (n, n)
    rows : ndarray, shape (n_con, n)
        Vectors ``g_k``.
    rhs : array_like, shape (n_con,)
        Right-hand sides ``b_k``.
    tol : float
        Stop when relative primal and dual infeasibility and the relative
        duality gap are all below ``tol``.
    max_iter : int
        Iteration budget.
    trace_path : path-like, optional
        If given, write per-iteration diagnostics as CSV.
    """
    g = np.atleast_2d(np.asarray(rows, dtype=float))
    if g.shape[1] != n:
        raise ValueError(f"constraint rows must have {n} columns, got {g.shape[1]}")
    b_orig = np.asarray(rhs, dtype=float).reshape(-1)
    if b_orig.shape != (g.shape[0],):
        raise ValueError("right-hand sides must match the number of constraint rows")
    g_norm = np.linalg.norm(g, axis=1)
    if np.any(g_norm == 0):
        raise ValueError("zero constraint row")
    gu = g / g_norm[:, None]
    scale = max(1.0, float(np.max(np.abs(b_orig / g_norm**2)))) if b_orig.size else 1.0
    b = b_orig / g_norm**2 / scale
    c_mat = -np.asarray(objective, dtype=float)
    c_mat = 0.5 * (c_mat + c_mat.T)
    c_scale = max(float(np.max(np.abs(c_mat))), 1e-300)
    c_mat = c_mat / c_scale
    b_norm = 1.0 + float(np.linalg.norm(b))
    c_norm = 1.0 + float(np.linalg.norm(c_mat))

    def op(xm):
        return np.einsum("ij,ij->i", gu @ xm, gu)

    def adj(y):
        return (gu * y[:, None]).T @ gu

    def sym(m):
        return 0.5 * (m + m.T)

    xm = np.eye(n)
    zm = np.eye(n)
    y = np.zeros(len(b))
    history = []
    converged = False
    # near-rigid graphs leave no strictly feasible interior, so the iterates
    # can degrade once the attainable accuracy is reached: keep the best one
    best = (np.inf, xm, np.inf)
    it = 0
    for it in range(1, max_iter + 1):
        r_p = b - op(xm)
        r_d = sym(c_mat - adj(y) - zm)
        pobj, dobj = float(np.sum(c_mat * xm)), float(b @ y)
        pinf = float(np.linalg.norm(r_p)) / b_norm
        dinf = float(np.linalg.norm(r_d)) / c_norm
        rel_gap = abs(pobj - dobj) / (1.0 + abs(pobj) + abs(dobj))
        err = max(pinf, dinf, rel_gap)
        if not np.isfinite(err):
            break
        history.append((it - 1, -pobj * c_scale * scale, rel_gap, pinf, dinf))
        if err < best[0]:
            best = (err, xm, rel_gap)
        if err <= tol:
            converged = True
            break
        mu = float(np.sum(xm * zm)) / n

        try:
            lx = np.linalg.cholesky(xm)
        except np.linalg.LinAlgError:
            break
        lam, vec = np.linalg.eigh(sym(lx.T @ zm @ lx))
        lam = np.maximum(lam, 1e-300)
        r_mat = lx @ (vec * lam**-0.25)
        v = np.sqrt(lam)  # scaled point V = R^T Z R = R^-1 X R^-T is diagonal
        gr = gu @ r_mat
        gw = gr @ gr.T  # G W G^T
        schur = gw * gw
        try:
            factor = scipy.linalg.cho_factor(schur, check_finite=False)
        except np.linalg.LinAlgError:
            schur[np.diag_indices_from(schur)] += 1e-14 * max(1.0, float(np.trace(schur)))
            try:
                factor = scipy.linalg.cho_factor(schur, check_finite=False)
            except np.linalg.LinAlgError:
                break
        w_rd_w = r_mat @ (r_mat.T @ r_d @ r_mat) @ r_mat.T

        def direction(h):
            # scaled complementarity dX~ + dZ~ = h, dX = R dX~ R^T
            rhd = r_mat @ h @ r_mat.T
            dy = scipy.linalg.cho_solve(factor, r_p - op(rhd) + op(w_rd_w), check_finite=False)
            dz = sym(r_d - adj(dy))
            dzs = sym(r_mat.T @ dz @ r_mat)
            dxs = h - dzs
            return sym(r_mat @ dxs @ r_mat.T), dy, dz, dxs, dzs

        def max_step(ds):
            # V + a dS stays PD iff 1 + a eig(V^-1/2 dS V^-1/2) > 0
            e = np.linalg.eigvalsh(ds / np.sqrt(np.outer(v, v)))
            return -1.0 / e[0] if e[0] < 0 else np.inf

        try:
            with np.errstate(over="raise", invalid="raise", divide="raise"):
                dx, dy, dz, dxs, dzs = direction(np.diag(-v))
                ap = min(1.0, max_step(dxs))
                ad = min(1.0, max_step(dzs))
                gap_aff = float(np.sum((xm + ap * dx) * (zm + ad * dz)))
                sigma = min(1.0, (max(gap_aff, 0.0) / (mu * n)) ** 3)
                prod = dxs @ dzs
                corr = (prod + prod.T) / (v[:, None] + v[None, :])
                h = np.diag(sigma * mu / v - v) - corr
                dx, dy, dz, dxs, dzs = direction(h)
                ap = min(1.0, 0.98 * max_step(dxs))
                ad = min(1.0, 0.98 * max_step(dzs))
        except (FloatingPointError, OverflowError, np.linalg.LinAlgError):
            break
        xm = sym(xm + ap * dx)
        y = y + ad * dy
        zm = sym(zm + ad * dz)

    if not converged:
        _, xm, rel_gap = best
    xmat = xm * scale
    values = np.einsum("ij,ij->i", g @ xmat, g)
    max_violation = float(np.max(np.abs(values - b_orig), initial=0.0))
    objective_value = float(np.sum(np.asarray(objective) * xmat))
    if trace_path is not None:
        _write_eq_trace(trace_path, history)
    return SdpResult(xmat, objective_value, max_violation, it, converged, history, float(rel_gap))


def _write_eq_trace(path, history):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["iteration", "objective", "relative_gap", "primal_infeasibility", "dual_infeasibility"])
        for row in history:
            w.writerow([row[0]] + [format(v, ".10g") for v in row[1:]])


def _interior_start(f, d, eye, guess):
    load = f @ eye
    eps = 0.25 * float(np.min(d[load > 0] / load[load > 0])) if np.any(load > 0) else 1.0
    if guess is None:
        return 2.0 * eps * eye
    used = f @ guess
    pos = used > 0
    shrink = min(1.0, 0.5 * float(np.min(d[pos] / used[pos]))) if np.any(pos) else 1.0
    return shrink * guess + eps * eye


def _write_ipm_trace(path, history):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["iteration", "objective", "certified_gap", "dual_residual"])
        for row in history:
            w.writerow([row[0]] + [format(v, ".10g") for v in row[1:]])


def _inf_norm(v) -> float:
    return float(np.max(np.abs(v))) if np.size(v) else 0.0
