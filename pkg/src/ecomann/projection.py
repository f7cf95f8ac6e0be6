"""Level-set projection by damped Gauss-Newton descent of ||h(q)||."""

from __future__ import annotations

import numpy as np

from .errors import ParameterError, ProjectionError


def project(
    manifold,
    q0: np.ndarray,
    tol: float = 1e-3,
    max_iters: int = 200,
    step: float = 1.0,
    damping: float = 1e-8,
):
    """Iterate q <- q - step * J^T (J J^T + damping I)^{-1} h(q) until
    ||h(q)|| <= tol.

    Returns (q, converged, iterations); the last iterate is returned
    even on failure.
    """
    if tol <= 0:
        raise ParameterError("tol must be > 0")
    q = np.asarray(q0, dtype=float).copy()
    h = manifold.evaluate(q)
    res = np.linalg.norm(h)
    if not np.isfinite(res):
        raise ProjectionError("non-finite residual at the starting point")
    if res <= tol:
        return q, True, 0
    l = len(h)
    eye = np.eye(l)
    for it in range(1, max_iters + 1):
        J = manifold.jacobian(q)
        try:
            delta = J.T @ np.linalg.solve(J @ J.T + damping * eye, h)
        except np.linalg.LinAlgError:
            delta = J.T @ np.linalg.solve(J @ J.T + max(damping, 1e-6) * 1e3 * eye, h)
        q = q - step * delta
        h = manifold.evaluate(q)
        res = np.linalg.norm(h)
        if not np.isfinite(res):
            raise ProjectionError("non-finite iterate during projection")
        if res <= tol:
            return q, True, it
    return q, False, max_iters


def project_batch(
    manifold,
    Q0: np.ndarray,
    tol: float = 1e-3,
    max_iters: int = 200,
    step: float = 1.0,
    damping: float = 1e-8,
):
    """Vectorized projection of many starts with the same update rule as
    ``project``. Falls back to a per-row loop for manifolds without
    batch evaluation.

    Returns (Q, converged mask, iteration counts).
    """
    Q0 = np.asarray(Q0, dtype=float)
    if not hasattr(manifold, "evaluate_batch"):
        out, ok, its = [], [], []
        for q0 in Q0:
            q, c, it = project(manifold, q0, tol, max_iters, step, damping)
            out.append(q)
            ok.append(c)
            its.append(it)
        return np.array(out), np.array(ok), np.array(its)

    Q = Q0.copy()
    H = manifold.evaluate_batch(Q)
    res = np.linalg.norm(H, axis=1)
    if not np.all(np.isfinite(res)):
        raise ProjectionError("non-finite residual at a starting point")
    l = H.shape[1]
    eye = damping * np.eye(l)
    active = res > tol
    iters = np.zeros(len(Q), dtype=int)
    for _ in range(max_iters):
        if not active.any():
            break
        idx = np.flatnonzero(active)
        J = manifold.jacobian_batch(Q[idx])  # (B, l, d)
        M = J @ np.transpose(J, (0, 2, 1)) + eye
        lam = np.linalg.solve(M, H[idx][:, :, None])
        delta = (np.transpose(J, (0, 2, 1)) @ lam)[:, :, 0]
        Q[idx] = Q[idx] - step * delta
        H[idx] = manifold.evaluate_batch(Q[idx])
        res[idx] = np.linalg.norm(H[idx], axis=1)
        if not np.all(np.isfinite(res[idx])):
            raise ProjectionError("non-finite iterate during batch projection")
        iters[idx] += 1
        active[idx] = res[idx] > tol
    return Q, res <= tol, iters
