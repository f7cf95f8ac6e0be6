"""Local-geometry primitives: K-NN search, local PCA, codimension
estimation from the eigenvalue gap, and the matrix exponential on
skew-symmetric matrices."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError, RankDeficiencyError

ORTHO_TOL = 1e-10


@dataclass
class LocalFrame:
    """Per-point local PCA result.

    ``eigvecs`` holds the covariance eigenvectors as columns in
    decreasing eigenvalue order; the first ``d - codim`` columns span
    the estimated tangent space, the trailing ``codim`` columns the
    normal space.
    """

    center: np.ndarray
    eigvecs: np.ndarray
    eigvals: np.ndarray
    codim: int

    @property
    def tangent_basis(self) -> np.ndarray:
        d = self.eigvecs.shape[0]
        return self.eigvecs[:, : d - self.codim]

    @property
    def normal_basis(self) -> np.ndarray:
        d = self.eigvecs.shape[0]
        return self.eigvecs[:, d - self.codim :]

    @property
    def tangent_eigvals(self) -> np.ndarray:
        d = self.eigvecs.shape[0]
        return self.eigvals[: d - self.codim]


def knn_search(points: np.ndarray, query_index: int, K: int) -> np.ndarray:
    """Indices of the K nearest points to ``points[query_index]``.

    The query point itself is excluded; ties are broken by smaller index
    (stable sort on distance).
    """
    points = np.asarray(points, dtype=float)
    n = len(points)
    if K < 1 or K >= n:
        raise ParameterError(f"K={K} out of range for {n} points")
    dists = np.linalg.norm(points - points[query_index], axis=1)
    dists[query_index] = np.inf
    order = np.argsort(dists, kind="stable")
    return order[:K]


def estimate_codim(eigvals: np.ndarray) -> int:
    """Number of constraints from the largest consecutive eigenvalue gap.

    With gaps g_j = lam_j - lam_{j+1} (j = 1..d-1, 1-based) and j* the
    smallest index of the largest gap, returns l = d - j*.
    """
    lam = np.maximum(np.asarray(eigvals, dtype=float), 0.0)
    d = len(lam)
    if d < 2:
        raise ParameterError("need at least 2 eigenvalues")
    gaps = lam[:-1] - lam[1:]
    j_star = int(np.argmax(gaps)) + 1  # argmax picks the first maximum
    return d - j_star


def local_pca(
    points: np.ndarray,
    center_index: int,
    K: int,
    l_override: int | None = None,
) -> LocalFrame:
    """Local PCA frame at ``points[center_index]`` from its K nearest
    neighbors: covariance S = X^T X / (K-1) of the neighbors centered at
    the query point, eigendecomposed with eigenvalues in decreasing order.
    """
    points = np.asarray(points, dtype=float)
    d = points.shape[1]
    if K < d:
        raise ParameterError(f"K={K} must be >= ambient dimension {d}")
    nbrs = knn_search(points, center_index, K)
    q = points[center_index]
    X = points[nbrs] - q
    S = X.T @ X / (K - 1)
    lam, V = np.linalg.eigh(S)
    lam = lam[::-1]
    V = V[:, ::-1]
    lam = np.maximum(lam, 0.0)
    if lam[0] <= 1e-15:
        raise RankDeficiencyError("degenerate neighborhood: zero covariance")
    codim = l_override if l_override is not None else estimate_codim(lam)
    if not 1 <= codim <= d - 1:
        raise ParameterError(f"codimension {codim} outside [1, {d - 1}]")
    return LocalFrame(center=q.copy(), eigvecs=V, eigvals=lam, codim=codim)


def default_K(d: int) -> int:
    return max(d + 1, 2 * d)


def _check_skew(L: np.ndarray) -> np.ndarray:
    L = np.asarray(L, dtype=float)
    if L.ndim != 2 or L.shape[0] != L.shape[1]:
        raise ParameterError("expected a square matrix")
    if np.linalg.norm(L + L.T) > 1e-10:
        raise ParameterError("matrix is not skew-symmetric")
    return L


def expm_skew(L: np.ndarray) -> np.ndarray:
    """exp(L) for skew-symmetric L, landing in SO(l).

    Closed forms for l of 1, 2, 3; scaling-and-squaring with a truncated
    series otherwise.
    """
    L = _check_skew(L)
    n = L.shape[0]
    if n == 1:
        return np.array([[1.0]])
    if n == 2:
        t = L[1, 0]
        c, s = np.cos(t), np.sin(t)
        return np.array([[c, -s], [s, c]])
    if n == 3:
        w = np.array([L[2, 1], L[0, 2], L[1, 0]])
        theta = np.linalg.norm(w)
        if theta < 1e-12:
            return np.eye(3) + L + 0.5 * (L @ L)
        A = L / theta
        return np.eye(3) + np.sin(theta) * A + (1.0 - np.cos(theta)) * (A @ A)
    # scaling and squaring
    s = max(0, int(np.ceil(np.log2(max(np.linalg.norm(L, ord=np.inf), 1e-16)))) + 1)
    A = L / (2.0**s)
    R = np.eye(n)
    term = np.eye(n)
    for k in range(1, 24):
        term = term @ A / k
        R = R + term
    for _ in range(s):
        R = R @ R
    return R


def skew_from_params(theta: np.ndarray, l: int) -> np.ndarray:
    """Build an l x l skew-symmetric matrix from its l(l-1)/2 free
    parameters, filled in row-major order above the diagonal."""
    L = np.zeros((l, l))
    idx = 0
    for i in range(l):
        for j in range(i + 1, l):
            L[i, j] = theta[idx]
            L[j, i] = -theta[idx]
            idx += 1
    return L
