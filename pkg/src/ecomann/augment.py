"""Off-manifold augmentation along aligned normal directions, with the
nearest-parent rejection rule, plus construction of the siamese pair
lists used during training."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError
from .lin_geom import default_K

_CHUNK = 4096


@dataclass
class AugmentedPoint:
    point: np.ndarray
    parent_index: int
    level: int  # 0 = on-manifold
    direction: np.ndarray | None  # unit vector in the parent's normal space
    norm_label: float


@dataclass
class SiamesePairs:
    reflection_pairs: list = field(default_factory=list)  # (i_plus, i_minus)
    fraction_pairs: list = field(default_factory=list)  # (i_far, i_near, ratio)
    similar_pairs: list = field(default_factory=list)  # (i_a, i_c)


def compute_epsilon(frames) -> float:
    """Augmentation magnitude: sqrt of the mean tangent-space eigenvalue
    over all frames."""
    if not frames:
        raise ParameterError("frames must be nonempty")
    vals = np.concatenate([f.tangent_eigvals for f in frames])
    return float(np.sqrt(np.mean(vals)))


def _nearest_parent(candidates: np.ndarray, on_manifold: np.ndarray) -> np.ndarray:
    """Index of the nearest on-manifold point for each candidate row."""
    out = np.empty(len(candidates), dtype=int)
    for s in range(0, len(candidates), _CHUNK):
        block = candidates[s : s + _CHUNK]
        d2 = (
            np.sum(block * block, axis=1)[:, None]
            - 2.0 * block @ on_manifold.T
            + np.sum(on_manifold * on_manifold, axis=1)[None, :]
        )
        out[s : s + _CHUNK] = np.argmin(d2, axis=1)
    return out


def augment_dataset(
    dataset,
    aligned_normals,
    epsilon: float,
    levels: int = 7,
    dirs_per_point: int = 2,
    seed: int = 0,
    neighbor_K: int | None = None,
):
    """Emit q +/- i*epsilon*u for each on-manifold q, direction slot, and
    level i = 1..levels, rejecting candidates whose nearest on-manifold
    point is not their parent.

    Directions come from one shared standard-normal weight vector per
    slot applied to every point's aligned normal basis, so that
    augmentations of neighboring parents are comparable (the similar-pair
    construction relies on this). Level-0 entries for the on-manifold
    points are included first, with norm label 0.

    Returns (list of AugmentedPoint, SiamesePairs).
    """
    if epsilon <= 0:
        raise ParameterError("epsilon must be > 0")
    if levels < 1:
        raise ParameterError("levels must be >= 1")
    pts = dataset.points
    n, d = pts.shape
    l = aligned_normals[0].shape[1]
    rng = np.random.default_rng(seed)

    weights = rng.standard_normal((dirs_per_point, l))
    for s in range(dirs_per_point):
        while np.linalg.norm(weights[s]) < 1e-8:
            weights[s] = rng.standard_normal(l)

    augmented = [
        AugmentedPoint(pts[p].copy(), p, 0, None, 0.0) for p in range(n)
    ]

    # candidate grid: parent x slot x level x sign
    cand_pts = []
    cand_meta = []  # (parent, slot, level, sign)
    dirs = np.empty((n, dirs_per_point, d))
    for p in range(n):
        for s in range(dirs_per_point):
            u = aligned_normals[p] @ weights[s]
            u /= np.linalg.norm(u)
            dirs[p, s] = u
            for i in range(1, levels + 1):
                for sign in (1, -1):
                    cand_pts.append(pts[p] + sign * i * epsilon * u)
                    cand_meta.append((p, s, i, sign))
    cand_pts = np.array(cand_pts)
    nearest = _nearest_parent(cand_pts, pts)

    index_of = {}
    for k, (p, s, i, sign) in enumerate(cand_meta):
        if nearest[k] != p:
            continue
        idx = len(augmented)
        u = sign * dirs[p, s]
        augmented.append(
            AugmentedPoint(cand_pts[k], p, i, u, i * epsilon)
        )
        index_of[(p, s, i, sign)] = idx

    pairs = SiamesePairs()
    for (p, s, i, sign), idx in index_of.items():
        if sign == 1:
            mirror = index_of.get((p, s, i, -1))
            if mirror is not None:
                pairs.reflection_pairs.append((idx, mirror))
        if i >= 2:
            near_level = (i + 1) // 2
            near = index_of.get((p, s, near_level, sign))
            if near is not None:
                pairs.fraction_pairs.append((idx, near, near_level / i))

    for a, c in _mutual_knn_pairs(pts, neighbor_K or default_K(d)):
        for s in range(dirs_per_point):
            for i in range(1, levels + 1):
                for sign in (1, -1):
                    ia = index_of.get((a, s, i, sign))
                    ic = index_of.get((c, s, i, sign))
                    if ia is not None and ic is not None:
                        pairs.similar_pairs.append((ia, ic))
    return augmented, pairs


def _mutual_knn_pairs(pts: np.ndarray, K: int):
    n = len(pts)
    K = min(K, n - 1)
    d2 = (
        np.sum(pts * pts, axis=1)[:, None]
        - 2.0 * pts @ pts.T
        + np.sum(pts * pts, axis=1)[None, :]
    )
    np.fill_diagonal(d2, np.inf)
    nbrs = np.argsort(d2, axis=1, kind="stable")[:, :K]
    nbr_sets = [set(map(int, row)) for row in nbrs]
    out = []
    for a in range(n):
        for b in nbr_sets[a]:
            if a < b and a in nbr_sets[b]:
                out.append((a, b))
    return out
