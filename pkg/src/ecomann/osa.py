"""Orthogonal subspace alignment: make the per-point normal-space bases
globally consistent in orientation.

A sparse nearest-neighbor graph over the dataset is reduced to a minimum
spanning tree, rooted, and traversed breadth-first; along every tree edge
the child basis is rotated (within SO(l)) and possibly sign-flipped in
its first column so it matches the parent, and the rotations are
compounded from the root outward.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .lin_geom import expm_skew, skew_from_params

ORIENTATIONS = ((False, False), (False, True), (True, False), (True, True))


@dataclass
class AlignmentGraph:
    nodes: list
    edges: list  # directed (child, parent)
    root: int


@dataclass
class LocalAlignment:
    edge: tuple
    rotations: dict  # (a_flipped, c_flipped) -> R in SO(l)
    losses: dict  # (a_flipped, c_flipped) -> loss


def osa_loss(Va: np.ndarray, Vc: np.ndarray) -> float:
    l = Va.shape[1]
    M = np.eye(l) - Va.T @ Vc
    return float(np.sum(M * M))


def _flip(V: np.ndarray) -> np.ndarray:
    W = V.copy()
    W[:, 0] = -W[:, 0]
    return W


def build_neighbor_graph(points: np.ndarray, H: int):
    """Union of H-nearest-neighbor edges, weighted by distance. H is
    doubled (capped at N-1) until the graph is connected."""
    points = np.asarray(points, dtype=float)
    n = len(points)
    if n < 2:
        raise ParameterError("need at least 2 points")
    if H < 1:
        raise ParameterError("H must be >= 1")
    diffs = points[:, None, :] - points[None, :, :]
    dist = np.sqrt(np.sum(diffs * diffs, axis=2))
    np.fill_diagonal(dist, np.inf)
    order = np.argsort(dist, axis=1, kind="stable")
    h = min(H, n - 1)
    while True:
        edges = {}
        for i in range(n):
            for j in order[i, :h]:
                a, b = (i, int(j)) if i < j else (int(j), i)
                edges[(a, b)] = dist[a, b]
        if _connected(n, edges.keys()):
            return [(a, b, w) for (a, b), w in sorted(edges.items())]
        if h >= n - 1:
            # complete graph is always connected; unreachable in practice
            raise ParameterError("could not connect neighbor graph")
        h = min(2 * h, n - 1)


class _UnionFind:
    def __init__(self, n):
        self.parent = list(range(n))

    def find(self, x):
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        self.parent[ra] = rb
        return True


def _connected(n, edge_keys) -> bool:
    uf = _UnionFind(n)
    comps = n
    for a, b in edge_keys:
        if uf.union(a, b):
            comps -= 1
    return comps == 1


def minimum_spanning_tree(edges, n: int):
    """Kruskal MST over weighted edges (a, b, w); ties broken by the
    lexicographically smallest edge."""
    uf = _UnionFind(n)
    tree = []
    for a, b, w in sorted(edges, key=lambda e: (e[2], e[0], e[1])):
        if uf.union(a, b):
            tree.append((a, b, w))
            if len(tree) == n - 1:
                return tree
    raise ParameterError("graph is disconnected; no spanning tree")


def bfs_tree(tree_edges, n: int, root: int = 0) -> AlignmentGraph:
    adj = [[] for _ in range(n)]
    for a, b, _ in tree_edges:
        adj[a].append(b)
        adj[b].append(a)
    parent = {root: None}
    order = deque([root])
    directed = []
    while order:
        u = order.popleft()
        for v in sorted(adj[u]):
            if v not in parent:
                parent[v] = u
                directed.append((v, u))
                order.append(v)
    if len(parent) != n:
        raise ParameterError("tree does not span all nodes")
    return AlignmentGraph(nodes=list(range(n)), edges=directed, root=root)


def align_local_pair(Vn_a: np.ndarray, Vn_c: np.ndarray, iters: int = 200, lr: float = 0.1) -> LocalAlignment:
    """Optimize R in SO(l) minimizing ||I - (Vn_a R)^T Vn_c||_F^2 for each
    of the four first-column sign-flip orientation pairs.

    R is parametrized as expm of a skew-symmetric matrix and optimized by
    gradient descent with finite-difference gradients (the parameter
    count is l(l-1)/2, at most 3 here). For l = 1 there is nothing to
    optimize: SO(1) = {1}.
    """
    Vn_a = np.asarray(Vn_a, dtype=float)
    Vn_c = np.asarray(Vn_c, dtype=float)
    for V in (Vn_a, Vn_c):
        l = V.shape[1]
        if np.linalg.norm(V.T @ V - np.eye(l)) > 1e-6:
            raise ParameterError("input basis is not column-orthonormal")
    l = Vn_a.shape[1]
    rotations, losses = {}, {}
    for a_fl, c_fl in ORIENTATIONS:
        A = _flip(Vn_a) if a_fl else Vn_a
        C = _flip(Vn_c) if c_fl else Vn_c
        if l == 1:
            R = np.array([[1.0]])
            loss = osa_loss(A, C)
        else:
            R, loss = _optimize_rotation(A, C, iters, lr)
        rotations[(a_fl, c_fl)] = R
        losses[(a_fl, c_fl)] = loss
    return LocalAlignment(edge=(-1, -1), rotations=rotations, losses=losses)


def _optimize_rotation(A, C, iters, lr):
    l = A.shape[1]
    nparam = l * (l - 1) // 2
    theta = np.zeros(nparam)
    fd = 1e-6

    def f(t):
        return osa_loss(A @ expm_skew(skew_from_params(t, l)), C)

    prev = f(theta)
    for _ in range(iters):
        grad = np.empty(nparam)
        for k in range(nparam):
            tp, tm = theta.copy(), theta.copy()
            tp[k] += fd
            tm[k] -= fd
            grad[k] = (f(tp) - f(tm)) / (2 * fd)
        theta = theta - lr * grad
        cur = f(theta)
        if abs(prev - cur) < 1e-14:
            prev = cur
            break
        prev = cur
    return expm_skew(skew_from_params(theta, l)), prev


def osa_align(points: np.ndarray, frames, H: int = 4, iters: int = 200, lr: float = 0.1):
    """Run the full alignment over a dataset and return one aligned
    normal basis per point (the root basis is returned unchanged)."""
    points = np.asarray(points, dtype=float)
    n = len(points)
    codims = {f.codim for f in frames}
    if len(codims) != 1:
        raise ParameterError("frames must share a common codimension")
    graph = build_neighbor_graph(points, H)
    tree = minimum_spanning_tree(graph, n)
    dag = bfs_tree(tree, n, root=0)

    local = {}
    for child, par in dag.edges:
        la = align_local_pair(frames[child].normal_basis, frames[par].normal_basis, iters, lr)
        la.edge = (child, par)
        local[(child, par)] = la

    l = frames[0].codim
    aligned = [None] * n
    flipped = [False] * n
    R_global = [None] * n
    aligned[0] = frames[0].normal_basis.copy()
    R_global[0] = np.eye(l)
    # dag.edges is already in breadth-first order, parents before children
    for child, par in dag.edges:
        la = local[(child, par)]
        p_fl = flipped[par]
        if la.losses[(False, p_fl)] <= la.losses[(True, p_fl)]:
            c_fl = False
        else:
            c_fl = True
        Rg = la.rotations[(c_fl, p_fl)] @ R_global[par]
        base = frames[child].normal_basis
        aligned[child] = (_flip(base) if c_fl else base) @ Rg
        flipped[child] = c_fl
        R_global[child] = Rg
    return aligned, dag, flipped


def edge_losses(aligned, dag: AlignmentGraph):
    """Post-hoc audit: residual alignment loss along every DAG edge."""
    return [
        (child, par, osa_loss(aligned[child], aligned[par]))
        for child, par in dag.edges
    ]
