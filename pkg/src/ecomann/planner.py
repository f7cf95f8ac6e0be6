"""Sequential constrained planning: RRT* per stage with projection-based
extension, staying on the current manifold until the next one is
reached. Collision checking is always-valid here; scenarios are purely
geometric."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError, PlanningError
from .manifolds import paraboloid_manifold, sphere_manifold
from .projection import project


@dataclass
class PlanningProblem:
    manifold_sequence: list  # M_1 .. M_{m+1}
    q_start: np.ndarray
    sample_box: np.ndarray  # (d, 2) low/high
    on_manifold_tol: float = 0.05
    reach_tol: float = 0.05
    step: float = 0.3
    rewire_radius: float = 0.6
    max_nodes: int = 2000
    goal_bias: float = 0.1
    seed: int = 0

    def __post_init__(self):
        self.q_start = np.asarray(self.q_start, dtype=float)
        self.sample_box = np.asarray(self.sample_box, dtype=float)
        if len(self.manifold_sequence) < 2:
            raise ParameterError("need at least two manifolds")
        if self.on_manifold_tol <= 0 or self.reach_tol <= 0:
            raise ParameterError("tolerances must be > 0")


@dataclass
class PlannedPath:
    stages: list  # list of (n_i, d) waypoint arrays
    total_cost: float
    nodes_explored: int


@dataclass
class Tree:
    configs: list = field(default_factory=list)
    parents: list = field(default_factory=list)
    costs: list = field(default_factory=list)
    children: list = field(default_factory=list)

    def add(self, q, parent, cost):
        self.configs.append(np.asarray(q, dtype=float))
        self.parents.append(parent)
        self.costs.append(cost)
        self.children.append([])
        idx = len(self.configs) - 1
        if parent is not None:
            self.children[parent].append(idx)
        return idx

    def __len__(self):
        return len(self.configs)


class _StackedManifold:
    """Two constraints stacked, for seeking manifold intersections."""

    def __init__(self, a, b):
        self.a, self.b = a, b
        self.ambient_dim = a.ambient_dim
        self.codim = a.codim + b.codim
        self.kind = "analytic"

    def evaluate(self, q):
        return np.concatenate([self.a.evaluate(q), self.b.evaluate(q)])

    def jacobian(self, q):
        return np.vstack([self.a.jacobian(q), self.b.jacobian(q)])


def _edge_valid(manifold, qa, qb, tol):
    mid = 0.5 * (qa + qb)
    return np.linalg.norm(manifold.evaluate(mid)) <= 2.0 * tol


def _propagate_cost(tree: Tree, node: int, delta: float):
    stack = [node]
    while stack:
        u = stack.pop()
        tree.costs[u] += delta
        stack.extend(tree.children[u])


def rrt_star_stage(current, nxt, q_start, problem: PlanningProblem, rng):
    """Grow an RRT* on `current` until some node lies within reach_tol of
    `nxt`. Returns (tree, reached index or None)."""
    q_start = np.asarray(q_start, dtype=float)
    if np.linalg.norm(current.evaluate(q_start)) > problem.on_manifold_tol:
        raise ParameterError("stage start is not on the current manifold")
    tree = Tree()
    tree.add(q_start, None, 0.0)
    if np.linalg.norm(nxt.evaluate(q_start)) <= problem.reach_tol:
        return tree, 0
    stacked = _StackedManifold(current, nxt)
    box = problem.sample_box
    tol = problem.on_manifold_tol

    while len(tree) < problem.max_nodes:
        if rng.uniform() < problem.goal_bias:
            # steer the most promising node toward the intersection
            best = int(np.argmin(
                [np.linalg.norm(nxt.evaluate(q)) for q in tree.configs]
            ))
            q_rand, ok, _ = project(stacked, tree.configs[best],
                                    tol=problem.reach_tol, max_iters=50)
            if not ok and np.linalg.norm(q_rand - tree.configs[best]) < 1e-12:
                q_rand = rng.uniform(box[:, 0], box[:, 1])
        else:
            q_rand = rng.uniform(box[:, 0], box[:, 1])

        configs = np.array(tree.configs)
        dists = np.linalg.norm(configs - q_rand, axis=1)
        near_idx = int(np.argmin(dists))
        q_near = tree.configs[near_idx]
        gap = q_rand - q_near
        gap_norm = np.linalg.norm(gap)
        if gap_norm < 1e-12:
            continue
        q_target = q_rand if gap_norm <= problem.step else (
            q_near + problem.step * gap / gap_norm
        )
        q_new, ok, _ = project(current, q_target, tol=tol, max_iters=100)
        if not ok:
            continue

        # choose parent among the neighborhood, then rewire through q_new
        nbr = np.flatnonzero(
            np.linalg.norm(configs - q_new, axis=1) <= problem.rewire_radius
        )
        parent, parent_cost = near_idx, (
            tree.costs[near_idx] + np.linalg.norm(q_new - q_near)
        )
        if not _edge_valid(current, q_near, q_new, tol):
            continue
        for j in nbr:
            c = tree.costs[j] + np.linalg.norm(q_new - tree.configs[j])
            if c < parent_cost and _edge_valid(current, tree.configs[j], q_new, tol):
                parent, parent_cost = int(j), c
        new_idx = tree.add(q_new, parent, parent_cost)
        for j in nbr:
            j = int(j)
            c = parent_cost + np.linalg.norm(tree.configs[j] - q_new)
            if c < tree.costs[j] and _edge_valid(current, q_new, tree.configs[j], tol):
                old_parent = tree.parents[j]
                if old_parent is not None:
                    tree.children[old_parent].remove(j)
                tree.parents[j] = new_idx
                tree.children[new_idx].append(j)
                _propagate_cost(tree, j, c - tree.costs[j])
        if np.linalg.norm(nxt.evaluate(q_new)) <= problem.reach_tol:
            return tree, new_idx
    return tree, None


def _extract(tree: Tree, node: int):
    path = []
    while node is not None:
        path.append(tree.configs[node])
        node = tree.parents[node]
    return list(reversed(path))


def sequential_plan(problem: PlanningProblem) -> PlannedPath:
    """Plan across the manifold sequence; each reached node is refined
    onto the intersection so stage boundaries coincide exactly."""
    rng = np.random.default_rng(problem.seed)
    manifolds = problem.manifold_sequence
    q = problem.q_start
    stages = []
    explored = 0
    for i in range(len(manifolds) - 1):
        current, nxt = manifolds[i], manifolds[i + 1]
        tree, reached = rrt_star_stage(current, nxt, q, problem, rng)
        explored += len(tree)
        if reached is None:
            raise PlanningError(f"stage {i + 1} failed to reach the next "
                                f"manifold within {problem.max_nodes} nodes",
                                stage=i + 1)
        waypoints = _extract(tree, reached)
        refined, ok, _ = project(_StackedManifold(current, nxt),
                                 waypoints[-1],
                                 tol=problem.on_manifold_tol, max_iters=200)
        if ok:
            waypoints[-1] = refined
        stages.append(np.array(waypoints))
        q = waypoints[-1]
    cost = sum(
        float(np.sum(np.linalg.norm(np.diff(st, axis=0), axis=1)))
        for st in stages
    )
    return PlannedPath(stages=stages, total_cost=cost, nodes_explored=explored)


def validate_path(path: PlannedPath, problem: PlanningProblem) -> dict:
    """Re-check continuity and per-waypoint residuals; returns a report
    with the max residual per stage and any flagged waypoints."""
    if not path.stages or any(len(st) == 0 for st in path.stages):
        raise ParameterError("empty path")
    report = {"ok": True, "max_residual_per_stage": [], "violations": []}
    for i, st in enumerate(path.stages):
        m = problem.manifold_sequence[i]
        res = [float(np.linalg.norm(m.evaluate(q))) for q in st]
        report["max_residual_per_stage"].append(max(res))
        for j, r in enumerate(res):
            if r > problem.on_manifold_tol + 1e-12:
                report["ok"] = False
                report["violations"].append((i + 1, j, r))
        if i + 1 < len(path.stages):
            if np.linalg.norm(st[-1] - path.stages[i + 1][0]) > 1e-9:
                report["ok"] = False
                report["violations"].append((i + 1, len(st) - 1, "discontinuity"))
    return report


def hourglass_problem(sphere=None, seed: int = 0, **kw) -> PlanningProblem:
    """The geometric benchmark: start at the vertex of a downward
    paraboloid, cross the (learned or analytic) unit sphere, and reach an
    upward paraboloid. Both paraboloids intersect the sphere in circles."""
    mid = sphere if sphere is not None else sphere_manifold()
    return PlanningProblem(
        manifold_sequence=[
            paraboloid_manifold(-1.0),
            mid,
            paraboloid_manifold(+1.0),
        ],
        q_start=np.array([0.0, 0.0, 0.5]),
        sample_box=np.array([[-1.5, 1.5]] * 3),
        seed=seed,
        **kw,
    )
