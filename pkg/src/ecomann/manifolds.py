"""Uniform implicit-manifold interface shared by the projector, the
metrics, and the planner, with analytic instances and a wrapper for
learned models."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .dataset import fk_frames, orient_chain, plane_arm_chain


@dataclass
class AnalyticManifold:
    name: str
    ambient_dim: int
    codim: int
    _evaluate: Callable
    _jacobian: Callable
    kind: str = "analytic"

    def evaluate(self, q: np.ndarray) -> np.ndarray:
        return np.atleast_1d(np.asarray(self._evaluate(np.asarray(q, dtype=float))))

    def jacobian(self, q: np.ndarray) -> np.ndarray:
        J = np.asarray(self._jacobian(np.asarray(q, dtype=float)), dtype=float)
        return J.reshape(self.codim, self.ambient_dim)


def sphere_manifold() -> AnalyticManifold:
    return AnalyticManifold(
        "sphere", 3, 1,
        lambda q: np.array([q @ q - 1.0]),
        lambda q: 2.0 * q[None, :],
    )


def circle3d_manifold() -> AnalyticManifold:
    return AnalyticManifold(
        "circle3d", 3, 2,
        lambda q: np.array([q[0] ** 2 + q[1] ** 2 - 1.0, q[2]]),
        lambda q: np.array([[2 * q[0], 2 * q[1], 0.0], [0.0, 0.0, 1.0]]),
    )


def paraboloid_manifold(sign: float, c: float = 0.5) -> AnalyticManifold:
    """z = sign * (x^2 + y^2 - c), written as an implicit constraint.

    With c = 0.5 both signs intersect the unit sphere in nonempty circles
    (at z = (-1 + sqrt(3))/2 for sign +1 and its negative for sign -1).
    """
    def h(q):
        return np.array([sign * (q[0] ** 2 + q[1] ** 2 - c) - q[2]])

    def J(q):
        return np.array([[2 * sign * q[0], 2 * sign * q[1], -1.0]])

    name = "paraboloid_up" if sign > 0 else "paraboloid_down"
    return AnalyticManifold(name, 3, 1, h, J)


def plane_arm_manifold() -> AnalyticManifold:
    """End-effector height of the 3R arm: h(q) = p_z(fk(q))."""
    chain = plane_arm_chain()

    def h(q):
        p, _, _, _ = fk_frames(chain, q)
        return np.array([p[2]])

    def J(q):
        p, _, axes_w, origins = fk_frames(chain, q)
        # revolute joint: dp/dq_i = w_i x (p - p_i); keep the z row
        row = [np.cross(w, p - o)[2] for w, o in zip(axes_w, origins)]
        return np.array([row])

    return AnalyticManifold("plane_arm", chain.dof, 1, h, J)


def orient_manifold() -> AnalyticManifold:
    """Uprightness of the 6R arm: h(q) = (Rz_x, Rz_y) with Rz the world
    z-axis of the end-effector frame."""
    chain = orient_chain()

    def h(q):
        _, R, _, _ = fk_frames(chain, q)
        return R[:2, 2].copy()

    def J(q):
        _, R, axes_w, _ = fk_frames(chain, q)
        rz = R[:, 2]
        # dRz/dq_i = w_i x Rz
        cols = [np.cross(w, rz)[:2] for w in axes_w]
        return np.stack(cols, axis=1)

    return AnalyticManifold("orient", chain.dof, 2, h, J)


class LearnedManifold:
    """Adapter putting a trained model behind the manifold interface."""

    kind = "learned"

    def __init__(self, model):
        self.model = model
        self.ambient_dim = model.layer_dims[0]
        self.codim = model.layer_dims[-1]

    def evaluate(self, q):
        from .network import forward

        return forward(self.model, q)

    def jacobian(self, q):
        from .network import jacobian

        return jacobian(self.model, q)

    def evaluate_batch(self, Q):
        from .network import forward_batch

        return forward_batch(self.model, Q)

    def jacobian_batch(self, Q):
        from .network import jacobian_batch

        return jacobian_batch(self.model, Q)


ANALYTIC_BY_GT = {
    "Sphere": sphere_manifold,
    "Circle3D": circle3d_manifold,
    "PlaneArm3R": plane_arm_manifold,
    "Orient6R": orient_manifold,
}
