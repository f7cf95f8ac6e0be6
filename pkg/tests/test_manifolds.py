import numpy as np
import pytest

from ecomann.manifolds import (
    ANALYTIC_BY_GT,
    LearnedManifold,
    circle3d_manifold,
    orient_manifold,
    paraboloid_manifold,
    plane_arm_manifold,
    sphere_manifold,
)
from ecomann.network import forward, init_model, jacobian


def fd_jacobian(m, q, eps=1e-7):
    h0 = m.evaluate(q)
    J = np.empty((len(h0), len(q)))
    for k in range(len(q)):
        e = np.zeros(len(q))
        e[k] = eps
        J[:, k] = (m.evaluate(q + e) - m.evaluate(q - e)) / (2 * eps)
    return J


@pytest.mark.parametrize("factory,d", [
    (sphere_manifold, 3),
    (circle3d_manifold, 3),
    (lambda: paraboloid_manifold(1.0), 3),
    (lambda: paraboloid_manifold(-1.0), 3),
    (plane_arm_manifold, 3),
    (orient_manifold, 6),
])
def test_analytic_jacobians_match_fd(factory, d):
    m = factory()
    rng = np.random.default_rng(0)
    for _ in range(5):
        q = rng.uniform(-1.0, 1.0, d)
        J = m.jacobian(q)
        J_fd = fd_jacobian(m, q)
        assert np.abs(J - J_fd).max() < 1e-5


def test_sphere_zero_set():
    m = sphere_manifold()
    assert np.allclose(m.evaluate(np.array([0.0, 1.0, 0.0])), 0.0)
    assert m.evaluate(np.zeros(3))[0] < 0


def test_circle3d_zero_set():
    m = circle3d_manifold()
    q = np.array([np.cos(0.3), np.sin(0.3), 0.0])
    assert np.allclose(m.evaluate(q), 0.0, atol=1e-12)
    assert m.codim == 2


def test_paraboloid_zero_set():
    up = paraboloid_manifold(1.0)
    # z = x^2 + y^2 - 0.5
    q = np.array([0.5, 0.5, 0.0])
    assert np.allclose(up.evaluate(q), 0.0, atol=1e-12)
    down = paraboloid_manifold(-1.0)
    q = np.array([0.5, 0.5, 0.0])
    assert np.allclose(down.evaluate(q), 0.0, atol=1e-12)


def test_hourglass_intersections_exist():
    # the paraboloids must intersect the unit sphere for the staged
    # planning problem to be feasible: x^2+y^2 = z +- 0.5 and ||q|| = 1
    z = (-1.0 + np.sqrt(3.0)) / 2.0
    r2 = 1.0 - z * z
    q = np.array([np.sqrt(r2), 0.0, z])
    up = paraboloid_manifold(1.0)
    sph = sphere_manifold()
    assert abs(up.evaluate(q)[0]) < 1e-12
    assert abs(sph.evaluate(q)[0]) < 1e-12


def test_plane_arm_manifold_zero_on_data():
    m = plane_arm_manifold()
    assert np.allclose(m.evaluate(np.zeros(3)), 0.0, atol=1e-12)


def test_orient_manifold_zero_on_data():
    m = orient_manifold()
    assert np.allclose(m.evaluate(np.zeros(6)), 0.0, atol=1e-12)
    assert m.codim == 2


def test_analytic_registry():
    for gt in ("Sphere", "Circle3D", "PlaneArm3R", "Orient6R"):
        assert gt in ANALYTIC_BY_GT


def test_learned_manifold_wraps_network():
    model = init_model(3, 1, seed=0)
    lm = LearnedManifold(model)
    rng = np.random.default_rng(1)
    q = rng.standard_normal(3)
    assert np.allclose(lm.evaluate(q), forward(model, q))
    assert np.allclose(lm.jacobian(q), jacobian(model, q))
    Q = rng.standard_normal((6, 3))
    assert np.allclose(lm.evaluate_batch(Q)[2], forward(model, Q[2]))
    assert np.allclose(lm.jacobian_batch(Q)[4], jacobian(model, Q[4]))
    assert lm.ambient_dim == 3 and lm.codim == 1
