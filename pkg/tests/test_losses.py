import numpy as np
import pytest

from ecomann import losses
from ecomann.errors import EcomannError
from ecomann.lin_geom import LocalFrame
from ecomann.network import init_model

from .conftest import random_orthonormal
from .gradcheck import max_grad_error


def small_model(d=3, l=2, seed=0):
    return init_model(d, l, seed=seed, hidden=(8, 6))


def make_ctx(d=3, l=2, seed=1):
    rng = np.random.default_rng(seed)
    return {
        "q": rng.standard_normal(d),
        "q_plus": rng.standard_normal(d),
        "q_minus": rng.standard_normal(d),
        "q_far": rng.standard_normal(d),
        "q_near": rng.standard_normal(d),
        "q_a": rng.standard_normal(d),
        "q_c": rng.standard_normal(d),
        "label": 0.7,
        "Vn": random_orthonormal(rng, d, l),
        "damping": 1e-4,
    }


def test_loss_norm_values():
    assert losses.loss_norm(np.array([3.0, 4.0]), 5.0) == 0.0
    assert np.isclose(losses.loss_norm(np.array([1.0]), 0.4), 0.36)


def test_loss_reflection_zero_for_odd_pair():
    h = np.array([0.3, -0.2])
    assert losses.loss_reflection(h, -h) == 0.0
    assert losses.loss_reflection(h, h) == pytest.approx(4 * float(h @ h))


def test_loss_fraction_direction_only():
    # scaling either argument does not change the loss
    hf = np.array([2.0, 1.0])
    hn = np.array([1.0, -1.0])
    a = losses.loss_fraction(hf, hn)
    b = losses.loss_fraction(5.0 * hf, 0.1 * hn)
    assert np.isclose(a, b)
    assert losses.loss_fraction(hf, 3.0 * hf) == pytest.approx(0.0)


def test_loss_fraction_skips_tiny_norms():
    with pytest.raises(EcomannError):
        losses.loss_fraction(np.array([1e-12]), np.array([1.0]))


def test_loss_similar():
    assert losses.loss_similar(np.array([1.0, 2.0]), np.array([1.0, 2.0])) == 0.0
    assert losses.loss_similar(np.array([1.0]), np.array([-1.0])) == 4.0


def test_alignment_zero_when_normal_in_row_space():
    # J rows equal to Vn columns: the normal space sits exactly in the
    # row space, so the projected component vanishes (up to damping)
    rng = np.random.default_rng(2)
    Vn = random_orthonormal(rng, 4, 2)
    val = losses._alignment_from_jacobian(Vn.T, Vn, 1e-10)
    assert abs(val) < 1e-8


def test_alignment_max_when_orthogonal():
    rng = np.random.default_rng(3)
    basis = random_orthonormal(rng, 4, 4)
    J = basis[:, :2].T
    Vn = basis[:, 2:]
    val = losses._alignment_from_jacobian(J, Vn, 1e-10)
    assert np.isclose(val, 2.0, atol=1e-8)


def test_alignment_damping_escalation():
    # an exactly singular J J^T is handled by escalating the damping
    J = np.zeros((2, 3))
    Vn = np.eye(3)[:, :2]
    val = losses._alignment_from_jacobian(J, Vn, 0.0)
    assert np.isfinite(val)


def test_projector_loss_identity():
    # tr(V V^T E E^T) is symmetric in the two orthonormal bases, so the
    # two projector losses of the alignment objective coincide
    rng = np.random.default_rng(4)
    for _ in range(100):
        d = int(rng.integers(2, 7))
        l = int(rng.integers(1, d))
        V = random_orthonormal(rng, d, l)
        E = random_orthonormal(rng, d, l)
        a = np.linalg.norm(V @ V.T @ E) ** 2
        b = np.linalg.norm(E @ E.T @ V) ** 2
        assert abs(a - b) < 1e-10


@pytest.mark.parametrize("kind", ["norm", "reflection", "fraction",
                                  "similar", "alignment"])
def test_loss_gradients_match_finite_differences(kind):
    model = small_model()
    ctx = make_ctx()
    assert max_grad_error(model, kind, ctx) < 1e-3


def test_loss_gradients_l1(sphere_frames):
    model = small_model(d=3, l=1, seed=5)
    frame = sphere_frames[0]
    ctx = make_ctx(d=3, l=1, seed=6)
    ctx["Vn"] = frame.normal_basis
    for kind in ("norm", "alignment"):
        assert max_grad_error(model, kind, ctx) < 1e-3
