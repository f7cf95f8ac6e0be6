"""The five training losses, in their per-sample scalar forms. The
training loop re-implements these in torch; these definitions are the
reference semantics and are what the gradient checks compare against."""

from __future__ import annotations

import numpy as np

from .errors import EcomannError
from .network import jacobian

FRACTION_DELTA = 1e-8


def loss_norm(h: np.ndarray, norm_label: float) -> float:
    """(||h|| - i*eps)^2."""
    return float((np.linalg.norm(h) - norm_label) ** 2)


def loss_reflection(h_plus: np.ndarray, h_minus: np.ndarray) -> float:
    """||h(q + i eps u) + h(q - i eps u)||^2: outputs should be odd
    across the manifold."""
    v = np.asarray(h_plus) + np.asarray(h_minus)
    return float(v @ v)


def loss_fraction(h_far: np.ndarray, h_near: np.ndarray) -> float:
    """Squared difference of the direction-normalized outputs."""
    h_far = np.asarray(h_far, dtype=float)
    h_near = np.asarray(h_near, dtype=float)
    nf, nn = np.linalg.norm(h_far), np.linalg.norm(h_near)
    if nf <= FRACTION_DELTA or nn <= FRACTION_DELTA:
        raise EcomannError("fraction loss undefined below delta; skip the pair")
    v = h_far / nf - h_near / nn
    return float(v @ v)


def loss_similar(h_a: np.ndarray, h_c: np.ndarray) -> float:
    v = np.asarray(h_a) - np.asarray(h_c)
    return float(v @ v)


def loss_alignment(model, q: np.ndarray, frame, damping: float) -> float:
    """tr(V_N V_N^T P_null(J)) with P_null(J) = I - J^T (J J^T + lam I)^-1 J.

    Vanishes when the estimated normal space lies in the row space of the
    network Jacobian; equals the projector losses in the exact limit.
    """
    J = jacobian(model, np.asarray(q, dtype=float))
    return _alignment_from_jacobian(J, frame.normal_basis, damping)


def _alignment_from_jacobian(J: np.ndarray, Vn: np.ndarray, damping: float) -> float:
    l = J.shape[0]
    lam = damping
    for _ in range(4):
        M = J @ J.T + lam * np.eye(l)
        try:
            P_vn = Vn - J.T @ np.linalg.solve(M, J @ Vn)
            return float(np.sum(Vn * P_vn))
        except np.linalg.LinAlgError:
            lam = lam * 10.0 if lam > 0.0 else 1e-12
    raise EcomannError("alignment loss: J J^T stays singular after damping escalation")
