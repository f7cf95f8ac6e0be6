"""Finite-difference gradient checking helpers shared by the loss tests
and the acceptance suite.

Each torch loss below mirrors a numpy reference loss from
ecomann.losses; gradients from torch autograd are compared against
central finite differences of the numpy implementation over every
network parameter.
"""

import numpy as np
import torch

from ecomann import losses
from ecomann.network import MlpModel, forward, jacobian
from ecomann.training import _t_forward, _t_jacobian


def torch_params(model):
    ws = [torch.tensor(w, dtype=torch.float64, requires_grad=True)
          for w in model.weights]
    bs = [torch.tensor(b, dtype=torch.float64, requires_grad=True)
          for b in model.biases]
    return ws, bs


def model_from_flat(model, flat):
    weights, biases = [], []
    k = 0
    for w, b in zip(model.weights, model.biases):
        weights.append(flat[k : k + w.size].reshape(w.shape).copy())
        k += w.size
        biases.append(flat[k : k + b.size].copy())
        k += b.size
    return MlpModel(weights=weights, biases=biases)


def flatten_params(model):
    parts = []
    for w, b in zip(model.weights, model.biases):
        parts.append(w.ravel())
        parts.append(b)
    return np.concatenate(parts)


def flatten_grads(ws, bs):
    def g(t):
        if t.grad is None:
            return np.zeros(t.shape, dtype=float)
        return t.grad.detach().numpy()

    parts = []
    for w, b in zip(ws, bs):
        parts.append(g(w).ravel())
        parts.append(g(b))
    return np.concatenate(parts)


def numpy_loss(model, kind, ctx):
    if kind == "norm":
        return losses.loss_norm(forward(model, ctx["q"]), ctx["label"])
    if kind == "reflection":
        return losses.loss_reflection(forward(model, ctx["q_plus"]),
                                      forward(model, ctx["q_minus"]))
    if kind == "fraction":
        return losses.loss_fraction(forward(model, ctx["q_far"]),
                                    forward(model, ctx["q_near"]))
    if kind == "similar":
        return losses.loss_similar(forward(model, ctx["q_a"]),
                                   forward(model, ctx["q_c"]))
    if kind == "alignment":
        return losses._alignment_from_jacobian(
            jacobian(model, ctx["q"]), ctx["Vn"], ctx["damping"])
    raise ValueError(kind)


def torch_loss(ws, bs, kind, ctx):
    t = lambda x: torch.tensor(np.atleast_2d(x), dtype=torch.float64)
    if kind == "norm":
        h = _t_forward(ws, bs, t(ctx["q"]))[0]
        return (torch.linalg.norm(h) - ctx["label"]) ** 2
    if kind == "reflection":
        v = _t_forward(ws, bs, t(ctx["q_plus"]))[0] + \
            _t_forward(ws, bs, t(ctx["q_minus"]))[0]
        return torch.sum(v * v)
    if kind == "fraction":
        hf = _t_forward(ws, bs, t(ctx["q_far"]))[0]
        hn = _t_forward(ws, bs, t(ctx["q_near"]))[0]
        v = hf / torch.linalg.norm(hf) - hn / torch.linalg.norm(hn)
        return torch.sum(v * v)
    if kind == "similar":
        v = _t_forward(ws, bs, t(ctx["q_a"]))[0] - \
            _t_forward(ws, bs, t(ctx["q_c"]))[0]
        return torch.sum(v * v)
    if kind == "alignment":
        J = _t_jacobian(ws, bs, t(ctx["q"]))[0]
        V = torch.tensor(np.ascontiguousarray(ctx["Vn"]), dtype=torch.float64)
        l = J.shape[0]
        M = J @ J.T + ctx["damping"] * torch.eye(l, dtype=torch.float64)
        JV = J @ V
        sol = torch.linalg.solve(M, JV)
        return torch.sum(V * V) - torch.sum(JV * sol)
    raise ValueError(kind)


def max_grad_error(model, kind, ctx, fd_eps=1e-6):
    """Max relative discrepancy between torch autograd and central finite
    differences of the numpy loss, over all parameters."""
    ws, bs = torch_params(model)
    loss = torch_loss(ws, bs, kind, ctx)
    loss.backward()
    grad = flatten_grads(ws, bs)

    flat = flatten_params(model)
    fd = np.empty_like(flat)
    for k in range(len(flat)):
        up, dn = flat.copy(), flat.copy()
        up[k] += fd_eps
        dn[k] -= fd_eps
        fd[k] = (numpy_loss(model_from_flat(model, up), kind, ctx)
                 - numpy_loss(model_from_flat(model, dn), kind, ctx)) / (2 * fd_eps)
    denom = max(np.abs(fd).max(), 1e-8)
    return np.abs(grad - fd).max() / denom
