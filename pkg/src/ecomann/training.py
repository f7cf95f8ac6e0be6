"""Training pipeline: local PCA -> subspace alignment -> augmentation ->
minibatch optimization of the weighted loss sum.

The optimization runs in torch (the alignment loss differentiates
through the input Jacobian of the network, which needs autodiff through
second derivatives); the resulting weights are copied back into the
plain-array model used everywhere else.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

import numpy as np
import torch

from .augment import augment_dataset, compute_epsilon
from .errors import TrainingError
from .lin_geom import default_K, local_pca
from .losses import FRACTION_DELTA
from .network import MlpModel, init_model
from .osa import osa_align


@dataclass
class TrainConfig:
    w_norm: float = 1.0
    w_refl: float = 1.0
    w_frac: float = 1.0
    w_sim: float = 1.0
    w_align: float = 1.0
    learning_rate: float = 1e-3
    epochs: int = 100
    batch_size: int = 128
    seed: int = 0
    damping: float = 1e-4
    K: int = 0  # 0 -> max(d+1, 2d)
    osa_H: int = 4
    osa_iters: int = 200
    osa_lr: float = 0.1
    levels: int = 7
    dirs_per_point: int = 2
    disable_augmentation: bool = False
    disable_osa: bool = False
    disable_reflection: bool = False
    disable_fraction: bool = False
    disable_similar: bool = False
    disable_alignment: bool = False

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning rate must be > 0")
        if self.damping <= 0:
            raise ValueError("damping must be > 0")

    def replace(self, **kw) -> "TrainConfig":
        d = {**self.__dict__, **kw}
        return TrainConfig(**d)


@dataclass
class PreparedData:
    frames: list
    aligned_normals: list
    epsilon: float
    augmented: list
    pairs: object
    codim: int


def prepare(dataset, config: TrainConfig) -> PreparedData:
    """Everything before the optimization loop."""
    pts = dataset.points
    d = dataset.ambient_dim
    # the codimension vote needs a larger neighborhood than the d+1
    # minimum to be reliable; 40 is comfortably past the noise floor
    K = config.K or min(len(pts) - 1, max(default_K(d), 40))
    raw = [local_pca(pts, i, K) for i in range(len(pts))]
    codim = Counter(f.codim for f in raw).most_common(1)[0][0]
    frames = [
        f if f.codim == codim
        else local_pca(pts, i, K, l_override=codim)
        for i, f in enumerate(raw)
    ]
    if config.disable_osa:
        aligned = [f.normal_basis.copy() for f in frames]
    else:
        aligned, _, _ = osa_align(pts, frames, H=config.osa_H,
                                  iters=config.osa_iters, lr=config.osa_lr)
    epsilon = compute_epsilon(frames)
    if config.disable_augmentation:
        from .augment import AugmentedPoint, SiamesePairs

        augmented = [AugmentedPoint(p.copy(), i, 0, None, 0.0)
                     for i, p in enumerate(pts)]
        pairs = SiamesePairs()
    else:
        augmented, pairs = augment_dataset(
            dataset, aligned, epsilon,
            levels=config.levels, dirs_per_point=config.dirs_per_point,
            seed=config.seed, neighbor_K=K,
        )
    return PreparedData(frames, aligned, epsilon, augmented, pairs, codim)


def _t_forward(weights, biases, Q):
    a = Q
    last = len(weights) - 1
    for k, (W, b) in enumerate(zip(weights, biases)):
        a = a @ W.T + b
        if k != last:
            a = torch.tanh(a)
    return a


def _t_jacobian(weights, biases, Q):
    a = Q
    last = len(weights) - 1
    J = None
    for k, (W, b) in enumerate(zip(weights, biases)):
        z = a @ W.T + b
        if k != last:
            a = torch.tanh(z)
            M = (1.0 - a * a).unsqueeze(2) * W.unsqueeze(0)
        else:
            M = W.unsqueeze(0).expand(a.shape[0], -1, -1)
        J = M if J is None else M @ J
    return J


class _Cycler:
    """Deterministic shuffled cycling over an index list."""

    def __init__(self, n, rng):
        self.n = n
        self.rng = rng
        self.order = rng.permutation(n) if n else np.empty(0, dtype=int)
        self.pos = 0

    def take(self, count):
        if self.n == 0:
            return np.empty(0, dtype=int)
        out = []
        while count > 0:
            avail = self.n - self.pos
            grab = min(avail, count)
            out.append(self.order[self.pos : self.pos + grab])
            self.pos += grab
            count -= grab
            if self.pos == self.n:
                self.order = self.rng.permutation(self.n)
                self.pos = 0
        return np.concatenate(out)


def train(dataset, config: TrainConfig):
    """Returns (trained MlpModel, per-epoch mean loss history)."""
    prep = prepare(dataset, config)
    model = init_model(dataset.ambient_dim, prep.codim, config.seed)
    history = _optimize(model, dataset, prep, config)
    return model, history


def _optimize(model: MlpModel, dataset, prep: PreparedData, config: TrainConfig):
    torch.set_grad_enabled(True)
    weights = [torch.tensor(W, requires_grad=True) for W in model.weights]
    biases = [torch.tensor(b, requires_grad=True) for b in model.biases]
    opt = torch.optim.Adam(weights + biases, lr=config.learning_rate)

    aug_pts = torch.tensor(np.array([a.point for a in prep.augmented]))
    labels = torch.tensor(np.array([a.norm_label for a in prep.augmented]))
    n_onm = len(dataset.points)
    Vn = torch.tensor(np.array(prep.aligned_normals))  # (N, d, l)
    onm_pts = aug_pts[:n_onm]

    refl = np.array(prep.pairs.reflection_pairs, dtype=int).reshape(-1, 2)
    frac = np.array(
        [(a, b) for a, b, _ in prep.pairs.fraction_pairs], dtype=int
    ).reshape(-1, 2)
    sim = np.array(prep.pairs.similar_pairs, dtype=int).reshape(-1, 2)

    use_refl = config.w_refl > 0 and not config.disable_reflection and len(refl)
    use_frac = config.w_frac > 0 and not config.disable_fraction and len(frac)
    use_sim = config.w_sim > 0 and not config.disable_similar and len(sim)
    use_align = config.w_align > 0 and not config.disable_alignment
    lam = config.damping
    l = prep.codim
    eye_l = torch.eye(l, dtype=torch.float64)

    rng = np.random.default_rng(config.seed + 1)
    n_aug = len(prep.augmented)
    bs = config.batch_size
    cyc_refl = _Cycler(len(refl), rng) if use_refl else None
    cyc_frac = _Cycler(len(frac), rng) if use_frac else None
    cyc_sim = _Cycler(len(sim), rng) if use_sim else None
    cyc_onm = _Cycler(n_onm, rng) if use_align else None

    history = []
    for epoch in range(config.epochs):
        order = rng.permutation(n_aug)
        epoch_loss = 0.0
        steps = 0
        for start in range(0, n_aug, bs):
            batch = order[start : start + bs]
            opt.zero_grad()
            h = _t_forward(weights, biases, aug_pts[batch])
            total = config.w_norm * torch.mean(
                (torch.linalg.norm(h, dim=1) - labels[batch]) ** 2
            )
            if use_refl:
                ij = refl[cyc_refl.take(bs)]
                hp = _t_forward(weights, biases, aug_pts[ij[:, 0]])
                hm = _t_forward(weights, biases, aug_pts[ij[:, 1]])
                total = total + config.w_refl * torch.mean(
                    torch.sum((hp + hm) ** 2, dim=1)
                )
            if use_frac:
                ij = frac[cyc_frac.take(bs)]
                hf = _t_forward(weights, biases, aug_pts[ij[:, 0]])
                hn = _t_forward(weights, biases, aug_pts[ij[:, 1]])
                nf = torch.linalg.norm(hf, dim=1)
                nn_ = torch.linalg.norm(hn, dim=1)
                mask = (nf > FRACTION_DELTA) & (nn_ > FRACTION_DELTA)
                if mask.any():
                    diff = hf[mask] / nf[mask, None] - hn[mask] / nn_[mask, None]
                    total = total + config.w_frac * torch.mean(
                        torch.sum(diff * diff, dim=1)
                    )
            if use_sim:
                ij = sim[cyc_sim.take(bs)]
                ha = _t_forward(weights, biases, aug_pts[ij[:, 0]])
                hc = _t_forward(weights, biases, aug_pts[ij[:, 1]])
                total = total + config.w_sim * torch.mean(
                    torch.sum((ha - hc) ** 2, dim=1)
                )
            if use_align:
                idx = cyc_onm.take(bs)
                J = _t_jacobian(weights, biases, onm_pts[idx])  # (B, l, d)
                M = J @ J.transpose(1, 2) + lam * eye_l
                V = Vn[idx]  # (B, d, l)
                JV = J @ V  # (B, l, l)
                sol = torch.linalg.solve(M, JV)
                # tr(V^T V) - tr((J V)^T M^-1 (J V))
                align = torch.sum(V * V, dim=(1, 2)) - torch.sum(JV * sol, dim=(1, 2))
                total = total + config.w_align * torch.mean(align)
            if not torch.isfinite(total):
                raise TrainingError("loss diverged (non-finite)", epoch=epoch)
            total.backward()
            opt.step()
            epoch_loss += float(total.detach())
            steps += 1
        history.append(epoch_loss / max(steps, 1))

    model.weights = [W.detach().numpy().copy() for W in weights]
    model.biases = [b.detach().numpy().copy() for b in biases]
    return history
