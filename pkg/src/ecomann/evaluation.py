"""Metrics (ground-truth residual mu, projection success percentage P),
the ablation harness, and the augmentation-level study."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import fk, orient_chain, plane_arm_chain
from .errors import ParameterError
from .manifolds import LearnedManifold
from .projection import project_batch
from .training import TrainConfig, train

ARM_GROUND_TRUTHS = ("PlaneArm3R", "Orient6R")

ABLATION_ROWS = (
    ("No Ablation", {}),
    ("w/o Data Augmentation", {"disable_augmentation": True}),
    ("w/o OSA", {"disable_osa": True}),
    ("w/o Siamese Losses", {"disable_reflection": True,
                            "disable_fraction": True,
                            "disable_similar": True}),
    ("w/o Siamese Loss L_reflection", {"disable_reflection": True}),
    ("w/o Siamese Loss L_fraction", {"disable_fraction": True}),
    ("w/o Siamese Loss L_similar", {"disable_similar": True}),
)

CSV_HEADER = ("dataset,row,P_mean,P_std,mu_train_mean,mu_train_std,"
              "mu_test_mean,mu_test_std,seed")


@dataclass
class EvalReport:
    mu_train: tuple  # (mean, std)
    mu_test: tuple
    P: float
    n_samples: int
    threshold: float
    seed: int


def residuals(points: np.ndarray, ground_truth_id: str) -> np.ndarray:
    """True Euclidean-style distance to the ground-truth manifold; task
    space residual for the arm datasets."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if ground_truth_id == "Sphere":
        return np.abs(np.linalg.norm(points, axis=1) - 1.0)
    if ground_truth_id == "Circle3D":
        r = np.linalg.norm(points[:, :2], axis=1)
        return np.sqrt((r - 1.0) ** 2 + points[:, 2] ** 2)
    if ground_truth_id == "PlaneArm3R":
        chain = plane_arm_chain()
        return np.array([abs(fk(chain, q)[0][2]) for q in points])
    if ground_truth_id == "Orient6R":
        chain = orient_chain()
        return np.array([np.linalg.norm(fk(chain, q)[1][:2, 2]) for q in points])
    raise ParameterError(f"no ground truth for {ground_truth_id!r}")


def metric_mu(points: np.ndarray, ground_truth_id: str):
    res = residuals(points, ground_truth_id)
    return float(np.mean(res)), float(np.std(res))


def default_sample_box(ground_truth_id: str, d: int) -> np.ndarray:
    half = np.pi if ground_truth_id in ARM_GROUND_TRUTHS else 1.5
    return np.array([[-half, half]] * d)


def sample_and_project(manifold, ground_truth_id, n, sample_box, seed,
                       tol=1e-3, max_iters=200):
    box = (np.asarray(sample_box) if sample_box is not None
           else default_sample_box(ground_truth_id, manifold.ambient_dim))
    rng = np.random.default_rng(seed)
    Q0 = rng.uniform(box[:, 0], box[:, 1], (n, manifold.ambient_dim))
    Q, _, _ = project_batch(manifold, Q0, tol=tol, max_iters=max_iters)
    return Q


def metric_P(manifold, ground_truth_id: str, n: int = 1000,
             threshold: float = 0.1, sample_box=None, seed: int = 0) -> float:
    Q = sample_and_project(manifold, ground_truth_id, n, sample_box, seed)
    res = residuals(Q, ground_truth_id)
    return 100.0 * float(np.mean(res <= threshold))


def evaluate_model(model, dataset, n: int = 1000, threshold: float = 0.1,
                   sample_box=None, seed: int = 0) -> EvalReport:
    gt = dataset.ground_truth_id
    manifold = LearnedManifold(model)
    Q = sample_and_project(manifold, gt, n, sample_box, seed)
    res = residuals(Q, gt)
    return EvalReport(
        mu_train=metric_mu(dataset.points, gt),
        mu_test=(float(np.mean(res)), float(np.std(res))),
        P=100.0 * float(np.mean(res <= threshold)),
        n_samples=n,
        threshold=threshold,
        seed=seed,
    )


def run_ablation(dataset, base_config: TrainConfig, repeats: int,
                 rows=None, n_eval: int = 1000, threshold: float = 0.1):
    """Train/evaluate each ablation row `repeats` times. Returns a list
    of result dicts matching the CSV columns."""
    if repeats < 1:
        raise ParameterError("repeats must be >= 1")
    selected = [(name, flags) for name, flags in ABLATION_ROWS
                if rows is None or name in rows]
    results = []
    for name, flags in selected:
        reports = []
        for r in range(repeats):
            cfg = base_config.replace(seed=base_config.seed + r, **flags)
            model, _ = train(dataset, cfg)
            reports.append(evaluate_model(model, dataset, n=n_eval,
                                          threshold=threshold,
                                          seed=base_config.seed + r))
        results.append({
            "dataset": dataset.name,
            "row": name,
            "P_mean": float(np.mean([rep.P for rep in reports])),
            "P_std": float(np.std([rep.P for rep in reports])),
            "mu_train_mean": float(np.mean([rep.mu_train[0] for rep in reports])),
            "mu_train_std": float(np.std([rep.mu_train[0] for rep in reports])),
            "mu_test_mean": float(np.mean([rep.mu_test[0] for rep in reports])),
            "mu_test_std": float(np.std([rep.mu_test[0] for rep in reports])),
            "seed": base_config.seed,
        })
    return results


def ablation_csv(results) -> str:
    lines = [CSV_HEADER]
    for r in results:
        lines.append(
            f'{r["dataset"]},{r["row"]},{r["P_mean"]:.6g},{r["P_std"]:.6g},'
            f'{r["mu_train_mean"]:.6g},{r["mu_train_std"]:.6g},'
            f'{r["mu_test_mean"]:.6g},{r["mu_test_std"]:.6g},{r["seed"]}'
        )
    return "\n".join(lines) + "\n"


def run_level_study(dataset, levels_list, config: TrainConfig,
                    n_eval: int = 1000, threshold: float = 0.1):
    """One training per augmentation-level value; returns [(level, P)]."""
    out = []
    for lv in levels_list:
        model, _ = train(dataset, config.replace(levels=int(lv)))
        rep = evaluate_model(dataset=dataset, model=model, n=n_eval,
                             threshold=threshold, seed=config.seed)
        out.append((int(lv), rep.P))
    return out
