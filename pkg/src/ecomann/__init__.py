"""Implicit equality-constraint manifold learning and sequential
constrained planning."""

from .augment import AugmentedPoint, SiamesePairs, augment_dataset, compute_epsilon
from .dataset import (
    KinematicChain,
    OnManifoldDataset,
    add_noise,
    fk,
    gen_circle3d,
    gen_orient,
    gen_plane_arm,
    gen_sphere,
    load_dataset,
    save_dataset,
)
from .evaluation import EvalReport, evaluate_model, metric_P, metric_mu, run_ablation, run_level_study
from .lin_geom import LocalFrame, estimate_codim, expm_skew, knn_search, local_pca
from .manifolds import LearnedManifold, circle3d_manifold, sphere_manifold
from .network import MlpModel, forward, init_model, jacobian, load_model, save_model
from .osa import align_local_pair, build_neighbor_graph, minimum_spanning_tree, osa_align
from .planner import PlannedPath, PlanningProblem, hourglass_problem, rrt_star_stage, sequential_plan, validate_path
from .projection import project, project_batch
from .training import TrainConfig, train

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
