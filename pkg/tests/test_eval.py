import numpy as np
import pytest

import ecomann
from ecomann.errors import ParameterError
from ecomann.evaluation import (
    ABLATION_ROWS,
    CSV_HEADER,
    ablation_csv,
    default_sample_box,
    evaluate_model,
    metric_P,
    metric_mu,
    residuals,
    run_ablation,
    run_level_study,
)
from ecomann.manifolds import sphere_manifold
from ecomann.training import TrainConfig, train


def test_residual_sphere_hand_values():
    pts = np.array([[1.1, 0.0, 0.0], [0.0, 0.9, 0.0]])
    mean, std = metric_mu(pts, "Sphere")
    assert mean == pytest.approx(0.1)
    assert std == pytest.approx(0.0)


def test_residual_circle_exact_distance():
    # a point at radius 2 in the plane and height 1: distance
    # sqrt((2-1)^2 + 1) = sqrt(2)
    r = residuals(np.array([[2.0, 0.0, 1.0]]), "Circle3D")
    assert r[0] == pytest.approx(np.sqrt(2.0))


def test_residual_arm_task_space():
    r = residuals(np.zeros((1, 3)), "PlaneArm3R")
    assert r[0] == pytest.approx(0.0)
    r = residuals(np.zeros((1, 6)), "Orient6R")
    assert r[0] == pytest.approx(0.0)


def test_metric_mu_on_generator_output(sphere_500, circle_300):
    assert metric_mu(sphere_500.points, "Sphere")[0] <= 1e-6
    assert metric_mu(circle_300.points, "Circle3D")[0] <= 1e-6


def test_metric_mu_unknown_ground_truth():
    with pytest.raises(ParameterError):
        metric_mu(np.zeros((2, 3)), "None")


def test_default_sample_box():
    assert np.allclose(default_sample_box("Sphere", 3),
                       [[-1.5, 1.5]] * 3)
    assert np.allclose(default_sample_box("PlaneArm3R", 3),
                       [[-np.pi, np.pi]] * 3)


def test_metric_P_analytic_sphere():
    assert metric_P(sphere_manifold(), "Sphere", n=200, seed=0) == 100.0


def test_metric_P_infinite_threshold():
    assert metric_P(sphere_manifold(), "Sphere", n=50,
                    threshold=np.inf, seed=0) == 100.0


def test_ablation_rows_complete():
    names = [name for name, _ in ABLATION_ROWS]
    assert names == [
        "No Ablation",
        "w/o Data Augmentation",
        "w/o OSA",
        "w/o Siamese Losses",
        "w/o Siamese Loss L_reflection",
        "w/o Siamese Loss L_fraction",
        "w/o Siamese Loss L_similar",
    ]


@pytest.fixture(scope="module")
def tiny_ablation():
    ds = ecomann.gen_sphere(150, seed=2)
    cfg = TrainConfig(epochs=2, seed=0)
    rows = ["No Ablation", "w/o Data Augmentation"]
    return ds, cfg, run_ablation(ds, cfg, repeats=1, rows=rows, n_eval=50)


def test_run_ablation_shape(tiny_ablation):
    _, _, results = tiny_ablation
    assert len(results) == 2
    for r in results:
        assert 0.0 <= r["P_mean"] <= 100.0
        assert r["P_std"] == 0.0  # single repeat


def test_run_ablation_matches_plain_train(tiny_ablation):
    ds, cfg, results = tiny_ablation
    model, _ = train(ds, cfg)
    rep = evaluate_model(model, ds, n=50, seed=cfg.seed)
    base = next(r for r in results if r["row"] == "No Ablation")
    assert base["P_mean"] == pytest.approx(rep.P)


def test_ablation_csv_format(tiny_ablation):
    _, _, results = tiny_ablation
    text = ablation_csv(results)
    lines = text.strip().split("\n")
    assert lines[0] == CSV_HEADER
    assert len(lines) == 3
    assert lines[1].split(",")[1] == "No Ablation"


def test_run_ablation_bad_repeats(tiny_ablation):
    ds, cfg, _ = tiny_ablation
    with pytest.raises(ParameterError):
        run_ablation(ds, cfg, repeats=0)


def test_run_level_study_rows():
    ds = ecomann.gen_sphere(150, seed=2)
    cfg = TrainConfig(epochs=2, seed=0)
    out = run_level_study(ds, [3], cfg, n_eval=40)
    assert len(out) == 1
    assert out[0][0] == 3
    assert 0.0 <= out[0][1] <= 100.0
