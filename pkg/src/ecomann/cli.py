"""Command-line entry point and experiment orchestration.

Configuration is a flat key=value text file; every key is listed in
CONFIG_REGISTRY and can be overridden on the command line with
--set key=value. Exit codes: 0 success, 1 domain error, 2 usage error.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import dataset as ds_mod
from . import evaluation as eval_mod
from .errors import EcomannError, ParameterError
from .lin_geom import default_K, local_pca
from .manifolds import LearnedManifold, sphere_manifold
from .network import load_model, save_model
from .osa import edge_losses, osa_align
from .planner import hourglass_problem, sequential_plan, validate_path
from .training import TrainConfig, train

GENERATORS = {
    "sphere": ds_mod.gen_sphere,
    "circle3d": ds_mod.gen_circle3d,
    "plane": ds_mod.gen_plane_arm,
    "orient": ds_mod.gen_orient,
}

# key -> (type, default). bool values accept true/false/1/0.
CONFIG_REGISTRY = {
    "w_norm": (float, 1.0),
    "w_refl": (float, 1.0),
    "w_frac": (float, 1.0),
    "w_sim": (float, 1.0),
    "w_align": (float, 1.0),
    "learning_rate": (float, 1e-3),
    "epochs": (int, 100),
    "batch_size": (int, 128),
    "seed": (int, 0),
    "damping": (float, 1e-4),
    "K": (int, 0),
    "osa_H": (int, 4),
    "osa_iters": (int, 200),
    "osa_lr": (float, 0.1),
    "levels": (int, 7),
    "dirs_per_point": (int, 2),
    "disable_augmentation": (bool, False),
    "disable_osa": (bool, False),
    "disable_reflection": (bool, False),
    "disable_fraction": (bool, False),
    "disable_similar": (bool, False),
    "disable_alignment": (bool, False),
    "n_eval": (int, 1000),
    "threshold": (float, 0.1),
    "repeats": (int, 3),
    "on_manifold_tol": (float, 0.05),
    "reach_tol": (float, 0.05),
    "step": (float, 0.3),
    "rewire_radius": (float, 0.6),
    "max_nodes": (int, 2000),
    "goal_bias": (float, 0.1),
}

TRAIN_KEYS = set(TrainConfig().__dict__)


class UsageError(Exception):
    pass


def _coerce(key: str, raw: str):
    if key not in CONFIG_REGISTRY:
        raise UsageError(f"unknown config key {key!r}")
    typ, _ = CONFIG_REGISTRY[key]
    raw = raw.strip()
    if typ is bool:
        if raw.lower() in ("1", "true", "yes"):
            return True
        if raw.lower() in ("0", "false", "no"):
            return False
        raise UsageError(f"config key {key!r}: expected a boolean, got {raw!r}")
    try:
        return typ(raw)
    except ValueError as e:
        raise UsageError(f"config key {key!r}: {e}") from e


def load_config(path: str | None, overrides) -> dict:
    cfg = {k: v for k, (_, v) in CONFIG_REGISTRY.items()}
    if path:
        with open(path, encoding="utf-8") as f:
            for ln, line in enumerate(f, start=1):
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise UsageError(f"{path}:{ln}: expected 'key = value'")
                k, v = (s.strip() for s in line.split("=", 1))
                cfg[k] = _coerce(k, v)
    for item in overrides or []:
        if "=" not in item:
            raise UsageError(f"--set expects key=value, got {item!r}")
        k, v = (s.strip() for s in item.split("=", 1))
        cfg[k] = _coerce(k, v)
    env_seed = os.environ.get("ECOMANN_SEED")
    if env_seed is not None and all(
        "seed" not in (o.split("=", 1)[0]) for o in overrides or []
    ) and (not path or "seed" not in _file_keys(path)):
        cfg["seed"] = int(env_seed)
    return cfg


def _file_keys(path):
    keys = set()
    with open(path, encoding="utf-8") as f:
        for line in f:
            line = line.split("#", 1)[0].strip()
            if line and "=" in line:
                keys.add(line.split("=", 1)[0].strip())
    return keys


def train_config_from(cfg: dict) -> TrainConfig:
    return TrainConfig(**{k: v for k, v in cfg.items() if k in TRAIN_KEYS})


def _write(path: str | None, text: str):
    if path:
        with open(path, "w", encoding="utf-8") as f:
            f.write(text)
    else:
        sys.stdout.write(text)


def _report_csv(dataset_name, row, rep) -> str:
    return (
        eval_mod.CSV_HEADER + "\n"
        + f"{dataset_name},{row},{rep.P:.6g},0,"
        + f"{rep.mu_train[0]:.6g},{rep.mu_train[1]:.6g},"
        + f"{rep.mu_test[0]:.6g},{rep.mu_test[1]:.6g},{rep.seed}\n"
    )


def cmd_gen_data(args, cfg):
    if not args.out:
        raise UsageError("gen-data requires --out")
    gen = GENERATORS[args.kind]
    ds = gen(args.n, cfg["seed"])
    if args.noise > 0:
        ds = ds_mod.add_noise(ds, args.noise, cfg["seed"] + 1)
    ds_mod.save_dataset(ds, args.out)
    print(f"wrote {len(ds)} points to {args.out}")
    return 0


def cmd_train(args, cfg):
    if not args.out:
        raise UsageError("train requires --out for the model file")
    ds = ds_mod.load_dataset(args.data)
    model, history = train(ds, train_config_from(cfg))
    save_model(model, args.out)
    print(f"trained on {len(ds)} points; loss {history[0]:.4g} -> {history[-1]:.4g}; "
          f"model saved to {args.out}")
    return 0


def cmd_eval(args, cfg):
    model = load_model(args.model)
    ds = ds_mod.load_dataset(args.data)
    rep = eval_mod.evaluate_model(model, ds, n=cfg["n_eval"],
                                  threshold=cfg["threshold"], seed=cfg["seed"])
    _write(args.out, _report_csv(ds.name, "eval", rep))
    return 0


def cmd_ablate(args, cfg):
    ds = ds_mod.load_dataset(args.data)
    rows = args.rows.split(";") if args.rows else None
    results = eval_mod.run_ablation(ds, train_config_from(cfg), cfg["repeats"],
                                    rows=rows, n_eval=cfg["n_eval"],
                                    threshold=cfg["threshold"])
    _write(args.out, eval_mod.ablation_csv(results))
    return 0


def cmd_level_study(args, cfg):
    ds = ds_mod.load_dataset(args.data)
    levels = [int(v) for v in args.levels.split(",")]
    rows = eval_mod.run_level_study(ds, levels, train_config_from(cfg),
                                    n_eval=cfg["n_eval"], threshold=cfg["threshold"])
    _write(args.out, "level,P\n" + "".join(f"{lv},{p:.6g}\n" for lv, p in rows))
    return 0


def cmd_noise_study(args, cfg):
    ds = ds_mod.load_dataset(args.data)
    noisy = ds_mod.add_noise(ds, args.sigma, cfg["seed"] + 1)
    model, _ = train(noisy, train_config_from(cfg))
    rep = eval_mod.evaluate_model(model, noisy, n=cfg["n_eval"],
                                  threshold=cfg["threshold"], seed=cfg["seed"])
    _write(args.out, _report_csv(f"{ds.name}+noise{args.sigma}", "noise-study", rep))
    return 0


def cmd_osa_check(args, cfg):
    ds = ds_mod.load_dataset(args.data)
    K = cfg["K"] or default_K(ds.ambient_dim)
    frames = [local_pca(ds.points, i, K, l_override=ds.true_codim)
              for i in range(len(ds))]
    aligned, dag, flipped = osa_align(ds.points, frames, H=cfg["osa_H"],
                                      iters=cfg["osa_iters"], lr=cfg["osa_lr"])
    lines = ["edge_a,edge_c,chosen_orientation,loss"]
    for child, par, loss in edge_losses(aligned, dag):
        ori = "flipped" if flipped[child] else "unflipped"
        lines.append(f"{child},{par},{ori},{loss:.6g}")
    _write(args.out, "\n".join(lines) + "\n")
    return 0


def cmd_plan(args, cfg):
    if args.scenario != "hourglass":
        raise UsageError(f"unknown scenario {args.scenario!r}")
    mid = LearnedManifold(load_model(args.model)) if args.model else sphere_manifold()
    problem = hourglass_problem(
        sphere=mid, seed=cfg["seed"],
        on_manifold_tol=cfg["on_manifold_tol"], reach_tol=cfg["reach_tol"],
        step=cfg["step"], rewire_radius=cfg["rewire_radius"],
        max_nodes=cfg["max_nodes"], goal_bias=cfg["goal_bias"],
    )
    path = sequential_plan(problem)
    report = validate_path(path, problem)
    lines = ["stage,index," + ",".join(f"q{i + 1}" for i in range(3))]
    for si, stage in enumerate(path.stages, start=1):
        for wi, q in enumerate(stage):
            lines.append(f"{si},{wi}," + ",".join(f"{v:.17g}" for v in q))
    _write(args.out, "\n".join(lines) + "\n")
    print(f"cost={path.total_cost:.4f} nodes={path.nodes_explored} "
          f"max_residuals={['%.3g' % r for r in report['max_residual_per_stage']]}")
    return 0


def _marching_squares(field, xs, ys, iso):
    segs = []
    for i in range(len(xs) - 1):
        for j in range(len(ys) - 1):
            corners = [
                (xs[i], ys[j], field[j, i]),
                (xs[i + 1], ys[j], field[j, i + 1]),
                (xs[i + 1], ys[j + 1], field[j + 1, i + 1]),
                (xs[i], ys[j + 1], field[j + 1, i]),
            ]
            pts = []
            for (x0, y0, v0), (x1, y1, v1) in zip(
                corners, corners[1:] + corners[:1]
            ):
                if (v0 - iso) * (v1 - iso) < 0:
                    t = (iso - v0) / (v1 - v0)
                    pts.append((x0 + t * (x1 - x0), y0 + t * (y1 - y0)))
            if len(pts) >= 2:
                segs.append((pts[0], pts[1]))
    return segs


def cmd_plot_slice(args, cfg):
    model = load_model(args.model)
    manifold = LearnedManifold(model)
    d = manifold.ambient_dim
    ax = [int(v) for v in args.axes.split(",")]
    if len(ax) != 2 or not all(0 <= a < d for a in ax):
        raise UsageError(f"--axes must name two axes below {d}")
    lo, hi = (float(v) for v in args.box.split(","))
    grid = np.linspace(lo, hi, 41)
    base = np.full(d, args.value)
    Q = np.tile(base, (41 * 41, 1))
    XX, YY = np.meshgrid(grid, grid)
    Q[:, ax[0]] = XX.ravel()
    Q[:, ax[1]] = YY.ravel()
    H = manifold.evaluate_batch(Q)
    if manifold.codim == 1:
        field = H[:, 0].reshape(41, 41)
        isos = [-0.4, -0.2, 0.0, 0.2, 0.4]
    else:
        field = np.linalg.norm(H, axis=1).reshape(41, 41)
        isos = [0.1, 0.2, 0.4]
    size = 400
    def sx(x):
        return (x - lo) / (hi - lo) * size
    def sy(y):
        return size - (y - lo) / (hi - lo) * size
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
        f'viewBox="0 0 {size} {size}">',
        f'<rect width="{size}" height="{size}" fill="white"/>',
    ]
    colors = ["#888", "#55a", "#d33", "#55a", "#888"]
    for iso, col in zip(isos, colors):
        for (x0, y0), (x1, y1) in _marching_squares(field, grid, grid, iso):
            parts.append(
                f'<line x1="{sx(x0):.2f}" y1="{sy(y0):.2f}" '
                f'x2="{sx(x1):.2f}" y2="{sy(y1):.2f}" '
                f'stroke="{col}" stroke-width="1.2"/>'
            )
    parts.append("</svg>")
    _write(args.out, "\n".join(parts) + "\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    registry = ", ".join(sorted(CONFIG_REGISTRY))
    p = argparse.ArgumentParser(
        prog="ecomann",
        description="Learn implicit equality-constraint manifolds and plan on them.",
        epilog=f"config registry keys (for --config files and --set): {registry}",
    )
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="key = value config file")
        sp.add_argument("--set", action="append", dest="overrides",
                        metavar="KEY=VALUE", help="override a config key")
        sp.add_argument("--seed", type=int, help="shortcut for --set seed=...")
        sp.add_argument("--out", help="output file (stdout if omitted)")

    sp = sub.add_parser("gen-data", help="generate an on-manifold dataset")
    sp.add_argument("kind", choices=sorted(GENERATORS))
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--noise", type=float, default=0.0)
    common(sp)
    sp.set_defaults(fn=cmd_gen_data)

    sp = sub.add_parser("train", help="train a model on a dataset file")
    sp.add_argument("--data", required=True)
    common(sp)
    sp.set_defaults(fn=cmd_train)

    sp = sub.add_parser("eval", help="evaluate a trained model")
    sp.add_argument("--model", required=True)
    sp.add_argument("--data", required=True)
    common(sp)
    sp.set_defaults(fn=cmd_eval)

    sp = sub.add_parser("ablate", help="run the ablation table")
    sp.add_argument("--data", required=True)
    sp.add_argument("--rows", help="semicolon-separated subset of row names")
    common(sp)
    sp.set_defaults(fn=cmd_ablate)

    sp = sub.add_parser("level-study", help="P vs augmentation levels")
    sp.add_argument("--data", required=True)
    sp.add_argument("--levels", default="1,2,3,7")
    common(sp)
    sp.set_defaults(fn=cmd_level_study)

    sp = sub.add_parser("noise-study", help="train on noisy data and evaluate")
    sp.add_argument("--data", required=True)
    sp.add_argument("--sigma", type=float, default=0.01)
    common(sp)
    sp.set_defaults(fn=cmd_noise_study)

    sp = sub.add_parser("osa-check", help="per-edge alignment losses as CSV")
    sp.add_argument("--data", required=True)
    common(sp)
    sp.set_defaults(fn=cmd_osa_check)

    sp = sub.add_parser("plan", help="run a planning scenario")
    sp.add_argument("scenario")
    sp.add_argument("--model", help="learned model for the middle manifold")
    common(sp)
    sp.set_defaults(fn=cmd_plan)

    sp = sub.add_parser("plot-slice", help="SVG level-set contours on a 2D slice")
    sp.add_argument("--model", required=True)
    sp.add_argument("--axes", default="0,1")
    sp.add_argument("--value", type=float, default=0.0,
                    help="fill value for the remaining coordinates")
    sp.add_argument("--box", default="-1.5,1.5")
    common(sp)
    sp.set_defaults(fn=cmd_plot_slice)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return 0 if e.code in (0, None) else 2
    try:
        overrides = list(args.overrides or [])
        if args.seed is not None:
            overrides.append(f"seed={args.seed}")
        cfg = load_config(args.config, overrides)
        return args.fn(args, cfg)
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return 2
    except (EcomannError, OSError) as e:
        print(f"error [{type(e).__module__}.{type(e).__name__}]: {e}",
              file=sys.stderr)
        return 1


def entry():
    sys.exit(main())


if __name__ == "__main__":
    entry()
