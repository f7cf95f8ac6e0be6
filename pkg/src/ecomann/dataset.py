"""On-manifold dataset generation (Sphere, 3D Circle, arm-based Plane and
Orient), Gaussian perturbation, and the text file format."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import GenerationError, ParameterError, ParseError

GROUND_TRUTHS = ("Sphere", "Circle3D", "PlaneArm3R", "Orient6R", "None")

_AXES = {
    "x": np.array([1.0, 0.0, 0.0]),
    "y": np.array([0.0, 1.0, 0.0]),
    "z": np.array([0.0, 0.0, 1.0]),
}


@dataclass
class OnManifoldDataset:
    name: str
    points: np.ndarray
    ambient_dim: int
    true_codim: int
    ground_truth_id: str = "None"

    def __post_init__(self):
        if self.ground_truth_id not in GROUND_TRUTHS:
            raise ParameterError(f"unknown ground truth {self.ground_truth_id!r}")
        self.points = np.asarray(self.points, dtype=float)
        if self.points.ndim != 2 or self.points.shape[1] != self.ambient_dim:
            raise ParameterError("points shape inconsistent with ambient_dim")

    def __len__(self):
        return len(self.points)


@dataclass
class KinematicChain:
    """Serial chain of revolute joints: rotate about each axis by q_i,
    then translate by the link offset expressed in the rotated frame."""

    joint_axes: list = field(default_factory=list)
    link_offsets: list = field(default_factory=list)

    def __post_init__(self):
        self.joint_axes = [np.asarray(a, dtype=float) for a in self.joint_axes]
        self.link_offsets = [np.asarray(o, dtype=float) for o in self.link_offsets]
        if len(self.joint_axes) != len(self.link_offsets):
            raise ParameterError("axes and offsets must have equal length")
        for a in self.joint_axes:
            if abs(np.linalg.norm(a) - 1.0) > 1e-12:
                raise ParameterError("joint axes must be unit vectors")

    @property
    def dof(self) -> int:
        return len(self.joint_axes)


def plane_arm_chain() -> KinematicChain:
    return KinematicChain(
        joint_axes=[_AXES["z"], _AXES["y"], _AXES["y"]],
        link_offsets=[[0.5, 0.0, 0.0]] * 3,
    )


def orient_chain() -> KinematicChain:
    return KinematicChain(
        joint_axes=[_AXES[a] for a in ("z", "y", "y", "z", "y", "x")],
        link_offsets=[[0.3, 0.0, 0.0]] * 6,
    )


def _axis_angle(axis: np.ndarray, angle: float) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    x, y, z = axis
    C = 1.0 - c
    return np.array(
        [
            [c + x * x * C, x * y * C - z * s, x * z * C + y * s],
            [y * x * C + z * s, c + y * y * C, y * z * C - x * s],
            [z * x * C - y * s, z * y * C + x * s, c + z * z * C],
        ]
    )


def fk(chain: KinematicChain, q: np.ndarray):
    """Forward kinematics: returns (end-effector position, rotation)."""
    q = np.asarray(q, dtype=float)
    if q.shape != (chain.dof,):
        raise ParameterError(f"expected {chain.dof} joint values, got {q.shape}")
    R = np.eye(3)
    p = np.zeros(3)
    for axis, offset, qi in zip(chain.joint_axes, chain.link_offsets, q):
        R = R @ _axis_angle(axis, qi)
        p = p + R @ offset
    return p, R


def fk_frames(chain: KinematicChain, q: np.ndarray):
    """Like fk but also returns per-joint world axes and origins, for
    analytic manipulator Jacobians."""
    q = np.asarray(q, dtype=float)
    if q.shape != (chain.dof,):
        raise ParameterError(f"expected {chain.dof} joint values, got {q.shape}")
    R = np.eye(3)
    p = np.zeros(3)
    axes_w, origins = [], []
    for axis, offset, qi in zip(chain.joint_axes, chain.link_offsets, q):
        axes_w.append(R @ axis)
        origins.append(p.copy())
        R = R @ _axis_angle(axis, qi)
        p = p + R @ offset
    return p, R, axes_w, origins


def gen_sphere(N: int, seed: int) -> OnManifoldDataset:
    """N points uniform on the unit sphere (normalized Gaussian samples)."""
    if N < 1:
        raise ParameterError("N must be >= 1")
    rng = np.random.default_rng(seed)
    pts = rng.standard_normal((N, 3))
    pts /= np.linalg.norm(pts, axis=1, keepdims=True)
    return OnManifoldDataset("sphere", pts, 3, 1, "Sphere")


def gen_circle3d(N: int, seed: int) -> OnManifoldDataset:
    """N points (cos t, sin t, 0) with t uniform in [0, 2pi)."""
    if N < 1:
        raise ParameterError("N must be >= 1")
    rng = np.random.default_rng(seed)
    theta = rng.uniform(0.0, 2.0 * np.pi, N)
    pts = np.stack([np.cos(theta), np.sin(theta), np.zeros(N)], axis=1)
    return OnManifoldDataset("circle3d", pts, 3, 2, "Circle3D")


def _gen_projected(N, seed, manifold, name, gt_id, codim):
    from .projection import project

    rng = np.random.default_rng(seed)
    rows = []
    attempts = 0
    while len(rows) < N:
        q0 = rng.uniform(-np.pi, np.pi, manifold.ambient_dim)
        attempts += 1
        q, ok, _ = project(manifold, q0, tol=1e-8, max_iters=100)
        if ok:
            # joints are 2pi-periodic; keep samples in the base range
            rows.append(np.mod(q + np.pi, 2.0 * np.pi) - np.pi)
        if attempts >= 50 and len(rows) < 0.1 * attempts:
            raise GenerationError(
                f"{name}: projection success rate below 10% "
                f"({len(rows)}/{attempts}); chain misconfigured?"
            )
    return OnManifoldDataset(name, np.array(rows), manifold.ambient_dim, codim, gt_id)


def gen_plane_arm(N: int, seed: int) -> OnManifoldDataset:
    """3R arm configurations whose end effector lies on the plane z=0,
    obtained by projecting uniform joint samples onto the constraint."""
    from .manifolds import plane_arm_manifold

    if N < 1:
        raise ParameterError("N must be >= 1")
    return _gen_projected(N, seed, plane_arm_manifold(), "plane", "PlaneArm3R", 1)


def gen_orient(N: int, seed: int) -> OnManifoldDataset:
    """6R arm configurations keeping the end effector's z-axis upright."""
    from .manifolds import orient_manifold

    if N < 1:
        raise ParameterError("N must be >= 1")
    return _gen_projected(N, seed, orient_manifold(), "orient", "Orient6R", 2)


def add_noise(ds: OnManifoldDataset, sigma: float, seed: int) -> OnManifoldDataset:
    if sigma < 0:
        raise ParameterError("sigma must be >= 0")
    if sigma == 0:
        pts = ds.points.copy()
    else:
        rng = np.random.default_rng(seed)
        pts = ds.points + rng.normal(0.0, sigma, ds.points.shape)
    return OnManifoldDataset(ds.name, pts, ds.ambient_dim, ds.true_codim, ds.ground_truth_id)


def save_dataset(ds: OnManifoldDataset, path: str) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write(
            f"# name={ds.name} d={ds.ambient_dim} N={len(ds)} "
            f"l={ds.true_codim} gt={ds.ground_truth_id}\n"
        )
        for row in ds.points:
            f.write(",".join(f"{v:.17g}" for v in row) + "\n")


def _parse_header(line: str) -> dict:
    if not line.startswith("#"):
        raise ParseError("line 1: missing header")
    fields = {}
    for tok in line[1:].split():
        if "=" not in tok:
            raise ParseError(f"line 1: malformed header token {tok!r}")
        k, v = tok.split("=", 1)
        fields[k] = v
    for key in ("name", "d", "N", "l", "gt"):
        if key not in fields:
            raise ParseError(f"line 1: header missing {key!r}")
    return fields


def load_dataset(path: str) -> OnManifoldDataset:
    with open(path, encoding="utf-8") as f:
        lines = f.read().splitlines()
    if not lines:
        raise ParseError("line 1: empty file")
    hdr = _parse_header(lines[0])
    try:
        d, n, l = int(hdr["d"]), int(hdr["N"]), int(hdr["l"])
    except ValueError as e:
        raise ParseError(f"line 1: non-integer header field ({e})") from e
    rows = []
    for i, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != d:
            raise ParseError(f"line {i}: expected {d} values, got {len(parts)}")
        try:
            row = [float(p) for p in parts]
        except ValueError as e:
            raise ParseError(f"line {i}: bad float ({e})") from e
        if not all(np.isfinite(row)):
            raise ParseError(f"line {i}: non-finite value")
        rows.append(row)
    if len(rows) != n:
        raise ParseError(f"header declares N={n} but file has {len(rows)} rows")
    return OnManifoldDataset(hdr["name"], np.array(rows).reshape(n, d), d, l, hdr["gt"])
