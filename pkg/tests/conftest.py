import numpy as np
import pytest

import ecomann
from ecomann.lin_geom import local_pca, knn_search


@pytest.fixture(scope="session")
def sphere_500():
    return ecomann.gen_sphere(500, seed=1)


@pytest.fixture(scope="session")
def sphere_frames(sphere_500):
    pts = sphere_500.points
    return [local_pca(pts, i, 40, l_override=1) for i in range(len(pts))]


@pytest.fixture(scope="session")
def circle_300():
    return ecomann.gen_circle3d(300, seed=2)


def random_orthonormal(rng, d, k):
    a = rng.standard_normal((d, k))
    q, _ = np.linalg.qr(a)
    return q[:, :k]
