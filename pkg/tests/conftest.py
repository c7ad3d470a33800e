import numpy as np
import pytest

from polqubit.core import rho_from_poincare


def ball_points(rng, n):
    """Uniform points in the unit ball by rejection from the cube."""
    out = []
    while len(out) < n:
        p = rng.uniform(-1, 1, size=(2 * n, 3))
        out.extend(p[np.sum(p**2, axis=1) <= 1.0])
    return np.array(out[:n])


def sphere_points(rng, n):
    p = rng.normal(size=(n, 3))
    return p / np.linalg.norm(p, axis=1, keepdims=True)


def random_states(rng, n):
    return [rho_from_poincare(r) for r in ball_points(rng, n)]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
