import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)


def ball_points(rng, n, d):
    g = rng.standard_normal((n, d))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    return g * rng.random((n, 1)) ** (1.0 / d)


def halfspace_points(rng, n, d1, r=4.0, height=5.0):
    v = rng.uniform(-r, r, size=(n, d1))
    h = rng.uniform(0.0, height, size=(n, 1))
    return np.hstack([v, h])
