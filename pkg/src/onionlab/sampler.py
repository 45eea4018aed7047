"""Reproducible point-process generation for the ball and half-space models.

Streams are keyed by (master_seed, replication_index) through numpy's
SeedSequence, so replications are independent by construction and safe to
generate in parallel without jump-ahead bookkeeping.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import PointCloud, unit_ball_volume


@dataclass(frozen=True)
class SeedSpec:
    """Deterministic stream key: one stream per (master seed, replication)."""

    master_seed: int
    replication_index: int = 0

    def rng(self) -> np.random.Generator:
        return np.random.default_rng(
            np.random.SeedSequence([int(self.master_seed), int(self.replication_index)])
        )

    def child(self, replication_index: int) -> "SeedSpec":
        return SeedSpec(self.master_seed, replication_index)


def _uniform_ball(rng, n, d):
    """n uniform points in the open unit ball: Gaussian direction, U^(1/d) radius."""
    out = np.empty((n, d))
    i = 0
    while i < n:
        g = rng.standard_normal((n - i, d))
        norms = np.linalg.norm(g, axis=1)
        ok = norms > 0
        g = g[ok] / norms[ok, None]
        r = rng.random(g.shape[0]) ** (1.0 / d)
        out[i : i + g.shape[0]] = g * r[:, None]
        i += g.shape[0]
    return out


def sample_ball_poisson(d: int, lam: float, seed: SeedSpec) -> PointCloud:
    """Poisson point process of intensity lambda dx in the unit ball."""
    if d < 2:
        raise ValueError("d must be >= 2")
    if lam <= 0:
        raise ValueError("lambda must be positive")
    rng = seed.rng()
    n = int(rng.poisson(lam * unit_ball_volume(d)))
    return PointCloud.from_coords(_uniform_ball(rng, n, d).reshape(n, d))


def sample_ball_binomial(d: int, n_points: int, seed: SeedSpec) -> PointCloud:
    """Exactly n_points i.i.d. uniform points in the unit ball."""
    if n_points < 1:
        raise ValueError("n_points must be >= 1")
    rng = seed.rng()
    return PointCloud.from_coords(_uniform_ball(rng, n_points, d))


def sample_halfspace_poisson(
    d_minus_1: int, r: float, height: float, intensity: float, seed: SeedSpec
) -> PointCloud:
    """Homogeneous Poisson process on the cylinder C(r) x [0, height].

    C(r) is the radius-r ball of R^(d-1); points are returned as rows
    (v_1, ..., v_{d-1}, h).
    """
    if r <= 0 or height <= 0:
        raise ValueError("r and height must be positive")
    rng = seed.rng()
    vol = unit_ball_volume(d_minus_1) * r**d_minus_1 * height
    n = int(rng.poisson(intensity * vol))
    if d_minus_1 == 1:
        v = rng.uniform(-r, r, size=(n, 1))
    else:
        v = _uniform_ball(rng, n, d_minus_1) * r
    h = rng.uniform(0.0, height, size=(n, 1))
    return PointCloud.from_coords(np.hstack([v.reshape(n, d_minus_1), h]))


__all__ = [
    "SeedSpec",
    "sample_ball_poisson",
    "sample_ball_binomial",
    "sample_halfspace_poisson",
]
