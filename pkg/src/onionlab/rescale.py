"""The scaling map between the unit ball and the half-space window W_lambda.

T maps x in the ball (minus the segment [0, -e_d]) to (v, h) where v is the
scaled geodesic log of the direction of x at the north pole e_d and h the
scaled radial defect:

    T(x) = (lambda^(1/(d+1)) exp^-1(x/|x|), lambda^(2/(d+1)) (1 - |x|)).

Spherical caps pull back to downward quasi-paraboloids, spheres through the
origin to upward ones; both converge to exact paraboloids as lambda grows.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .geometry import PointCloud


class PolePoint(Exception):
    """A point on the segment [0, -e_d] has no image under the scaling map."""


@dataclass(frozen=True)
class RescaledCloud:
    """Image of a point cloud in W_lambda = lambda^(1/(d+1)) B_{d-1}(pi) x [0, lambda^(2/(d+1)))."""

    d: int
    lam: float
    ids: tuple
    v: np.ndarray  # (n, d-1)
    h: np.ndarray  # (n,)

    def __len__(self):
        return self.h.shape[0]

    def points(self) -> np.ndarray:
        return np.hstack([self.v, self.h[:, None]])

    def to_csv(self, path, sidecar=None):
        d1 = self.d - 1
        header = "id," + ",".join(f"v{i + 1}" for i in range(d1)) + ",h"
        with open(path, "w") as f:
            f.write(header + "\n")
            for pid, vrow, hval in zip(self.ids, self.v, self.h):
                f.write(
                    str(pid)
                    + ","
                    + ",".join(repr(float(x)) for x in vrow)
                    + ","
                    + repr(float(hval))
                    + "\n"
                )
        side = sidecar if sidecar is not None else str(path) + ".json"
        with open(side, "w") as f:
            json.dump({"lambda": self.lam, "d": self.d}, f)


def _powers(lam: float, d: int):
    return lam ** (1.0 / (d + 1)), lam ** (2.0 / (d + 1))


def to_rescaled(cloud: PointCloud, lam: float) -> RescaledCloud:
    """Exact image of the cloud under the scaling map.

    Raises PolePoint for points on [0, -e_d] (the map is undefined there).
    """
    d = cloud.dim
    a, b = _powers(lam, d)
    x = cloud.coords
    norms = np.linalg.norm(x, axis=1)
    perp = x[:, :-1]
    perp_norms = np.linalg.norm(perp, axis=1)
    on_segment = (perp_norms == 0) & (x[:, -1] <= 0)
    if np.any(on_segment | (norms == 0)):
        bad = cloud.ids[int(np.argmax(on_segment | (norms == 0)))]
        raise PolePoint(f"point {bad} lies on [0, -e_d]")
    # geodesic angle at the pole via atan2 (stable near theta = 0)
    theta = np.arctan2(perp_norms, x[:, -1])
    with np.errstate(invalid="ignore", divide="ignore"):
        unit_perp = np.where(perp_norms[:, None] > 0, perp / perp_norms[:, None], 0.0)
    v = a * theta[:, None] * unit_perp
    h = b * (1.0 - norms)
    return RescaledCloud(d=d, lam=float(lam), ids=cloud.ids, v=v, h=h)


def from_rescaled(rc: RescaledCloud) -> PointCloud:
    """Exact inverse of the scaling map."""
    a, b = _powers(rc.lam, rc.d)
    vt = rc.v / a
    theta = np.linalg.norm(vt, axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        unit = np.where(theta[:, None] > 0, vt / theta[:, None], 0.0)
    u = np.hstack([np.sin(theta)[:, None] * unit, np.cos(theta)[:, None]])
    radius = 1.0 - rc.h / b
    return PointCloud(dim=rc.d, ids=rc.ids, coords=radius[:, None] * u)


@dataclass(frozen=True)
class Paraboloid:
    """Down/up (quasi-)paraboloid; lam = math.inf gives the exact limit shape."""

    apex_v: tuple
    apex_h: float
    direction: str  # "down" | "up"
    lam: float = math.inf

    def __post_init__(self):
        if self.direction not in ("down", "up"):
            raise ValueError("direction must be 'down' or 'up'")


def _is_exact(*values) -> bool:
    flat = []
    for val in values:
        if isinstance(val, (list, tuple)):
            flat.extend(val)
        else:
            flat.append(val)
    return any(isinstance(x, Fraction) for x in flat)


def in_cap(x, x0) -> bool:
    """Membership of x in the spherical cap orthogonal to x0.

    cap(x0) = { y in B^d : <y, x0/|x0|> > |x0| }, evaluated as
    <x, x0> > |x0|^2, which is exact for rational inputs.
    """
    if _is_exact(x, x0):
        xf = [Fraction(c) for c in x]
        x0f = [Fraction(c) for c in x0]
        nrm2 = sum(c * c for c in x0f)
        if nrm2 == 0:
            raise ValueError("cap apex x0 must be nonzero")
        return sum(a * b for a, b in zip(xf, x0f)) > nrm2
    x = np.asarray(x, float)
    x0 = np.asarray(x0, float)
    nrm2 = float(x0 @ x0)
    if nrm2 == 0:
        raise ValueError("cap apex x0 must be nonzero")
    return float(x @ x0) > nrm2


def _cos_geodesic(v, v0, a):
    """cos of the geodesic distance between exp(v/a) and exp(v0/a) on S^(d-1)."""
    vt = np.asarray(v, float) / a
    vt0 = np.asarray(v0, float) / a
    n1 = float(np.linalg.norm(vt))
    n0 = float(np.linalg.norm(vt0))
    if n1 == 0 or n0 == 0:
        return math.cos(abs(n1 - n0))
    cos_angle = float(vt @ vt0) / (n1 * n0)
    cos_angle = min(1.0, max(-1.0, cos_angle))
    # spherical law of cosines for two points at colatitudes n1, n0
    return math.cos(n1) * math.cos(n0) + math.sin(n1) * math.sin(n0) * cos_angle


def in_paraboloid(w, p: Paraboloid) -> bool:
    """Strict membership of w = (v, h) in the (quasi-)paraboloid p."""
    v, h = w
    v = np.atleast_1d(np.asarray(v, float))
    v0 = np.atleast_1d(np.asarray(p.apex_v, float))
    h = float(h)
    h0 = float(p.apex_h)
    if math.isinf(p.lam):
        gap = 0.5 * float(np.sum((v - v0) ** 2))
        if p.direction == "down":
            return h < h0 - gap
        return h > h0 + gap
    d = v.shape[0] + 1
    a, b = _powers(p.lam, d)
    cos_e = _cos_geodesic(v, v0, a)
    if p.direction == "down":
        if cos_e <= 0:
            return False  # beyond the cap's reach
        return h < b * (1.0 - (1.0 - h0 / b) / cos_e)
    return h > b * (1.0 - (1.0 - h0 / b) * cos_e)


def intensity_density(v, h, lam: float, d: int) -> float:
    """Density of the rescaled process w.r.t. Lebesgue measure on W_lambda."""
    a, b = _powers(lam, d)
    s = float(np.linalg.norm(np.atleast_1d(np.asarray(v, float)))) / a
    radial = 1.0 - float(h) / b
    if d == 2 or s == 0.0:
        angular = 1.0
    else:
        angular = (math.sin(s) / s) ** (d - 2)
    return angular * radial


__all__ = [
    "PolePoint",
    "RescaledCloud",
    "Paraboloid",
    "to_rescaled",
    "from_rescaled",
    "in_cap",
    "in_paraboloid",
    "intensity_density",
]
