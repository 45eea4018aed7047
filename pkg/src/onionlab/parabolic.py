"""Parabolic hull peeling in the upper half-space (the scaling-limit model).

A point w = (v, h) of R^(d-1) x R_+ is on the first parabolic layer when
some open downward paraboloid { h' < h1 - |v'-v1|^2/2 } has w on its
boundary and contains no other point; deeper layers repeat the rule on what
remains.  Lifting (v, h) -> (v, h + |v|^2/2) turns downward paraboloids
into open lower half-spaces, so each layer is read off the lower convex
hull of the lifted points, and parabolic k-faces are the k-faces of that
lower hull mapped back.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import hull as _hull
from . import predicates as pr
from .geometry import PointCloud


class GeneralPositionViolated(Exception):
    """Raised when a degenerate configuration defeats the layer criterion."""


@dataclass(frozen=True)
class Window:
    """Observation cylinder C(r) x [0, height]; statistics use |v| <= r_inner."""

    r: float
    height: float
    r_inner: float

    @classmethod
    def for_radius(cls, r: float, n: int = 1) -> "Window":
        # height and inner radius follow the cylinder-shrinkage defaults
        return cls(r=r, height=max(20.0, r * r / 8.0), r_inner=r / 2 ** (n + 1))


@dataclass(frozen=True)
class LiftedCloud:
    """Half-space points plus their lifted heights z = h + |v|^2 / 2."""

    cloud: PointCloud
    z: np.ndarray

    @property
    def lifted_coords(self) -> np.ndarray:
        return np.hstack([self.cloud.coords[:, :-1], self.z[:, None]])


def lift(cloud: PointCloud) -> LiftedCloud:
    """Lift a half-space cloud; rows are (v_1..v_{d-1}, h) with h >= 0."""
    coords = cloud.coords
    if np.any(coords[:, -1] < 0):
        raise ValueError("half-space model requires h >= 0")
    z = coords[:, -1] + 0.5 * np.sum(coords[:, :-1] ** 2, axis=1)
    return LiftedCloud(cloud=cloud, z=z)


@dataclass
class ParabolicLayer:
    """One layer: consumed ids, lower-hull faces mapped back to ids."""

    members: tuple
    faces: dict  # k -> sorted list of sorted id tuples
    lifted_dim_hull: int

    def faces_containing(self, point_id, k) -> list:
        return [f for f in self.faces.get(k, []) if point_id in f]


@dataclass
class ParabolicDiagram:
    cloud: PointCloud
    layer_of: dict
    layers: list
    window: Window | None
    n_layers: int
    complete: bool = True


def _vertical_span(coords) -> bool:
    """Whether the affine hull of the lifted points contains the z-direction."""
    basis, rank = pr.affine_rank_basis(coords)
    d = len(coords[0])
    probe = [coords[b] for b in basis]
    shifted = tuple(
        Fraction(coords[basis[0]][j]) + (1 if j == d - 1 else 0) for j in range(d)
    )
    _, rank2 = pr.affine_rank_basis(probe + [shifted])
    # rank unchanged means e_z already lies in the hull's direction space
    return rank2 == rank


def _extreme_by_feasibility(lifted, idx):
    """Exact test: some non-vertical hyperplane at point idx supports from below."""
    base = lifted[idx]
    rows, bounds = [], []
    for j, q in enumerate(lifted):
        if j == idx:
            continue
        rows.append([Fraction(q[c]) - Fraction(base[c]) for c in range(len(base) - 1)])
        bounds.append(Fraction(q[-1]) - Fraction(base[-1]))
    if not rows:
        return True
    return pr.linear_feasible(rows, bounds)


def _lower_layer(lifted_coords, method):
    """Positions on the current parabolic layer plus the layer's face data.

    Returns (member_positions, faces_by_k, dim_hull).
    """
    n, d = len(lifted_coords), len(lifted_coords[0])
    use_exact = method == "exact" or (method == "auto" and n <= 40)
    if not use_exact:
        try:
            return _lower_layer_qhull(np.asarray(lifted_coords, float))
        except _hull.QhullError:
            pass
    data = _hull.build_hull([tuple(row) for row in lifted_coords])
    if data.dim_hull < d:
        if not _vertical_span([tuple(row) for row in lifted_coords]):
            # every point admits the affine hull itself as a lower support
            return list(range(n)), dict(data.faces), data.dim_hull
        members = [
            p
            for p in range(n)
            if _extreme_by_feasibility([tuple(r) for r in lifted_coords], p)
        ]
        faces = {
            k: [f for f in v if set(f) <= set(members)]
            for k, v in data.faces.items()
        }
        return members, faces, data.dim_hull
    lower_sets = [
        set(data.facet_incident[i])
        for i, s in enumerate(data.facet_last_sign)
        if s < 0
    ]
    members = sorted(set().union(*lower_sets)) if lower_sets else []
    faces = {d - 1: sorted(tuple(sorted(s)) for s in lower_sets)}
    for k in range(d - 2, -1, -1):
        faces[k] = sorted(
            f
            for f in data.faces.get(k, [])
            if any(set(f) <= s for s in lower_sets)
        )
    return members, faces, d


def _lower_layer_qhull(lifted: np.ndarray):
    n, d = lifted.shape
    hull = _hull.ConvexHull(lifted)
    lower_mask = hull.equations[:, -2] < 0
    if not np.any(lower_mask):
        raise _hull.QhullError("no lower facet")
    lower_simplices = [
        tuple(sorted(int(v) for v in s))
        for s, low in zip(hull.simplices, lower_mask)
        if low
    ]
    members = sorted({v for s in lower_simplices for v in s})
    faces = {d - 1: sorted(set(lower_simplices))}
    for k in range(d - 2, 0, -1):
        sub = set()
        for f in faces[k + 1]:
            for drop in range(len(f)):
                sub.add(f[:drop] + f[drop + 1 :])
        faces[k] = sorted(sub)
    faces[0] = [(v,) for v in members]
    return members, faces, d


def parabolic_peel(
    cloud: PointCloud,
    window: Window | None = None,
    method: str = "auto",
    max_layers: int | None = None,
) -> ParabolicDiagram:
    """Iterated parabolic hull peeling of a half-space point set."""
    if len(cloud) == 0:
        raise ValueError("empty cloud")
    if window is not None:
        v = cloud.coords[:, :-1]
        if np.any(np.linalg.norm(v, axis=1) > window.r * (1 + 1e-12)) or np.any(
            cloud.coords[:, -1] > window.height * (1 + 1e-12)
        ):
            raise ValueError("points outside the window cylinder")
    lifted_all = lift(cloud).lifted_coords
    remaining = list(range(len(cloud)))
    layer_of = {}
    layers = []
    n = 0
    complete = True
    while remaining:
        if max_layers is not None and n >= max_layers:
            complete = False
            break
        n += 1
        sub = [tuple(lifted_all[p]) for p in remaining]
        members_local, faces_local, dim_hull = _lower_layer(sub, method)
        member_ids = tuple(sorted(cloud.ids[remaining[p]] for p in members_local))
        faces = {
            k: sorted(
                tuple(sorted(cloud.ids[remaining[p]] for p in f)) for f in v
            )
            for k, v in faces_local.items()
        }
        for pid in member_ids:
            layer_of[pid] = n
        layers.append(
            ParabolicLayer(members=member_ids, faces=faces, lifted_dim_hull=dim_hull)
        )
        member_set = set(members_local)
        remaining = [remaining[p] for p in range(len(remaining)) if p not in member_set]
    return ParabolicDiagram(
        cloud=cloud,
        layer_of=layer_of,
        layers=layers,
        window=window,
        n_layers=n,
        complete=complete,
    )


def parabolic_layer_index(
    w, cloud: PointCloud, window: Window | None = None, method: str = "auto"
) -> int:
    """Layer number of w in the peeling of cloud + {w}."""
    v, h = w
    point = list(np.atleast_1d(np.asarray(v, float))) + [float(h)]
    new_id = (max(cloud.ids) + 1) if cloud.ids else 0
    extended = cloud.with_point(point, new_id)
    diagram = parabolic_peel(extended, window=window, method=method)
    return diagram.layer_of[new_id]


def criterion_check(w, cloud: PointCloud, n: int, method: str = "exact") -> bool:
    """Layer criterion: is the layer of w in cloud + {w} at most n?

    Searches for a downward paraboloid with w on its boundary whose interior
    meets only points of the first n-1 layers; in lifted coordinates this is
    an exact linear feasibility problem over supporting hyperplanes at the
    lifted w.
    """
    v, h = w
    v = np.atleast_1d(np.asarray(v, float))
    point = list(v) + [float(h)]
    for row in cloud.coords:
        if np.array_equal(row, np.asarray(point)):
            raise GeneralPositionViolated("w coincides with a cloud point")
    new_id = (max(cloud.ids) + 1) if cloud.ids else 0
    extended = cloud.with_point(point, new_id)
    diagram = parabolic_peel(extended, method=method)
    lifted = lift(extended).lifted_coords
    w_pos = len(extended) - 1
    base = lifted[w_pos]
    rows, bounds = [], []
    for pos, pid in enumerate(extended.ids):
        if pos == w_pos or diagram.layer_of[pid] < n:
            continue
        rows.append(
            [Fraction(lifted[pos][c]) - Fraction(base[c]) for c in range(len(base) - 1)]
        )
        bounds.append(Fraction(lifted[pos][-1]) - Fraction(base[-1]))
    if not rows:
        return True
    return pr.linear_feasible(rows, bounds)


def limit_score(
    h0: float,
    cloud: PointCloud,
    window: Window | None,
    n: int,
    k: int,
    method: str = "auto",
) -> Fraction:
    """Score of the inserted point (0, h0): k-face count on layer n over k+1."""
    d1 = cloud.dim - 1
    point = [0.0] * d1 + [float(h0)]
    for row in cloud.coords:
        if np.array_equal(row, np.asarray(point)):
            raise ValueError("(0, h0) already in cloud")
    new_id = (max(cloud.ids) + 1) if cloud.ids else 0
    extended = cloud.with_point(point, new_id)
    diagram = parabolic_peel(extended, window=window, method=method, max_layers=n)
    if diagram.layer_of.get(new_id) != n:
        return Fraction(0)
    layer = diagram.layers[n - 1]
    count = len(layer.faces_containing(new_id, k))
    return Fraction(count, k + 1)


def point_score(diagram: ParabolicDiagram, point_id, n: int, k: int) -> Fraction:
    """Score of an existing point of a peeled cloud (zero off layer n)."""
    if diagram.layer_of.get(point_id) != n:
        return Fraction(0)
    layer = diagram.layers[n - 1]
    return Fraction(len(layer.faces_containing(point_id, k)), k + 1)


def tree_fixture(
    n: int, h0: float, d: int, epsilon: float = 0.0, seed: int = 0
) -> PointCloud:
    """Deterministic tree configuration putting its root on layer n.

    The root sits at (0, h0); a node (v, h) at depth l spawns children at
    v +- sqrt(2 h)/2 e_i with height h/8, for i = 1..d-1.  Generation l ends
    up on layer n - l of the parabolic peeling.  A positive epsilon jitters
    every point uniformly by at most epsilon (the layer structure is stable
    under small perturbations); the default leaves the configuration exact.
    """
    if n < 1 or h0 <= 0 or d < 2:
        raise ValueError("need n >= 1, h0 > 0, d >= 2")
    d1 = d - 1
    points = []
    frontier = [(np.zeros(d1), float(h0))]
    points.extend(frontier)
    for _ in range(n - 1):
        nxt = []
        for v, h in frontier:
            step = 0.5 * math.sqrt(2.0 * h)
            for i in range(d1):
                for sgn in (+1.0, -1.0):
                    child_v = v.copy()
                    child_v[i] += sgn * step
                    nxt.append((child_v, h / 8.0))
        points.extend(nxt)
        frontier = nxt
    coords = np.array([list(v) + [h] for v, h in points])
    if epsilon > 0:
        rng = np.random.default_rng(seed)
        g = rng.standard_normal(coords.shape)
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        coords = coords + g * (epsilon * rng.random((coords.shape[0], 1)))
        coords[:, -1] = np.maximum(coords[:, -1], 0.0)
    return PointCloud.from_coords(coords)


def half_paraboloid_check(w0, w1, n_samples: int = 10_000, seed: int = 0) -> bool:
    """Half-paraboloid inclusion behind the stabilization geometry.

    Requires w0 on the boundary of the downward paraboloid at w1; samples
    the half of the paraboloid below w0 on the far side of the vertical
    hyperplane orthogonal to v1 - v0 and verifies every sample lies in the
    paraboloid at w1.
    """
    v0, h0 = np.atleast_1d(np.asarray(w0[0], float)), float(w0[1])
    v1, h1 = np.atleast_1d(np.asarray(w1[0], float)), float(w1[1])
    boundary = h1 - 0.5 * float(np.sum((v0 - v1) ** 2))
    scale = max(1.0, abs(h0), abs(h1))
    if abs(h0 - boundary) > 1e-9 * scale:
        raise ValueError("w0 must lie on the boundary of the paraboloid at w1")
    if h0 <= 0:
        return True  # the half below w0 is empty
    rng = np.random.default_rng(seed)
    u = v1 - v0
    radius = math.sqrt(2.0 * h0)
    d1 = v0.shape[0]
    accepted = 0
    while accepted < n_samples:
        m = n_samples
        g = rng.standard_normal((m, d1))
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        r = radius * rng.random(m) ** (1.0 / d1)
        v = v0 + g * r[:, None]
        cap = h0 - 0.5 * np.sum((v - v0) ** 2, axis=1)
        hgt = rng.random(m) * cap
        ok = cap > 0
        if np.any(u != 0):
            ok &= (v - v0) @ u > 0
        v, hgt = v[ok], hgt[ok]
        if v.shape[0] == 0:
            continue
        inside = hgt < h1 - 0.5 * np.sum((v - v1) ** 2, axis=1)
        if not np.all(inside):
            return False
        accepted += v.shape[0]
    return True


def layer_height_profile(diagram: ParabolicDiagram, n: int) -> list:
    """Heights of layer-n points within the inner statistics window."""
    if n > diagram.n_layers:
        return []
    layer = diagram.layers[n - 1]
    out = []
    r_inner = diagram.window.r_inner if diagram.window is not None else math.inf
    for pid in layer.members:
        pos = diagram.cloud.index_of(pid)
        row = diagram.cloud.coords[pos]
        if np.linalg.norm(row[:-1]) <= r_inner:
            out.append(float(row[-1]))
    return out


__all__ = [
    "GeneralPositionViolated",
    "Window",
    "LiftedCloud",
    "ParabolicLayer",
    "ParabolicDiagram",
    "lift",
    "parabolic_peel",
    "parabolic_layer_index",
    "criterion_check",
    "limit_score",
    "point_score",
    "tree_fixture",
    "half_paraboloid_check",
    "layer_height_profile",
]
