"""Point clouds, face lattices and intrinsic volumes of convex hulls.

The hull of a cloud is reported as a :class:`FaceLattice` listing all proper
faces (dimension 0 .. dim_hull-1) as id-sets of incident input points.
Degenerate inputs are not rejected: a cloud spanning an m-dimensional
affine subspace yields a lattice with ``dim_hull == m``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import hull as _hull


class DegenerateHull(Exception):
    """Raised when an operation requires a full-dimensional hull."""


@dataclass(frozen=True)
class PointCloud:
    """Finite labeled point set in R^d."""

    dim: int
    ids: tuple
    coords: np.ndarray  # shape (n, dim)

    def __post_init__(self):
        coords = np.asarray(self.coords, dtype=float)
        object.__setattr__(self, "coords", coords)
        if coords.ndim != 2 or coords.shape[1] != self.dim:
            raise ValueError(f"coordinates must be (n, {self.dim})")
        if len(self.ids) != coords.shape[0]:
            raise ValueError("ids and coordinates disagree in length")
        if len(set(self.ids)) != len(self.ids):
            raise ValueError("point ids must be unique")
        seen = set()
        for row in coords:
            key = row.tobytes()
            if key in seen:
                raise ValueError("duplicate point coordinates rejected")
            seen.add(key)

    @classmethod
    def _trusted(cls, dim, ids, coords) -> "PointCloud":
        """Construct without re-validating (internal: invariants already hold)."""
        obj = object.__new__(cls)
        object.__setattr__(obj, "dim", dim)
        object.__setattr__(obj, "ids", ids)
        object.__setattr__(obj, "coords", coords)
        return obj

    @classmethod
    def from_coords(cls, coords, ids=None) -> "PointCloud":
        coords = np.asarray(coords, dtype=float)
        if coords.ndim == 1:
            coords = coords.reshape(1, -1)
        if ids is None:
            ids = tuple(range(coords.shape[0]))
        return cls(dim=coords.shape[1], ids=tuple(ids), coords=coords)

    def __len__(self):
        return self.coords.shape[0]

    def index_of(self, point_id) -> int:
        return self.ids.index(point_id)

    def with_point(self, coords, point_id=None) -> "PointCloud":
        """New cloud with one extra point (fresh id unless given)."""
        if point_id is None:
            point_id = (max(self.ids) + 1) if self.ids else 0
        return PointCloud(
            dim=self.dim,
            ids=self.ids + (point_id,),
            coords=np.vstack([self.coords, np.asarray(coords, float)]),
        )

    def to_csv(self, path):
        header = "id," + ",".join(f"x{i + 1}" for i in range(self.dim))
        with open(path, "w") as f:
            f.write(header + "\n")
            for pid, row in zip(self.ids, self.coords):
                f.write(str(pid) + "," + ",".join(repr(float(x)) for x in row) + "\n")

    @classmethod
    def from_csv(cls, path) -> "PointCloud":
        ids = []
        rows = []
        with open(path) as f:
            header = f.readline().strip()
            cols = header.split(",")
            if not cols or cols[0] != "id":
                raise ValueError(f"{path}:1: expected header 'id,x1,...,xd'")
            d = len(cols) - 1
            for lineno, line in enumerate(f, start=2):
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                parts = line.split(",")
                if len(parts) != d + 1:
                    raise ValueError(
                        f"{path}:{lineno}: expected {d + 1} fields, got {len(parts)}"
                    )
                try:
                    ids.append(int(parts[0]))
                    rows.append([float(x) for x in parts[1:]])
                except ValueError as exc:
                    raise ValueError(f"{path}:{lineno}: {exc}") from None
        return cls(dim=d, ids=tuple(ids), coords=np.asarray(rows, float))


@dataclass
class FaceLattice:
    """Face lattice of a convex hull, faces as sorted id-sets."""

    dim_ambient: int
    dim_hull: int
    faces: dict  # k -> list of sorted id tuples, k in 0..dim_hull-1
    facet_normals: list | None  # (outward unit normal, offset), full-dim only
    _coords: dict = field(repr=False, default_factory=dict)  # id -> ndarray
    _hull: object = field(repr=False, default=None)  # backing HullData
    _positions: dict = field(repr=False, default_factory=dict)  # id -> position

    @property
    def vertex_ids(self) -> list:
        return [f[0] for f in self.faces.get(0, [])]

    def faces_containing(self, point_id, k) -> list:
        return [f for f in self.faces.get(k, []) if point_id in f]

    def to_json(self, path=None):
        payload = {
            "dim_ambient": self.dim_ambient,
            "dim_hull": self.dim_hull,
            "faces": {str(k): [list(f) for f in v] for k, v in self.faces.items()},
        }
        if path is None:
            return json.dumps(payload)
        with open(path, "w") as f:
            json.dump(payload, f)


@dataclass
class IntrinsicVolumes:
    """Intrinsic volumes V_0..V_d with per-entry evaluation tags."""

    values: list
    method_tags: list  # "exact" | "projection-MC"
    stderr: list  # standard error for MC entries, None otherwise


def convex_hull(cloud: PointCloud, method: str = "auto") -> FaceLattice:
    """Full face lattice of conv(cloud).

    method:
        "exact"  exact-predicate backend (handles any degeneracy);
        "qhull"  scipy/qhull backend (general position, full-dimensional);
        "auto"   qhull for larger clouds, exact fallback on degeneracy.
    """
    if len(cloud) == 0:
        raise ValueError("empty cloud")
    data = _hull_data(cloud.coords, method)
    return _lattice_from_data(cloud, data)


def _hull_data(coords: np.ndarray, method: str) -> _hull.HullData:
    n, d = coords.shape
    if method == "exact" or (method == "auto" and n <= 40):
        return _hull.build_hull([tuple(row) for row in coords])
    try:
        return _hull.qhull_hull(coords)
    except _hull.QhullError:
        if method == "qhull":
            raise
        return _hull.build_hull([tuple(row) for row in coords])


def _lattice_from_data(cloud: PointCloud, data: _hull.HullData) -> FaceLattice:
    ids = cloud.ids
    faces = {
        k: sorted(tuple(sorted(ids[p] for p in f)) for f in v)
        for k, v in data.faces.items()
    }
    coords = {}
    positions = {}
    for k, v in data.faces.items():
        for f in v:
            for p in f:
                coords[ids[p]] = cloud.coords[p]
                positions[ids[p]] = p
    return FaceLattice(
        dim_ambient=cloud.dim,
        dim_hull=data.dim_hull,
        faces=faces,
        facet_normals=data.facet_normals,
        _coords=coords,
        _hull=data,
        _positions=positions,
    )


def k_face_counts(lattice: FaceLattice) -> dict:
    """Number of k-faces per dimension."""
    return {k: len(v) for k, v in lattice.faces.items()}


def unit_ball_volume(m: int) -> float:
    """kappa_m, the volume of the m-dimensional unit ball."""
    return math.pi ** (m / 2) / math.gamma(m / 2 + 1)


def sphere_surface(d: int) -> float:
    """Surface measure of the unit sphere S^(d-1) in R^d."""
    return 2 * math.pi ** (d / 2) / math.gamma(d / 2)


def ball_intrinsic_volume(d: int, k: int) -> float:
    """V_k of the unit ball in R^d."""
    if not 0 <= k <= d:
        raise ValueError(f"k={k} out of range for d={d}")
    return math.comb(d, k) * unit_ball_volume(d) / unit_ball_volume(d - k)


def _kubota_constant(d: int, k: int) -> float:
    return (
        math.comb(d, k)
        * unit_ball_volume(d)
        / (unit_ball_volume(k) * unit_ball_volume(d - k))
    )


def intrinsic_volumes(
    lattice: FaceLattice, n_directions: int = 4096, seed: int = 0
) -> IntrinsicVolumes:
    """V_0..V_d of a full-dimensional hull.

    V_d and V_{d-1} are exact (signed simplex cones and half the facet
    surface measure); 1 <= k <= d-2 is evaluated by Kubota averaging of
    projection volumes over uniform random k-subspaces.
    """
    d = lattice.dim_ambient
    if lattice.dim_hull < d:
        raise DegenerateHull(
            f"dim_hull={lattice.dim_hull} < ambient {d}; intrinsic volumes undefined"
        )
    if d < 2:
        raise ValueError("ambient dimension must be >= 2")
    values = [0.0] * (d + 1)
    tags = [""] * (d + 1)
    errs = [None] * (d + 1)
    values[0] = 1.0
    tags[0] = "exact"
    values[d] = _exact_volume(lattice)
    tags[d] = "exact"
    values[d - 1] = 0.5 * _exact_surface(lattice)
    tags[d - 1] = "exact"
    vcoords = np.array([lattice._coords[v] for v in lattice.vertex_ids])
    rng = np.random.default_rng(seed)
    for k in range(1, d - 1):
        if n_directions < 1:
            raise ValueError("n_directions must be >= 1 for MC entries")
        vols = np.empty(n_directions)
        for i in range(n_directions):
            frame = _random_frame(rng, d, k)
            proj = vcoords @ frame
            vols[i] = _projection_volume(proj, k)
        mean = float(vols.mean())
        values[k] = _kubota_constant(d, k) * mean
        tags[k] = "projection-MC"
        errs[k] = (
            _kubota_constant(d, k) * float(vols.std(ddof=1)) / math.sqrt(n_directions)
            if n_directions > 1
            else float("inf")
        )
    return IntrinsicVolumes(values=values, method_tags=tags, stderr=errs)


def _random_frame(rng, d, k):
    g = rng.standard_normal((d, k))
    q, r = np.linalg.qr(g)
    return q * np.sign(np.diag(r))


def _projection_volume(proj, k):
    if k == 1:
        return float(proj.max() - proj.min())
    if k == 2:
        idx = _hull.monotone_chain([tuple(p) for p in proj])
        poly = proj[idx]
        x, y = poly[:, 0], poly[:, 1]
        return 0.5 * abs(float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))
    try:
        return float(_hull.ConvexHull(proj).volume)
    except _hull.QhullError:
        return 0.0


def _exact_volume(lattice: FaceLattice) -> float:
    data = lattice._hull
    if data.volume is not None:
        return data.volume
    d = lattice.dim_ambient
    if d == 1:
        vs = [lattice._coords[v][0] for v in lattice.vertex_ids]
        return max(vs) - min(vs)
    ref = np.asarray([float(x) for x in data.interior_ref])
    coords = lattice._coords
    pos_to_id = {p: i for i, p in lattice._positions.items()}
    total = 0.0
    for member_list in data.facet_simplices:
        for simplex in member_list:
            rows = [coords[pos_to_id[p]] - ref for p in simplex]
            total += abs(float(np.linalg.det(np.asarray(rows))))
    return total / math.factorial(d)


def _exact_surface(lattice: FaceLattice) -> float:
    data = lattice._hull
    if data.area is not None:
        return data.area
    d = lattice.dim_ambient
    coords = lattice._coords
    pos_to_id = {p: i for i, p in lattice._positions.items()}
    total = 0.0
    for member_list in data.facet_simplices:
        for simplex in member_list:
            base = coords[pos_to_id[simplex[0]]]
            diffs = np.asarray(
                [coords[pos_to_id[p]] - base for p in simplex[1:]]
            )
            gram = diffs @ diffs.T
            total += math.sqrt(max(float(np.linalg.det(gram)), 0.0)) / math.factorial(
                d - 1
            )
    return total


def hull_volume_and_surface(lattice: FaceLattice):
    """(V_d, surface measure) of a full-dimensional hull, exact entries only."""
    if lattice.dim_hull < lattice.dim_ambient:
        raise DegenerateHull("volume/surface need a full-dimensional hull")
    return _exact_volume(lattice), _exact_surface(lattice)


def origin_strictly_inside(lattice: FaceLattice) -> bool:
    """Whether 0 lies in the interior of the hull (full-dim only).

    Facets satisfy n.x <= c with outward n, so the origin is interior
    exactly when every offset is positive.
    """
    if lattice.dim_hull < lattice.dim_ambient or not lattice.facet_normals:
        return False
    return all(c > 0 for _, c in lattice.facet_normals)


__all__ = [
    "DegenerateHull",
    "PointCloud",
    "FaceLattice",
    "IntrinsicVolumes",
    "convex_hull",
    "k_face_counts",
    "intrinsic_volumes",
    "ball_intrinsic_volume",
    "unit_ball_volume",
    "sphere_surface",
    "origin_strictly_inside",
]
