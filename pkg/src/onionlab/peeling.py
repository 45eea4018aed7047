"""Iterated convex hull peeling, layer depths and per-layer statistics.

Layer n consumes every point of the current set that is not strictly
interior to its hull (vertices almost surely; boundary non-vertices only in
degenerate inputs, where the whole remaining set is consumed once the hull
degenerates).  The recursion therefore always terminates with a contiguous
labeling 1..n_layers.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import hull as _hull
from .geometry import (
    FaceLattice,
    PointCloud,
    _lattice_from_data,
    ball_intrinsic_volume,
    intrinsic_volumes,
    k_face_counts,
    origin_strictly_inside,
)


@dataclass
class PeelingDiagram:
    cloud: PointCloud
    layer_of: dict  # id -> layer number, 1-based
    layers: list  # FaceLattice per layer
    n_layers: int
    complete: bool = True

    def to_json(self, path=None, stats=None):
        payload = {
            "layer_of": {str(k): v for k, v in self.layer_of.items()},
            "n_layers": self.n_layers,
            "stats": stats if stats is not None else {},
        }
        if path is None:
            return json.dumps(payload)
        with open(path, "w") as f:
            json.dump(payload, f)


def _subcloud(cloud: PointCloud, positions) -> PointCloud:
    return PointCloud._trusted(
        cloud.dim,
        tuple(cloud.ids[p] for p in positions),
        cloud.coords[positions],
    )


def peel(
    cloud: PointCloud,
    method: str = "auto",
    max_layers: int | None = None,
    want_faces: bool = True,
) -> PeelingDiagram:
    """Convex hull peeling of a cloud; see module docstring for the rule."""
    if len(cloud) == 0:
        raise ValueError("empty cloud")
    d = cloud.dim
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
        coords = cloud.coords[remaining]
        data = None
        use_exact = method == "exact" or (method == "auto" and len(remaining) <= 40)
        if not use_exact:
            try:
                data = _hull.qhull_hull(coords, want_faces=want_faces)
            except _hull.QhullError:
                data = None
        if data is None:
            data = _hull.build_hull([tuple(row) for row in coords])
        if data.dim_hull == d and data.facet_reps is None:
            member_local = set(data.vertices)  # qhull: general position
        elif data.dim_hull == d:
            interior = _hull.classify_interior(data, [tuple(r) for r in coords])
            member_local = {p for p in range(len(remaining)) if not interior[p]}
        else:
            member_local = set(range(len(remaining)))  # degenerate: no interior
        sub = _subcloud(cloud, remaining)
        lattice = _lattice_from_data(sub, data)
        for p in member_local:
            layer_of[cloud.ids[remaining[p]]] = n
        layers.append(lattice)
        remaining = [
            remaining[p] for p in range(len(remaining)) if p not in member_local
        ]
    return PeelingDiagram(
        cloud=cloud, layer_of=layer_of, layers=layers, n_layers=n, complete=complete
    )


def total_layers(diagram: PeelingDiagram) -> int:
    if not diagram.complete:
        raise ValueError("total_layers needs a complete peel")
    return diagram.n_layers


def layer_index(x, cloud: PointCloud, method: str = "auto") -> int:
    """Depth of x: the layer it takes in the peeling of cloud + {x}."""
    new_id = (max(cloud.ids) + 1) if cloud.ids else 0
    extended = cloud.with_point(np.asarray(x, float), new_id)
    diagram = peel(extended, method=method, want_faces=False)
    return diagram.layer_of[new_id]


def score(x_id, diagram: PeelingDiagram, n: int, k: int) -> Fraction:
    """Per-point face-count score: #k-faces of layer n containing x over k+1."""
    if x_id not in diagram.layer_of:
        raise KeyError(f"unknown point id {x_id!r}")
    if diagram.layer_of[x_id] != n or n > len(diagram.layers):
        return Fraction(0)
    lattice = diagram.layers[n - 1]
    return Fraction(len(lattice.faces_containing(x_id, k)), k + 1)


@dataclass
class LayerRecord:
    n: int
    dim_hull: int
    face_counts: dict
    defect_volumes: dict | None  # k -> V_k(ball) - V_k(layer); None if degenerate
    origin_interior: bool


@dataclass
class LayerStats:
    d: int
    records: list
    excluded_degenerate: int


def layer_stats(
    diagram: PeelingDiagram, max_layer: int = 5, mc_directions: int = 4096
) -> LayerStats:
    """Face counts and defect intrinsic volumes of the first layers.

    Defect volumes are reported only for full-dimensional layers (the
    defect of a degenerate layer is left missing, not zero); face counts
    always come from the layer's own lattice.
    """
    d = diagram.cloud.dim
    records = []
    excluded = 0
    for n in range(1, min(max_layer, len(diagram.layers)) + 1):
        lattice = diagram.layers[n - 1]
        counts = k_face_counts(lattice)
        if lattice.dim_hull == d:
            iv = intrinsic_volumes(lattice, n_directions=mc_directions)
            defects = {
                k: ball_intrinsic_volume(d, k) - iv.values[k] for k in range(1, d + 1)
            }
            origin = origin_strictly_inside(lattice)
        else:
            defects = None
            origin = False
            excluded += 1
        records.append(
            LayerRecord(
                n=n,
                dim_hull=lattice.dim_hull,
                face_counts=counts,
                defect_volumes=defects,
                origin_interior=origin,
            )
        )
    return LayerStats(d=d, records=records, excluded_degenerate=excluded)


__all__ = [
    "PeelingDiagram",
    "LayerRecord",
    "LayerStats",
    "peel",
    "total_layers",
    "layer_index",
    "score",
    "layer_stats",
]
