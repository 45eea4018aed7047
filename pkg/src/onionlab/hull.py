"""Convex hull construction with explicit face lattices.

Two backends live here:

* an exact-predicate implementation (monotone chain in the plane, an
  incremental beneath-beyond algorithm in higher dimension) that merges
  coplanar facets, recovers the true face lattice by recursing into facet
  hyperplanes, and copes with degenerate (lower-dimensional) hulls;
* a thin adapter over ``scipy.spatial.ConvexHull`` used on large random
  inputs where general position holds almost surely.

Faces are *proper* faces (dimensions 0 .. dim_hull-1); the id-set of a face
contains every input point lying on it, not only its vertices.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from . import predicates as pr


@dataclass
class HullData:
    """Internal hull result in terms of positions into the input array."""

    dim_ambient: int
    dim_hull: int
    faces: dict  # k -> sorted list of sorted position tuples (proper faces)
    vertices: list  # positions of extreme points
    facet_reps: list | None = None  # ordered rep simplex per facet, outward
    facet_incident: list | None = None  # incident position tuple per facet
    facet_normals: list | None = None  # (unit normal ndarray, offset) per facet
    facet_simplices: list | None = None  # simplicial pieces per facet
    facet_last_sign: list | None = None  # exact sign of normal's last coord
    interior_ref: tuple | None = None  # a strictly interior point (full-dim)
    volume: float | None = None  # cached by the qhull backend
    area: float | None = None


# ---------------------------------------------------------------------------
# planar monotone chain


def monotone_chain(coords) -> list:
    """Indices of hull vertices, counterclockwise, strictly convex turns."""
    order = sorted(range(len(coords)), key=lambda i: (coords[i][0], coords[i][1]))

    def build(seq):
        chain = []
        for i in seq:
            while len(chain) >= 2 and pr.orient(
                [coords[chain[-2]], coords[chain[-1]], coords[i]]
            ) <= 0:
                chain.pop()
            chain.append(i)
        return chain

    lower = build(order)
    upper = build(reversed(order))
    return lower[:-1] + upper[:-1]


def _chain_hull(coords) -> HullData:
    """Full lattice for a planar point set of affine rank 2."""
    verts = monotone_chain(coords)
    n = len(verts)
    vset = set(verts)
    edges = [(verts[i], verts[(i + 1) % n]) for i in range(n)]
    # non-vertex points sit on edges; attach them to the edge they lie on
    edge_extra = {e: [] for e in edges}
    for p in range(len(coords)):
        if p in vset:
            continue
        for a, b in edges:
            if pr.orient([coords[a], coords[b], coords[p]]) == 0 and _between(
                coords[a], coords[b], coords[p]
            ):
                edge_extra[(a, b)].append(p)
                break
    faces1 = []
    reps = []
    normals = []
    simplices = []
    last_signs = []
    for a, b in edges:
        faces1.append(tuple(sorted((a, b, *edge_extra[(a, b)]))))
        reps.append((b, a))  # reversed so the interior tests -1
        d = np.asarray(coords[b], float) - np.asarray(coords[a], float)
        nvec = np.array([d[1], -d[0]])
        nvec /= np.linalg.norm(nvec)
        normals.append((nvec, float(nvec @ np.asarray(coords[a], float))))
        simplices.append((a, b))
        # outward normal's last coordinate is -(b_x - a_x); float subtraction
        # has the exact sign
        dx = float(coords[b][0]) - float(coords[a][0])
        last_signs.append((dx < 0) - (dx > 0))
    cx = sum(float(coords[v][0]) for v in verts) / n
    cy = sum(float(coords[v][1]) for v in verts) / n
    return HullData(
        dim_ambient=2,
        dim_hull=2,
        faces={0: sorted((v,) for v in verts), 1: sorted(faces1)},
        vertices=sorted(verts),
        facet_incident=list(faces1),
        facet_reps=reps,
        facet_normals=normals,
        facet_simplices=[[s] for s in simplices],
        facet_last_sign=last_signs,
        interior_ref=(cx, cy),
    )


def _between(a, b, p):
    """p strictly inside segment [a, b] given collinearity (exact)."""
    af = [Fraction(x) for x in a]
    bf = [Fraction(x) for x in b]
    pf = [Fraction(x) for x in p]
    d = [bi - ai for ai, bi in zip(af, bf)]
    t = sum((pi - ai) * di for pi, ai, di in zip(pf, af, d))
    tt = sum(di * di for di in d)
    return 0 < t < tt


# ---------------------------------------------------------------------------
# incremental beneath-beyond in general dimension


def _orient_outward(verts, coords, ref):
    """Order verts so that ref lies on the -1 side of the facet."""
    verts = list(verts)
    s = pr.side_of([coords[v] for v in verts], ref)
    if s == 0:
        raise RuntimeError("interior reference on facet hyperplane")
    if s > 0:
        verts[0], verts[1] = verts[1], verts[0]
    return tuple(verts)


def _incremental_facets(coords, basis, m):
    """Simplicial facet set of the hull of full-rank points in R^m."""
    ref = tuple(
        sum(Fraction(coords[b][j]) for b in basis) / (m + 1) for j in range(m)
    )
    facets = {}  # frozenset -> ordered tuple
    ridges = {}  # frozenset -> set of facet keys

    def add_facet(verts):
        key = frozenset(verts)
        facets[key] = _orient_outward(verts, coords, ref)
        for v in verts:
            ridges.setdefault(key - {v}, set()).add(key)

    def drop_facet(key):
        del facets[key]
        for v in key:
            r = key - {v}
            ridges[r].discard(key)
            if not ridges[r]:
                del ridges[r]

    for i in range(m + 1):
        add_facet([basis[j] for j in range(m + 1) if j != i])

    in_basis = set(basis)
    for p in range(len(coords)):
        if p in in_basis:
            continue
        visible = [
            key
            for key, ordered in facets.items()
            if pr.side_of([coords[v] for v in ordered], coords[p]) > 0
        ]
        if not visible:
            continue
        vis = set(visible)
        horizon = []
        for key in visible:
            for v in key:
                r = key - {v}
                others = ridges[r] - vis
                if others:
                    horizon.append(r)
        for key in visible:
            drop_facet(key)
        for r in horizon:
            add_facet(sorted(r) + [p])
    return list(facets.values()), ref


def _exact_normal(ordered, coords):
    """Exact hyperplane of a facet: integer normal n and offset c.

    Sign convention matches side_of: side_of(ordered, x) = sign(n.(x - v0)),
    so the stored n points outward.  Returned as gcd-reduced integers.
    """
    v0 = [Fraction(x) for x in coords[ordered[0]]]
    rows = [
        [Fraction(coords[v][j]) - v0[j] for j in range(len(v0))]
        for v in ordered[1:]
    ]
    m = len(v0)
    n = []
    for j in range(m):
        unit = [Fraction(0)] * m
        unit[j] = Fraction(1)
        n.append(pr._det_exact(rows + [unit]))
    c = sum(nj * v0j for nj, v0j in zip(n, v0))
    denom = 1
    for x in n + [c]:
        denom = denom * x.denominator // _gcd(denom, x.denominator)
    ints = [int(x * denom) for x in n + [c]]
    g = 0
    for x in ints:
        g = _gcd(g, abs(x))
    if g > 1:
        ints = [x // g for x in ints]
    return tuple(ints[:-1]), ints[-1]


def _gcd(a, b):
    while b:
        a, b = b, a % b
    return a


def build_hull(coords) -> HullData:
    """Full face lattice of the hull of coords (floats or Fractions)."""
    n = len(coords)
    d = len(coords[0])
    basis, rank = pr.affine_rank_basis(coords)
    if rank == 0:
        return HullData(d, 0, {0: [(0,)]}, [0])
    if rank == 1:
        ts = [t[0] for t in pr.subspace_coordinates(coords, basis)]
        lo = min(range(n), key=lambda i: ts[i])
        hi = max(range(n), key=lambda i: ts[i])
        return HullData(d, 1, {0: sorted([(lo,), (hi,)])}, sorted([lo, hi]))
    if rank < d:
        sub = pr.subspace_coordinates(coords, basis)
        inner = _full_dim_hull(sub, rank)
        inner.dim_ambient = d
        inner.facet_reps = None
        inner.facet_normals = None
        inner.facet_simplices = None
        inner.facet_last_sign = None
        inner.interior_ref = None
        return inner
    if d == 2 and not any(isinstance(x, Fraction) for x in coords[0]):
        return _chain_hull(coords)
    return _full_dim_hull(coords, d)


def _full_dim_hull(coords, m) -> HullData:
    basis, rank = pr.affine_rank_basis(coords)
    assert rank == m
    simplicial, ref = _incremental_facets(coords, basis, m)

    groups = {}
    for ordered in simplicial:
        key = _exact_normal(ordered, coords)
        groups.setdefault(key, []).append(ordered)

    facet_faces = []
    reps = []
    normals = []
    simplices = []
    last_signs = []
    sub_faces = {k: set() for k in range(m - 1)}
    for key in sorted(groups):
        members = groups[key]
        rep = members[0]
        rep_pts = [coords[v] for v in rep]
        incident = [
            p for p in range(len(coords)) if pr.side_of(rep_pts, coords[p]) == 0
        ]
        facet_faces.append(tuple(sorted(incident)))
        reps.append(rep)
        nvec = np.array([float(x) for x in key[0]])
        norm = np.linalg.norm(nvec)
        normals.append((nvec / norm, float(key[1]) / norm))
        simplices.append(members)
        last_signs.append((key[0][-1] > 0) - (key[0][-1] < 0))
        if m >= 2:
            sub = build_hull([coords[p] for p in incident])
            for k, flist in sub.faces.items():
                for f in flist:
                    sub_faces[k].add(tuple(sorted(incident[i] for i in f)))

    faces = {k: sorted(v) for k, v in sub_faces.items()}
    faces[m - 1] = sorted(set(facet_faces))
    vertices = sorted({v[0] for v in faces[0]})
    return HullData(
        dim_ambient=m,
        dim_hull=m,
        faces=faces,
        vertices=vertices,
        facet_incident=facet_faces,
        facet_reps=reps,
        facet_normals=normals,
        facet_simplices=simplices,
        facet_last_sign=last_signs,
        interior_ref=tuple(float(x) for x in ref),
    )


def classify_interior(hull: HullData, coords) -> np.ndarray:
    """Boolean mask of points strictly interior to the hull (ambient sense).

    Degenerate hulls have empty interior, so everything is boundary.
    """
    n = len(coords)
    mask = np.zeros(n, dtype=bool)
    if hull.dim_hull < hull.dim_ambient:
        return mask
    if hull.facet_reps is None:
        raise ValueError("classify_interior needs an exact-backend hull")
    vset = set(hull.vertices)
    for p in range(n):
        if p in vset:
            continue
        inside = True
        for rep in hull.facet_reps:
            if pr.side_of([coords[v] for v in rep], coords[p]) >= 0:
                inside = False
                break
        mask[p] = inside
    return mask


# ---------------------------------------------------------------------------
# qhull adapter (general-position fast path)


def qhull_hull(coords: np.ndarray, want_faces: bool = True) -> HullData:
    """Hull of a full-dimensional random point set via qhull.

    Assumes general position (simplicial facets); raises QhullError on
    degenerate input, which callers route to the exact backend.
    """
    coords = np.asarray(coords, dtype=float)
    n, d = coords.shape
    hull = ConvexHull(coords)
    vertices = sorted(int(v) for v in hull.vertices)
    faces = {}
    if want_faces:
        simplex_sets = {tuple(sorted(int(v) for v in s)) for s in hull.simplices}
        faces[d - 1] = sorted(simplex_sets)
        for k in range(d - 2, 0, -1):
            sub = set()
            for f in faces[k + 1]:
                for drop in range(len(f)):
                    sub.add(f[:drop] + f[drop + 1 :])
            faces[k] = sorted(sub)
        faces[0] = [(v,) for v in vertices]
    else:
        faces[0] = [(v,) for v in vertices]
    normals = []
    last_signs = []
    simplices = []
    order = faces.get(d - 1, [])
    if want_faces:
        eq_by_set = {}
        for s, eq in zip(hull.simplices, hull.equations):
            eq_by_set[tuple(sorted(int(v) for v in s))] = eq
        for f in order:
            eq = eq_by_set[f]
            normals.append((eq[:-1].copy(), -float(eq[-1])))
            last_signs.append(int(np.sign(eq[-2])))
            simplices.append([f])
    ref = coords[list(hull.vertices)].mean(axis=0)
    return HullData(
        dim_ambient=d,
        dim_hull=d,
        faces=faces,
        vertices=vertices,
        facet_incident=list(order) if want_faces else None,
        facet_reps=None,
        facet_normals=normals if want_faces else None,
        facet_simplices=simplices if want_faces else None,
        facet_last_sign=last_signs if want_faces else None,
        interior_ref=tuple(ref),
        volume=float(hull.volume),
        area=float(hull.area),
    )


__all__ = [
    "HullData",
    "QhullError",
    "monotone_chain",
    "build_hull",
    "classify_interior",
    "qhull_hull",
]
