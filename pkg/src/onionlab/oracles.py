"""Brute-force oracles for peeling, independent of the hull machinery.

The ball-model oracle decides extremality by exhaustive supporting-
hyperplane search over point subsets; the half-space oracle enumerates
candidate empty downward paraboloids (boundary contact with d-subsets plus
far sweeps along recession directions) and verifies emptiness directly
against the paraboloid inequality in exact rational arithmetic.  Both
assume inputs in general position, which holds almost surely for the
randomized suites they are used on.
"""

from __future__ import annotations

from fractions import Fraction
from itertools import combinations

import numpy as np

from . import predicates as pr
from .geometry import PointCloud


# ---------------------------------------------------------------------------
# ball model


def hyperplane_extreme(coords, idx) -> bool:
    """Extremality of coords[idx] by supporting-hyperplane search.

    Looks for d-1 companions such that the hyperplane through them and the
    query point has every remaining point weakly on one side.
    """
    d = len(coords[0])
    others = [i for i in range(len(coords)) if i != idx]
    if len(others) < d:
        return True  # general position: too few points to trap anything
    x = coords[idx]
    for subset in combinations(others, d - 1):
        plane = [x] + [coords[j] for j in subset]
        lo = hi = False
        supporting = True
        for j in others:
            if j in subset:
                continue
            s = pr.side_of(plane, coords[j])
            if s > 0:
                hi = True
            elif s < 0:
                lo = True
            if lo and hi:
                supporting = False
                break
        if supporting:
            return True
    return False


def brute_force_peel(cloud: PointCloud) -> dict:
    """Layer labels by repeated exhaustive extremality testing."""
    remaining = list(range(len(cloud)))
    labels = {}
    n = 0
    while remaining:
        n += 1
        coords = [tuple(row) for row in cloud.coords[remaining]]
        layer = [
            p for p in range(len(remaining)) if hyperplane_extreme(coords, p)
        ]
        if not layer:  # cannot happen for finite sets; guard anyway
            layer = list(range(len(remaining)))
        for p in layer:
            labels[cloud.ids[remaining[p]]] = n
        layer_set = set(layer)
        remaining = [remaining[p] for p in range(len(remaining)) if p not in layer_set]
    return labels


def brute_force_layer_index(x, cloud: PointCloud) -> int:
    new_id = (max(cloud.ids) + 1) if cloud.ids else 0
    extended = cloud.with_point(np.asarray(x, float), new_id)
    return brute_force_peel(extended)[new_id]


# ---------------------------------------------------------------------------
# half-space model


def _lifted_fractions(coords):
    out = []
    for row in coords:
        v = [Fraction(c) for c in row[:-1]]
        h = Fraction(row[-1])
        z = h + sum(c * c for c in v) / 2
        out.append((v, z))
    return out


def _paraboloid_empty(points, g, w_idx) -> bool:
    """No point strictly inside the downward paraboloid with apex base g
    whose boundary passes through point w_idx (exact)."""
    vw, zw = points[w_idx]
    for j, (v, z) in enumerate(points):
        if j == w_idx:
            continue
        # (v,h) in the open paraboloid iff lifted z < z_w + g.(v - v_w)
        if z < zw + sum(gi * (vi - wi) for gi, vi, wi in zip(g, v, vw)):
            return False
    return True


def paraboloid_extreme(coords, idx) -> bool:
    """Is there an empty downward paraboloid through point idx?

    Candidates: apexes of paraboloids additionally touching d-1 other
    points (exact linear solve), far apexes along recession directions of
    the contact system (vertical sweeps), and the trivial apex above the
    point.  Verification is exact.
    """
    points = _lifted_fractions(coords)
    d1 = len(points[0][0])
    vw, zw = points[idx]
    others = [j for j in range(len(points)) if j != idx]
    if not others:
        return True
    if _paraboloid_empty(points, [Fraction(0)] * d1, idx):
        return True
    # contact candidates through d-1 extra points
    for subset in combinations(others, d1):
        rows = [[points[j][0][c] - vw[c] for c in range(d1)] for j in subset]
        rhs = [points[j][1] - zw for j in subset]
        g = _solve_exact(rows, rhs)
        if g is not None and _paraboloid_empty(points, g, idx):
            return True
    # vertical sweeps: far apexes along directions u with u.(v_q - v_w) <= 0
    deltas = [[points[j][0][c] - vw[c] for c in range(d1)] for j in others]
    dzs = [points[j][1] - zw for j in others]
    for u in _recession_candidates(deltas, d1):
        m = Fraction(1)
        feasible_dir = True
        for delta, dz in zip(deltas, dzs):
            du = sum(ui * di for ui, di in zip(u, delta))
            if du > 0:
                feasible_dir = False
                break
            if du < 0:
                m = max(m, dz / du + 1)
        if not feasible_dir:
            continue
        g = [m * ui for ui in u]
        if _paraboloid_empty(points, g, idx):
            return True
    return False


def _solve_exact(rows, rhs):
    m = len(rows)
    a = [list(r) + [b] for r, b in zip(rows, rhs)]
    for col in range(m):
        piv = next((r for r in range(col, m) if a[r][col] != 0), None)
        if piv is None:
            return None
        a[col], a[piv] = a[piv], a[col]
        for r in range(m):
            if r != col and a[r][col] != 0:
                f = a[r][col] / a[col][col]
                for c in range(col, m + 1):
                    a[r][c] -= f * a[col][c]
    return [a[r][m] / a[r][r] for r in range(m)]


def _recession_candidates(deltas, d1):
    cands = []
    if d1 == 1:
        cands = [[Fraction(1)], [Fraction(-1)]]
    else:
        for delta in deltas:
            for s in (1, -1):
                cands.append([s * delta[1], -s * delta[0]])
        for axis in range(d1):
            for s in (1, -1):
                u = [Fraction(0)] * d1
                u[axis] = Fraction(s)
                cands.append(u)
        # interior directions of the recession cone: sums of admissible rays
        admissible = [
            u
            for u in cands
            if all(sum(ui * di for ui, di in zip(u, delta)) <= 0 for delta in deltas)
        ]
        for a, b in combinations(admissible, 2):
            s = [x + y for x, y in zip(a, b)]
            if any(x != 0 for x in s):
                cands.append(s)
    return [u for u in cands if any(x != 0 for x in u)]


def brute_force_parabolic_peel(cloud: PointCloud) -> dict:
    """Parabolic layer labels by repeated paraboloid enumeration."""
    remaining = list(range(len(cloud)))
    labels = {}
    n = 0
    while remaining:
        n += 1
        coords = [tuple(row) for row in cloud.coords[remaining]]
        layer = [p for p in range(len(remaining)) if paraboloid_extreme(coords, p)]
        if not layer:
            layer = list(range(len(remaining)))
        for p in layer:
            labels[cloud.ids[remaining[p]]] = n
        layer_set = set(layer)
        remaining = [remaining[p] for p in range(len(remaining)) if p not in layer_set]
    return labels


__all__ = [
    "hyperplane_extreme",
    "brute_force_peel",
    "brute_force_layer_index",
    "paraboloid_extreme",
    "brute_force_parabolic_peel",
]
