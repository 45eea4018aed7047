"""Geometric predicates with an exact rational fallback.

All orientation-style tests first evaluate a floating-point determinant
together with a conservative forward-error bound.  Whenever the computed
value is not safely away from zero, the sign is recomputed with exact
rational arithmetic (floats convert to ``Fraction`` without loss).  Hull
construction and peeling therefore never depend on tolerance snapping.
"""

from __future__ import annotations

from fractions import Fraction
from math import factorial

EPS = 2.220446049250313e-16

# Forward-error coefficient for an m x m determinant evaluated by cofactor
# expansion on rounded difference vectors; deliberately loose (a too-large
# bound only triggers the exact fallback more often).
def _err_coeff(m: int) -> float:
    return 16.0 * m * factorial(m) * EPS


def _det_and_perm(rows):
    """Determinant and permanent-of-absolute-values by cofactor expansion."""
    m = len(rows)
    if m == 1:
        return rows[0][0], abs(rows[0][0])
    if m == 2:
        a, b = rows[0]
        c, d = rows[1]
        return a * d - b * c, abs(a * d) + abs(b * c)
    det = 0.0
    perm = 0.0
    first = rows[0]
    rest = rows[1:]
    for j in range(m):
        minor = [[r[i] for i in range(m) if i != j] for r in rest]
        sub_det, sub_perm = _det_and_perm(minor)
        sign = 1.0 if j % 2 == 0 else -1.0
        det += sign * first[j] * sub_det
        perm += abs(first[j]) * sub_perm
    return det, perm


def _det_exact(rows):
    """Exact determinant of a square Fraction matrix (Gaussian elimination)."""
    m = len(rows)
    a = [list(r) for r in rows]
    det = Fraction(1)
    for col in range(m):
        pivot = None
        for r in range(col, m):
            if a[r][col] != 0:
                pivot = r
                break
        if pivot is None:
            return Fraction(0)
        if pivot != col:
            a[col], a[pivot] = a[pivot], a[col]
            det = -det
        det *= a[col][col]
        inv = a[col][col]
        for r in range(col + 1, m):
            if a[r][col] != 0:
                f = a[r][col] / inv
                for c in range(col, m):
                    a[r][c] -= f * a[col][c]
    return det


def _is_exact_row(row) -> bool:
    return any(isinstance(x, Fraction) for x in row)


def det_sign(rows) -> int:
    """Sign of det(rows) for an m x m matrix of floats and/or Fractions."""
    rows = [list(r) for r in rows]
    if any(_is_exact_row(r) for r in rows):
        d = _det_exact([[Fraction(x) for x in r] for r in rows])
        return (d > 0) - (d < 0)
    det, perm = _det_and_perm(rows)
    bound = _err_coeff(len(rows)) * perm
    if det > bound:
        return 1
    if det < -bound:
        return -1
    d = _det_exact([[Fraction(x) for x in r] for r in rows])
    return (d > 0) - (d < 0)


def orient(points) -> int:
    """Orientation of an (m+1)-tuple of points in R^m.

    Sign of det[p1-p0, ..., pm-p0] with rows as difference vectors.  For
    floats the differences are re-derived exactly in the fallback, so the
    result is the true sign of the underlying real determinant.
    """
    p0 = points[0]
    exact = any(_is_exact_row(p) for p in points)
    if exact:
        rows = [
            [Fraction(p[i]) - Fraction(p0[i]) for i in range(len(p0))]
            for p in points[1:]
        ]
        d = _det_exact(rows)
        return (d > 0) - (d < 0)
    rows = [[p[i] - p0[i] for i in range(len(p0))] for p in points[1:]]
    det, perm = _det_and_perm(rows)
    # one extra rounding per difference entry; fold into the coefficient
    bound = 2.0 * _err_coeff(len(rows)) * (perm + EPS)
    if det > bound:
        return 1
    if det < -bound:
        return -1
    rows = [
        [Fraction(p[i]) - Fraction(p0[i]) for i in range(len(p0))]
        for p in points[1:]
    ]
    d = _det_exact(rows)
    return (d > 0) - (d < 0)


def side_of(facet_points, x) -> int:
    """Side of x relative to the oriented hyperplane through facet_points."""
    return orient(list(facet_points) + [x])


def _frac_rows(points):
    return [[Fraction(c) for c in p] for p in points]


def affine_rank_basis(points):
    """Greedy affinely independent subset, exactly.

    Returns (basis_indices, rank) where rank is the affine dimension of the
    point set and basis_indices picks rank+1 affinely independent points
    (first point always included).  Deterministic in input order.
    """
    n = len(points)
    if n == 0:
        return [], -1
    pts = _frac_rows(points)
    basis = [0]
    # rows of the current independent difference set, kept in echelon form
    echelon = []
    for i in range(1, n):
        if len(basis) == len(pts[0]) + 1:
            break
        row = [pts[i][c] - pts[basis[0]][c] for c in range(len(pts[0]))]
        red = _reduce_against(echelon, row)
        if any(v != 0 for v in red):
            echelon.append(red)
            basis.append(i)
    return basis, len(basis) - 1


def _reduce_against(echelon, row):
    row = list(row)
    for erow in echelon:
        lead = next((j for j, v in enumerate(erow) if v != 0), None)
        if lead is not None and row[lead] != 0:
            f = row[lead] / erow[lead]
            row = [r - f * e for r, e in zip(row, erow)]
    return row


def subspace_coordinates(points, basis_indices):
    """Exact coordinates of each point in the affine frame of the basis.

    Every point must lie in the affine hull of the basis (callers establish
    this via affine_rank_basis).  Returns a list of Fraction tuples of
    length rank.
    """
    pts = _frac_rows(points)
    b0 = pts[basis_indices[0]]
    frame = [
        [pts[bi][c] - b0[c] for c in range(len(b0))] for bi in basis_indices[1:]
    ]
    m = len(frame)
    out = []
    for p in pts:
        rhs = [p[c] - b0[c] for c in range(len(b0))]
        out.append(tuple(_solve_consistent(frame, rhs, m)))
    return out


def linear_feasible(rows, bounds) -> bool:
    """Exact feasibility of { g : rows[i] . g <= bounds[i] } by elimination.

    Fourier-Motzkin with Fractions; intended for the small systems arising
    from supporting-hyperplane searches (tens of constraints, 1-2 vars).
    """
    cons = [
        ([Fraction(a) for a in r], Fraction(b)) for r, b in zip(rows, bounds)
    ]
    nvars = len(cons[0][0]) if cons else 0
    for var in range(nvars):
        pos, neg, zero = [], [], []
        for coeffs, b in cons:
            c = coeffs[var]
            if c > 0:
                pos.append(([x / c for x in coeffs], b / c))
            elif c < 0:
                neg.append(([x / -c for x in coeffs], b / -c))
            else:
                zero.append((coeffs, b))
        new = zero
        for pc, pb in pos:
            for nc, nb in neg:
                coeffs = [p + q for p, q in zip(pc, nc)]
                coeffs[var] = Fraction(0)
                new.append((coeffs, pb + nb))
        seen = {}
        for coeffs, b in new:
            key = tuple(coeffs)
            if key not in seen or b < seen[key]:
                seen[key] = b
        cons = [(list(k), v) for k, v in seen.items()]
    return all(b >= 0 for _, b in cons)


def _solve_consistent(frame, rhs, m):
    """Solve sum_i t_i * frame[i] = rhs exactly (system known consistent)."""
    d = len(rhs)
    # columns are the frame vectors; eliminate on the d x m matrix
    a = [[frame[i][r] for i in range(m)] + [rhs[r]] for r in range(d)]
    piv_rows = []
    col = 0
    r0 = 0
    for col in range(m):
        pivot = None
        for r in range(r0, d):
            if a[r][col] != 0:
                pivot = r
                break
        if pivot is None:
            continue
        a[r0], a[pivot] = a[pivot], a[r0]
        piv_rows.append((r0, col))
        inv = a[r0][col]
        for r in range(d):
            if r != r0 and a[r][col] != 0:
                f = a[r][col] / inv
                for c in range(col, m + 1):
                    a[r][c] -= f * a[r0][c]
        r0 += 1
    t = [Fraction(0)] * m
    for r, c in piv_rows:
        t[c] = a[r][m] / a[r][c]
    return t
