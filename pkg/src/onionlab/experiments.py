"""Monte Carlo estimation of layer asymptotics and their diagnostics.

Replications are independent tasks keyed by (master seed, replication
index); aggregation is a deterministic fold over sorted indices, so results
do not depend on scheduling and identical plans reproduce bit-identically.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field, asdict

import numpy as np
from scipy import stats as sstats

from .geometry import (
    PointCloud,
    ball_intrinsic_volume,
    hull_volume_and_surface,
    k_face_counts,
    sphere_surface,
)
from .parabolic import Window, limit_score, parabolic_peel, point_score
from .peeling import peel
from .sampler import SeedSpec, sample_ball_poisson, sample_halfspace_poisson


class WindowTooSmall(Exception):
    """The window-doubling diagnostic moved an integrand node materially."""


def workers_from_env(workers=None) -> int:
    if workers is not None:
        return max(1, int(workers))
    env = os.environ.get("ONIONLAB_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _parallel_map(fn, tasks, workers):
    if workers <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    import multiprocessing as mp

    chunk = max(1, len(tasks) // (workers * 8))
    with mp.Pool(workers) as pool:
        return pool.map(fn, tasks, chunksize=chunk)


# ---------------------------------------------------------------------------
# plans and results


@dataclass(frozen=True)
class ExperimentPlan:
    model: str = "ball"
    d: int = 2
    n_max: int = 3
    k_set: tuple = (0,)
    volume_k_set: tuple = ()  # defect-volume ks; exact entries (d-1, d) are cheap
    lambda_grid: tuple = (500.0, 1000.0, 2000.0, 4000.0, 8000.0)
    replications: int = 200
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(
            self, "lambda_grid", tuple(float(x) for x in self.lambda_grid)
        )
        object.__setattr__(self, "k_set", tuple(int(k) for k in self.k_set))
        object.__setattr__(
            self, "volume_k_set", tuple(int(k) for k in self.volume_k_set)
        )
        if list(self.lambda_grid) != sorted(set(self.lambda_grid)):
            raise ValueError("lambda_grid must be strictly increasing")
        if self.replications < 2:
            raise ValueError("need at least 2 replications for variances")

    @classmethod
    def from_dict(cls, cfg: dict) -> "ExperimentPlan":
        known = {
            "model", "d", "n_max", "k_set", "volume_k_set",
            "lambda_grid", "replications", "seed",
        }
        unknown = set(cfg) - known
        if unknown:
            raise ValueError(f"unknown plan keys: {sorted(unknown)}")
        cfg = dict(cfg)
        for key in ("k_set", "volume_k_set", "lambda_grid"):
            if key in cfg:
                cfg[key] = tuple(cfg[key])
        return cls(**cfg)

    @classmethod
    def from_file(cls, path) -> "ExperimentPlan":
        text = open(path, "rb").read()
        if str(path).endswith(".json"):
            cfg = json.loads(text)
        else:
            try:
                import tomllib as toml
            except ModuleNotFoundError:
                import tomli as toml
            cfg = toml.loads(text.decode())
        missing = [k for k in ("d", "lambda_grid", "replications") if k not in cfg]
        if missing:
            raise ValueError(f"config is missing required keys: {missing}")
        return cls.from_dict(cfg)


@dataclass
class CellStats:
    mean: float
    var: float
    stderr: float  # standard error of the mean
    reps: int
    absent: int = 0  # replications whose peel had fewer layers
    excluded: int = 0  # degenerate layers excluded from volume averages


@dataclass
class SlopeFit:
    slope: float
    half_width: float  # jackknife 95% half-width
    intercept: float


@dataclass
class ExperimentResult:
    plan: ExperimentPlan
    face_cells: dict  # (lam, n, k) -> CellStats
    volume_cells: dict  # (lam, n, k) -> CellStats
    face_raw: dict  # (lam, n, k) -> ndarray of per-replication counts
    mean_slopes: dict  # (n, k) -> SlopeFit for log E[N] vs log lambda
    var_slopes: dict  # (n, k) -> SlopeFit for log Var[N]
    volume_slopes: dict  # (n, k) -> SlopeFit for log E[V]
    insufficient_layers: dict  # lam -> count of replications with < n_max layers


def _jackknife_slope(xs, per_rep):
    """Least-squares slope of log(mean) vs log(x) with delete-one half-width.

    per_rep: array (reps, len(xs)) of per-replication statistics whose
    column means feed the regression.  NaN entries (excluded layers) drop
    out of the means.
    """
    logx = np.log(xs)
    reps = per_rep.shape[0]
    finite = np.isfinite(per_rep)
    filled = np.where(finite, per_rep, 0.0)
    sums = filled.sum(axis=0)
    counts = finite.sum(axis=0)

    def fit(means):
        ok = np.isfinite(means) & (means > 0)
        if ok.sum() < 2:
            return np.nan, np.nan
        return tuple(np.polyfit(logx[ok], np.log(means[ok]), 1))

    with np.errstate(invalid="ignore", divide="ignore"):
        slope, intercept = fit(sums / counts)
    deletes = np.empty(reps)
    for r in range(reps):
        c = counts - finite[r]
        with np.errstate(invalid="ignore", divide="ignore"):
            deletes[r] = fit((sums - filled[r]) / c)[0]
    good = np.isfinite(deletes)
    hw = (
        1.96 * math.sqrt((good.sum() - 1) / good.sum() * np.sum(
            (deletes[good] - deletes[good].mean()) ** 2))
        if good.sum() > 1
        else float("nan")
    )
    return SlopeFit(slope=float(slope), half_width=float(hw), intercept=float(intercept))


def _jackknife_var_slope(xs, per_rep):
    """Same as above for log sample-variance vs log(x)."""
    logx = np.log(xs)
    reps = per_rep.shape[0]

    def variances(mask_out=None):
        if mask_out is None:
            data = per_rep
        else:
            keep = np.ones(reps, bool)
            keep[mask_out] = False
            data = per_rep[keep]
        return data.var(axis=0, ddof=1)

    def fit(vs):
        ok = vs > 0
        if ok.sum() < 2:
            return np.nan, np.nan
        return tuple(np.polyfit(logx[ok], np.log(vs[ok]), 1))

    slope, intercept = fit(variances())
    deletes = np.array([fit(variances(r))[0] for r in range(reps)])
    good = np.isfinite(deletes)
    hw = (
        1.96 * math.sqrt((good.sum() - 1) / good.sum() * np.sum(
            (deletes[good] - deletes[good].mean()) ** 2))
        if good.sum() > 1
        else float("nan")
    )
    return SlopeFit(slope=float(slope), half_width=float(hw), intercept=float(intercept))


def fit_power_slope(xs, ys) -> SlopeFit:
    """Slope of log y against log x (self-test utility)."""
    coef = np.polyfit(np.log(np.asarray(xs, float)), np.log(np.asarray(ys, float)), 1)
    return SlopeFit(slope=float(coef[0]), half_width=0.0, intercept=float(coef[1]))


# ---------------------------------------------------------------------------
# ball-model sweep


def _ball_rep(task):
    (d, lam, seed, rep, n_max, k_set, vol_ks, want_faces) = task
    cloud = sample_ball_poisson(d, lam, SeedSpec(seed, rep))
    diagram = peel(cloud, method="auto", max_layers=n_max, want_faces=want_faces)
    n_layers = len(diagram.layers)
    counts = np.zeros((n_max, len(k_set)))
    vols = np.full((n_max, len(vol_ks)), np.nan)
    for n in range(1, n_max + 1):
        if n > n_layers:
            continue  # absent layer: face counts contribute 0, volumes excluded
        lattice = diagram.layers[n - 1]
        fc = k_face_counts(lattice)
        for j, k in enumerate(k_set):
            counts[n - 1, j] = fc.get(k, 0)
        if vol_ks and lattice.dim_hull == d:
            vd, surf = hull_volume_and_surface(lattice)
            exact = {d: vd, d - 1: 0.5 * surf}
            for j, k in enumerate(vol_ks):
                if k in exact:
                    vols[n - 1, j] = ball_intrinsic_volume(d, k) - exact[k]
    return rep, counts, vols, n_layers


def run_ball_sweep(plan: ExperimentPlan, workers=None) -> ExperimentResult:
    """Sample/peel replications over the lambda grid and fit growth slopes.

    Face counts of absent layers enter as zero (the score vanishes off the
    layer); defect volumes of absent or degenerate layers are excluded and
    counted.  Only exact defect entries (k = d-1, d) are supported here.
    """
    for k in plan.volume_k_set:
        if k not in (plan.d, plan.d - 1):
            raise ValueError(
                "sweep defect volumes cover exact entries k in {d-1, d} only"
            )
    workers = workers_from_env(workers)
    d = plan.d
    want_faces = any(k > 0 for k in plan.k_set)
    face_cells = {}
    volume_cells = {}
    face_raw = {}
    insufficient = {}
    per_rep_by_cell = {}
    vol_per_rep = {}
    for li, lam in enumerate(plan.lambda_grid):
        tasks = [
            (
                d,
                float(lam),
                plan.seed,
                li * plan.replications + r,
                plan.n_max,
                plan.k_set,
                plan.volume_k_set,
                want_faces,
            )
            for r in range(plan.replications)
        ]
        out = sorted(_parallel_map(_ball_rep, tasks, workers), key=lambda t: t[0])
        counts = np.stack([o[1] for o in out])  # (reps, n_max, |k_set|)
        vols = np.stack([o[2] for o in out])
        nlayers = np.array([o[3] for o in out])
        insufficient[lam] = int(np.sum(nlayers < plan.n_max))
        for n in range(1, plan.n_max + 1):
            for j, k in enumerate(plan.k_set):
                col = counts[:, n - 1, j]
                face_raw[(lam, n, k)] = col.copy()
                per_rep_by_cell.setdefault((n, k), {})[lam] = col
                face_cells[(lam, n, k)] = CellStats(
                    mean=float(col.mean()),
                    var=float(col.var(ddof=1)),
                    stderr=float(col.std(ddof=1) / math.sqrt(len(col))),
                    reps=len(col),
                    absent=int(np.sum(nlayers < n)),
                )
            for j, k in enumerate(plan.volume_k_set):
                col = vols[:, n - 1, j]
                ok = np.isfinite(col)
                vol_per_rep.setdefault((n, k), {})[lam] = col
                if ok.sum() >= 2:
                    volume_cells[(lam, n, k)] = CellStats(
                        mean=float(col[ok].mean()),
                        var=float(col[ok].var(ddof=1)),
                        stderr=float(col[ok].std(ddof=1) / math.sqrt(ok.sum())),
                        reps=int(ok.sum()),
                        excluded=int((~ok).sum()),
                    )
    lam_arr = np.asarray(plan.lambda_grid, float)
    mean_slopes = {}
    var_slopes = {}
    for (n, k), cols in per_rep_by_cell.items():
        per_rep = np.column_stack([cols[lam] for lam in plan.lambda_grid])
        mean_slopes[(n, k)] = _jackknife_slope(lam_arr, per_rep)
        var_slopes[(n, k)] = _jackknife_var_slope(lam_arr, per_rep)
    volume_slopes = {}
    for (n, k), cols in vol_per_rep.items():
        per_rep = np.column_stack([cols[lam] for lam in plan.lambda_grid])
        volume_slopes[(n, k)] = _jackknife_slope(lam_arr, per_rep)
    return ExperimentResult(
        plan=plan,
        face_cells=face_cells,
        volume_cells=volume_cells,
        face_raw=face_raw,
        mean_slopes=mean_slopes,
        var_slopes=var_slopes,
        volume_slopes=volume_slopes,
        insufficient_layers=insufficient,
    )


@dataclass
class ConstantEstimate:
    value: float
    ci: float  # 1.96 x standard error at the largest lambda
    diagnostic: float  # |rescaled mean at top lambda - at the previous one|
    lam: float


def estimate_constant_ball(result: ExperimentResult, n: int, k: int) -> ConstantEstimate:
    """Rescaled face-count mean at the largest lambda with a convergence gap."""
    plan = result.plan
    exponent = (plan.d - 1) / (plan.d + 1)
    lam_top, lam_prev = plan.lambda_grid[-1], plan.lambda_grid[-2]
    top = result.face_cells[(lam_top, n, k)]
    prev = result.face_cells[(lam_prev, n, k)]
    value = top.mean / lam_top**exponent
    prev_value = prev.mean / lam_prev**exponent
    return ConstantEstimate(
        value=float(value),
        ci=float(1.96 * top.stderr / lam_top**exponent),
        diagnostic=float(abs(value - prev_value)),
        lam=float(lam_top),
    )


# ---------------------------------------------------------------------------
# parabolic-route constant


def _parabolic_score_rep(task):
    (d, h, seed, rep, window_r, n, k) = task
    window = Window.for_radius(window_r, n)
    cloud = sample_halfspace_poisson(
        d - 1, window.r, window.height, 1.0, SeedSpec(seed, rep)
    )
    if len(cloud) == 0:
        return rep, 0.0, 0.0
    val = float(limit_score(h, cloud, window, n, k, method="auto"))
    return rep, val, val * val


@dataclass
class ParabolicConstant:
    value: float
    ci: float
    h_grid: np.ndarray
    integrand: np.ndarray
    integrand_stderr: np.ndarray
    tail_ratio: float  # integrand at h_max over its peak
    window_shift: float  # worst doubling-diagnostic shift in stderr units


def estimate_constant_parabolic(
    n: int,
    k: int,
    d: int,
    h_grid,
    window_r: float,
    replications: int,
    seed: int = 0,
    workers=None,
    squared: bool = False,
    check_window: bool = True,
) -> ParabolicConstant:
    """Sphere measure times the integral over h of E[score of (0, h)].

    The integrand is estimated node by node from fresh intensity-one
    half-space samples and integrated by the trapezoid rule.  A doubling
    diagnostic re-estimates every fourth node in a twice-as-wide window and
    raises WindowTooSmall beyond two standard errors.
    """
    workers = workers_from_env(workers)
    h_grid = np.asarray(h_grid, float)

    def node_estimates(radius, seed_offset, nodes):
        means = np.zeros(len(nodes))
        ses = np.zeros(len(nodes))
        for j, i in enumerate(nodes):
            tasks = [
                (d, float(h_grid[i]), seed + seed_offset, i * replications + r,
                 radius, n, k)
                for r in range(replications)
            ]
            out = sorted(
                _parallel_map(_parabolic_score_rep, tasks, workers),
                key=lambda t: t[0],
            )
            vals = np.array([o[2] if squared else o[1] for o in out])
            means[j] = vals.mean()
            ses[j] = vals.std(ddof=1) / math.sqrt(len(vals))
        return means, ses

    all_nodes = list(range(len(h_grid)))
    means, ses = node_estimates(window_r, 0, all_nodes)
    worst_shift = 0.0
    if check_window:
        probe = all_nodes[::4] or [0]
        means2, ses2 = node_estimates(2 * window_r, 1, probe)
        for j, i in enumerate(probe):
            denom = math.sqrt(ses[i] ** 2 + ses2[j] ** 2)
            if denom > 0:
                shift = abs(means[i] - means2[j]) / denom
                worst_shift = max(worst_shift, shift)
        if worst_shift > 2.0:
            raise WindowTooSmall(
                f"doubling the window moved a node by {worst_shift:.2f} stderr"
            )
    surface = sphere_surface(d)
    value = surface * float(np.trapezoid(means, h_grid))
    # trapezoid weights: half spacing at the ends
    w = np.zeros(len(h_grid))
    diffs = np.diff(h_grid)
    w[:-1] += diffs / 2
    w[1:] += diffs / 2
    ci = 1.96 * surface * float(np.sqrt(np.sum((w * ses) ** 2)))
    peak = float(means.max()) if means.size else 0.0
    tail = float(means[-1] / peak) if peak > 0 else 0.0
    return ParabolicConstant(
        value=value,
        ci=ci,
        h_grid=h_grid,
        integrand=means,
        integrand_stderr=ses,
        tail_ratio=tail,
        window_shift=worst_shift,
    )


# ---------------------------------------------------------------------------
# two-point correlation and the variance constant


def _two_point_rep(task):
    (d, h0, v1, h1, seed, rep, window_r, n, k) = task
    window = Window.for_radius(window_r, n)
    cloud = sample_halfspace_poisson(
        d - 1, window.r, window.height, 1.0, SeedSpec(seed, rep)
    )
    d1 = d - 1
    w0 = [0.0] * d1 + [float(h0)]
    w1 = list(np.atleast_1d(np.asarray(v1, float))) + [float(h1)]
    id0 = (max(cloud.ids) + 1) if cloud.ids else 0
    id1 = id0 + 1
    only0 = cloud.with_point(w0, id0)
    a = float(point_score(parabolic_peel(only0, method="auto", max_layers=n), id0, n, k))
    if w0 == w1:
        # coincident insertion points: the joint term degenerates to the
        # squared single-insert score (continuous extension of the node)
        return rep, a * a, a, a
    both = only0.with_point(w1, id1)
    diag = parabolic_peel(both, method="auto", max_layers=n)
    prod = float(point_score(diag, id0, n, k)) * float(point_score(diag, id1, n, k))
    only1 = cloud.with_point(w1, id1)
    b = float(point_score(parabolic_peel(only1, method="auto", max_layers=n), id1, n, k))
    return rep, prod, a, b


@dataclass
class TwoPointEstimate:
    h0: float
    v1: tuple
    h1: float
    c: float
    stderr: float


def estimate_two_point(
    n: int,
    k: int,
    d: int,
    nodes,
    window_r: float,
    replications: int,
    seed: int = 0,
    workers=None,
) -> list:
    """Two-point score correlation at each (h0, v1, h1) node.

    Shared-sample variance reduction: the same cloud feeds the joint term
    and both marginal terms of a node; the uncertainty is a delete-one
    jackknife over replications.
    """
    workers = workers_from_env(workers)
    out = []
    for ni, (h0, v1, h1) in enumerate(nodes):
        tasks = [
            (d, float(h0), v1, float(h1), seed, ni * replications + r, window_r, n, k)
            for r in range(replications)
        ]
        res = sorted(_parallel_map(_two_point_rep, tasks, workers), key=lambda t: t[0])
        prod = np.array([x[1] for x in res])
        a = np.array([x[2] for x in res])
        b = np.array([x[3] for x in res])
        reps = len(prod)
        c = float(prod.mean() - a.mean() * b.mean())
        deletes = np.empty(reps)
        for r in range(reps):
            keep = np.ones(reps, bool)
            keep[r] = False
            deletes[r] = prod[keep].mean() - a[keep].mean() * b[keep].mean()
        se = math.sqrt((reps - 1) / reps * float(np.sum((deletes - deletes.mean()) ** 2)))
        out.append(
            TwoPointEstimate(
                h0=float(h0),
                v1=tuple(np.atleast_1d(np.asarray(v1, float))),
                h1=float(h1),
                c=c,
                stderr=se,
            )
        )
    return out


@dataclass
class VarianceConstant:
    i1: float
    i1_ci: float
    i2: float
    i2_stderr: float
    total: float  # sphere measure times (I1 + I2)


def estimate_variance_constant(
    n: int,
    k: int,
    d: int,
    h_grid,
    v1_grid,
    window_r: float,
    replications: int,
    seed: int = 0,
    workers=None,
) -> VarianceConstant:
    """I1 + I2 of the limit variance, by trapezoid quadrature on fixed grids.

    I1 integrates E[score^2] over h; I2 integrates the two-point correlation
    over (v1, h0, h1).  v1_grid lists non-negative offsets (include 0 and
    resolve the near-diagonal spike with sub-unit spacing); the estimator
    mirrors it by reflection symmetry and fills h0 > h1 by the swap
    symmetry, so only one orbit representative per node is sampled.  The
    triple integral is restricted to d = 2 (the Monte Carlo cost of the v1
    integral grows sharply with d-1).
    """
    if d != 2:
        raise ValueError("the I2 integral is restricted to d = 2 (cost)")
    h_grid = np.asarray(h_grid, float)
    v1_grid = np.asarray(v1_grid, float)
    if np.any(v1_grid < 0):
        raise ValueError("v1_grid lists non-negative offsets")
    sq = estimate_constant_parabolic(
        n, k, d, h_grid, window_r, replications, seed=seed, workers=workers,
        squared=True, check_window=False,
    )
    i1 = float(np.trapezoid(sq.integrand, h_grid))
    i1_ci = sq.ci / sphere_surface(d)
    reps = [
        (h_grid[i], (float(v),), h_grid[j])
        for i in range(len(h_grid))
        for j in range(i, len(h_grid))
        for v in v1_grid
    ]
    ests = estimate_two_point(
        n, k, d, reps, window_r, replications, seed=seed + 10_000, workers=workers
    )
    by_node = {}
    for e in ests:
        by_node[(e.h0, e.v1[0], e.h1)] = (e.c, e.stderr)
    nh, nv = len(h_grid), len(v1_grid)
    grid_c = np.zeros((nh, nh, nv))
    grid_se = np.zeros((nh, nh, nv))
    for i in range(nh):
        for j in range(nh):
            a, b = (i, j) if i <= j else (j, i)
            for m in range(nv):
                c, se = by_node[(h_grid[a], v1_grid[m], h_grid[b])]
                grid_c[i, j, m] = c
                grid_se[i, j, m] = se
    full_v = np.concatenate([-v1_grid[:0:-1], v1_grid])
    full_c = np.concatenate([grid_c[:, :, :0:-1], grid_c], axis=2)
    inner = np.trapezoid(full_c, full_v, axis=2)
    inner = np.trapezoid(inner, h_grid, axis=1)
    i2 = float(np.trapezoid(inner, h_grid))
    i2_se = float(np.sqrt(np.mean(grid_se**2)))  # scale indicator, not a CI
    total = sphere_surface(d) * (i1 + i2)
    return VarianceConstant(i1=i1, i1_ci=i1_ci, i2=i2, i2_stderr=i2_se, total=total)


# ---------------------------------------------------------------------------
# CLT diagnostic


def ks_to_standard_normal(values) -> float:
    """KS distance between standardized values and N(0, 1)."""
    values = np.asarray(values, float)
    sd = values.std(ddof=1)
    if sd == 0:
        return 1.0
    z = (values - values.mean()) / sd
    return float(sstats.kstest(z, "norm").statistic)


def clt_diagnostic(result: ExperimentResult, lam, n: int, k: int) -> float:
    """KS distance of the standardized face counts at one grid cell."""
    raw = result.face_raw[(float(lam), n, k)]
    if len(raw) < 300:
        raise ValueError("CLT diagnostic needs at least 300 replications")
    return ks_to_standard_normal(raw)


# ---------------------------------------------------------------------------
# layer-count scaling and the layer profile


def _total_layers_rep(task):
    d, lam, seed, rep = task
    cloud = sample_ball_poisson(d, lam, SeedSpec(seed, rep))
    diagram = peel(cloud, method="auto", want_faces=False)
    per_layer = [len(l.vertex_ids) for l in diagram.layers]
    return rep, diagram.n_layers, per_layer


@dataclass
class LayerScaling:
    slope: SlopeFit
    beta_hat: float
    beta_prev: float  # rescaled mean at the second largest lambda
    means: dict  # lam -> mean total layers


def layer_count_scaling(
    d: int, lambda_grid, replications: int, seed: int = 0, workers=None
) -> LayerScaling:
    """Growth of the total number of peeling layers against lambda."""
    if len(lambda_grid) < 4:
        raise ValueError("need at least 4 lambda values")
    workers = workers_from_env(workers)
    per_rep = np.zeros((replications, len(lambda_grid)))
    means = {}
    for li, lam in enumerate(lambda_grid):
        tasks = [(d, float(lam), seed, li * replications + r) for r in range(replications)]
        out = sorted(_parallel_map(_total_layers_rep, tasks, workers), key=lambda t: t[0])
        totals = np.array([o[1] for o in out], float)
        per_rep[:, li] = totals
        means[lam] = float(totals.mean())
    fitted = _jackknife_slope(np.asarray(lambda_grid, float), per_rep)
    expo = 2.0 / (d + 1)
    beta = means[lambda_grid[-1]] / lambda_grid[-1] ** expo
    beta_prev = means[lambda_grid[-2]] / lambda_grid[-2] ** expo
    return LayerScaling(slope=fitted, beta_hat=float(beta), beta_prev=float(beta_prev), means=means)


@dataclass
class LayerProfile:
    t_grid: np.ndarray
    values: np.ndarray  # rescaled mean vertex count at layer floor(t lam^{2/(d+1)})
    stderr: np.ndarray
    lam: float
    d: int
    beta_single: float = float("nan")  # rescaled mean total layers of these runs

    def conjectured(self, beta: float) -> np.ndarray:
        d = self.d
        base = np.clip(1.0 - self.t_grid / beta, 0.0, None)
        return (d + 1) / (2.0 * beta) * base ** ((d - 1) / 2.0)


def layer_profile(
    lam: float, t_grid, replications: int, seed: int, d: int, workers=None
) -> LayerProfile:
    """Exploratory vertex-count profile across layer depths t lam^{2/(d+1)}."""
    workers = workers_from_env(workers)
    t_grid = np.asarray(t_grid, float)
    tasks = [(d, float(lam), seed, r) for r in range(replications)]
    out = sorted(_parallel_map(_total_layers_rep, tasks, workers), key=lambda t: t[0])
    scale = lam ** (2.0 / (d + 1))
    rescale = lam ** ((d - 1.0) / (d + 1))
    values = np.zeros((replications, len(t_grid)))
    for i, (_, _, per_layer) in enumerate(out):
        for j, t in enumerate(t_grid):
            nn = max(1, int(math.floor(t * scale)))
            values[i, j] = per_layer[nn - 1] if nn <= len(per_layer) else 0.0
    means = values.mean(axis=0) / rescale
    ses = values.std(axis=0, ddof=1) / math.sqrt(replications) / rescale
    beta_single = float(np.mean([o[1] for o in out])) / scale
    return LayerProfile(
        t_grid=t_grid,
        values=means,
        stderr=ses,
        lam=float(lam),
        d=d,
        beta_single=beta_single,
    )


@dataclass
class MonotonicityRow:
    n: int
    value: float
    ci: float
    flag: str  # "decreasing" | "inconclusive" (vs the next row)


def monotonicity_table(result: ExperimentResult, k: int = 0) -> list:
    """Ordered constant estimates across layers with pairwise verdicts."""
    rows = []
    ns = sorted({n for (_, n, kk) in result.face_cells if kk == k})
    ests = {n: estimate_constant_ball(result, n, k) for n in ns}
    for n in ns:
        flag = ""
        if n + 1 in ests:
            a, b = ests[n], ests[n + 1]
            flag = "decreasing" if a.value - b.value > a.ci + b.ci else "inconclusive"
        rows.append(MonotonicityRow(n=n, value=ests[n].value, ci=ests[n].ci, flag=flag))
    return rows


# ---------------------------------------------------------------------------
# persistence


def write_results_csv(result: ExperimentResult, path, manifest_hash=""):
    plan = result.plan
    with open(path, "w") as f:
        if manifest_hash:
            f.write(f"# manifest={manifest_hash}\n")
        f.write("model,d,n,k,lambda,stat,value,stderr,reps\n")
        for (lam, n, k), cell in sorted(result.face_cells.items()):
            f.write(
                f"{plan.model},{plan.d},{n},{k},{lam},N_mean,{cell.mean!r},{cell.stderr!r},{cell.reps}\n"
            )
            f.write(
                f"{plan.model},{plan.d},{n},{k},{lam},N_var,{cell.var!r},,{cell.reps}\n"
            )
        for (lam, n, k), cell in sorted(result.volume_cells.items()):
            f.write(
                f"{plan.model},{plan.d},{n},{k},{lam},V_mean,{cell.mean!r},{cell.stderr!r},{cell.reps}\n"
            )
            f.write(
                f"{plan.model},{plan.d},{n},{k},{lam},V_var,{cell.var!r},,{cell.reps}\n"
            )


def summary_dict(result: ExperimentResult) -> dict:
    def fmt(fits):
        return {
            f"n={n},k={k}": {"slope": f.slope, "half_width": f.half_width}
            for (n, k), f in fits.items()
        }

    return {
        "plan": asdict(result.plan),
        "mean_slopes": fmt(result.mean_slopes),
        "var_slopes": fmt(result.var_slopes),
        "volume_slopes": fmt(result.volume_slopes),
        "insufficient_layers": {str(k): v for k, v in result.insufficient_layers.items()},
    }


__all__ = [
    "WindowTooSmall",
    "ExperimentPlan",
    "ExperimentResult",
    "CellStats",
    "SlopeFit",
    "ConstantEstimate",
    "ParabolicConstant",
    "TwoPointEstimate",
    "VarianceConstant",
    "LayerScaling",
    "LayerProfile",
    "MonotonicityRow",
    "run_ball_sweep",
    "estimate_constant_ball",
    "estimate_constant_parabolic",
    "estimate_two_point",
    "estimate_variance_constant",
    "ks_to_standard_normal",
    "clt_diagnostic",
    "layer_count_scaling",
    "layer_profile",
    "monotonicity_table",
    "fit_power_slope",
    "workers_from_env",
    "write_results_csv",
    "summary_dict",
]
