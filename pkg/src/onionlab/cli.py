"""Command-line front end: peel | sample | sweep | constants | clt | profile | fixture.

Every run writes a manifest (command line, config hash, code version, seeds,
timestamps, output paths); output files carry the run id so a run can be
reproduced from its manifest alone.  Exit code 0 means all requested outputs
were written and every verification passed.  ONIONLAB_THREADS overrides the
parallelism degree.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from . import experiments as ex
from . import parabolic as pb
from . import svg
from .geometry import PointCloud
from .peeling import layer_stats, peel
from .sampler import (
    SeedSpec,
    sample_ball_binomial,
    sample_ball_poisson,
    sample_halfspace_poisson,
)


def _run_id(command, payload) -> str:
    blob = json.dumps({"command": command, "config": payload}, sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


class _Manifest:
    def __init__(self, out_dir, command, payload, seeds):
        self.out_dir = Path(out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.command = command
        self.payload = payload
        self.seeds = seeds
        self.run_id = _run_id(command, payload)
        self.started = time.time()
        self.outputs = []

    def path(self, name) -> Path:
        p = self.out_dir / name
        self.outputs.append(str(p))
        return p

    def write(self) -> Path:
        doc = {
            "command": self.command,
            "argv": sys.argv,
            "config": self.payload,
            "config_hash": hashlib.sha256(
                json.dumps(self.payload, sort_keys=True).encode()
            ).hexdigest(),
            "run_id": self.run_id,
            "version": __version__,
            "seeds": self.seeds,
            "started": self.started,
            "finished": time.time(),
            "outputs": self.outputs,
        }
        p = self.out_dir / "manifest.json"
        with open(p, "w") as f:
            json.dump(doc, f, indent=2)
        return p


def _load_config(path) -> dict:
    text = open(path, "rb").read()
    if str(path).endswith(".json"):
        return json.loads(text)
    try:
        import tomllib as toml
    except ModuleNotFoundError:
        import tomli as toml
    return toml.loads(text.decode())


# ---------------------------------------------------------------------------
# subcommands


def _cmd_peel(args) -> int:
    payload = {
        "input": args.input,
        "d": args.d,
        "lambda": getattr(args, "lam"),
        "seed": args.seed,
        "method": args.method,
        "max_stat_layer": args.max_stat_layer,
    }
    man = _Manifest(args.out_dir, "peel", payload, [args.seed])
    if args.input:
        cloud = PointCloud.from_csv(args.input)
    else:
        if args.d is None or getattr(args, "lam") is None:
            print("peel: need --input or both --d and --lambda", file=sys.stderr)
            return 2
        cloud = sample_ball_poisson(args.d, getattr(args, "lam"), SeedSpec(args.seed))
    diagram = peel(cloud, method=args.method)
    stats = layer_stats(
        diagram, max_layer=args.max_stat_layer, mc_directions=args.mc_directions
    )
    stats_payload = {
        str(rec.n): {
            "dim_hull": rec.dim_hull,
            "face_counts": {str(k): v for k, v in rec.face_counts.items()},
            "defect_volumes": (
                {str(k): v for k, v in rec.defect_volumes.items()}
                if rec.defect_volumes
                else None
            ),
            "origin_interior": rec.origin_interior,
        }
        for rec in stats.records
    }
    diagram.to_json(man.path("diagram.json"), stats=stats_payload)
    with open(man.path("stats.csv"), "w") as f:
        f.write(f"# manifest={man.run_id}\n")
        f.write("n,dim_hull,k,N,defect_V\n")
        for rec in stats.records:
            ks = set(rec.face_counts) | set(rec.defect_volumes or ())
            for k in sorted(ks):
                nk = rec.face_counts.get(k, "")
                vk = ""
                if rec.defect_volumes and k in rec.defect_volumes:
                    vk = repr(rec.defect_volumes[k])
                f.write(f"{rec.n},{rec.dim_hull},{k},{nk},{vk}\n")
    man.write()
    print(f"peeled {len(cloud)} points into {diagram.n_layers} layers -> {man.out_dir}")
    return 0


def _cmd_sample(args) -> int:
    payload = vars(args).copy()
    payload.pop("func", None)
    man = _Manifest(args.out_dir, "sample", _jsonable(payload), [args.seed])
    spec = SeedSpec(args.seed, args.rep)
    if args.model == "ball-poisson":
        cloud = sample_ball_poisson(args.d, getattr(args, "lam"), spec)
    elif args.model == "ball-binomial":
        cloud = sample_ball_binomial(args.d, args.n_points, spec)
    elif args.model == "halfspace":
        cloud = sample_halfspace_poisson(
            args.d - 1, args.radius, args.height, args.intensity, spec
        )
    else:
        print(f"unknown model {args.model}", file=sys.stderr)
        return 2
    cloud.to_csv(man.path("sample.csv"))
    man.write()
    print(f"wrote {len(cloud)} points -> {man.out_dir}/sample.csv")
    return 0


def _cmd_sweep(args) -> int:
    plan = ex.ExperimentPlan.from_file(args.config)
    if args.dry_run:
        print(json.dumps(_jsonable(vars(plan) | {}), indent=2, default=list))
        return 0
    man = _Manifest(args.out_dir, "sweep", _jsonable(vars(plan)), [plan.seed])
    result = ex.run_ball_sweep(plan, workers=args.workers)
    ex.write_results_csv(result, man.path("results.csv"), manifest_hash=man.run_id)
    summary = ex.summary_dict(result)
    summary["manifest"] = man.run_id
    with open(man.path("summary.json"), "w") as f:
        json.dump(summary, f, indent=2)
    if not args.no_plots:
        series = []
        for n in range(1, plan.n_max + 1):
            xs = list(plan.lambda_grid)
            ys = [result.face_cells[(lam, n, plan.k_set[0])].mean for lam in xs]
            series.append((f"layer {n}", xs, ys))
        svg.line_plot(
            man.path("mean_faces.svg"),
            series,
            title=f"mean k={plan.k_set[0]} face count, d={plan.d}",
            xlabel="lambda",
            ylabel="mean count",
            logx=True,
            logy=True,
        )
    man.write()
    for (n, k), fit in sorted(result.mean_slopes.items()):
        print(f"slope log E[N_{{{n},{k}}}] = {fit.slope:.4f} +- {fit.half_width:.4f}")
    return 0


def _cmd_constants(args) -> int:
    cfg = _load_config(args.config)
    man = _Manifest(args.out_dir, "constants", _jsonable(cfg), [cfg.get("seed", 0)])
    plan = ex.ExperimentPlan.from_dict(cfg["sweep"])
    result = ex.run_ball_sweep(plan, workers=args.workers)
    par = cfg["parabolic"]
    h_grid = np.linspace(0.0, float(par["h_max"]), int(par["h_nodes"]))
    rows = []
    ok = True
    for n in cfg.get("n_list", [1]):
        k = int(cfg.get("k", 0))
        ball = ex.estimate_constant_ball(result, n, k)
        parc = ex.estimate_constant_parabolic(
            n,
            k,
            plan.d,
            h_grid,
            float(par["window_r"]),
            int(par["replications"]),
            seed=int(par.get("seed", plan.seed + 1)),
            workers=args.workers,
        )
        gap = abs(ball.value - parc.value) / max(abs(ball.value), abs(parc.value))
        tol = float(cfg.get("tolerance", 0.10))
        agree = gap <= tol or (
            abs(ball.value - parc.value) <= ball.ci + ball.diagnostic + parc.ci
        )
        ok = ok and agree
        rows.append(
            {
                "n": n,
                "k": k,
                "ball": ball.value,
                "ball_ci": ball.ci,
                "ball_diagnostic": ball.diagnostic,
                "parabolic": parc.value,
                "parabolic_ci": parc.ci,
                "relative_gap": gap,
                "agree": agree,
            }
        )
        print(
            f"n={n} k={k}: ball {ball.value:.4f}+-{ball.ci:.4f} | "
            f"parabolic {parc.value:.4f}+-{parc.ci:.4f} | gap {100 * gap:.2f}% "
            f"{'OK' if agree else 'DISAGREE'}"
        )
    with open(man.path("constants.json"), "w") as f:
        json.dump({"manifest": man.run_id, "rows": rows}, f, indent=2)
    man.write()
    return 0 if ok else 1


def _cmd_clt(args) -> int:
    payload = {
        "d": args.d, "lambda": getattr(args, "lam"), "n_max": args.n_max,
        "k": args.k, "replications": args.replications, "seed": args.seed,
    }
    man = _Manifest(args.out_dir, "clt", payload, [args.seed])
    plan = ex.ExperimentPlan(
        d=args.d,
        n_max=args.n_max,
        k_set=(args.k,),
        lambda_grid=(getattr(args, "lam") / 2, getattr(args, "lam")),
        replications=args.replications,
        seed=args.seed,
    )
    result = ex.run_ball_sweep(plan, workers=args.workers)
    out = {}
    for n in range(1, args.n_max + 1):
        out[f"n={n}"] = ex.clt_diagnostic(result, getattr(args, "lam"), n, args.k)
        print(f"KS(n={n}, k={args.k}, lambda={getattr(args, 'lam')}) = {out[f'n={n}']:.4f}")
    with open(man.path("clt.json"), "w") as f:
        json.dump({"manifest": man.run_id, "ks": out}, f, indent=2)
    man.write()
    return 0


def _cmd_profile(args) -> int:
    payload = {
        "d": args.d, "lambda": getattr(args, "lam"), "replications": args.replications,
        "seed": args.seed, "t_max": args.t_max, "t_nodes": args.t_nodes,
    }
    man = _Manifest(args.out_dir, "profile", payload, [args.seed])
    t_grid = np.linspace(args.t_max / args.t_nodes, args.t_max, args.t_nodes)
    prof = ex.layer_profile(
        getattr(args, "lam"), t_grid, args.replications, args.seed, args.d,
        workers=args.workers,
    )
    beta = args.beta if args.beta is not None else prof.beta_single
    with open(man.path("profile.csv"), "w") as f:
        f.write(f"# manifest={man.run_id}\n")
        f.write("t,profile,stderr,conjectured\n")
        conj = prof.conjectured(beta)
        for t, v, s, c in zip(prof.t_grid, prof.values, prof.stderr, conj):
            f.write(f"{t!r},{v!r},{s!r},{c!r}\n")
    svg.line_plot(
        man.path("profile.svg"),
        [
            ("measured", list(prof.t_grid), list(prof.values)),
            ("conjectured", list(prof.t_grid), list(prof.conjectured(beta))),
        ],
        title=f"layer profile, d={args.d}, lambda={getattr(args, 'lam')}",
        xlabel="t",
        ylabel="rescaled layer size",
    )
    man.write()
    print(f"beta estimate {beta:.4f}; wrote profile -> {man.out_dir}")
    return 0


def _cmd_fixture(args) -> int:
    payload = {"n": args.n, "h0": args.h0, "d": args.d}
    man = _Manifest(args.out_dir, "fixture", payload, [])
    cloud = pb.tree_fixture(args.n, args.h0, args.d)
    cloud.to_csv(man.path("fixture.csv"))
    diagram = pb.parabolic_peel(cloud, method="exact")
    ok = True
    idx = 0
    width = 2 * (args.d - 1)
    for depth in range(args.n):
        for _ in range(width**depth):
            pid = cloud.ids[idx]
            idx += 1
            if diagram.layer_of[pid] != args.n - depth:
                ok = False
    verdict = "PASS" if ok else "FAIL"
    with open(man.path("verification.txt"), "w") as f:
        f.write(
            f"manifest={man.run_id}\n"
            f"tree fixture n={args.n} h0={args.h0} d={args.d}: {len(cloud)} points\n"
            f"layer assignment by generation: {verdict}\n"
        )
    man.write()
    print(f"fixture verification: {verdict} ({len(cloud)} points)")
    return 0 if ok else 1


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (str, int, float, bool)) or obj is None:
        return obj
    return str(obj)


# ---------------------------------------------------------------------------
# parser


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="onionlab",
        description="Convex hull peeling of random point sets and its parabolic limit",
    )
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, seed=True):
        sp.add_argument("--out-dir", default="onionlab-out", help="output directory")
        sp.add_argument("--workers", type=int, default=None,
                        help="parallel replications (default: cores; env ONIONLAB_THREADS)")
        if seed:
            sp.add_argument("--seed", type=int, default=0)

    sp = sub.add_parser("peel", help="peel a CSV cloud or a fresh ball sample")
    sp.add_argument("--input", help="PointCloud CSV (header id,x1,...,xd)")
    sp.add_argument("--d", type=int, default=None)
    sp.add_argument("--lambda", dest="lam", type=float, default=None)
    sp.add_argument("--method", choices=("auto", "exact", "qhull"), default="auto")
    sp.add_argument("--max-stat-layer", type=int, default=5)
    sp.add_argument("--mc-directions", type=int, default=4096)
    common(sp)
    sp.set_defaults(func=_cmd_peel)

    sp = sub.add_parser("sample", help="draw a point-process sample to CSV")
    sp.add_argument("--model", choices=("ball-poisson", "ball-binomial", "halfspace"),
                    default="ball-poisson")
    sp.add_argument("--d", type=int, default=2)
    sp.add_argument("--lambda", dest="lam", type=float, default=100.0)
    sp.add_argument("--n-points", type=int, default=100)
    sp.add_argument("--intensity", type=float, default=1.0)
    sp.add_argument("--radius", type=float, default=10.0)
    sp.add_argument("--height", type=float, default=20.0)
    sp.add_argument("--rep", type=int, default=0)
    common(sp)
    sp.set_defaults(func=_cmd_sample)

    sp = sub.add_parser("sweep", help="run a lambda sweep from a TOML/JSON config")
    sp.add_argument("--config", required=True)
    sp.add_argument("--dry-run", action="store_true", help="print the plan and exit")
    sp.add_argument("--no-plots", action="store_true")
    common(sp, seed=False)
    sp.set_defaults(func=_cmd_sweep)

    sp = sub.add_parser("constants", help="cross-validate ball vs parabolic constants")
    sp.add_argument("--config", required=True)
    common(sp, seed=False)
    sp.set_defaults(func=_cmd_constants)

    sp = sub.add_parser("clt", help="KS distance of standardized face counts")
    sp.add_argument("--d", type=int, default=2)
    sp.add_argument("--lambda", dest="lam", type=float, default=8000.0)
    sp.add_argument("--n-max", type=int, default=2)
    sp.add_argument("--k", type=int, default=0)
    sp.add_argument("--replications", type=int, default=500)
    common(sp)
    sp.set_defaults(func=_cmd_clt)

    sp = sub.add_parser("profile", help="layer-size profile across depths")
    sp.add_argument("--d", type=int, default=2)
    sp.add_argument("--lambda", dest="lam", type=float, default=2000.0)
    sp.add_argument("--replications", type=int, default=40)
    sp.add_argument("--t-max", type=float, default=0.5)
    sp.add_argument("--t-nodes", type=int, default=12)
    sp.add_argument("--beta", type=float, default=None,
                    help="layer-count constant (default: estimated from the same runs)")
    common(sp)
    sp.set_defaults(func=_cmd_profile)

    sp = sub.add_parser("fixture", help="emit the deterministic tree configuration")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--h0", type=float, default=8.0)
    sp.add_argument("--d", type=int, default=2)
    common(sp, seed=False)
    sp.set_defaults(func=_cmd_fixture)

    return p


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, ex.WindowTooSmall) as exc:
        print(f"onionlab {args.command}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
