"""Growth exponents of layer statistics, at a few-minute scale.

The mean number of layer vertices grows like lambda^((d-1)/(d+1)) for every
fixed layer, the area defect decays like lambda^(-2/(d+1)), and the total
number of layers grows like lambda^(2/(d+1)).

Run:  python demos/demo_exponents.py
"""

import numpy as np

from onionlab import svg
from onionlab.experiments import (
    ExperimentPlan,
    estimate_constant_ball,
    estimate_constant_parabolic,
    layer_count_scaling,
    run_ball_sweep,
)

plan = ExperimentPlan(
    d=2,
    n_max=2,
    k_set=(0,),
    volume_k_set=(2,),
    lambda_grid=(125, 250, 500, 1000, 2000),
    replications=60,
    seed=1,
)
result = run_ball_sweep(plan)

print("mean vertex counts per layer:")
for (n, k), fit in sorted(result.mean_slopes.items()):
    print(f"  layer {n}: slope {fit.slope:+.3f} +- {fit.half_width:.3f} (theory +1/3)")
for (n, k), fit in sorted(result.volume_slopes.items()):
    print(f"  layer {n} area defect: slope {fit.slope:+.3f} (theory -2/3)")

series = [
    (f"layer {n}", list(plan.lambda_grid),
     [result.face_cells[(lam, n, 0)].mean for lam in plan.lambda_grid])
    for n in (1, 2)
]
svg.line_plot(
    "demo_exponents.svg", series,
    title="vertex counts vs intensity (log-log)",
    xlabel="lambda", ylabel="mean vertices", logx=True, logy=True,
)
print("wrote demo_exponents.svg")

ball = estimate_constant_ball(result, 1, 0)
par = estimate_constant_parabolic(
    1, 0, 2, np.linspace(0, 6, 9), window_r=6.0, replications=400, seed=2,
    check_window=False,
)
print(f"\nlayer-1 vertex constant: ball route {ball.value:.3f} +- {ball.ci:.3f}, "
      f"parabolic route {par.value:.3f} +- {par.ci:.3f}")

scaling = layer_count_scaling(2, (125, 250, 500, 1000), replications=12, seed=4)
print(f"total layers: slope {scaling.slope.slope:.3f} (theory 2/3), "
      f"rescaled count {scaling.beta_hat:.3f}")
