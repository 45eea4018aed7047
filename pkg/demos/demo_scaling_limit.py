"""The rescaled picture: caps become paraboloids, peeling becomes parabolic.

Run:  python demos/demo_scaling_limit.py
"""

import numpy as np

from onionlab.geometry import PointCloud
from onionlab.parabolic import Window, parabolic_peel, tree_fixture
from onionlab.rescale import Paraboloid, from_rescaled, in_cap, in_paraboloid, to_rescaled
from onionlab.sampler import SeedSpec, sample_ball_poisson, sample_halfspace_poisson

lam = 2000.0
cloud = sample_ball_poisson(2, lam, SeedSpec(3))
rc = to_rescaled(cloud, lam)
print(f"mapped {len(cloud)} ball points into the window "
      f"[{-lam ** (1 / 3) * np.pi:.1f}, {lam ** (1 / 3) * np.pi:.1f}] x [0, {lam ** (2 / 3):.1f})")

back = from_rescaled(rc)
print("round-trip max error:", float(np.max(np.abs(back.coords - cloud.coords))))

# cap membership transports to quasi-paraboloid membership
rng = np.random.default_rng(0)
agree = 0
for _ in range(2000):
    x = rng.standard_normal(2)
    x /= np.linalg.norm(x)
    x *= rng.random() ** 0.5
    x0 = rng.standard_normal(2)
    x0 /= np.linalg.norm(x0)
    x0 *= 0.05 + 0.9 * rng.random() ** 0.5
    pair = PointCloud.from_coords([x, x0])
    r2 = to_rescaled(pair, lam)
    p = Paraboloid(tuple(r2.v[1]), float(r2.h[1]), "down", lam)
    agree += in_cap(x, x0) == in_paraboloid((r2.v[0], r2.h[0]), p)
print(f"cap vs paraboloid membership agreement: {agree}/2000")

# parabolic peeling of an intensity-one slab
w = Window.for_radius(10.0, n=2)
half = sample_halfspace_poisson(1, w.r, w.height, 1.0, SeedSpec(5))
diag = parabolic_peel(half, window=w)
sizes = [len(layer.members) for layer in diag.layers[:6]]
print(f"parabolic peel of {len(half)} points: first layer sizes {sizes}")

# the deterministic tree puts its root exactly on layer n
fx = tree_fixture(3, 8.0, 2)
fd = parabolic_peel(fx, method="exact")
print("tree fixture layers:", [fd.layer_of[i] for i in fx.ids])
