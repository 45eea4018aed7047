"""Peel a random cloud in the disk and look at its layers.

Run:  python demos/demo_peeling.py
"""

import numpy as np

from onionlab.peeling import layer_index, layer_stats, peel, score
from onionlab.sampler import SeedSpec, sample_ball_poisson

cloud = sample_ball_poisson(d=2, lam=400.0, seed=SeedSpec(7))
print(f"sampled {len(cloud)} points in the unit disk")

diagram = peel(cloud)
print(f"peeling produced {diagram.n_layers} layers")

stats = layer_stats(diagram, max_layer=5)
print("\nlayer  dim  vertices  edges  area defect  width defect  origin inside")
for rec in stats.records:
    dv = rec.defect_volumes or {}
    print(
        f"{rec.n:5d}  {rec.dim_hull:3d}  {rec.face_counts.get(0, 0):8d}"
        f"  {rec.face_counts.get(1, 0):5d}"
        f"  {dv.get(2, float('nan')):11.4f}  {dv.get(1, float('nan')):12.4f}"
        f"  {rec.origin_interior}"
    )

# the per-point score decomposes the face count exactly
first = diagram.layers[0]
total = sum(score(i, diagram, 1, 0) for i in cloud.ids)
print(f"\nscore-sum identity: sum of vertex scores on layer 1 = {total}"
      f" (layer has {len(first.vertex_ids)} vertices)")

# depth of a probe point = layer it would take if inserted
for r in (0.95, 0.5, 0.05):
    probe = np.array([r, 0.0])
    print(f"depth of ({r:.2f}, 0): layer {layer_index(probe, cloud)}")
