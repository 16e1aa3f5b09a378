"""Viewpoint clustering walkthrough.

Builds three tight groups of camera poses around a building, clusters
their model-view matrices under the Lie-group metric, and picks the
representative (medoid) photo of each cluster.
"""

import numpy as np

from vantage.clustering import kmedoids, representative_views
from vantage.geometry import Camera, viewpoint_distance
from vantage.primitives import make_building

mesh = make_building()
center = mesh.centroid()
rng = np.random.default_rng(3)

anchors = [(0.4, 0.2), (2.2, 0.5), (4.4, 0.1)]  # (theta, phi) of three spots
cameras, ids = [], []
for g, (theta, phi) in enumerate(anchors):
    for k in range(7):
        t = theta + rng.normal() * 0.05
        p = phi + rng.normal() * 0.02
        r = 6.0 + rng.normal() * 0.1
        eye = center + r * np.array(
            [np.cos(p) * np.cos(t), np.sin(p), -np.cos(p) * np.sin(t)]
        )
        cameras.append(
            Camera.look_at(eye=eye, target=center, up=[0, 1, 0],
                           fx=400, fy=400, cx=128, cy=128, width=256, height=256)
        )
        ids.append(f"spot{g}_shot{k}")

mats = [c.model_view() for c in cameras]
print("pairwise distance between two shots at the same spot:",
      round(viewpoint_distance(mats[0], mats[1]), 4))
print("distance between different spots:",
      round(viewpoint_distance(mats[0], mats[8]), 4))

assignment = kmedoids(mats, k=3, seed=0)
print("\ncluster sizes:", assignment.cluster_sizes().tolist())
print("total cost:", round(assignment.total_cost, 4))
reps = representative_views(mats, ids, k=3, seed=0)
print("representative shots (largest cluster first):", reps)
for rep in reps:
    spot = rep.split("_")[0]
    members = [i for i in ids if i.startswith(spot)]
    print(f"  {rep} stands for {len(members)} shots at {spot}")
