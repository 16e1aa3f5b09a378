"""Viewpoint recommendation walkthrough.

Trains a quick model on the synthetic photo fixture, sweeps a reduced
viewpoint grid around the bundled building, and writes the heat map plus
renders of the best viewpoints. (The production grid is 64 x 16 = 1024
viewpoints at 512 x 512; this demo uses a lighter grid to finish in
seconds.)
"""

import os
import tempfile

import numpy as np

from vantage.dataio import dataset_from_files, save_features_csv
from vantage.features2d import extract_2d
from vantage.features3d import cached_curvature, extract_3d
from vantage.learning import Svm2kParams, train_svm2k
from vantage.meshio import load_mesh
from vantage.primitives import make_building
from vantage.rasterize import load_png, rasterize, render_shaded, save_png
from vantage.recommend import (
    interpolate_heatmap,
    sample_viewpoints,
    save_grid_csv,
    save_heatmap_png,
    score_viewpoints,
    top_k,
)
from vantage.synthetic import make_synthetic_project

out_dir = os.path.join(os.path.dirname(__file__), "output", "recommendation")
os.makedirs(out_dir, exist_ok=True)

with tempfile.TemporaryDirectory() as td:
    print("building training data from the synthetic photo fixture ...")
    proj = make_synthetic_project(td, n_photos=32, seed=5, photo_size=128)
    mesh = load_mesh(proj["mesh"])
    curv = cached_curvature(mesh)
    ids, Xi, Xg = [], [], []
    for pid, cam in zip(proj["ids"], proj["cameras_mesh_frame"]):
        img = load_png(os.path.join(proj["photos_dir"], pid + ".png"))
        frame = rasterize(mesh, cam)
        ids.append(pid)
        Xi.append(extract_2d(img, mask=frame.mask if frame.mask.any() else None).vector)
        Xg.append(extract_3d(mesh, cam, curv=curv, frame=frame).vector)
    feat_csv = os.path.join(td, "features.csv")
    save_features_csv(feat_csv, ids, np.array(Xi), np.array(Xg))
    data = dataset_from_files(feat_csv, proj["labels"])
    model = train_svm2k(data, Svm2kParams(), seed=0)
    print(f"  trained on {len(data)} photos")

building = make_building()
print("scoring a 16 x 6 viewpoint grid at 192 px ...")
grid = sample_viewpoints(building, n_theta=16, n_phi=6, size=192)
score_viewpoints(building, model, grid)
save_grid_csv(grid, os.path.join(out_dir, "scores.csv"))
heat = interpolate_heatmap(grid, out_w=256, out_h=96)
save_heatmap_png(heat, os.path.join(out_dir, "heatmap.png"))

best = top_k(grid, 3)
print("top viewpoints (theta, phi, score):")
for rank, (th, ph, sc) in enumerate(best):
    print(f"  {rank}: theta={th:.2f} phi={ph:.2f} score={sc:.3f}")
    i = int(round(th / (2 * np.pi / 16))) % 16
    j = int(np.argmin(np.abs(grid.phis - ph)))
    cam = grid.camera_at(i, j)
    frame = render_shaded(building, cam, light_direction=-cam.axes_in_world()[2])
    save_png(frame.rgb, os.path.join(out_dir, f"top{rank}.png"))
print(f"heat map and renders saved under {out_dir}")
