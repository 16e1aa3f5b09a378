"""Self-contained synthetic project generator for fixtures and demos.

Builds everything the CLI pipeline consumes: the building mesh, rendered
"photos" with known cameras, an SfM-style JSON scene expressed in a
scaled/rotated/translated point-cloud frame, mesh-vertex correspondences,
and pose-derived goodness labels. Fully deterministic for a given seed.
"""

from __future__ import annotations

import json
import math
import os

import numpy as np

from .geometry import Camera, RigidTransform, SimilarityTransform, rotation_from_axis_angle, spherical_position
from .meshio import save_obj
from .primitives import make_building
from .rasterize import render_shaded, save_png
from .registration import SfmScene, export_sfm
from .dataio import save_labels_csv

PHOTO_SIZE = 256
# Front of the building (door) faces +z; theta is measured from +x
# toward -z for the +y up axis, so the facade sits near theta = 3*pi/2.
FRONT_THETA = 3.0 * math.pi / 2.0


def pc_frame_camera(cam_mesh: Camera, sim: SimilarityTransform) -> Camera:
    """Express mesh-frame extrinsics in the point-cloud frame.

    Inverse of the transfer R_mesh = R' R, t_mesh = (R' t + t') / c.
    """
    R_mesh = cam_mesh.extrinsics.rotation
    t_mesh = cam_mesh.extrinsics.translation
    Rp = R_mesh @ sim.rotation.T
    tp = sim.scale * t_mesh - Rp @ sim.translation
    return cam_mesh.with_extrinsics(RigidTransform(Rp, tp))


def goodness_label(theta, phi):
    """+1 for frontal, above-horizon viewpoints; -1 otherwise."""
    frontal = math.cos(theta - FRONT_THETA) > 0.2
    height_ok = 0.08 <= phi <= 0.6
    return 1 if (frontal and height_ok) else -1


def make_synthetic_project(out_dir, n_photos=40, seed=0, photo_size=PHOTO_SIZE):
    """Write a complete synthetic project; returns a dict of paths."""
    rng = np.random.default_rng(seed)
    os.makedirs(out_dir, exist_ok=True)
    photos_dir = os.path.join(out_dir, "photos")
    os.makedirs(photos_dir, exist_ok=True)

    mesh = make_building()
    mesh_path = os.path.join(out_dir, "mesh.obj")
    save_obj(mesh, mesh_path)

    center = mesh.centroid()
    up = np.array([0.0, 1.0, 0.0])
    radius = mesh.bounding_sphere_radius()

    sim = SimilarityTransform(
        1.8,
        rotation_from_axis_angle(np.array([0.2, 0.7, -0.1])),
        np.array([3.0, -1.0, 2.0]),
    )

    f = (photo_size / 2.0) / math.tan(math.radians(30.0))
    ids, cams_mesh, labels = [], [], []
    for i in range(n_photos):
        theta = float(rng.uniform(0.0, 2.0 * math.pi))
        phi = float(rng.uniform(0.0, math.pi / 4))
        r = float(rng.uniform(2.2, 3.2)) * radius
        eye = spherical_position(center, up, r, theta, phi)
        cam = Camera.look_at(
            eye=eye, target=center, up=up,
            fx=f, fy=f, cx=photo_size / 2.0, cy=photo_size / 2.0,
            width=photo_size, height=photo_size,
        )
        pid = f"img{i:03d}"
        frame = render_shaded(mesh, cam, light_direction=-cam.axes_in_world()[2])
        save_png(frame.rgb, os.path.join(photos_dir, pid + ".png"))
        ids.append(pid)
        cams_mesh.append(cam)
        labels.append(goodness_label(theta, phi))

    # point cloud: transformed mesh vertices with their colors
    pts_mesh = mesh.vertices
    pts_pc = sim.apply(pts_mesh)
    colors = mesh.colors if mesh.colors is not None else np.ones_like(pts_pc)
    scene = SfmScene(
        cameras=[(pid, pc_frame_camera(c, sim)) for pid, c in zip(ids, cams_mesh)],
        points=pts_pc,
        colors=colors,
        skipped=[],
    )
    sfm_path = os.path.join(out_dir, "sfm.json")
    export_sfm(scene, sfm_path)

    # correspondences: spread vertex indices, exact point-cloud positions
    corr_path = os.path.join(out_dir, "correspondences.txt")
    idx = np.linspace(0, mesh.n_vertices - 1, 12).astype(int)
    with open(corr_path, "w") as fh:
        fh.write("# mesh_vertex_index x y z (point-cloud frame)\n")
        for k in idx:
            q = pts_pc[k]
            fh.write(f"{k} {q[0]:.12g} {q[1]:.12g} {q[2]:.12g}\n")

    labels_path = os.path.join(out_dir, "labels.csv")
    save_labels_csv(labels_path, ids, labels)

    config_path = os.path.join(out_dir, "config.json")
    with open(config_path, "w") as fh:
        json.dump(
            {
                "mesh": mesh_path,
                "images_dir": photos_dir,
                "sfm": sfm_path,
                "correspondences": corr_path,
                "labels": labels_path,
                "seed": seed,
            },
            fh,
            indent=1,
        )
    return {
        "dir": out_dir,
        "mesh": mesh_path,
        "photos_dir": photos_dir,
        "sfm": sfm_path,
        "correspondences": corr_path,
        "labels": labels_path,
        "config": config_path,
        "ids": ids,
        "cameras_mesh_frame": cams_mesh,
        "similarity": sim,
    }
