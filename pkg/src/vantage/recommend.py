"""Viewpoint sampling, batch scoring, heat maps, and top-k picks.

Viewpoints live on a longitude x latitude grid over a sphere around the
model (64 x 16 = 1024 samples by default), at a fixed radius multiple of
the bounding sphere, aimed at the centroid, with the camera's up vector
the model up projected orthogonal to the view axis. Every viewpoint is
rendered, both feature blocks are extracted from the same frame, and the
trained two-view model scores them. Interpolation between grid nodes is
bilinear with longitude wraparound.
"""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInputError
from .features2d import extract_2d
from .features3d import MODEL_UP, cached_curvature, extract_3d
from .geometry import Camera, spherical_position
from .learning import Svm2kModel, score as model_score
from .meshio import Mesh
from .rasterize import render_shaded, save_png

N_THETA = 64
N_PHI = 16
DEFAULT_RADIUS_FACTOR = 2.5
DEFAULT_PHI_BAND = (0.0, math.pi / 4)
RENDER_SIZE = 512
VERTICAL_FOV_DEG = 60.0


@dataclass
class ViewpointGrid:
    thetas: np.ndarray          # (n_theta,) longitudes, uniform on [0, 2pi)
    phis: np.ndarray            # (n_phi,) latitudes, uniform on the band
    radius: float
    cameras: list               # len n_theta * n_phi, theta-major
    up_axis: np.ndarray
    center: np.ndarray
    scores: np.ndarray | None = None    # (n_theta, n_phi)
    degenerate: np.ndarray | None = None

    @property
    def n_views(self):
        return len(self.cameras)

    def camera_at(self, i_theta, i_phi):
        return self.cameras[i_theta * len(self.phis) + i_phi]


def sample_viewpoints(
    mesh: Mesh,
    radius_factor=DEFAULT_RADIUS_FACTOR,
    phi_band=DEFAULT_PHI_BAND,
    n_theta=N_THETA,
    n_phi=N_PHI,
    up_axis=MODEL_UP,
    size=RENDER_SIZE,
    fov_deg=VERTICAL_FOV_DEG,
) -> ViewpointGrid:
    """Cameras on the viewing grid, all aimed at the model centroid."""
    if mesh.n_vertices == 0:
        raise DegenerateInputError("empty mesh")
    if radius_factor <= 1.0:
        raise ValueError("radius factor must exceed 1 (outside the bounding sphere)")
    center = mesh.centroid()
    radius = radius_factor * mesh.bounding_sphere_radius()
    up = np.asarray(up_axis, dtype=float)
    up = up / np.linalg.norm(up)
    thetas = np.arange(n_theta) * (2.0 * math.pi / n_theta)
    phis = np.linspace(phi_band[0], phi_band[1], n_phi)
    f = (size / 2.0) / math.tan(math.radians(fov_deg) / 2.0)
    cameras = []
    for th in thetas:
        for ph in phis:
            eye = spherical_position(center, up, radius, th, ph)
            cameras.append(
                Camera.look_at(
                    eye=eye, target=center, up=up,
                    fx=f, fy=f, cx=size / 2.0, cy=size / 2.0,
                    width=size, height=size,
                )
            )
    return ViewpointGrid(thetas, phis, radius, cameras, up, center)


def score_one_view(mesh, camera, model, up_axis, curv):
    """Render one viewpoint and score it; returns (score, degenerate)."""
    forward = camera.axes_in_world()[2]
    frame = render_shaded(mesh, camera, light_direction=-forward)
    f3 = extract_3d(mesh, camera, up_axis=up_axis, curv=curv, frame=frame)
    f2 = extract_2d(frame.rgb, mask=frame.mask if frame.mask.any() else None)
    s = model_score(model, f2.vector[None, :], f3.vector[None, :])
    return float(s[0]), f3.degenerate


def score_viewpoints(mesh: Mesh, model: Svm2kModel, grid: ViewpointGrid,
                     threads=None) -> ViewpointGrid:
    """Fill the grid's scores by rendering and scoring every viewpoint."""
    curv = cached_curvature(mesh)
    n_theta, n_phi = len(grid.thetas), len(grid.phis)
    scores = np.zeros((n_theta, n_phi))
    degenerate = np.zeros((n_theta, n_phi), dtype=bool)
    threads = threads or int(os.environ.get("VANTAGE_THREADS", "1"))
    tasks = [(i, j) for i in range(n_theta) for j in range(n_phi)]
    if threads > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = list(
                pool.map(
                    _score_task,
                    [(mesh, grid.camera_at(i, j), model, grid.up_axis) for i, j in tasks],
                    chunksize=max(1, len(tasks) // (threads * 8)),
                )
            )
        for (i, j), (s, d) in zip(tasks, results):
            scores[i, j] = s
            degenerate[i, j] = d
    else:
        for i, j in tasks:
            s, d = score_one_view(mesh, grid.camera_at(i, j), model,
                                  grid.up_axis, curv)
            scores[i, j] = s
            degenerate[i, j] = d
    grid.scores = scores
    grid.degenerate = degenerate
    return grid


def _score_task(args):
    mesh, camera, model, up_axis = args
    return score_one_view(mesh, camera, model, up_axis, cached_curvature(mesh))


@dataclass
class HeatMap:
    raster: np.ndarray          # (out_h, out_w) scores
    thetas: np.ndarray          # per-column longitude
    phis: np.ndarray            # per-row latitude


def grid_value_at(grid: ViewpointGrid, theta, phi):
    """Bilinear interpolation on the score grid (theta wraps around)."""
    if grid.scores is None:
        raise ValueError("grid has no scores")
    thetas, phis, S = grid.thetas, grid.phis, grid.scores
    n_theta, n_phi = len(thetas), len(phis)
    step_t = 2.0 * math.pi / n_theta
    t = (theta % (2.0 * math.pi)) / step_t
    i0 = int(math.floor(t)) % n_theta
    i1 = (i0 + 1) % n_theta
    ft = t - math.floor(t)
    phi = min(max(phi, phis[0]), phis[-1])
    if n_phi == 1:
        j0 = j1 = 0
        fp = 0.0
    else:
        step_p = (phis[-1] - phis[0]) / (n_phi - 1)
        u = (phi - phis[0]) / step_p
        j0 = min(int(math.floor(u)), n_phi - 2)
        j1 = j0 + 1
        fp = u - j0
    return float(
        S[i0, j0] * (1 - ft) * (1 - fp)
        + S[i1, j0] * ft * (1 - fp)
        + S[i0, j1] * (1 - ft) * fp
        + S[i1, j1] * ft * fp
    )


def interpolate_heatmap(grid: ViewpointGrid, out_w=512, out_h=128) -> HeatMap:
    """Unrolled (theta, phi) raster of interpolated scores."""
    if grid.scores is None:
        raise ValueError("grid has no scores")
    thetas = np.arange(out_w) * (2.0 * math.pi / out_w)
    phis = np.linspace(grid.phis[0], grid.phis[-1], out_h)
    raster = np.empty((out_h, out_w))
    for r, ph in enumerate(phis):
        for c, th in enumerate(thetas):
            raster[r, c] = grid_value_at(grid, th, ph)
    return HeatMap(raster, thetas, phis)


def top_k(grid: ViewpointGrid, k):
    """Best k grid nodes as (theta, phi, score), score-descending.

    Ties break lexicographically on (theta, phi).
    """
    if grid.scores is None:
        raise ValueError("grid has no scores")
    if not 1 <= k <= grid.n_views:
        raise ValueError(f"k must be in [1, {grid.n_views}]")
    entries = [
        (float(grid.scores[i, j]), float(grid.thetas[i]), float(grid.phis[j]))
        for i in range(len(grid.thetas))
        for j in range(len(grid.phis))
    ]
    entries.sort(key=lambda e: (-e[0], e[1], e[2]))
    return [(th, ph, s) for s, th, ph in entries[:k]]


# Linear color stops from cold (low score) to hot (high score).
_STOPS = np.array(
    [
        [0.10, 0.15, 0.60],
        [0.05, 0.55, 0.95],
        [0.30, 0.85, 0.40],
        [0.95, 0.90, 0.15],
        [0.85, 0.10, 0.10],
    ]
)


def colorize(values):
    """Map scores in [0, 1] to RGB through the fixed gradient."""
    v = np.clip(np.asarray(values, dtype=float), 0.0, 1.0)
    pos = v * (len(_STOPS) - 1)
    i0 = np.minimum(pos.astype(int), len(_STOPS) - 2)
    frac = (pos - i0)[..., None]
    return _STOPS[i0] * (1 - frac) + _STOPS[i0 + 1] * frac


def save_heatmap_png(heatmap: HeatMap, path):
    # low latitude at the bottom row of the image
    save_png(colorize(heatmap.raster[::-1]), path)


def save_grid_csv(grid: ViewpointGrid, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["theta", "phi", "score", "degenerate"])
        for i, th in enumerate(grid.thetas):
            for j, ph in enumerate(grid.phis):
                writer.writerow(
                    [
                        f"{th:.12g}", f"{ph:.12g}",
                        f"{grid.scores[i, j]:.12g}",
                        int(grid.degenerate[i, j]) if grid.degenerate is not None else 0,
                    ]
                )
