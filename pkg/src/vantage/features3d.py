"""Geometric feature block computed from (mesh, camera, rasterized frame).

24 values describing what the camera sees of the model: curvature
statistics over the visible surface, depth range and spread, projected
area, surface visibility, viewpoint entropy, out-of-frame vertices,
silhouette statistics, and the camera pose relative to the model frame.

All area/length quantities are normalized to be unit-free, and curvatures
are scaled by the bounding-sphere radius, so uniformly scaling the scene
leaves every component unchanged.

Vector layout (24):
    mean_curv | gauss_curv | max_depth | depth_spread | proj_area |
    surface_vis | view_entropy | outside_frac | sil_length | sil_curv |
    sil_extrema | theta | phi | up_tilt | axis_angles[9] | above_pref
"""

from __future__ import annotations

import math
import weakref
from dataclasses import dataclass

import numpy as np

from .errors import InvalidMeshError
from .geometry import Camera, to_spherical
from .meshio import Mesh
from .rasterize import FrameData, extract_silhouette, rasterize

MODEL_UP = np.array([0.0, 1.0, 0.0])
DEPTH_BINS = 16
# Silhouette turning-angle extremum threshold (radians).
SIL_EXTREMUM_THRESH = 0.2
# Above-horizon preference Gaussian: peak latitude and width.
ABOVE_PREF_MEAN = 3.0 * math.pi / 8.0
ABOVE_PREF_SIGMA = math.pi / 4.0

FEATURE3D_COLUMNS = (
    ["mean_curvature", "gaussian_curvature", "max_depth", "depth_spread",
     "projected_area", "surface_visibility", "viewpoint_entropy",
     "outside_fraction", "silhouette_length", "silhouette_curvature",
     "silhouette_extrema", "cam_theta", "cam_phi", "up_tilt"]
    + [f"axis_angle_{m}{c}" for m in "xyz" for c in "xyz"]
    + ["above_preference"]
)
assert len(FEATURE3D_COLUMNS) == 24


@dataclass
class CurvatureField:
    """Per-vertex curvatures and Voronoi-style areas."""

    mean: np.ndarray      # |H| per vertex, 1/world-unit
    gaussian: np.ndarray  # K per vertex, 1/world-unit^2
    area: np.ndarray      # positive per-vertex area, sums to total area


def _edge_face_incidence(mesh: Mesh):
    edges = {}
    for fi, (a, b, c) in enumerate(mesh.faces):
        for u, v in ((a, b), (b, c), (c, a)):
            key = (min(u, v), max(u, v))
            edges.setdefault(key, []).append(fi)
    return edges


def curvature_field(mesh: Mesh) -> CurvatureField:
    """Cotangent-Laplacian mean curvature and angle-defect Gaussian curvature.

    Boundary edges are allowed; edges shared by more than two faces are
    rejected as non-manifold.
    """
    edges = _edge_face_incidence(mesh)
    bad = [e for e, fs in edges.items() if len(fs) > 2]
    if bad:
        raise InvalidMeshError(
            f"{len(bad)} non-manifold edge(s), e.g. {bad[:5]}", edges=bad
        )
    n = mesh.n_vertices
    V = mesh.vertices
    F = mesh.faces

    lap = np.zeros((n, 3))
    angle_sum = np.zeros(n)
    area = np.zeros(n)
    face_area = mesh.face_areas()
    boundary = np.zeros(n, dtype=bool)
    for e, fs in edges.items():
        if len(fs) == 1:
            boundary[e[0]] = boundary[e[1]] = True

    # per-corner angles and per-corner cotangents
    corner_angle = np.zeros((len(F), 3))
    corner_cot = np.zeros((len(F), 3))
    for k in range(3):
        i = F[:, k]
        j = F[:, (k + 1) % 3]
        o = F[:, (k + 2) % 3]
        w1 = V[j] - V[i]
        w2 = V[o] - V[i]
        cross_norm = np.linalg.norm(np.cross(w1, w2), axis=1)
        dot = (w1 * w2).sum(axis=1)
        corner_cot[:, k] = dot / np.maximum(cross_norm, 1e-300)
        denom = np.maximum(
            np.linalg.norm(w1, axis=1) * np.linalg.norm(w2, axis=1), 1e-300
        )
        corner_angle[:, k] = np.arccos(np.clip(dot / denom, -1.0, 1.0))
        np.add.at(angle_sum, i, corner_angle[:, k])

    for k in range(3):
        i = F[:, k]
        j = F[:, (k + 1) % 3]
        o = F[:, (k + 2) % 3]
        cot_o = corner_cot[:, (k + 2) % 3]  # angle opposite edge (i, j)
        np.add.at(lap, i, cot_o[:, None] * (V[i] - V[j]))
        np.add.at(lap, j, cot_o[:, None] * (V[j] - V[i]))

    # Meyer mixed Voronoi area: exact Voronoi split for non-obtuse
    # triangles, 1/2 : 1/4 : 1/4 split at obtuse ones; partitions each
    # face exactly, so vertex areas sum to the total surface area.
    obtuse = corner_angle.max(axis=1) > math.pi / 2
    for k in range(3):
        i = F[:, k]
        j = F[:, (k + 1) % 3]
        o = F[:, (k + 2) % 3]
        e_ij = ((V[i] - V[j]) ** 2).sum(axis=1)
        e_io = ((V[i] - V[o]) ** 2).sum(axis=1)
        voronoi = (e_ij * corner_cot[:, (k + 2) % 3]
                   + e_io * corner_cot[:, (k + 1) % 3]) / 8.0
        here_obtuse = corner_angle[:, k] > math.pi / 2
        mixed = np.where(
            obtuse,
            np.where(here_obtuse, face_area / 2.0, face_area / 4.0),
            voronoi,
        )
        np.add.at(area, i, mixed)

    safe_area = np.maximum(area, 1e-300)
    mean = np.linalg.norm(lap, axis=1) / (4.0 * safe_area)
    defect = np.where(boundary, math.pi, 2.0 * math.pi) - angle_sum
    gaussian = defect / safe_area
    return CurvatureField(mean, gaussian, area)


_curvature_cache = weakref.WeakKeyDictionary()


def cached_curvature(mesh: Mesh) -> CurvatureField:
    field_ = _curvature_cache.get(mesh)
    if field_ is None:
        field_ = curvature_field(mesh)
        _curvature_cache[mesh] = field_
    return field_


@dataclass
class Feature3D:
    mean_curvature: float
    gaussian_curvature: float
    max_depth: float
    depth_spread: float
    projected_area: float
    surface_visibility: float
    viewpoint_entropy: float
    outside_fraction: float
    silhouette_length: float
    silhouette_curvature: float
    silhouette_extrema: float
    cam_theta: float
    cam_phi: float
    up_tilt: float
    axis_angles: np.ndarray  # 9 values in [0, pi]
    above_preference: float
    degenerate: bool = False  # metadata, not part of the vector

    @property
    def vector(self):
        v = np.concatenate(
            [
                [
                    self.mean_curvature, self.gaussian_curvature,
                    self.max_depth, self.depth_spread, self.projected_area,
                    self.surface_visibility, self.viewpoint_entropy,
                    self.outside_fraction, self.silhouette_length,
                    self.silhouette_curvature, self.silhouette_extrema,
                    self.cam_theta, self.cam_phi, self.up_tilt,
                ],
                self.axis_angles,
                [self.above_preference],
            ]
        )
        assert v.shape == (24,)
        return v


def _silhouette_stats(frame: FrameData):
    polys = extract_silhouette(frame)
    total_len = 0.0
    total_turn = 0.0
    extrema = 0
    n_vertices = 0
    for poly in polys:
        if poly.n_vertices < 3:
            continue
        total_len += poly.length()
        turns = np.abs(poly.turning_angles())
        total_turn += float(turns.sum())
        n_vertices += poly.n_vertices
        prev_t = np.roll(turns, 1)
        next_t = np.roll(turns, -1)
        extrema += int(
            ((turns >= prev_t) & (turns >= next_t) & (turns > SIL_EXTREMUM_THRESH)).sum()
        )
    norm_len = total_len / (2.0 * (frame.width + frame.height))
    curvature = total_turn / total_len if total_len > 0 else 0.0
    extrema_frac = extrema / n_vertices if n_vertices > 0 else 0.0
    return norm_len, curvature, extrema_frac


def geometric_features(
    mesh: Mesh,
    camera: Camera,
    frame: FrameData,
    curv: CurvatureField,
    up_axis=MODEL_UP,
) -> Feature3D:
    """All 24 geometric components from precomputed substrates."""
    center = mesh.centroid()
    radius = mesh.bounding_sphere_radius()
    up_axis = np.asarray(up_axis, dtype=float)
    up_axis = up_axis / np.linalg.norm(up_axis)

    covered = frame.mask.sum()
    degenerate = covered == 0

    # visibility over faces
    face_pix = np.bincount(
        frame.face_id[frame.mask].ravel(), minlength=mesh.n_faces
    ) if covered else np.zeros(mesh.n_faces, dtype=int)
    visible_faces = face_pix > 0
    face_areas = mesh.face_areas()
    surface_visibility = (
        float(face_areas[visible_faces].sum() / face_areas.sum())
        if covered else 0.0
    )

    # curvature over vertices of visible faces, area-weighted, scale-free
    if covered:
        vis_verts = np.unique(mesh.faces[visible_faces])
        w = curv.area[vis_verts]
        wsum = w.sum()
        mean_c = float((w * np.abs(curv.mean[vis_verts])).sum() / wsum) * radius
        gauss_c = float((w * np.abs(curv.gaussian[vis_verts])).sum() / wsum) * radius**2
    else:
        mean_c = gauss_c = 0.0

    # depth statistics
    if covered:
        depths = frame.depth[frame.mask]
        cam_dist = float(np.linalg.norm(camera.center() - center))
        max_depth = float(depths.max() / (cam_dist + radius))
        dmin, dmax = float(depths.min()), float(depths.max())
        if dmax - dmin > 1e-9 * max(dmax, 1e-300):
            hist, _ = np.histogram(depths, bins=DEPTH_BINS, range=(dmin, dmax))
            p = hist / hist.sum()
            nz = p[p > 0]
            depth_spread = float(-(nz * np.log(nz)).sum() / math.log(DEPTH_BINS))
        else:
            depth_spread = 0.0
    else:
        max_depth = 0.0
        depth_spread = 0.0

    projected_area = float(covered / (frame.width * frame.height))

    # viewpoint entropy over per-face pixel shares plus background
    total_px = frame.width * frame.height
    shares = face_pix[face_pix > 0] / total_px
    bg = (total_px - covered) / total_px
    if bg > 0:
        shares = np.concatenate([shares, [bg]])
    view_entropy = float(-(shares * np.log(shares)).sum()) if covered else 0.0

    # vertices projecting outside the frame or behind the camera
    uv, z = camera.project(mesh.vertices)
    bad = (
        (z <= 0)
        | ~np.isfinite(uv).all(axis=1)
        | (uv[:, 0] < 0) | (uv[:, 0] >= frame.width)
        | (uv[:, 1] < 0) | (uv[:, 1] >= frame.height)
    )
    outside_fraction = float(bad.mean())

    sil_len, sil_curv, sil_extrema = (
        _silhouette_stats(frame) if covered else (0.0, 0.0, 0.0)
    )

    # camera pose relative to the model
    sph = to_spherical(camera.center(), center, up_axis)
    cam_up = camera.up_in_world()
    up_tilt = float(np.dot(cam_up / np.linalg.norm(cam_up), up_axis))
    world_axes = np.eye(3)
    cam_axes = camera.axes_in_world()
    cosangles = np.clip(world_axes @ cam_axes.T, -1.0, 1.0)
    axis_angles = np.arccos(cosangles).ravel()  # u_m-major ordering
    above = math.exp(
        -((sph.phi - ABOVE_PREF_MEAN) ** 2) / (2.0 * ABOVE_PREF_SIGMA**2)
    )

    return Feature3D(
        mean_curvature=mean_c,
        gaussian_curvature=gauss_c,
        max_depth=max_depth,
        depth_spread=depth_spread,
        projected_area=projected_area,
        surface_visibility=surface_visibility,
        viewpoint_entropy=view_entropy,
        outside_fraction=outside_fraction,
        silhouette_length=sil_len,
        silhouette_curvature=sil_curv,
        silhouette_extrema=sil_extrema,
        cam_theta=sph.theta,
        cam_phi=sph.phi,
        up_tilt=up_tilt,
        axis_angles=axis_angles,
        above_preference=above,
        degenerate=degenerate,
    )


def extract_3d(mesh: Mesh, camera: Camera, up_axis=MODEL_UP,
               curv: CurvatureField | None = None,
               frame: FrameData | None = None) -> Feature3D:
    """Rasterize (unless a frame is supplied) and compute all 24 components."""
    if curv is None:
        curv = cached_curvature(mesh)
    if frame is None:
        frame = rasterize(mesh, camera)
    return geometric_features(mesh, camera, frame, curv, up_axis)
