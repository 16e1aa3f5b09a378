"""Mesh-to-point-cloud registration and camera transfer.

The similarity transform (c, R, t) maps mesh points p to point-cloud
points q = c R p + t. It is fit to annotated correspondences by
minimizing the sum of per-pair Euclidean norms (not squared norms),
initialized from the closed-form least-squares alignment and refined with
Levenberg-Marquardt on softened residuals.

Camera extrinsics estimated in the point-cloud frame transfer to the mesh
frame as R_out = R' R and t_out = (R' t + t') / c: dividing by the scale
leaves every projected pixel unchanged after perspective division.

File formats
------------
SfM scenes are a JSON document::

    {
      "version": 1,
      "cameras": [
        {"id": "...", "width": W, "height": H,
         "fx": ..., "fy": ..., "cx": ..., "cy": ..., "skew": 0.0,
         "rotation": [9 row-major floats], "translation": [3 floats],
         "registered": true}
      ],
      "points": [[x, y, z, r, g, b], ...]        # rgb in [0, 1]
    }

Correspondences are text lines ``mesh_vertex_index x y z`` pairing a mesh
vertex with a point-cloud position; blank lines and ``#`` comments are
ignored.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares

from .errors import ConvergenceError, ParseError, UnderdeterminedInputError
from .geometry import Camera, RigidTransform, SimilarityTransform, rotation_from_axis_angle

# Softening of each pair's Euclidean norm under the root.
_NORM_EPS = 1e-12


@dataclass(frozen=True)
class CorrespondenceSet:
    """Matched point pairs: mesh points p, point-cloud points q."""

    p: np.ndarray
    q: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.p, dtype=float).reshape(-1, 3)
        q = np.asarray(self.q, dtype=float).reshape(-1, 3)
        if len(p) != len(q):
            raise ValueError("p and q must pair up")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "q", q)

    def __len__(self):
        return len(self.p)


@dataclass(frozen=True)
class RegistrationResult:
    transform: SimilarityTransform
    residual: float
    per_pair_residuals: np.ndarray


def _check_correspondences(corr: CorrespondenceSet):
    if len(corr) < 3:
        raise UnderdeterminedInputError(
            f"need at least 3 correspondences, got {len(corr)}"
        )
    centered = corr.p - corr.p.mean(axis=0)
    s = np.linalg.svd(centered, compute_uv=False)
    if s[1] < 1e-9 * max(s[0], 1.0):
        raise UnderdeterminedInputError("mesh points are (nearly) collinear")


def _closed_form_alignment(p, q):
    """Least-squares similarity (sum of squared norms), Umeyama-style."""
    mu_p = p.mean(axis=0)
    mu_q = q.mean(axis=0)
    pc = p - mu_p
    qc = q - mu_q
    cov = qc.T @ pc / len(p)
    U, S, Vt = np.linalg.svd(cov)
    d = np.ones(3)
    if np.linalg.det(U) * np.linalg.det(Vt) < 0:
        d[2] = -1.0
    R = U @ np.diag(d) @ Vt
    var_p = (pc * pc).sum() / len(p)
    c = float(S @ d) / var_p if var_p > 0 else 1.0
    c = max(c, 1e-12)
    t = mu_q - c * (R @ mu_p)
    return c, R, t


def _pack(c, R_init, w, t):
    """Parameters: log-scale, axis-angle delta from R_init, translation."""
    return np.concatenate([[np.log(c)], w, t])


def _unpack(x, R_init):
    c = float(np.exp(x[0]))
    R = rotation_from_axis_angle(x[1:4]) @ R_init
    t = x[4:7]
    return c, R, t


def estimate_similarity(corr: CorrespondenceSet) -> RegistrationResult:
    """Fit (c, R, t) minimizing the summed per-pair Euclidean norms."""
    _check_correspondences(corr)
    p, q = corr.p, corr.q
    c0, R0, t0 = _closed_form_alignment(p, q)

    def residuals(x):
        c, R, t = _unpack(x, R0)
        e = q - (c * (p @ R.T) + t)
        # sum of squares of these equals sum_k sqrt(|e_k|^2 + eps)
        sq = (e * e).sum(axis=1) + _NORM_EPS
        return (e * (sq ** -0.25)[:, None]).ravel()

    x0 = _pack(c0, R0, np.zeros(3), t0)
    # The softened L1-of-L2 objective is stiff (curvature ~ 1/sqrt(eps))
    # near interpolated pairs; moderate tolerances avoid grinding there
    # while staying far below the 1e-6 recovery requirements.
    sol = least_squares(residuals, x0, method="lm", xtol=1e-10, ftol=1e-10,
                        gtol=1e-10, max_nfev=5000)
    c, R, t = _unpack(sol.x, R0)
    # Re-orthonormalize against accumulated drift before constructing types.
    U, _, Vt = np.linalg.svd(R)
    transform = SimilarityTransform(c, U @ Vt, t)
    e = q - transform.apply(p)
    per_pair = np.linalg.norm(e, axis=1)
    result = RegistrationResult(transform, float(per_pair.sum()), per_pair)
    if not sol.success:
        raise ConvergenceError(
            f"Levenberg-Marquardt did not converge: {sol.message}", best=result
        )
    return result


def transfer_camera(sim: SimilarityTransform, cam_pc: Camera) -> Camera:
    """Re-express point-cloud-frame extrinsics in the mesh frame."""
    Rp = cam_pc.extrinsics.rotation
    tp = cam_pc.extrinsics.translation
    R_out = Rp @ sim.rotation
    t_out = (Rp @ sim.translation + tp) / sim.scale
    return cam_pc.with_extrinsics(RigidTransform(R_out, t_out))


# ---------------------------------------------------------------------------
# SfM scene ingestion
# ---------------------------------------------------------------------------


@dataclass
class SfmScene:
    cameras: list  # list of (image_id, Camera)
    points: np.ndarray  # (n, 3)
    colors: np.ndarray  # (n, 3) in [0, 1]
    skipped: list = field(default_factory=list)


def ingest_sfm(path) -> SfmScene:
    """Read a camera/point-cloud JSON document (see module docstring)."""
    with open(path, "r") as fh:
        text = fh.read()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON at line {exc.lineno}: {exc.msg}",
                         line=exc.lineno)
    cameras = []
    skipped = []
    for i, entry in enumerate(doc.get("cameras", [])):
        cam_id = entry.get("id", f"camera_{i}")
        if not entry.get("registered", True):
            skipped.append(cam_id)
            warnings.warn(f"camera {cam_id!r} is unregistered; skipped")
            continue
        try:
            R = np.array(entry["rotation"], dtype=float).reshape(3, 3)
            t = np.array(entry["translation"], dtype=float).reshape(3)
            cam = Camera(
                fx=float(entry["fx"]), fy=float(entry["fy"]),
                cx=float(entry["cx"]), cy=float(entry["cy"]),
                width=int(entry["width"]), height=int(entry["height"]),
                extrinsics=RigidTransform(R, t),
                skew=float(entry.get("skew", 0.0)),
            )
        except KeyError as exc:
            raise ParseError(f"camera {cam_id!r}: missing field {exc}")
        except ValueError as exc:
            raise ParseError(f"camera {cam_id!r}: {exc}")
        cameras.append((cam_id, cam))
    pts = np.array(doc.get("points", []), dtype=float).reshape(-1, 6)
    return SfmScene(cameras, pts[:, :3].copy(), pts[:, 3:].copy(), skipped)


def export_sfm(scene: SfmScene, path):
    doc = {
        "version": 1,
        "cameras": [
            {
                "id": cam_id,
                "width": cam.width, "height": cam.height,
                "fx": cam.fx, "fy": cam.fy, "cx": cam.cx, "cy": cam.cy,
                "skew": cam.skew,
                "rotation": cam.extrinsics.rotation.ravel().tolist(),
                "translation": cam.extrinsics.translation.tolist(),
                "registered": True,
            }
            for cam_id, cam in scene.cameras
        ],
        "points": np.hstack([scene.points, scene.colors]).tolist(),
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1)


def load_correspondences(path, mesh) -> CorrespondenceSet:
    """Read ``mesh_vertex_index x y z`` lines against a loaded mesh."""
    p_list, q_list = [], []
    with open(path, "r") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#")[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 4:
                raise ParseError(
                    f"expected 'index x y z', got {len(parts)} fields", line=lineno
                )
            try:
                idx = int(parts[0])
                xyz = [float(v) for v in parts[1:]]
            except ValueError as exc:
                raise ParseError(str(exc), line=lineno)
            if not 0 <= idx < mesh.n_vertices:
                raise ParseError(f"vertex index {idx} out of range", line=lineno)
            p_list.append(mesh.vertices[idx])
            q_list.append(xyz)
    return CorrespondenceSet(np.array(p_list), np.array(q_list))


def save_transform(result: RegistrationResult, path):
    doc = {
        "version": 1,
        "scale": result.transform.scale,
        "rotation": result.transform.rotation.ravel().tolist(),
        "translation": result.transform.translation.tolist(),
        "residual": result.residual,
        "per_pair_residuals": result.per_pair_residuals.tolist(),
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1)


def load_transform(path) -> SimilarityTransform:
    with open(path, "r") as fh:
        doc = json.load(fh)
    return SimilarityTransform(
        float(doc["scale"]),
        np.array(doc["rotation"], dtype=float).reshape(3, 3),
        np.array(doc["translation"], dtype=float),
    )


def convert_colmap_text(cameras_txt, images_txt, out_json):
    """Minimal converter for COLMAP text exports (PINHOLE-family models).

    Reads cameras.txt / images.txt and writes the JSON schema used by
    ingest_sfm. Points are left empty; radial distortion is ignored.
    """
    intrinsics = {}
    with open(cameras_txt) as fh:
        for raw in fh:
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            cam_id, model = parts[0], parts[1]
            w, h = int(parts[2]), int(parts[3])
            params = [float(x) for x in parts[4:]]
            if model == "SIMPLE_PINHOLE" or model == "SIMPLE_RADIAL":
                fx = fy = params[0]
                cx, cy = params[1], params[2]
            elif model in ("PINHOLE", "OPENCV", "RADIAL"):
                fx, fy, cx, cy = params[0], params[1], params[2], params[3]
            else:
                raise ParseError(f"unsupported COLMAP camera model {model!r}")
            intrinsics[cam_id] = (w, h, fx, fy, cx, cy)
    cameras = []
    with open(images_txt) as fh:
        lines = [
            l.strip() for l in fh
            if l.strip() and not l.strip().startswith("#")
        ]
    # images.txt alternates pose lines and 2D-point lines
    for line in lines[::2]:
        parts = line.split()
        qw, qx, qy, qz = (float(x) for x in parts[1:5])
        t = [float(x) for x in parts[5:8]]
        cam_id, name = parts[8], parts[9]
        if cam_id not in intrinsics:
            raise ParseError(f"image {name!r} references unknown camera {cam_id}")
        w, h, fx, fy, cx, cy = intrinsics[cam_id]
        n = qw * qw + qx * qx + qy * qy + qz * qz
        s = 2.0 / n
        R = [
            [1 - s * (qy * qy + qz * qz), s * (qx * qy - qz * qw), s * (qx * qz + qy * qw)],
            [s * (qx * qy + qz * qw), 1 - s * (qx * qx + qz * qz), s * (qy * qz - qx * qw)],
            [s * (qx * qz - qy * qw), s * (qy * qz + qx * qw), 1 - s * (qx * qx + qy * qy)],
        ]
        cameras.append(
            {
                "id": name, "width": w, "height": h,
                "fx": fx, "fy": fy, "cx": cx, "cy": cy, "skew": 0.0,
                "rotation": [v for row in R for v in row],
                "translation": t,
                "registered": True,
            }
        )
    with open(out_json, "w") as fh:
        json.dump({"version": 1, "cameras": cameras, "points": []}, fh, indent=1)
