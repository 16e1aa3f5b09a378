"""Deterministic software rasterizer with z-buffering and silhouettes.

Pixel centers are sampled at (i + 0.5, j + 0.5); there is no antialiasing,
so covered-pixel counts have analytic oracles. Faces wholly behind the
near plane are culled and faces crossing it are clipped. Exact depth ties
are broken toward the lower face index, which makes the buffers
independent of any internal processing order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from PIL import Image as PILImage

from .errors import DegenerateInputError
from .geometry import Camera
from .meshio import Mesh

BACKGROUND = -1
# Near plane as a fraction of the bounding-sphere radius.
NEAR_FRACTION = 1e-4


@dataclass
class FrameData:
    """Rasterization product: depth, face ids, coverage, optional color."""

    width: int
    height: int
    depth: np.ndarray          # (H, W) float, +inf where uncovered
    face_id: np.ndarray        # (H, W) int, BACKGROUND where uncovered
    mask: np.ndarray           # (H, W) bool
    rgb: np.ndarray | None = None  # (H, W, 3) float in [0, 1]

    def covered_count(self):
        return int(self.mask.sum())


@dataclass
class SilhouettePolygon:
    """Closed boundary polygon in pixel coordinates, counterclockwise."""

    points: np.ndarray  # (k, 2) pixel-center coordinates (x, y)

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float).reshape(-1, 2)

    @property
    def n_vertices(self):
        return len(self.points)

    def edge_lengths(self):
        d = np.diff(np.vstack([self.points, self.points[:1]]), axis=0)
        return np.hypot(d[:, 0], d[:, 1])

    def length(self):
        return float(self.edge_lengths().sum())

    def turning_angles(self):
        """Signed exterior angle at each vertex (radians)."""
        p = self.points
        prev = np.roll(p, 1, axis=0)
        nxt = np.roll(p, -1, axis=0)
        v1 = p - prev
        v2 = nxt - p
        ang = np.arctan2(
            v1[:, 0] * v2[:, 1] - v1[:, 1] * v2[:, 0],
            (v1 * v2).sum(axis=1),
        )
        return ang

    def signed_area(self):
        p = self.points
        q = np.roll(p, -1, axis=0)
        return 0.5 * float(np.sum(p[:, 0] * q[:, 1] - q[:, 0] * p[:, 1]))


def _clip_polygon_near(poly, near):
    """Sutherland-Hodgman clip of a camera-space polygon against z >= near."""
    out = []
    n = len(poly)
    for i in range(n):
        a = poly[i]
        b = poly[(i + 1) % n]
        ina, inb = a[2] >= near, b[2] >= near
        if ina:
            out.append(a)
        if ina != inb:
            t = (near - a[2]) / (b[2] - a[2])
            out.append(a + t * (b - a))
    return out


def rasterize(mesh: Mesh, camera: Camera, shade=None):
    """Rasterize ``mesh`` through ``camera`` into a FrameData.

    ``shade`` is an optional (m, 3) array of per-face RGB; when given, an
    rgb buffer is filled (background stays white).
    """
    if mesh.n_vertices == 0 or mesh.n_faces == 0:
        raise DegenerateInputError("cannot rasterize an empty mesh")
    W, H = camera.width, camera.height
    depth = np.full((H, W), np.inf)
    face_id = np.full((H, W), BACKGROUND, dtype=np.int64)
    rgb = np.ones((H, W, 3)) if shade is not None else None

    cam_pts = camera.to_camera(mesh.vertices)
    near = NEAR_FRACTION * mesh.bounding_sphere_radius()
    fx, fy, cx, cy, sk = camera.fx, camera.fy, camera.cx, camera.cy, camera.skew

    tri_z = cam_pts[mesh.faces][:, :, 2]
    # Pixel-center sample grid is shared across faces.
    for fidx in range(mesh.n_faces):
        zs = tri_z[fidx]
        if np.all(zs < near):
            continue
        corners = cam_pts[mesh.faces[fidx]]
        if np.all(zs >= near):
            tris = [corners]
        else:
            clipped = _clip_polygon_near(list(corners), near)
            if len(clipped) < 3:
                continue
            tris = [
                np.array([clipped[0], clipped[k], clipped[k + 1]])
                for k in range(1, len(clipped) - 1)
            ]
        for tri in tris:
            z = tri[:, 2]
            u = fx * tri[:, 0] / z + sk * tri[:, 1] / z + cx
            v = fy * tri[:, 1] / z + cy
            _fill_triangle(depth, face_id, rgb, u, v, z, fidx, shade, W, H)

    mask = face_id != BACKGROUND
    return FrameData(W, H, depth, face_id, mask, rgb)


def _fill_triangle(depth, face_id, rgb, u, v, z, fidx, shade, W, H):
    x0 = max(int(np.floor(u.min() - 0.5)), 0)
    x1 = min(int(np.ceil(u.max() - 0.5)), W - 1)
    y0 = max(int(np.floor(v.min() - 0.5)), 0)
    y1 = min(int(np.ceil(v.max() - 0.5)), H - 1)
    if x1 < x0 or y1 < y0:
        return
    area2 = (u[1] - u[0]) * (v[2] - v[0]) - (v[1] - v[0]) * (u[2] - u[0])
    if area2 == 0.0:
        return
    px = np.arange(x0, x1 + 1) + 0.5
    py = np.arange(y0, y1 + 1) + 0.5
    PX, PY = np.meshgrid(px, py)
    w0 = (u[2] - u[1]) * (PY - v[1]) - (v[2] - v[1]) * (PX - u[1])
    w1 = (u[0] - u[2]) * (PY - v[2]) - (v[0] - v[2]) * (PX - u[2])
    w2 = (u[1] - u[0]) * (PY - v[0]) - (v[1] - v[0]) * (PX - u[0])
    if area2 < 0:
        w0, w1, w2 = -w0, -w1, -w2
    inside = (w0 >= 0) & (w1 >= 0) & (w2 >= 0)
    if not inside.any():
        return
    s = abs(area2)
    l0, l1, l2 = w0[inside] / s, w1[inside] / s, w2[inside] / s
    # Perspective-correct depth: 1/z interpolates linearly in screen space.
    inv_z = l0 / z[0] + l1 / z[1] + l2 / z[2]
    zpix = 1.0 / inv_z

    sub_d = depth[y0 : y1 + 1, x0 : x1 + 1]
    sub_f = face_id[y0 : y1 + 1, x0 : x1 + 1]
    cur_d = sub_d[inside]
    cur_f = sub_f[inside]
    better = (zpix < cur_d) | ((zpix == cur_d) & (fidx < cur_f))
    if not better.any():
        return
    write = np.zeros_like(inside)
    write[inside] = better
    sub_d[write] = zpix[better]
    sub_f[write] = fidx
    if rgb is not None:
        rgb[y0 : y1 + 1, x0 : x1 + 1][write] = shade[fidx]


def render_shaded(mesh: Mesh, camera: Camera, light_direction, ambient=0.25):
    """Flat Lambertian shading modulated by per-vertex color.

    ``light_direction`` points from the scene toward the light; shading is
    double-sided (|n . l|), so winding inconsistencies don't black out
    faces. Deterministic for fixed inputs.
    """
    l = np.asarray(light_direction, dtype=float)
    n = np.linalg.norm(l)
    if n < 1e-15:
        raise DegenerateInputError("light direction must be nonzero")
    l = l / n
    normals = mesh.face_normals()
    lam = np.abs(normals @ l)
    intensity = ambient + (1.0 - ambient) * lam
    if mesh.colors is not None:
        base = mesh.colors[mesh.faces].mean(axis=1)
    else:
        base = np.ones((mesh.n_faces, 3))
    shade = np.clip(base * intensity[:, None], 0.0, 1.0)
    return rasterize(mesh, camera, shade=shade)


# ---------------------------------------------------------------------------
# Silhouette extraction
# ---------------------------------------------------------------------------

# Moore neighborhood in clockwise order starting East (x+1, y+0).
_MOORE = [(1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1)]
# Douglas-Peucker tolerance (pixels): collapses staircase jaggies while
# keeping vertices on boundary pixel centers.
SIMPLIFY_TOL = 0.75


def extract_silhouette(frame: FrameData, simplify_tol=SIMPLIFY_TOL):
    """One counterclockwise boundary polygon per 8-connected mask component."""
    from scipy import ndimage

    mask = frame.mask
    if not mask.any():
        return []
    labels, n = ndimage.label(mask, structure=np.ones((3, 3), dtype=int))
    polys = []
    for comp in range(1, n + 1):
        comp_mask = labels == comp
        chain = _moore_trace(comp_mask)
        if chain is None:
            # single pixel: degenerate "polygon"
            ys, xs = np.nonzero(comp_mask)
            polys.append(
                SilhouettePolygon(np.array([[xs[0] + 0.5, ys[0] + 0.5]]))
            )
            continue
        pts = np.array(chain, dtype=float) + 0.5
        pts = _simplify_closed(pts, simplify_tol)
        poly = SilhouettePolygon(pts)
        if poly.n_vertices >= 3 and poly.signed_area() < 0:
            poly = SilhouettePolygon(pts[::-1])
        polys.append(poly)
    return polys


def _moore_trace(mask):
    """Moore-neighbor boundary trace (clockwise scan from a backtrack pixel).

    Returns an ordered list of (x, y) boundary pixels, or None for a
    single-pixel component. Terminates when the (pixel, backtrack) state
    repeats its initial value, which makes the trace a full cycle.
    """
    H, W = mask.shape
    ys, xs = np.nonzero(mask)
    # Topmost-leftmost pixel: its West neighbor is guaranteed background.
    order = np.lexsort((xs, ys))
    sy, sx = int(ys[order[0]]), int(xs[order[0]])

    def filled(x, y):
        return 0 <= x < W and 0 <= y < H and mask[y, x]

    start = (sx, sy)
    b0 = (sx - 1, sy)
    cur, back = start, b0
    chain = [start]
    guard = 4 * len(xs) + 8
    while guard > 0:
        guard -= 1
        db = _MOORE.index((back[0] - cur[0], back[1] - cur[1]))
        moved = False
        for k in range(1, 9):
            d = (db + k) % 8
            nx, ny = cur[0] + _MOORE[d][0], cur[1] + _MOORE[d][1]
            if filled(nx, ny):
                pdx, pdy = _MOORE[(d - 1) % 8]
                back = (cur[0] + pdx, cur[1] + pdy)
                cur = (nx, ny)
                moved = True
                break
        if not moved:
            return None  # isolated pixel
        if cur == start and back == b0:
            return chain
        chain.append(cur)
    return chain


def _simplify_closed(pts, tol):
    """Douglas-Peucker on a closed polygon (keeps a stable anchor pair)."""
    if tol <= 0 or len(pts) <= 3:
        return pts
    # Anchor at index 0 and the farthest point from it.
    d = np.linalg.norm(pts - pts[0], axis=1)
    k = int(np.argmax(d))
    if k == 0:
        return pts
    first = _dp(pts[: k + 1], tol)
    second = _dp(np.vstack([pts[k:], pts[:1]]), tol)
    return np.vstack([first[:-1], second[:-1]])


def _dp(pts, tol):
    if len(pts) <= 2:
        return pts
    a, b = pts[0], pts[-1]
    ab = b - a
    nrm = np.hypot(*ab)
    if nrm < 1e-12:
        d = np.linalg.norm(pts - a, axis=1)
    else:
        d = np.abs((pts[:, 0] - a[0]) * ab[1] - (pts[:, 1] - a[1]) * ab[0]) / nrm
    i = int(np.argmax(d[1:-1])) + 1 if len(pts) > 2 else 0
    if len(pts) > 2 and d[i] > tol:
        left = _dp(pts[: i + 1], tol)
        right = _dp(pts[i:], tol)
        return np.vstack([left[:-1], right])
    return np.vstack([a, b])


# ---------------------------------------------------------------------------
# Buffer export
# ---------------------------------------------------------------------------


def save_png(rgb, path):
    """Save an (H, W, 3) float image in [0, 1] as PNG."""
    arr = np.clip(np.asarray(rgb) * 255.0 + 0.5, 0, 255).astype(np.uint8)
    PILImage.fromarray(arr, mode="RGB").save(path, format="PNG")


def load_png(path):
    """Load an image file as (H, W, 3) float RGB in [0, 1]."""
    img = PILImage.open(path).convert("RGB")
    return np.asarray(img, dtype=np.float64) / 255.0


def save_depth_pgm(frame: FrameData, path):
    """Normalized depth as a binary PGM (debug aid); background is 255."""
    out = np.full((frame.height, frame.width), 255, dtype=np.uint8)
    if frame.mask.any():
        d = frame.depth[frame.mask]
        lo, hi = float(d.min()), float(d.max())
        span = hi - lo if hi > lo else 1.0
        out[frame.mask] = np.clip(
            (frame.depth[frame.mask] - lo) / span * 254.0, 0, 254
        ).astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(f"P5\n{frame.width} {frame.height}\n255\n".encode())
        fh.write(out.tobytes())
