"""Image-feature block: color, tone, blur, HSV statistics, HOG,
vanishing-line angles, and rule-of-thirds composition (91 values total).

Images are (H, W, 3) float arrays with values in [0, 1]. All operations
are pure and deterministic; the vanishing-point search uses its own seeded
RNG. Entropies are natural-log and non-negative; histogram blocks are
normalized to unit mass (or all zero on empty support).

Feature vector layout (91):
    color(5) | brightness(1) | contrast(1) | blur(1) |
    hsv(43: hue_count, hue_hist[20], hue_entropy, sat_hist[20], sat_entropy) |
    hog(36) | vanishing_angles(3) | thirds(1)
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .errors import DegenerateInputError

LUMA = np.array([0.299, 0.587, 0.114])

# Hue statistics gate and histogram geometry.
HUE_SAT_MIN = 0.2
HUE_VAL_RANGE = (0.15, 0.95)
HUE_BINS = 20
HUE_COUNT_ALPHA = 0.05
# DFT magnitude threshold for the sharpness measure ([0,255] luminance).
BLUR_THRESHOLD = 5.0
# Blur is measured on a capped raster so the score does not drift with
# image resolution (the threshold is absolute).
BLUR_ANALYSIS_SIZE = 128
# HOG geometry: 9 unsigned orientation bins x 2x2 spatial quadrants.
HOG_SIZE = 128
HOG_BINS = 9
# Vanishing-line detection.
VL_GRAD_THRESH = 0.08
VL_MIN_SEG_LEN = 10.0
VL_MIN_SUPPORT = 5
VL_ANGLE_TOL = math.radians(4.0)
VL_RANSAC_ITERS = 300
VL_MAX_SEGMENTS = 160

FEATURE2D_COLUMNS = (
    ["color_entropy", "color_distribution", "mean_r", "mean_g", "mean_b",
     "brightness", "contrast", "blur", "hue_count"]
    + [f"hue_hist_{i:02d}" for i in range(HUE_BINS)]
    + ["hue_entropy"]
    + [f"sat_hist_{i:02d}" for i in range(HUE_BINS)]
    + ["sat_entropy"]
    + [f"hog_{i:02d}" for i in range(36)]
    + ["vl_angle_ab", "vl_angle_ac", "vl_angle_bc", "thirds"]
)
assert len(FEATURE2D_COLUMNS) == 91


def as_image(arr):
    """Validate and clamp an array into image form."""
    img = np.asarray(arr, dtype=float)
    if img.ndim != 3 or img.shape[2] != 3 or img.shape[0] < 1 or img.shape[1] < 1:
        raise ValueError(f"image must be (H, W, 3), got {img.shape}")
    return np.clip(img, 0.0, 1.0)


def luminance(img):
    return img @ LUMA


def _entropy(p):
    nz = p[p > 0]
    return float(-(nz * np.log(nz)).sum()) if nz.size else 0.0


# ---------------------------------------------------------------------------
# Individual feature groups
# ---------------------------------------------------------------------------


def color_features(img):
    """(entropy, distribution, mean_r, mean_g, mean_b) of the joint RGB histogram."""
    img = as_image(img)
    q = np.minimum((img * 8).astype(int), 7)
    joint = q[..., 0] * 64 + q[..., 1] * 8 + q[..., 2]
    hist = np.bincount(joint.ravel(), minlength=512).astype(float)
    p = hist / hist.sum()
    c_e = _entropy(p)
    c_d = float(1.0 - (p * p).sum())
    means = img.reshape(-1, 3).mean(axis=0)
    return np.array([c_e, c_d, means[0], means[1], means[2]])


def brightness_contrast(img):
    """Mean luminance and the width of the smallest 98%-mass luminance band."""
    img = as_image(img)
    y = luminance(img)
    brightness = float(y.mean())
    hist = np.bincount(
        np.minimum((y * 256).astype(int), 255).ravel(), minlength=256
    ).astype(float)
    p = hist / hist.sum()
    cum = np.concatenate([[0.0], np.cumsum(p)])
    target = 0.98
    best = 255
    lo = 0
    for hi in range(256):
        # advance lo while the window [lo, hi] still holds >= target mass
        while cum[hi + 1] - cum[lo] >= target:
            best = min(best, hi - lo)
            lo += 1
    return np.array([brightness, best / 255.0])


def blur_degree(img):
    """1 - fraction of DFT bins above threshold; higher means blurrier."""
    img = as_image(img)
    y = luminance(img) * 255.0
    h, w = y.shape
    if h > BLUR_ANALYSIS_SIZE or w > BLUR_ANALYSIS_SIZE:
        y = resize_bilinear(
            y, min(h, BLUR_ANALYSIS_SIZE), min(w, BLUR_ANALYSIS_SIZE)
        )
    mag = np.abs(np.fft.fft2(y))
    passed = int((mag > BLUR_THRESHOLD).sum())
    return float(1.0 - passed / y.size)


def rgb_to_hsv(img):
    """Vectorized RGB -> HSV, all channels in [0, 1]."""
    r, g, b = img[..., 0], img[..., 1], img[..., 2]
    v = img.max(axis=-1)
    c = v - img.min(axis=-1)
    s = np.where(v > 0, c / np.where(v > 0, v, 1.0), 0.0)
    h = np.zeros_like(v)
    safe = np.where(c > 0, c, 1.0)
    idx = (c > 0) & (v == r)
    h[idx] = ((g - b)[idx] / safe[idx]) % 6.0
    idx = (c > 0) & (v == g) & (v != r)
    h[idx] = (b - r)[idx] / safe[idx] + 2.0
    idx = (c > 0) & (v == b) & (v != r) & (v != g)
    h[idx] = (r - g)[idx] / safe[idx] + 4.0
    return np.stack([h / 6.0, s, v], axis=-1)


def hsv_features(img):
    """Hue count, hue histogram+entropy (gated pixels), saturation histogram+entropy."""
    img = as_image(img)
    hsv = rgb_to_hsv(img)
    h, s, v = hsv[..., 0], hsv[..., 1], hsv[..., 2]
    gate = (s > HUE_SAT_MIN) & (v >= HUE_VAL_RANGE[0]) & (v <= HUE_VAL_RANGE[1])
    if gate.any():
        bins = np.minimum((h[gate] * HUE_BINS).astype(int), HUE_BINS - 1)
        hue_hist = np.bincount(bins, minlength=HUE_BINS).astype(float)
        hue_hist /= hue_hist.sum()
        h_c = float((hue_hist >= HUE_COUNT_ALPHA * hue_hist.max()).sum())
        h_e = _entropy(hue_hist)
    else:
        hue_hist = np.zeros(HUE_BINS)
        h_c = 0.0
        h_e = 0.0
    sbins = np.minimum((s * HUE_BINS).astype(int), HUE_BINS - 1)
    sat_hist = np.bincount(sbins.ravel(), minlength=HUE_BINS).astype(float)
    sat_hist /= sat_hist.sum()
    s_e = _entropy(sat_hist)
    return np.concatenate([[h_c], hue_hist, [h_e], sat_hist, [s_e]])


def resize_bilinear(arr, out_h, out_w):
    """Plain bilinear resampling of a 2D array (align-corners-false)."""
    in_h, in_w = arr.shape
    ys = (np.arange(out_h) + 0.5) * in_h / out_h - 0.5
    xs = (np.arange(out_w) + 0.5) * in_w / out_w - 0.5
    y0 = np.clip(np.floor(ys).astype(int), 0, in_h - 1)
    x0 = np.clip(np.floor(xs).astype(int), 0, in_w - 1)
    y1 = np.clip(y0 + 1, 0, in_h - 1)
    x1 = np.clip(x0 + 1, 0, in_w - 1)
    wy = np.clip(ys - y0, 0.0, 1.0)[:, None]
    wx = np.clip(xs - x0, 0.0, 1.0)[None, :]
    a = arr[np.ix_(y0, x0)]
    b = arr[np.ix_(y0, x1)]
    c = arr[np.ix_(y1, x0)]
    d = arr[np.ix_(y1, x1)]
    return (a * (1 - wy) * (1 - wx) + b * (1 - wy) * wx
            + c * wy * (1 - wx) + d * wy * wx)


def hog_features(img):
    """9 unsigned orientation bins per image quadrant, L2-normalized."""
    img = as_image(img)
    y = resize_bilinear(luminance(img), HOG_SIZE, HOG_SIZE)
    gy, gx = np.gradient(y)
    mag = np.hypot(gx, gy)
    ori = np.arctan2(gy, gx) % math.pi
    bins = np.minimum((ori / math.pi * HOG_BINS).astype(int), HOG_BINS - 1)
    half = HOG_SIZE // 2
    out = []
    for qy in (slice(0, half), slice(half, HOG_SIZE)):
        for qx in (slice(0, half), slice(half, HOG_SIZE)):
            hist = np.bincount(
                bins[qy, qx].ravel(), weights=mag[qy, qx].ravel(),
                minlength=HOG_BINS,
            )
            norm = np.linalg.norm(hist)
            out.append(hist / max(norm, 1e-6))
    return np.concatenate(out)


# --- vanishing lines -------------------------------------------------------


@dataclass
class LineSegment:
    center: np.ndarray      # (x, y)
    direction: np.ndarray   # unit (dx, dy)
    length: float

    def homogeneous_line(self):
        p1 = np.array([*(self.center - self.direction * self.length / 2), 1.0])
        p2 = np.array([*(self.center + self.direction * self.length / 2), 1.0])
        return np.cross(p1, p2)


@dataclass
class VanishingLines:
    angles: np.ndarray          # 3 pairwise angles in [0, pi/2]
    n_clusters: int             # clusters with enough support (0..3)
    degenerate: bool = field(init=False)

    def __post_init__(self):
        self.degenerate = self.n_clusters < 3


def detect_segments(img, grad_thresh=VL_GRAD_THRESH, min_len=VL_MIN_SEG_LEN):
    """Line segments from orientation-consistent edge components."""
    y = luminance(as_image(img))
    gy, gx = np.gradient(y)
    mag = np.hypot(gx, gy)
    edges = mag > grad_thresh
    if not edges.any():
        return []
    ori = np.arctan2(gy, gx) % math.pi
    segments = []
    n_bins = 8
    structure = np.ones((3, 3), dtype=int)
    for b in range(n_bins):
        lo = b * math.pi / n_bins
        hi = lo + math.pi / n_bins
        # half-bin overlap so segments straddling a boundary are not split
        lo2 = (lo - math.pi / (2 * n_bins)) % math.pi
        in_bin = edges & (
            ((ori >= lo) & (ori < hi))
            | (((ori - lo2) % math.pi) < math.pi / n_bins)
        )
        labels, n = ndimage.label(in_bin, structure=structure)
        if n == 0:
            continue
        for sl_idx, sl in enumerate(ndimage.find_objects(labels), start=1):
            ys, xs = np.nonzero(labels[sl] == sl_idx)
            if len(xs) < min_len:
                continue
            pts = np.column_stack(
                [xs + sl[1].start + 0.5, ys + sl[0].start + 0.5]
            ).astype(float)
            center = pts.mean(axis=0)
            centered = pts - center
            cov = centered.T @ centered / len(pts)
            evals, evecs = np.linalg.eigh(cov)
            if evals[1] < 1e-9 or evals[0] / evals[1] > 0.15:
                continue  # not elongated
            direction = evecs[:, 1]
            extent = centered @ direction
            length = float(extent.max() - extent.min())
            if length < min_len:
                continue
            segments.append(LineSegment(center, direction, length))
    segments.sort(key=lambda s: -s.length)
    return segments[:VL_MAX_SEGMENTS]


def _segment_supports_vp(seg: LineSegment, vp, tol=VL_ANGLE_TOL):
    """True if the segment's direction points at the (homogeneous) VP."""
    if abs(vp[2]) < 1e-9:
        to_vp = vp[:2]
    else:
        to_vp = vp[:2] / vp[2] - seg.center
    n = np.hypot(*to_vp)
    if n < 1e-9:
        return True
    cosang = abs(float(np.dot(to_vp / n, seg.direction)))
    return math.acos(min(1.0, cosang)) < tol


def vanishing_line_angles(img, seed=0):
    """Angles between the three dominant vanishing directions.

    RANSAC over pairwise segment intersections; clusters supported by
    fewer than VL_MIN_SUPPORT segments are dropped and missing angle
    entries are zero-filled with the result flagged degenerate.
    """
    img = as_image(img)
    segments = detect_segments(img)
    rng = np.random.default_rng(seed)
    h, w = img.shape[:2]
    center = np.array([w / 2.0, h / 2.0])
    vps = []
    remaining = list(segments)
    for _ in range(3):
        if len(remaining) < VL_MIN_SUPPORT:
            break
        lines = np.array([s.homogeneous_line() for s in remaining])
        best_vp, best_inliers = None, []
        for _ in range(VL_RANSAC_ITERS):
            i, j = rng.integers(0, len(remaining), size=2)
            if i == j:
                continue
            vp = np.cross(lines[i], lines[j])
            if np.linalg.norm(vp) < 1e-12:
                continue
            inliers = [
                k for k, s in enumerate(remaining) if _segment_supports_vp(s, vp)
            ]
            if len(inliers) > len(best_inliers):
                best_vp, best_inliers = vp, inliers
        if best_vp is None or len(best_inliers) < VL_MIN_SUPPORT:
            break
        vps.append(best_vp)
        remaining = [s for k, s in enumerate(remaining) if k not in set(best_inliers)]
    n_clusters = len(vps)
    angles = np.zeros(3)
    if n_clusters == 3:
        dirs = []
        for vp in vps:
            if abs(vp[2]) < 1e-9:
                d = vp[:2]
            else:
                d = vp[:2] / vp[2] - center
            n = np.hypot(*d)
            dirs.append(d / n if n > 1e-9 else np.array([1.0, 0.0]))
        pairs = [(0, 1), (0, 2), (1, 2)]
        for idx, (i, j) in enumerate(pairs):
            cosang = abs(float(np.dot(dirs[i], dirs[j])))
            angles[idx] = math.acos(min(1.0, cosang))
    return VanishingLines(angles, n_clusters)


# --- composition -----------------------------------------------------------


def composition_thirds(img, mask):
    """Closeness of the foreground centroid to a rule-of-thirds power point."""
    img = as_image(img)
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != img.shape[:2]:
        raise ValueError("mask must match image dimensions")
    if not mask.any():
        raise DegenerateInputError("foreground mask is empty")
    h, w = mask.shape
    ys, xs = np.nonzero(mask)
    centroid = np.array([xs.mean() + 0.5, ys.mean() + 0.5])
    points = np.array(
        [[w / 3, h / 3], [2 * w / 3, h / 3], [w / 3, 2 * h / 3], [2 * w / 3, 2 * h / 3]]
    )
    dmin = float(np.linalg.norm(points - centroid, axis=1).min())
    half_diag = math.hypot(w, h) / 2.0
    return float(np.clip(1.0 - dmin / half_diag, 0.0, 1.0))


def saliency_mask(img):
    """Foreground by Otsu threshold on a center-surround luminance difference."""
    y = luminance(as_image(img))
    blurred = ndimage.gaussian_filter(y, sigma=max(y.shape) / 16.0)
    diff = np.abs(y - blurred)
    hist, edges = np.histogram(diff.ravel(), bins=256)
    best_t, best_var = 0.0, -1.0
    total = diff.size
    csum = np.cumsum(hist)
    cmean = np.cumsum(hist * (edges[:-1] + edges[1:]) / 2.0)
    for i in range(1, 256):
        w0 = csum[i - 1] / total
        w1 = 1.0 - w0
        if w0 <= 0 or w1 <= 0:
            continue
        m0 = cmean[i - 1] / csum[i - 1]
        m1 = (cmean[-1] - cmean[i - 1]) / (total - csum[i - 1])
        var = w0 * w1 * (m0 - m1) ** 2
        if var > best_var:
            best_var, best_t = var, edges[i]
    mask = diff > best_t
    if not mask.any():
        mask = np.ones_like(mask, dtype=bool)
    return mask


# ---------------------------------------------------------------------------
# Aggregation
# ---------------------------------------------------------------------------


@dataclass
class Feature2D:
    color: np.ndarray        # 5
    brightness: float
    contrast: float
    blur: float
    hsv: np.ndarray          # 43
    hog: np.ndarray          # 36
    vanishing: np.ndarray    # 3
    thirds: float
    vl_clusters: int = 3     # metadata, not part of the vector

    @property
    def vector(self):
        v = np.concatenate(
            [
                self.color,
                [self.brightness, self.contrast, self.blur],
                self.hsv,
                self.hog,
                self.vanishing,
                [self.thirds],
            ]
        )
        assert v.shape == (91,)
        return v


def extract_2d(img, mask=None, seed=0) -> Feature2D:
    """Full 91-value image feature block.

    ``mask`` marks the foreground for the composition feature; when None,
    a luminance-saliency mask is used.
    """
    img = as_image(img)
    if mask is None:
        mask = saliency_mask(img)
    color = color_features(img)
    bc = brightness_contrast(img)
    blur = blur_degree(img)
    hsv = hsv_features(img)
    hog = hog_features(img)
    vl = vanishing_line_angles(img, seed=seed)
    thirds = composition_thirds(img, mask)
    return Feature2D(
        color=color,
        brightness=float(bc[0]),
        contrast=float(bc[1]),
        blur=blur,
        hsv=hsv,
        hog=hog,
        vanishing=vl.angles,
        thirds=thirds,
        vl_clusters=vl.n_clusters,
    )
