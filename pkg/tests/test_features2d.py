import math

import numpy as np
import pytest
from scipy import ndimage

from vantage.errors import DegenerateInputError
from vantage.features2d import (
    FEATURE2D_COLUMNS,
    blur_degree,
    brightness_contrast,
    color_features,
    composition_thirds,
    extract_2d,
    hog_features,
    hsv_features,
    rgb_to_hsv,
    vanishing_line_angles,
)
from vantage.geometry import Camera
from vantage.primitives import make_building
from vantage.rasterize import render_shaded


def constant_image(color, h=32, w=32):
    return np.broadcast_to(np.asarray(color, dtype=float), (h, w, 3)).copy()


def building_photo(wh=256, eye=(5.0, 3.0, 6.0)):
    mesh = make_building()
    cam = Camera.look_at(
        eye=eye, target=mesh.centroid(), up=[0, 1, 0],
        fx=wh * 0.9, fy=wh * 0.9, cx=wh / 2, cy=wh / 2, width=wh, height=wh,
    )
    frame = render_shaded(mesh, cam, light_direction=[0.4, 0.8, 0.5])
    return frame.rgb, frame.mask


class TestColorFeatures:
    def test_constant(self):
        f = color_features(constant_image([0.4, 0.5, 0.6]))
        assert f[0] == pytest.approx(0.0, abs=1e-12)
        assert f[1] == pytest.approx(0.0, abs=1e-12)
        assert np.allclose(f[2:], [0.4, 0.5, 0.6])

    def test_two_even_bins(self):
        img = np.zeros((4, 4, 3))
        img[:, 2:] = 0.99  # bin (7,7,7)
        f = color_features(img)
        assert f[0] == pytest.approx(math.log(2), abs=1e-12)
        assert f[1] == pytest.approx(0.5, abs=1e-12)

    def test_uniform_512_bins(self):
        centers = (np.arange(8) + 0.5) / 8.0
        combos = np.array(
            [[r, g, b] for r in centers for g in centers for b in centers]
        )
        img = combos.reshape(32, 16, 3)
        f = color_features(img)
        assert f[1] == pytest.approx(1.0 - 1.0 / 512.0, abs=1e-12)
        assert f[0] == pytest.approx(math.log(512), abs=1e-12)


class TestBrightnessContrast:
    def test_black(self):
        b, c = brightness_contrast(constant_image([0, 0, 0]))
        assert b == 0.0
        assert c == pytest.approx(0.0, abs=1e-12)

    def test_half_black_half_white(self):
        img = np.zeros((8, 8, 3))
        img[:, 4:] = 1.0
        b, c = brightness_contrast(img)
        assert b == pytest.approx(0.5)
        assert c == pytest.approx(1.0)

    def test_constant_gray(self):
        b, c = brightness_contrast(constant_image([0.5, 0.5, 0.5]))
        assert b == pytest.approx(0.5)
        assert c == pytest.approx(0.0, abs=1e-12)


class TestBlur:
    def test_constant_only_dc(self):
        img = constant_image([0.5, 0.5, 0.5], 32, 32)
        assert blur_degree(img) == pytest.approx(1.0 - 1.0 / (32 * 32), abs=1e-12)

    def test_noise_is_sharp(self, rng):
        vals = []
        for _ in range(20):
            img = rng.uniform(size=(64, 64, 3))
            vals.append(blur_degree(img))
        assert max(vals) < 0.5

    def test_smoothing_increases_blur(self, rng):
        corpus = [building_photo(128)[0],
                  building_photo(128, eye=(-4.0, 2.0, 5.0))[0],
                  rng.uniform(size=(96, 96, 3))]
        for img in corpus:
            smoothed = np.stack(
                [ndimage.gaussian_filter(img[..., k], sigma=2.0) for k in range(3)],
                axis=-1,
            )
            assert blur_degree(smoothed) > blur_degree(img)


class TestHsvFeatures:
    def test_saturated_red(self):
        # value 0.8 passes the gate; hue 0 occupies one bin
        f = hsv_features(constant_image([0.8, 0.0, 0.0]))
        h_c, hue_hist, h_e = f[0], f[1:21], f[21]
        assert h_c == 1.0
        assert h_e == pytest.approx(0.0, abs=1e-12)
        assert hue_hist.sum() == pytest.approx(1.0)

    def test_two_equal_hues(self):
        img = np.zeros((4, 4, 3))
        img[:, :2] = [0.8, 0.0, 0.0]   # hue 0.0
        img[:, 2:] = [0.0, 0.8, 0.0]   # hue 1/3
        f = hsv_features(img)
        assert f[0] == 2.0
        assert f[21] == pytest.approx(math.log(2), abs=1e-12)

    def test_grayscale_gate_excludes_all(self):
        f = hsv_features(constant_image([0.5, 0.5, 0.5]))
        assert f[0] == 0.0
        assert f[21] == 0.0
        assert np.allclose(f[1:21], 0.0)

    def test_rgb_to_hsv_matches_colorsys(self, rng):
        import colorsys

        img = rng.uniform(size=(5, 7, 3))
        hsv = rgb_to_hsv(img)
        for i in range(5):
            for j in range(7):
                exp = colorsys.rgb_to_hsv(*img[i, j])
                assert np.allclose(hsv[i, j], exp, atol=1e-12)


class TestHog:
    def test_constant_zero(self):
        assert np.allclose(hog_features(constant_image([0.3, 0.3, 0.3], 64, 64)), 0.0)

    def test_vertical_step_edge(self):
        img = np.zeros((128, 128, 3))
        img[:, 64:] = 1.0
        f = hog_features(img).reshape(4, 9)
        for quadrant in f:
            total = quadrant.sum()
            if total > 0:
                assert quadrant[0] / total > 0.9

    def test_rotation_is_bin_shift(self):
        # edge at orientation 0; a quarter turn lands exactly in bin 4
        img = np.zeros((128, 128, 3))
        img[:, 64:] = 1.0
        f0 = hog_features(img).reshape(4, 9).sum(axis=0)
        f90 = hog_features(np.rot90(img).copy()).reshape(4, 9).sum(axis=0)
        f0 = f0 / f0.sum()
        f90 = f90 / f90.sum()
        assert np.abs(f90 - np.roll(f0, 4)).sum() < 0.05


def draw_segments(canvas, cam, p0s, p1s):
    # anti-aliased strokes: intensity falls off with distance to the
    # segment, so gradient orientations follow the true line normal
    h, w = canvas.shape[:2]
    for a, b in zip(p0s, p1s):
        uv, z = cam.project(np.array([a, b]))
        if np.any(z <= 0.05):
            continue
        p, q = uv[0], uv[1]
        x0 = max(int(min(p[0], q[0]) - 4), 0)
        x1 = min(int(max(p[0], q[0]) + 5), w)
        y0 = max(int(min(p[1], q[1]) - 4), 0)
        y1 = min(int(max(p[1], q[1]) + 5), h)
        if x1 <= x0 or y1 <= y0:
            continue
        X, Y = np.meshgrid(np.arange(x0, x1) + 0.5, np.arange(y0, y1) + 0.5)
        ab = q - p
        denom = float(ab @ ab)
        t = np.clip(((X - p[0]) * ab[0] + (Y - p[1]) * ab[1]) / denom, 0, 1)
        dx = X - (p[0] + t * ab[0])
        dy = Y - (p[1] + t * ab[1])
        val = np.clip(2.0 - np.hypot(dx, dy), 0.0, 1.0)
        region = canvas[y0:y1, x0:x1]
        np.maximum(region, val[..., None], out=region)
    return canvas


def grid_box_image(wh=512):
    """Wireframe box with grid-subdivided faces and its camera."""
    cam = Camera.look_at(
        eye=[2.8, 2.0, 4.2], target=[0, 0, 0], up=[0, 1, 0],
        fx=wh * 1.2, fy=wh * 1.2, cx=wh / 2, cy=wh / 2, width=wh, height=wh,
    )
    ticks = np.linspace(-1, 1, 4)
    p0s, p1s = [], []
    # lines along x on the z=+1 and y=+1 planes (and so on per axis)
    for t in ticks:
        p0s += [[-1, t, 1], [-1, 1, t]]
        p1s += [[1, t, 1], [1, 1, t]]
        p0s += [[t, -1, 1], [t, 1, -1]]
        p1s += [[t, 1, 1], [t, 1, 1]]
        p0s += [[1, t, -1], [t, 1, -1]]
        p1s += [[1, t, 1], [t, 1, 1]]
    canvas = np.zeros((wh, wh, 3))
    draw_segments(canvas, cam, p0s, p1s)
    return canvas, cam


def analytic_vp_angles(cam):
    """Pairwise angles of center-to-VP lines for the three world axes."""
    K = cam.intrinsic_matrix()
    R = cam.extrinsics.rotation
    center = np.array([cam.cx, cam.cy])
    dirs = []
    for axis in np.eye(3):
        vp = K @ (R @ axis)
        if abs(vp[2]) < 1e-9:
            d = vp[:2]
        else:
            d = vp[:2] / vp[2] - center
        dirs.append(d / np.linalg.norm(d))
    return [
        math.acos(min(1.0, abs(float(dirs[i] @ dirs[j]))))
        for i, j in [(0, 1), (0, 2), (1, 2)]
    ]


class TestVanishingLines:

    def test_blank_image_flagged(self):
        res = vanishing_line_angles(np.zeros((64, 64, 3)))
        assert res.degenerate
        assert res.n_clusters == 0
        assert np.allclose(res.angles, 0.0)

    def test_horizontal_stripes_single_cluster(self):
        img = np.zeros((256, 256, 3))
        for y0 in range(0, 256, 32):
            img[y0 : y0 + 16] = 1.0
        res = vanishing_line_angles(img)
        assert res.degenerate
        assert res.n_clusters == 1
        assert np.allclose(res.angles, 0.0)

    def test_grid_box_matches_analytic_vps(self):
        img, cam = grid_box_image()
        res = vanishing_line_angles(img, seed=0)
        assert not res.degenerate
        expected = analytic_vp_angles(cam)
        assert np.allclose(
            np.sort(res.angles), np.sort(expected), atol=math.radians(5)
        )


class TestCompositionThirds:
    def test_centroid_on_power_point(self):
        mask = np.zeros((60, 60), dtype=bool)
        mask[19:21, 19:21] = True  # centroid exactly at (20, 20) = (W/3, H/3)
        img = np.zeros((60, 60, 3))
        assert composition_thirds(img, mask) == pytest.approx(1.0, abs=1e-12)

    def test_center_of_square_image(self):
        mask = np.ones((60, 60), dtype=bool)
        img = np.zeros((60, 60, 3))
        assert composition_thirds(img, mask) == pytest.approx(2.0 / 3.0, abs=1e-12)

    def test_corner_is_minimal(self):
        img = np.zeros((60, 60, 3))
        scores = {}
        for y in range(0, 60, 6):
            for x in range(0, 60, 6):
                mask = np.zeros((60, 60), dtype=bool)
                mask[y, x] = True
                scores[(x, y)] = composition_thirds(img, mask)
        assert scores[(0, 0)] == min(scores.values())

    def test_empty_mask_rejected(self):
        with pytest.raises(DegenerateInputError):
            composition_thirds(np.zeros((8, 8, 3)), np.zeros((8, 8), dtype=bool))


class TestExtract2d:
    def test_vector_length_and_columns(self):
        img, mask = building_photo(128)
        f = extract_2d(img, mask)
        assert f.vector.shape == (91,)
        assert len(FEATURE2D_COLUMNS) == 91

    def test_constant_image_values(self):
        img = constant_image([0.25, 0.5, 0.75], 64, 64)
        f = extract_2d(img, np.ones((64, 64), dtype=bool))
        v = f.vector
        assert v[0] == pytest.approx(0.0, abs=1e-12)          # color entropy
        assert v[1] == pytest.approx(0.0, abs=1e-12)          # color distribution
        assert np.allclose(v[2:5], [0.25, 0.5, 0.75])
        assert v[6] == pytest.approx(0.0, abs=1e-12)          # contrast
        assert v[7] == pytest.approx(1.0 - 1.0 / 4096, abs=1e-12)  # blur
        assert np.allclose(v[44:80], 0.0)                     # hog
        assert f.vl_clusters == 0

    def test_deterministic(self):
        img, mask = building_photo(128)
        a = extract_2d(img, mask).vector
        b = extract_2d(img, mask).vector
        assert np.array_equal(a, b)

    def test_histogram_invariants(self, rng):
        img = rng.uniform(size=(40, 40, 3))
        f = extract_2d(img, np.ones((40, 40), dtype=bool))
        hue_hist = f.hsv[1:21]
        sat_hist = f.hsv[22:42]
        for hist in (hue_hist, sat_hist):
            assert np.all(hist >= 0)
            assert hist.sum() == pytest.approx(1.0, abs=1e-9) or hist.sum() == 0.0
        assert f.hsv[21] >= 0 and f.hsv[42] >= 0
        assert f.color[0] >= 0
        assert 0.0 <= f.thirds <= 1.0

    def test_resolution_robustness(self):
        # photo-like (band-limited) corpus image; box-average 2x downsample
        img, mask = building_photo(256)
        img = np.stack(
            [ndimage.gaussian_filter(img[..., k], sigma=1.5) for k in range(3)],
            axis=-1,
        )
        small = img.reshape(128, 2, 128, 2, 3).mean(axis=(1, 3))
        small_mask = mask.reshape(128, 2, 128, 2).mean(axis=(1, 3)) > 0.5
        f_big = extract_2d(img, mask).vector
        f_small = extract_2d(small, small_mask).vector
        keep = np.ones(91, dtype=bool)
        keep[80:83] = False  # vanishing angles (spec exclusion)
        keep[8] = False      # hue count: integer-valued, not normalized
        assert np.max(np.abs(f_big[keep] - f_small[keep])) < 0.1
