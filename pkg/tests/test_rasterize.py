import math

import numpy as np
import pytest

from vantage.errors import DegenerateInputError
from vantage.geometry import Camera, RigidTransform
from vantage.meshio import Mesh
from vantage.primitives import make_box, make_quad
from vantage.rasterize import (
    BACKGROUND,
    FrameData,
    extract_silhouette,
    rasterize,
    render_shaded,
)


def frontal_camera(f=400.0, wh=512, dist=0.0):
    """Camera at origin looking down +z (world == camera frame)."""
    ext = RigidTransform(np.eye(3), np.array([0.0, 0.0, dist]))
    return Camera(fx=f, fy=f, cx=wh / 2, cy=wh / 2, width=wh, height=wh,
                  extrinsics=ext)


def square_at_depth(d, side=1.0):
    h = side / 2
    return make_quad([-h, -h, d], [h, -h, d], [h, h, d], [-h, h, d])


class TestRasterize:
    def test_triangle_behind_camera_empty(self):
        mesh = Mesh(
            np.array([[0, 0, -1.0], [1, 0, -1.0], [0, 1, -1.0]]),
            np.array([[0, 1, 2]]),
        )
        frame = rasterize(mesh, frontal_camera())
        assert not frame.mask.any()

    def test_pinhole_coverage_formula(self):
        f, wh, d = 400.0, 512, 2.0
        frame = rasterize(square_at_depth(d), frontal_camera(f, wh))
        expected = (f / d) ** 2  # area 1.0 projected
        assert frame.covered_count() == pytest.approx(expected, rel=0.02)

    def test_zbuffer_overlap(self):
        near_q = square_at_depth(1.0, side=0.5)
        far_q = square_at_depth(2.0, side=0.5)
        verts = np.vstack([near_q.vertices, far_q.vertices])
        faces = np.vstack([near_q.faces, far_q.faces + 4])
        frame = rasterize(Mesh(verts, faces), frontal_camera())
        overlap = frame.mask & (frame.depth < 1.5)
        assert overlap.any()
        # far quad projects smaller; every pixel covered by both shows the near one
        assert np.all(frame.depth[frame.mask] <= 2.0 + 1e-9)
        assert set(np.unique(frame.face_id[frame.mask])) <= {0, 1}
        # near faces are ids 0 and 1
        near_pix = np.isin(frame.face_id, [0, 1])
        assert np.all(frame.depth[near_pix] == pytest.approx(1.0))

    def test_empty_mesh_rejected(self):
        with pytest.raises(DegenerateInputError):
            rasterize(Mesh(np.zeros((0, 3)), np.zeros((0, 3), dtype=int)),
                      frontal_camera())

    def test_near_plane_clipping(self):
        # Triangle crossing the camera plane: visible part still rasterizes.
        mesh = Mesh(
            np.array([[0.0, -0.2, 2.0], [0.1, 0.2, 2.0], [0.0, 0.0, -1.0]]),
            np.array([[0, 1, 2]]),
        )
        frame = rasterize(mesh, frontal_camera())
        assert frame.mask.any()
        assert np.all(frame.depth[frame.mask] > 0)

    def test_depth_monotonicity(self):
        cam = frontal_camera()
        box = make_box(center=(0, 0, 3.0), size=(1, 1, 1))
        f1 = rasterize(box, cam)
        f2 = rasterize(box.transformed(lambda v: v + [0, 0, 1.0]), cam)
        both = f1.mask & f2.mask
        assert both.any()
        assert np.all(f2.depth[both] > f1.depth[both])

    def test_mask_face_depth_consistency(self):
        frame = rasterize(make_box(center=(0, 0, 4.0)), frontal_camera())
        assert np.array_equal(frame.mask, frame.face_id != BACKGROUND)
        assert np.array_equal(frame.mask, np.isfinite(frame.depth))


class TestSilhouette:
    @staticmethod
    def mask_frame(mask):
        H, W = mask.shape
        depth = np.where(mask, 1.0, np.inf)
        fid = np.where(mask, 0, BACKGROUND)
        return FrameData(W, H, depth, fid.astype(np.int64), mask.astype(bool))

    def test_empty_mask(self):
        assert extract_silhouette(self.mask_frame(np.zeros((8, 8), bool))) == []

    def test_square_perimeter_and_extrema(self):
        s = 40
        mask = np.zeros((64, 64), bool)
        mask[10 : 10 + s, 12 : 12 + s] = True
        polys = extract_silhouette(self.mask_frame(mask))
        assert len(polys) == 1
        poly = polys[0]
        assert poly.length() == pytest.approx(4 * (s - 1), abs=1e-9)
        turns = poly.turning_angles()
        assert np.sum(turns) == pytest.approx(2 * math.pi, abs=1e-6)
        # four right-angle corners
        assert np.sum(np.abs(turns) > 0.2) == 4

    def test_disk_length(self):
        for rho in [25, 40, 60]:
            n = 2 * rho + 21
            yy, xx = np.mgrid[0:n, 0:n]
            c = n / 2.0
            mask = (xx + 0.5 - c) ** 2 + (yy + 0.5 - c) ** 2 <= rho**2
            polys = extract_silhouette(self.mask_frame(mask))
            assert len(polys) == 1
            assert polys[0].length() == pytest.approx(2 * math.pi * rho, rel=0.05)
            assert np.sum(polys[0].turning_angles()) == pytest.approx(
                2 * math.pi, abs=1e-6
            )

    def test_two_components(self):
        mask = np.zeros((32, 32), bool)
        mask[2:10, 2:10] = True
        mask[20:30, 18:30] = True
        polys = extract_silhouette(self.mask_frame(mask))
        assert len(polys) == 2

    def test_rendered_box_turning(self):
        frame = rasterize(make_box(center=(0, 0, 4.0)), frontal_camera())
        polys = extract_silhouette(frame)
        assert len(polys) == 1
        assert np.sum(polys[0].turning_angles()) == pytest.approx(
            2 * math.pi, abs=1e-6
        )


class TestShaded:
    def test_normal_perpendicular_light_is_ambient(self):
        # quad in the xz plane (normal along y), camera below looking up +y
        mesh = make_quad([-1, 0, -1], [1, 0, -1], [1, 0, 1], [-1, 0, 1])
        cam = Camera.look_at(
            eye=[0, -5, 0], target=[0, 0, 0], up=[0, 0, 1],
            fx=300, fy=300, cx=128, cy=128, width=256, height=256,
        )
        frame = render_shaded(mesh, cam, light_direction=[0, 0, 1], ambient=0.25)
        vals = frame.rgb[frame.mask]
        assert vals.size > 0
        assert np.allclose(vals, 0.25, atol=1e-12)

    def test_normal_parallel_light_is_max(self):
        mesh = square_at_depth(3.0)
        frame = render_shaded(mesh, frontal_camera(), light_direction=[0, 0, 1])
        assert np.allclose(frame.rgb[frame.mask], 1.0, atol=1e-12)

    def test_deterministic(self):
        mesh = make_box(center=(0.2, -0.1, 4.0))
        cam = frontal_camera()
        a = render_shaded(mesh, cam, [1, 2, 3])
        b = render_shaded(mesh, cam, [1, 2, 3])
        assert np.array_equal(a.rgb, b.rgb)
        assert np.array_equal(a.depth, b.depth)
        assert np.array_equal(a.face_id, b.face_id)


class TestExports:
    def test_depth_pgm(self, tmp_path):
        from vantage.rasterize import save_depth_pgm

        frame = rasterize(make_box(center=(0, 0, 4.0)), frontal_camera(wh=64))
        path = tmp_path / "depth.pgm"
        save_depth_pgm(frame, path)
        raw = path.read_bytes()
        assert raw.startswith(b"P5\n64 64\n255\n")
        assert len(raw) == len(b"P5\n64 64\n255\n") + 64 * 64

    def test_png_roundtrip(self, tmp_path):
        from vantage.rasterize import load_png, save_png

        rng = np.random.default_rng(0)
        img = np.round(rng.uniform(size=(16, 16, 3)) * 255) / 255.0
        path = tmp_path / "img.png"
        save_png(img, path)
        loaded = load_png(path)
        assert np.allclose(loaded, img, atol=1e-9)
