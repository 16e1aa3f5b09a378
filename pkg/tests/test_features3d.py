import math

import numpy as np
import pytest

from vantage.errors import InvalidMeshError
from vantage.features3d import (
    FEATURE3D_COLUMNS,
    curvature_field,
    extract_3d,
)
from vantage.geometry import Camera, RigidTransform, rotation_from_axis_angle
from vantage.meshio import Mesh
from vantage.primitives import make_box, make_grid_patch, make_icosphere, make_quad
from vantage.rasterize import rasterize


def unit_cube():
    return make_box(center=(0, 0, 0), size=(1, 1, 1))


def look_cam(eye, target=(0, 0, 0), wh=256, f=None):
    f = f or wh * 0.9
    return Camera.look_at(
        eye=eye, target=target, up=[0, 1, 0],
        fx=f, fy=f, cx=wh / 2, cy=wh / 2, width=wh, height=wh,
    )


class TestCurvature:
    def test_icosphere(self):
        r = 2.0
        mesh = make_icosphere(radius=r, subdivisions=4)
        curv = curvature_field(mesh)
        assert np.allclose(curv.mean, 1.0 / r, rtol=0.05)
        assert np.allclose(curv.gaussian, 1.0 / r**2, rtol=0.05)

    def test_gauss_bonnet(self):
        mesh = make_icosphere(radius=1.3, subdivisions=3)
        curv = curvature_field(mesh)
        assert (curv.gaussian * curv.area).sum() == pytest.approx(
            4 * math.pi, abs=1e-3
        )

    def test_area_sums_to_total(self):
        mesh = make_icosphere(radius=1.0, subdivisions=2)
        curv = curvature_field(mesh)
        assert curv.area.sum() == pytest.approx(mesh.total_area(), rel=0.01)
        assert np.all(curv.area > 0)

    def test_flat_grid_interior(self):
        mesh = make_grid_patch(nx=8, ny=8, size=2.0)
        curv = curvature_field(mesh)
        # interior vertices: all grid vertices not on the outer rim
        nx = ny = 8
        interior = []
        for j in range(ny + 1):
            for i in range(nx + 1):
                if 0 < i < nx and 0 < j < ny:
                    interior.append(j * (nx + 1) + i)
        assert np.all(np.abs(curv.mean[interior]) < 1e-6)
        assert np.all(np.abs(curv.gaussian[interior]) < 1e-6)

    def test_non_manifold_rejected(self):
        verts = np.array(
            [[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1], [0, -1, 0.5]],
            dtype=float,
        )
        faces = np.array([[0, 1, 2], [0, 1, 3], [0, 1, 4]])
        with pytest.raises(InvalidMeshError) as exc:
            curvature_field(Mesh(verts, faces))
        assert (0, 1) in exc.value.edges


class TestGeometricFeatures:
    def test_cube_face_on_surface(self):
        mesh = unit_cube()
        cam = look_cam(eye=(0, 0, -3))
        feats = extract_3d(mesh, cam)
        assert feats.surface_visibility == pytest.approx(1.0 / 6.0, abs=1e-12)

    def test_cube_corner_view(self):
        mesh = unit_cube()
        cam = look_cam(eye=(2, 2, 2))
        face_on = extract_3d(mesh, look_cam(eye=(0, 0, -3)))
        corner = extract_3d(mesh, cam)
        assert corner.surface_visibility == pytest.approx(0.5, abs=1e-12)
        assert corner.viewpoint_entropy > face_on.viewpoint_entropy

    def test_single_triangle_entropy(self):
        mesh = Mesh(
            np.array([[-0.6, -0.6, 2.0], [0.9, -0.5, 2.0], [0.0, 0.8, 2.0]]),
            np.array([[0, 1, 2]]),
        )
        cam = Camera(fx=200, fy=200, cx=128, cy=128, width=256, height=256)
        frame = rasterize(mesh, cam)
        feats = extract_3d(mesh, cam, frame=frame)
        p = frame.covered_count() / (256 * 256)
        expected = -(p * math.log(p) + (1 - p) * math.log(1 - p))
        assert feats.viewpoint_entropy == pytest.approx(expected, abs=1e-12)

    def test_aligned_axes(self):
        mesh = make_box(center=(0, 0, 3.0))
        cam = Camera(fx=300, fy=300, cx=128, cy=128, width=256, height=256)
        feats = extract_3d(mesh, cam)
        expected = [0, math.pi / 2, math.pi / 2,
                    math.pi / 2, 0, math.pi / 2,
                    math.pi / 2, math.pi / 2, 0]
        assert np.allclose(feats.axis_angles, expected, atol=1e-9)

    def test_up_tilt_aligned(self):
        mesh = unit_cube()
        cam = look_cam(eye=(0, 0.0, -3))
        feats = extract_3d(mesh, cam)
        assert feats.up_tilt == pytest.approx(1.0, abs=1e-9)

    def test_above_preference_values(self):
        # phi = 3pi/8 peaks at 1; phi = 0 gives exp(-9/8)
        mesh = unit_cube()
        d = 3.0
        phi = 3 * math.pi / 8
        eye = (0, d * math.sin(phi), -d * math.cos(phi))
        feats = extract_3d(mesh, look_cam(eye=eye))
        assert feats.above_preference == pytest.approx(1.0, abs=1e-9)
        feats0 = extract_3d(mesh, look_cam(eye=(0, 0, -d)))
        assert feats0.above_preference == pytest.approx(
            math.exp(-9.0 / 8.0), abs=1e-9
        )

    def test_outside_fraction(self):
        mesh = unit_cube()
        inside = extract_3d(mesh, look_cam(eye=(0, 0, -4)))
        assert inside.outside_fraction == 0.0
        # camera looking away from the cube
        away = Camera.look_at(
            eye=(0, 0, -4), target=(0, 0, -8), up=[0, 1, 0],
            fx=230, fy=230, cx=128, cy=128, width=256, height=256,
        )
        feats = extract_3d(mesh, away)
        assert feats.outside_fraction == 1.0
        assert feats.degenerate
        assert feats.projected_area == 0.0
        assert feats.surface_visibility == 0.0
        assert feats.viewpoint_entropy == 0.0
        assert feats.silhouette_length == 0.0

    def test_max_depth_in_unit_range(self):
        mesh = unit_cube()
        feats = extract_3d(mesh, look_cam(eye=(1.5, 1.0, -2.5)))
        assert 0.0 < feats.max_depth <= 1.0
        assert 0.0 <= feats.depth_spread <= 1.0

    def test_vector_layout(self):
        mesh = unit_cube()
        feats = extract_3d(mesh, look_cam(eye=(2, 1, -2)))
        assert feats.vector.shape == (24,)
        assert len(FEATURE3D_COLUMNS) == 24

    def test_deterministic(self):
        mesh = unit_cube()
        cam = look_cam(eye=(2, 1, -2))
        assert np.array_equal(extract_3d(mesh, cam).vector,
                              extract_3d(mesh, cam).vector)

    def test_scale_invariance(self):
        mesh = make_box(center=(0.1, 0.2, 0.0), size=(1.0, 1.4, 0.8))
        eye = np.array([2.0, 1.5, -2.5])
        f_base = extract_3d(mesh, look_cam(eye=eye, target=(0.1, 0.2, 0.0))).vector
        for s in (2.0, 0.5):
            scaled = mesh.transformed(lambda v: v * s)
            cam_s = look_cam(eye=eye * s, target=(0.1 * s, 0.2 * s, 0.0))
            f_s = extract_3d(scaled, cam_s).vector
            assert np.max(np.abs(f_s - f_base)) < 1e-6

    def test_rotational_equivariance(self):
        mesh = make_box(center=(0, 0, 0), size=(1.0, 1.3, 0.7))
        eye = np.array([2.2, 1.4, -2.1])
        cam = look_cam(eye=eye)
        f_base = extract_3d(mesh, cam).vector
        Q = rotation_from_axis_angle(np.array([0.3, 0.8, -0.2]))
        rot_mesh = mesh.transformed(lambda v: v @ Q.T)
        ext = cam.extrinsics
        cam_rot = cam.with_extrinsics(
            RigidTransform(ext.rotation @ Q.T, ext.translation)
        )
        f_rot = extract_3d(rot_mesh, cam_rot).vector
        # pose-relative components change by definition when the model up
        # axis is held fixed: theta/phi, up tilt, axis angles, and the
        # above-horizon preference (a function of phi)
        pose_indices = {11, 12, 13, *range(14, 23), 23}
        keep = np.array([i not in pose_indices for i in range(24)])
        assert np.max(np.abs(f_rot[keep] - f_base[keep])) < 1e-6

    def test_surface_monotone_in_occlusion(self):
        # removing an occluder never decreases the visible area of what stays
        cube = unit_cube()
        cam = look_cam(eye=(0, 0, -4))

        def visible_cube_area(with_wall):
            if with_wall:
                wall = make_quad([-0.4, -2, -1.5], [2, -2, -1.5],
                                 [2, 2, -1.5], [-0.4, 2, -1.5])
                verts = np.vstack([cube.vertices, wall.vertices])
                faces = np.vstack([cube.faces, wall.faces + cube.n_vertices])
                scene = Mesh(verts, faces)
            else:
                scene = cube
            frame = rasterize(scene, cam)
            face_pix = np.bincount(frame.face_id[frame.mask].ravel(),
                                   minlength=scene.n_faces)
            cube_visible = face_pix[: cube.n_faces] > 0
            return float(cube.face_areas()[cube_visible].sum())

        occluded = visible_cube_area(with_wall=True)
        free = visible_cube_area(with_wall=False)
        assert free >= occluded - 1e-12
        assert occluded < free  # the half wall does hide some cube faces

    def test_range_invariants_random_views(self, rng):
        from vantage.primitives import make_building

        mesh = make_building()
        center = mesh.centroid()
        r = mesh.bounding_sphere_radius()
        for _ in range(15):
            theta = rng.uniform(0, 2 * np.pi)
            phi = rng.uniform(-0.3, 1.2)
            dist = rng.uniform(1.5, 4.0) * r
            eye = center + dist * np.array(
                [np.cos(phi) * np.cos(theta), np.sin(phi),
                 -np.cos(phi) * np.sin(theta)]
            )
            cam = look_cam(eye, target=center, wh=128)
            frame = rasterize(mesh, cam)
            feats = extract_3d(mesh, cam, frame=frame)
            for val in (feats.projected_area, feats.surface_visibility,
                        feats.outside_fraction, feats.depth_spread):
                assert 0.0 <= val <= 1.0
            face_pix = np.bincount(frame.face_id[frame.mask].ravel(),
                                   minlength=mesh.n_faces)
            n_visible = int((face_pix > 0).sum())
            assert 0.0 <= feats.viewpoint_entropy <= np.log(n_visible + 1) + 1e-12
            assert -1.0 <= feats.up_tilt <= 1.0
            assert np.all((feats.axis_angles >= 0) & (feats.axis_angles <= np.pi))
            assert 0.0 < feats.above_preference <= 1.0
            assert 0.0 < feats.max_depth <= 1.0
            assert np.all(np.isfinite(feats.vector))
