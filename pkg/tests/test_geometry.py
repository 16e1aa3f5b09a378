import math

import numpy as np
import pytest

from vantage.errors import DegenerateInputError, DegenerateLogarithmError
from vantage.geometry import (
    Camera,
    RigidTransform,
    SimilarityTransform,
    rotation_from_axis_angle,
    se3_exp,
    se3_log,
    to_spherical,
    spherical_position,
    validate_modelview,
    viewpoint_distance,
)
from conftest import random_modelview, random_rigid


def rot_z(angle):
    return rotation_from_axis_angle(np.array([0.0, 0.0, angle]))


class TestSe3Log:
    def test_identity_gives_zero(self):
        assert np.allclose(se3_log(np.eye(4)), np.zeros((4, 4)))

    def test_quarter_turn_norm(self):
        # ||log R||_F = sqrt(2) * theta for a pure rotation
        M = np.eye(4)
        M[:3, :3] = rot_z(math.pi / 2)
        X = se3_log(M)
        assert np.allclose(np.linalg.norm(X), math.sqrt(2) * math.pi / 2, atol=1e-9)
        assert np.allclose(X[:3, :3], -X[:3, :3].T, atol=1e-12)
        assert np.allclose(X[3], 0.0)

    def test_pure_translation(self):
        M = np.eye(4)
        M[:3, 3] = [1.0, 2.0, 3.0]
        X = se3_log(M)
        assert np.allclose(X[:3, 3], [1.0, 2.0, 3.0], atol=1e-12)
        assert np.allclose(X[:3, :3], 0.0)

    def test_exp_log_roundtrip_random(self, rng):
        for _ in range(1000):
            M = random_modelview(rng)
            assert np.max(np.abs(se3_exp(se3_log(M)) - M)) < 1e-7

    def test_small_angle_branch(self, rng):
        for angle in [1e-9, 1e-7, 1e-5, 9e-5]:
            M = np.eye(4)
            M[:3, :3] = rot_z(angle)
            M[:3, 3] = [0.1, -0.2, 0.3]
            assert np.max(np.abs(se3_exp(se3_log(M)) - M)) < 1e-12

    def test_near_pi_rejected(self):
        M = np.eye(4)
        M[:3, :3] = rot_z(math.pi - 1e-8)
        with pytest.raises(DegenerateLogarithmError):
            se3_log(M)

    def test_rejects_non_rigid(self):
        M = np.eye(4)
        M[0, 0] = 2.0
        with pytest.raises(ValueError):
            se3_log(M)


class TestViewpointDistance:
    def test_self_distance_zero(self, rng):
        M = random_modelview(rng)
        assert viewpoint_distance(M, M) == pytest.approx(0.0, abs=1e-9)

    def test_quarter_turn(self):
        M = np.eye(4)
        M[:3, :3] = rot_z(math.pi / 2)
        d = viewpoint_distance(np.eye(4), M)
        assert d == pytest.approx(math.sqrt(2) * math.pi / 2, abs=1e-9)

    def test_symmetry(self, rng):
        for _ in range(200):
            Mi, Mj = random_modelview(rng), random_modelview(rng)
            assert viewpoint_distance(Mi, Mj) == pytest.approx(
                viewpoint_distance(Mj, Mi), abs=1e-9
            )

    def test_left_invariance(self, rng):
        for _ in range(200):
            Mi, Mj, K = (random_modelview(rng) for _ in range(3))
            d0 = viewpoint_distance(Mi, Mj)
            d1 = viewpoint_distance(K @ Mi, K @ Mj)
            assert d1 == pytest.approx(d0, abs=1e-9 * max(1.0, d0))

    def test_triangle_inequality_statistics(self, rng):
        # Not assumed by the metric; just report how often it holds.
        violations = 0
        trials = 300
        for _ in range(trials):
            A, B, C = (random_modelview(rng) for _ in range(3))
            try:
                dab = viewpoint_distance(A, B)
                dbc = viewpoint_distance(B, C)
                dac = viewpoint_distance(A, C)
            except DegenerateLogarithmError:
                continue
            if dac > dab + dbc + 1e-9:
                violations += 1
        print(f"triangle-inequality violations: {violations}/{trials}")


class TestTransforms:
    def test_rigid_inverse_roundtrip(self, rng):
        for _ in range(100):
            T = random_rigid(rng)
            I = T.compose(T.inverse())
            assert np.allclose(I.rotation, np.eye(3), atol=1e-9)
            assert np.allclose(I.translation, 0.0, atol=1e-9)

    def test_rigid_composition_associative(self, rng):
        A, B, C = (random_rigid(rng) for _ in range(3))
        lhs = (A @ B) @ C
        rhs = A @ (B @ C)
        assert np.allclose(lhs.rotation, rhs.rotation, atol=1e-12)
        assert np.allclose(lhs.translation, rhs.translation, atol=1e-12)

    def test_similarity_requires_positive_scale(self):
        with pytest.raises(ValueError):
            SimilarityTransform(-1.0, np.eye(3), np.zeros(3))

    def test_similarity_inverse(self, rng):
        s = SimilarityTransform(2.5, rot_z(0.7), np.array([1.0, -2.0, 0.5]))
        p = rng.normal(size=(10, 3))
        assert np.allclose(s.inverse().apply(s.apply(p)), p, atol=1e-12)

    def test_rotation_validation(self):
        with pytest.raises(ValueError):
            RigidTransform(np.eye(3) * 1.0001, np.zeros(3))


class TestCamera:
    def test_projection_finite_for_positive_depth(self, rng):
        cam = Camera(fx=500, fy=500, cx=256, cy=256, width=512, height=512)
        p = rng.normal(size=(50, 3))
        p[:, 2] = np.abs(p[:, 2]) + 0.5
        uv, z = cam.project(p)
        assert np.all(z > 0)
        assert np.all(np.isfinite(uv))

    def test_look_at_points_forward(self):
        cam = Camera.look_at(
            eye=[0, 0, -5], target=[0, 0, 0], up=[0, 1, 0],
            fx=400, fy=400, cx=200, cy=200, width=400, height=400,
        )
        uv, z = cam.project(np.array([[0.0, 0.0, 0.0]]))
        assert z[0] == pytest.approx(5.0)
        assert uv[0] == pytest.approx([200.0, 200.0])
        assert np.allclose(cam.center(), [0, 0, -5], atol=1e-12)

    def test_look_at_up_convention(self):
        # up hint should make the image-up direction agree with world up
        cam = Camera.look_at(
            eye=[3, 1, -4], target=[0, 0, 0], up=[0, 1, 0],
            fx=400, fy=400, cx=200, cy=200, width=400, height=400,
        )
        assert cam.up_in_world() @ np.array([0.0, 1.0, 0.0]) > 0.5

    def test_modelview_is_rigid(self, rng):
        T = random_rigid(rng)
        cam = Camera(300, 300, 100, 100, 200, 200, T)
        validate_modelview(cam.model_view())


class TestSpherical:
    def test_on_horizon(self):
        c = to_spherical([1, 1, 0], [0, 0, 0], [0, 0, 1])
        assert c.phi == pytest.approx(0.0, abs=1e-12)
        assert c.r == pytest.approx(math.sqrt(2))
        assert c.theta == pytest.approx(math.pi / 4)

    def test_zenith(self):
        c = to_spherical([0, 0, 2], [0, 0, 0], [0, 0, 1])
        assert c.phi == pytest.approx(math.pi / 2)

    def test_coincident_rejected(self):
        with pytest.raises(DegenerateInputError):
            to_spherical([1, 2, 3], [1, 2, 3], [0, 0, 1])

    def test_roundtrip_with_position(self, rng):
        center = np.array([1.0, -2.0, 0.5])
        up = np.array([0.0, 1.0, 0.0])
        for _ in range(50):
            p = center + rng.normal(size=3)
            if np.linalg.norm(p - center) < 1e-6:
                continue
            c = to_spherical(p, center, up)
            q = spherical_position(center, up, c.r, c.theta, c.phi)
            assert np.allclose(q, p, atol=1e-9)
