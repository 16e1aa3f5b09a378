import numpy as np
import pytest

from vantage.geometry import RigidTransform, rotation_from_axis_angle


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_rotation(rng, max_angle=np.pi - 0.1):
    """Uniform random axis, angle uniform in (0, max_angle)."""
    axis = rng.normal(size=3)
    axis /= np.linalg.norm(axis)
    angle = rng.uniform(1e-8, max_angle)
    return rotation_from_axis_angle(axis * angle)


def random_rigid(rng, max_angle=np.pi - 0.1, t_scale=1.0):
    return RigidTransform(
        random_rotation(rng, max_angle), rng.normal(size=3) * t_scale
    )


def random_modelview(rng, max_angle=np.pi - 0.1, t_scale=1.0):
    return random_rigid(rng, max_angle, t_scale).as_matrix()
