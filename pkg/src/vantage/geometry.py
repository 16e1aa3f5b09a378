"""Rigid/similarity transforms, pinhole cameras, and viewpoint metrics.

Coordinate conventions
----------------------
World frame: right-handed, model "up" is +y unless stated otherwise.

Camera frame: right-handed computer-vision convention. A world point p maps
to camera coordinates m = R p + t with z pointing forward along the optical
axis, x right and y down in the image. Projection of m = (x, y, z), z > 0:

    u = fx * x / z + skew * y / z + cx
    v = fy * y / z + cy

with (u, v) in pixel units, origin at the top-left image corner, pixel
(i, j) covering [i, i+1) x [j, j+1) so its center sits at (i + 0.5, j + 0.5).

The viewpoint of a camera is its 4x4 model-view matrix [[R, t], [0, 1]].
The distance between two viewpoints Mi, Mj is the Frobenius norm of the
matrix logarithm of Mi^-1 Mj. Note the rotation block is dimensionless
while the translation block carries world units, so the metric's scale
depends on the scene's units; it is used as a dissimilarity, and the
triangle inequality is not assumed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DegenerateInputError, DegenerateLogarithmError

# Angle below which Taylor branches replace the closed-form trig ratios.
_SMALL_ANGLE = 1e-4
# Rotation angles closer than this to pi are rejected: the principal log
# is not unique there.
_PI_MARGIN = 1e-6


def check_rotation(R, atol=1e-9):
    """Validate that R is a proper rotation (orthonormal, det +1)."""
    R = np.asarray(R, dtype=float)
    if R.shape != (3, 3):
        raise ValueError(f"rotation must be 3x3, got {R.shape}")
    if not np.allclose(R.T @ R, np.eye(3), atol=atol):
        raise ValueError("matrix is not orthonormal")
    if abs(np.linalg.det(R) - 1.0) > max(atol, 1e-9):
        raise ValueError("matrix is not a proper rotation (det != +1)")
    return R


def skew(v):
    """Skew-symmetric (hat) matrix of a 3-vector."""
    x, y, z = v
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def unskew(S):
    """3-vector of a skew-symmetric matrix (vee)."""
    return np.array([S[2, 1], S[0, 2], S[1, 0]])


def rotation_from_axis_angle(axis_angle):
    """Rodrigues' formula; the vector's norm is the rotation angle."""
    w = np.asarray(axis_angle, dtype=float)
    theta = np.linalg.norm(w)
    K = skew(w)
    if theta < _SMALL_ANGLE:
        # sin(t)/t and (1-cos t)/t^2 series
        a = 1.0 - theta**2 / 6.0 + theta**4 / 120.0
        b = 0.5 - theta**2 / 24.0 + theta**4 / 720.0
    else:
        a = math.sin(theta) / theta
        b = (1.0 - math.cos(theta)) / theta**2
    return np.eye(3) + a * K + b * (K @ K)


def rotation_angle(R):
    """Rotation angle in [0, pi]."""
    return math.acos(min(1.0, max(-1.0, (np.trace(R) - 1.0) / 2.0)))


def so3_log(R):
    """Skew-symmetric logarithm of a rotation matrix.

    Raises DegenerateLogarithmError when the angle is within 1e-6 of pi,
    where the principal logarithm is not unique.
    """
    R = np.asarray(R, dtype=float)
    theta = rotation_angle(R)
    if abs(theta - math.pi) < _PI_MARGIN:
        raise DegenerateLogarithmError(
            f"rotation angle {theta:.9f} is within {_PI_MARGIN} of pi; "
            "principal logarithm is not unique"
        )
    A = 0.5 * (R - R.T)
    if theta < _SMALL_ANGLE:
        # theta/sin(theta) series
        return A * (1.0 + theta**2 / 6.0 + 7.0 * theta**4 / 360.0)
    return A * (theta / math.sin(theta))


@dataclass(frozen=True)
class RigidTransform:
    """Rotation + translation; maps p to rotation @ p + translation."""

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        R = check_rotation(self.rotation)
        t = np.asarray(self.translation, dtype=float).reshape(3)
        object.__setattr__(self, "rotation", R)
        object.__setattr__(self, "translation", t)

    @classmethod
    def identity(cls):
        return cls(np.eye(3), np.zeros(3))

    @classmethod
    def from_matrix(cls, M):
        M = validate_modelview(M)
        return cls(M[:3, :3], M[:3, 3])

    def compose(self, other: "RigidTransform") -> "RigidTransform":
        return RigidTransform(
            self.rotation @ other.rotation,
            self.rotation @ other.translation + self.translation,
        )

    def __matmul__(self, other):
        return self.compose(other)

    def inverse(self) -> "RigidTransform":
        Rt = self.rotation.T
        return RigidTransform(Rt, -Rt @ self.translation)

    def apply(self, points):
        p = np.asarray(points, dtype=float)
        return p @ self.rotation.T + self.translation

    def as_matrix(self):
        M = np.eye(4)
        M[:3, :3] = self.rotation
        M[:3, 3] = self.translation
        return M


@dataclass(frozen=True)
class SimilarityTransform:
    """Scale + rotation + translation; maps p to scale * rotation @ p + translation."""

    scale: float
    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        if not self.scale > 0:
            raise ValueError(f"scale must be positive, got {self.scale}")
        R = check_rotation(self.rotation)
        t = np.asarray(self.translation, dtype=float).reshape(3)
        object.__setattr__(self, "scale", float(self.scale))
        object.__setattr__(self, "rotation", R)
        object.__setattr__(self, "translation", t)

    @classmethod
    def identity(cls):
        return cls(1.0, np.eye(3), np.zeros(3))

    def apply(self, points):
        p = np.asarray(points, dtype=float)
        return self.scale * (p @ self.rotation.T) + self.translation

    def inverse(self) -> "SimilarityTransform":
        Rt = self.rotation.T
        return SimilarityTransform(
            1.0 / self.scale, Rt, -(Rt @ self.translation) / self.scale
        )


@dataclass(frozen=True)
class Camera:
    """Pinhole camera: intrinsics plus rigid world-to-camera extrinsics."""

    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int
    extrinsics: RigidTransform = field(default_factory=RigidTransform.identity)
    skew: float = 0.0

    def __post_init__(self):
        if not (self.fx > 0 and self.fy > 0):
            raise ValueError("focal lengths must be positive")
        if not (self.width > 0 and self.height > 0):
            raise ValueError("image dimensions must be positive")

    def intrinsic_matrix(self):
        return np.array(
            [
                [self.fx, self.skew, self.cx],
                [0.0, self.fy, self.cy],
                [0.0, 0.0, 1.0],
            ]
        )

    def to_camera(self, points):
        """World points -> camera-frame coordinates."""
        return self.extrinsics.apply(points)

    def project(self, points):
        """World points -> (pixel uv array, camera-frame depth array)."""
        m = np.atleast_2d(self.to_camera(points))
        z = m[:, 2]
        with np.errstate(divide="ignore", invalid="ignore"):
            u = self.fx * m[:, 0] / z + self.skew * m[:, 1] / z + self.cx
            v = self.fy * m[:, 1] / z + self.cy
        return np.column_stack([u, v]), z

    def center(self):
        """Camera center in world coordinates."""
        e = self.extrinsics
        return -(e.rotation.T @ e.translation)

    def axes_in_world(self):
        """Rows: camera x (right), y (down), z (forward) in world coordinates."""
        return self.extrinsics.rotation

    def up_in_world(self):
        """Camera up direction in world coordinates (negative of the y axis)."""
        return -self.extrinsics.rotation[1]

    def model_view(self):
        """4x4 model-view matrix of this camera's viewpoint."""
        return self.extrinsics.as_matrix()

    def with_extrinsics(self, extrinsics: RigidTransform) -> "Camera":
        return replace(self, extrinsics=extrinsics)

    @classmethod
    def look_at(cls, eye, target, up, fx, fy, cx, cy, width, height, skew=0.0):
        """Camera at ``eye`` looking toward ``target`` with ``up`` roughly up."""
        eye = np.asarray(eye, dtype=float)
        target = np.asarray(target, dtype=float)
        up = np.asarray(up, dtype=float)
        fwd = target - eye
        n = np.linalg.norm(fwd)
        if n < 1e-15:
            raise DegenerateInputError("eye and target coincide")
        fwd = fwd / n
        right = np.cross(fwd, up)
        rn = np.linalg.norm(right)
        if rn < 1e-12:
            raise DegenerateInputError("view direction is parallel to up")
        right = right / rn
        down = np.cross(fwd, right)
        R = np.vstack([right, down, fwd])
        # Re-orthonormalize to keep RigidTransform's validation tight.
        U, _, Vt = np.linalg.svd(R)
        R = U @ Vt
        ext = RigidTransform(R, -(R @ eye))
        return cls(fx, fy, cx, cy, width, height, ext, skew)


def validate_modelview(M, atol=1e-9):
    """Validate a 4x4 rigid model-view matrix and return it as float64."""
    M = np.asarray(M, dtype=float)
    if M.shape != (4, 4):
        raise ValueError(f"model-view matrix must be 4x4, got {M.shape}")
    if not np.allclose(M[3], [0.0, 0.0, 0.0, 1.0], atol=atol):
        raise ValueError("last row must be (0, 0, 0, 1)")
    check_rotation(M[:3, :3], atol=atol)
    return M


def se3_exp(X):
    """Exponential of a 4x4 twist matrix [[skew(w), u], [0, 0]]."""
    X = np.asarray(X, dtype=float)
    w = unskew(X[:3, :3])
    u = X[:3, 3]
    theta = np.linalg.norm(w)
    K = skew(w)
    if theta < _SMALL_ANGLE:
        b = 0.5 - theta**2 / 24.0 + theta**4 / 720.0
        c = 1.0 / 6.0 - theta**2 / 120.0 + theta**4 / 5040.0
    else:
        b = (1.0 - math.cos(theta)) / theta**2
        c = (theta - math.sin(theta)) / theta**3
    V = np.eye(3) + b * K + c * (K @ K)
    M = np.eye(4)
    M[:3, :3] = rotation_from_axis_angle(w)
    M[:3, 3] = V @ u
    return M


def se3_log(M):
    """Principal logarithm of a rigid 4x4 matrix.

    The result has a skew-symmetric upper-left block and a zero last row;
    se3_exp reconstructs M to ~1e-7. Raises DegenerateLogarithmError near
    rotation angle pi.
    """
    M = validate_modelview(M)
    W = so3_log(M[:3, :3])
    w = unskew(W)
    theta = np.linalg.norm(w)
    K = skew(w)
    if theta < _SMALL_ANGLE:
        c = 1.0 / 12.0 + theta**2 / 720.0
    else:
        c = (1.0 - theta * math.sin(theta) / (2.0 * (1.0 - math.cos(theta)))) / theta**2
    Vinv = np.eye(3) - 0.5 * K + c * (K @ K)
    X = np.zeros((4, 4))
    X[:3, :3] = W
    X[:3, 3] = Vinv @ M[:3, 3]
    return X


def viewpoint_distance(Mi, Mj):
    """Frobenius norm of log(Mi^-1 Mj) between two model-view matrices."""
    Mi = validate_modelview(Mi)
    Mj = validate_modelview(Mj)
    Ri, ti = Mi[:3, :3], Mi[:3, 3]
    rel = np.eye(4)
    rel[:3, :3] = Ri.T @ Mj[:3, :3]
    rel[:3, 3] = Ri.T @ (Mj[:3, 3] - ti)
    return float(np.linalg.norm(se3_log(rel)))


@dataclass(frozen=True)
class SphericalCoord:
    """Position on a viewing sphere: radius, longitude theta, latitude phi.

    phi is measured from the horizontal plane orthogonal to the up axis
    (0 = on the horizon, +pi/2 = straight above the center).
    """

    r: float
    theta: float
    phi: float

    def __post_init__(self):
        if not self.r > 0:
            raise ValueError("radius must be positive")
        if not -math.pi / 2 - 1e-12 <= self.phi <= math.pi / 2 + 1e-12:
            raise ValueError(f"phi out of range: {self.phi}")


def _horizon_basis(up):
    """Deterministic orthonormal (e1, e2) spanning the plane orthogonal to up."""
    u = np.asarray(up, dtype=float)
    n = np.linalg.norm(u)
    if n < 1e-15:
        raise DegenerateInputError("up axis must be nonzero")
    u = u / n
    ref = np.array([1.0, 0.0, 0.0])
    if abs(u @ ref) > 0.9:
        ref = np.array([0.0, 1.0, 0.0])
    e1 = ref - (ref @ u) * u
    e1 = e1 / np.linalg.norm(e1)
    e2 = np.cross(u, e1)
    return u, e1, e2


def to_spherical(camera_position, model_center, up_axis):
    """Spherical coordinates of a camera position about a model center."""
    p = np.asarray(camera_position, dtype=float) - np.asarray(model_center, dtype=float)
    r = np.linalg.norm(p)
    if r < 1e-15:
        raise DegenerateInputError("camera position coincides with model center")
    u, e1, e2 = _horizon_basis(up_axis)
    phi = math.asin(min(1.0, max(-1.0, float(p @ u) / r)))
    theta = math.atan2(float(p @ e2), float(p @ e1)) % (2.0 * math.pi)
    return SphericalCoord(r=float(r), theta=theta, phi=phi)


def spherical_position(center, up_axis, r, theta, phi):
    """Inverse of to_spherical: world position at (r, theta, phi) about center."""
    u, e1, e2 = _horizon_basis(up_axis)
    d = (
        math.cos(phi) * (math.cos(theta) * e1 + math.sin(theta) * e2)
        + math.sin(phi) * u
    )
    return np.asarray(center, dtype=float) + r * d
