"""Rotation and extended-pose group primitives.

The navigation state (attitude, velocity, position) lives on the group of
5x5 matrices

    [ R  v  p ]
    [ 0  1  0 ]
    [ 0  0  1 ]

with R in SO(3).  Tangent vectors are 9-vectors xi = (xi_rot, xi_vel, xi_pos),
units (rad, m/s, m).  Everything here is a pure function of ndarray values.
"""

from __future__ import annotations

import numpy as np

# Below this rotation angle the closed-form exponential coefficients are
# replaced by their Taylor limits to avoid 0/0 cancellation.
SMALL_ANGLE = 1e-6


def skew(u: np.ndarray) -> np.ndarray:
    """Cross-product matrix: skew(u) @ w == cross(u, w)."""
    x, y, z = u
    return np.array([
        [0.0, -z, y],
        [z, 0.0, -x],
        [-y, x, 0.0],
    ])


def exp_so3(phi: np.ndarray) -> np.ndarray:
    """Rodrigues formula for the SO(3) exponential of a rotation vector."""
    phi = np.asarray(phi, dtype=float)
    theta2 = float(phi @ phi)
    theta = np.sqrt(theta2)
    if theta < SMALL_ANGLE:
        # sin(t)/t and (1-cos(t))/t^2 to O(t^4)
        c1 = 1.0 - theta2 / 6.0
        c2 = 0.5 - theta2 / 24.0
    else:
        c1 = np.sin(theta) / theta
        c2 = (1.0 - np.cos(theta)) / theta2
    k = skew(phi)
    return np.eye(3) + c1 * k + c2 * (k @ k)


def hat_se23(xi: np.ndarray) -> np.ndarray:
    """Map a 9-vector tangent element to its 5x5 matrix form."""
    xi = np.asarray(xi, dtype=float)
    out = np.zeros((5, 5))
    out[:3, :3] = skew(xi[:3])
    out[:3, 3] = xi[3:6]
    out[:3, 4] = xi[6:9]
    return out


def exp_se23(xi: np.ndarray) -> np.ndarray:
    """Closed-form exponential of an extended-pose tangent vector.

    exp(xi^) = I + xi^ + a (xi^)^2 + b (xi^)^3 with
    a = (1-cos t)/t^2,  b = (t-sin t)/t^3,  t = ||xi_rot||.
    The rotation block is written via the Rodrigues form directly, which
    the cubic polynomial reduces to, so it is bit-identical to exp_so3.
    """
    xi = np.asarray(xi, dtype=float)
    theta2 = float(xi[:3] @ xi[:3])
    theta = np.sqrt(theta2)
    if theta < SMALL_ANGLE:
        a = 0.5 - theta2 / 24.0
        b = 1.0 / 6.0 - theta2 / 120.0
    else:
        a = (1.0 - np.cos(theta)) / theta2
        b = (theta - np.sin(theta)) / (theta2 * theta)
    x = hat_se23(xi)
    x2 = x @ x
    out = np.eye(5) + x + a * x2 + b * (x2 @ x)
    out[:3, :3] = exp_so3(xi[:3])
    return out


def se23_from_parts(rotation: np.ndarray, velocity: np.ndarray,
                    position: np.ndarray) -> np.ndarray:
    out = np.eye(5)
    out[:3, :3] = rotation
    out[:3, 3] = velocity
    out[:3, 4] = position
    return out


def se23_to_parts(chi: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    return chi[:3, :3].copy(), chi[:3, 3].copy(), chi[:3, 4].copy()


def project_rotation(r: np.ndarray) -> np.ndarray:
    """Nearest orthogonal matrix with det +1 (Frobenius sense)."""
    u, _, vt = np.linalg.svd(r)
    d = np.sign(np.linalg.det(u @ vt))
    return u @ np.diag([1.0, 1.0, d]) @ vt


def rotation_defect(r: np.ndarray) -> float:
    """Frobenius distance of R^T R from the identity."""
    return float(np.linalg.norm(r.T @ r - np.eye(3)))
