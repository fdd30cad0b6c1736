"""Quaternion and frame helpers. Quaternions are (w, x, y, z), body-to-world."""

import math

import numpy as np

IDENTITY_QUAT = np.array([1.0, 0.0, 0.0, 0.0])


def quat_normalize(q):
    return q / np.linalg.norm(q)


def quat_mul(a, b):
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return np.array([
        aw * bw - ax * bx - ay * by - az * bz,
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by - ax * bz + ay * bw + az * bx,
        aw * bz + ax * by - ay * bx + az * bw,
    ])


def quat_to_matrix(q):
    w, x, y, z = q
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


def quat_rotate(q, v):
    """Rotate vector(s) from body to world frame. v: (3,) or (N, 3)."""
    return v @ quat_to_matrix(q).T


def quat_rotate_inverse(q, v):
    return v @ quat_to_matrix(q)


def quat_from_axis_angle(axis, angle):
    half = 0.5 * angle
    return np.concatenate([[np.cos(half)], np.sin(half) * np.asarray(axis)])


def quat_integrate(q, omega_body, dt):
    """Advance orientation by body-frame angular velocity over dt (exp map)."""
    wx, wy, wz = omega_body
    speed = math.sqrt(wx * wx + wy * wy + wz * wz)
    angle = speed * dt
    if angle < 1e-12:
        return quat_normalize(q)
    half = 0.5 * angle
    k = math.sin(half) / speed
    return quat_normalize(quat_mul(q, (math.cos(half), wx * k, wy * k, wz * k)))


def quat_yaw(q):
    w, x, y, z = q
    return np.arctan2(2.0 * (w * z + x * y), 1.0 - 2.0 * (y * y + z * z))


def yaw_rotate_inverse(yaw, v):
    """Express world vector v in the frame rotated by yaw about z."""
    c, s = np.cos(yaw), np.sin(yaw)
    return np.array([c * v[0] + s * v[1], -s * v[0] + c * v[1], v[2]])


def rot_x(a):
    c, s = np.cos(a), np.sin(a)
    return np.array([[1, 0, 0], [0, c, -s], [0, s, c]])


def rot_y(a):
    c, s = np.cos(a), np.sin(a)
    return np.array([[c, 0, s], [0, 1, 0], [-s, 0, c]])


def projected_gravity(q):
    """Unit gravity direction expressed in the body frame."""
    return quat_rotate_inverse(q, np.array([0.0, 0.0, -1.0]))


def quat_to_matrix_batch(q: np.ndarray) -> np.ndarray:
    """(N, 4) quaternions to (N, 3, 3) rotation matrices."""
    w, x, y, z = q[:, 0], q[:, 1], q[:, 2], q[:, 3]
    out = np.empty((len(q), 3, 3))
    out[:, 0, 0] = 1 - 2 * (y * y + z * z)
    out[:, 0, 1] = 2 * (x * y - w * z)
    out[:, 0, 2] = 2 * (x * z + w * y)
    out[:, 1, 0] = 2 * (x * y + w * z)
    out[:, 1, 1] = 1 - 2 * (x * x + z * z)
    out[:, 1, 2] = 2 * (y * z - w * x)
    out[:, 2, 0] = 2 * (x * z - w * y)
    out[:, 2, 1] = 2 * (y * z + w * x)
    out[:, 2, 2] = 1 - 2 * (x * x + y * y)
    return out


def quat_integrate_batch(q: np.ndarray, omega_body: np.ndarray, dt: float) -> np.ndarray:
    """Batched body-frame exp-map orientation update, (N, 4)."""
    speed = np.linalg.norm(omega_body, axis=1)
    half = 0.5 * speed * dt
    k = np.where(speed > 1e-12, np.sin(half) / np.maximum(speed, 1e-12), 0.0)
    dq = np.empty_like(q)
    dq[:, 0] = np.cos(half)
    dq[:, 1:] = omega_body * k[:, None]
    a, b = q, dq
    out = np.empty_like(q)
    out[:, 0] = a[:, 0] * b[:, 0] - a[:, 1] * b[:, 1] - a[:, 2] * b[:, 2] - a[:, 3] * b[:, 3]
    out[:, 1] = a[:, 0] * b[:, 1] + a[:, 1] * b[:, 0] + a[:, 2] * b[:, 3] - a[:, 3] * b[:, 2]
    out[:, 2] = a[:, 0] * b[:, 2] - a[:, 1] * b[:, 3] + a[:, 2] * b[:, 0] + a[:, 3] * b[:, 1]
    out[:, 3] = a[:, 0] * b[:, 3] + a[:, 1] * b[:, 2] - a[:, 2] * b[:, 1] + a[:, 3] * b[:, 0]
    return out / np.linalg.norm(out, axis=1, keepdims=True)
