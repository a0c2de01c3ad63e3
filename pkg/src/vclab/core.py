"""Exact Biot-Savart kernel, its Jacobian and small planar helpers.

Vectors in the plane are length-2 float arrays, 2x2 matrices are (2, 2)
arrays and phase vectors Z = (z_1, ..., z_N) are stored as (N, 2) arrays.
The kernel carries the physical 1/(2 pi) factor everywhere; multiply by
``PAPER_UNIT`` to get the un-normalized values.
"""

import numpy as np

TWO_PI = 2.0 * np.pi
PAPER_UNIT = TWO_PI
SINGULAR_RADIUS = 1e-300

# Off-diagonal unit matrix [[0, 1], [1, 0]].
SWAP = np.array([[0.0, 1.0], [1.0, 0.0]])


class DomainError(ValueError):
    """Raised when an operation is evaluated outside its domain."""


def _as_vec2(x):
    v = np.asarray(x, dtype=float)
    if v.shape != (2,):
        raise DomainError(f"expected a planar vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise DomainError("non-finite planar vector")
    return v


def _checked_norm2(v):
    r2 = v[0] * v[0] + v[1] * v[1]
    if np.sqrt(r2) < SINGULAR_RADIUS:
        raise DomainError("kernel evaluated at its singularity")
    return r2


def perp(x):
    """Counterclockwise quarter turn, (x1, x2) -> (-x2, x1); works on (..., 2) arrays."""
    x = np.asarray(x, dtype=float)
    return np.stack([-x[..., 1], x[..., 0]], axis=-1)


def rotation(theta):
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]])


def rotate(points, theta):
    """Rotate an (..., 2) array of points counterclockwise by ``theta``."""
    return np.asarray(points, dtype=float) @ rotation(theta).T


def block_norm(Z):
    """Max over blocks of the Euclidean block norm, |Z| = max_i |z_i|."""
    Z = np.asarray(Z, dtype=float).reshape(-1, 2)
    return float(np.max(np.hypot(Z[:, 0], Z[:, 1])))


def symplectic(n):
    """The 2n x 2n block-diagonal matrix with blocks [[0, -1], [1, 0]]."""
    return np.kron(np.eye(n), np.array([[0.0, -1.0], [1.0, 0.0]]))


def biot_savart_kernel(x):
    """K(x) = x^perp / (2 pi |x|^2)."""
    x = _as_vec2(x)
    r2 = _checked_norm2(x)
    return np.array([-x[1], x[0]]) / (TWO_PI * r2)


def kernel_jacobian(y):
    """Jacobian of :func:`biot_savart_kernel` at ``y``.

    Symmetric and trace-free:
    ``1/(2 pi |y|^4) [[2 y1 y2, y2^2 - y1^2], [y2^2 - y1^2, -2 y1 y2]]``.
    """
    y = _as_vec2(y)
    r2 = _checked_norm2(y)
    a = 2.0 * y[0] * y[1]
    b = y[1] * y[1] - y[0] * y[0]
    return np.array([[a, b], [b, -a]]) / (TWO_PI * r2 * r2)


def conjugate_pair_sum(y):
    """kernel_jacobian(y) + kernel_jacobian(conj(y)), a multiple of SWAP."""
    y = _as_vec2(y)
    r2 = _checked_norm2(y)
    coef = 2.0 * (y[1] * y[1] - y[0] * y[0]) / (r2 * r2)
    return coef / TWO_PI * SWAP
