"""Vector primitives for d = 2 or 3.

Every function accepts plain arrays and broadcasts over leading axes, so the
same code handles one agent or a stack of agents. In 2-D an angular velocity
is a scalar (the z-component of the embedded 3-D vector).
"""

from __future__ import annotations

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import CoincidentAgents

COINCIDENCE_TOL = 1e-9


def bearing(p_i: ArrayLike, p_j: ArrayLike, tol: float = COINCIDENCE_TOL) -> NDArray:
    """Unit vector pointing from ``p_i`` to ``p_j``.

    Raises:
        CoincidentAgents: if the two points are within ``tol`` of each other.
    """
    z = np.asarray(p_j, dtype=float) - np.asarray(p_i, dtype=float)
    dist = float(np.linalg.norm(z))
    if dist <= tol:
        raise CoincidentAgents(None, None, dist)
    return z / dist


def bearings(points: NDArray, src: NDArray, dst: NDArray, tol: float = COINCIDENCE_TOL):
    """Batched bearings ``points[src] -> points[dst]``.

    Returns ``(g, dist)`` with shapes ``(m, d)`` and ``(m,)``.
    """
    z = points[dst] - points[src]
    dist = np.sqrt(np.einsum("...i,...i->...", z, z))
    if dist.size and dist.min() <= tol:
        k = int(np.argmin(dist))
        raise CoincidentAgents(int(src[k]), int(dst[k]), float(dist[k]))
    return z / dist[..., None], dist


def projector(g: ArrayLike) -> NDArray:
    """Orthogonal projector ``I - g g^T`` onto the complement of ``g``."""
    g = np.asarray(g, dtype=float)
    d = g.shape[-1]
    return np.eye(d) - g[..., :, None] * g[..., None, :]


def _cross3(a: NDArray, b: NDArray) -> NDArray:
    # np.cross is several times slower on small stacks
    a0, a1, a2 = a[..., 0], a[..., 1], a[..., 2]
    b0, b1, b2 = b[..., 0], b[..., 1], b[..., 2]
    return np.stack([a1 * b2 - a2 * b1, a2 * b0 - a0 * b2, a0 * b1 - a1 * b0], axis=-1)


def cross(a: ArrayLike, b: ArrayLike) -> NDArray:
    """Cross product; in 2-D returns the scalar z-component."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape[-1] == 2:
        return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]
    return _cross3(a, b)


def double_cross(x: ArrayLike, y: ArrayLike) -> NDArray:
    """Evaluate ``-x × (x × y)``, which equals ``(I - x x^T) y`` for unit ``x``.

    In 2-D there is no cross product on the plane, so the projector form is
    used directly.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape[-1] == 3:
        return -_cross3(x, _cross3(x, y))
    return y - x * np.einsum("...i,...i->...", x, y)[..., None]


def heading_rate(h: ArrayLike, omega: ArrayLike) -> NDArray:
    """Time derivative of a unit heading, ``omega × h``.

    For d = 2, ``omega`` is a scalar turn rate and the result is
    ``omega * [-h_y, h_x]``.
    """
    h = np.asarray(h, dtype=float)
    omega = np.asarray(omega, dtype=float)
    if h.shape[-1] == 2:
        return omega[..., None] * np.stack([-h[..., 1], h[..., 0]], axis=-1)
    return _cross3(omega, h)


def normalize(v: ArrayLike) -> NDArray:
    """Scale vectors (along the last axis) to unit length."""
    v = np.asarray(v, dtype=float)
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def zero_angular_velocity(d: int, shape: tuple[int, ...] = ()) -> NDArray:
    return np.zeros(shape) if d == 2 else np.zeros(shape + (3,))
