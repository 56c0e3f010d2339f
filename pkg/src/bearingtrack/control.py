"""Per-agent formation tracking controllers.

Both laws share one follower command; they only differ in how the local
error vector ``r_i`` is formed from the neighbor measurements:

* bearing-only: ``r_i = sum_j (g_ij - g*_ij)``
* displacement: ``r_i = -sum_j P(g*_ij) (p_i - p_j)``

The follower then applies::

    u_i      = h_i . (k1 r_i + xi_i)
    xi_dot_i = h_i h_i^T r_i - (I - h_i h_i^T) xi_i
    omega_i  = k2 h_i x (r_i + xi_i)

Controllers see nothing except their own heading, auxiliary state and
neighbor measurements.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray

from . import geometry
from .errors import ValidationError


class Law(str, enum.Enum):
    BEARING = "bearing"
    DISPLACEMENT = "displacement"


@dataclass(frozen=True)
class ControlGains:
    k1: float
    k2: float

    def __post_init__(self):
        if not (self.k1 > 0 and self.k2 > 0):
            raise ValidationError("gains", f"k1 > 0 and k2 > 0 required, got k1={self.k1}, k2={self.k2}")


@dataclass(frozen=True)
class AgentCommand:
    """Forward speed, angular velocity and auxiliary-state rate.

    Fields broadcast: a stack of followers gives ``u`` shape ``(k,)`` etc.
    """

    u: NDArray
    omega: NDArray
    xi_dot: NDArray


def bearing_error_vector(bearings: ArrayLike, desired: ArrayLike) -> NDArray:
    """Sum of bearing errors over the neighbors (rows) of one agent."""
    return (np.asarray(bearings, dtype=float) - np.asarray(desired, dtype=float)).sum(axis=-2)


def displacement_error_vector(displacements: ArrayLike, desired: ArrayLike) -> NDArray:
    """``-sum_j P(g*_ij)(p_i - p_j)`` from displacements ``z_ij = p_j - p_i`` (rows)."""
    z = np.asarray(displacements, dtype=float)
    g = np.asarray(desired, dtype=float)
    # P z = z - g (g . z)
    projected = z - g * np.einsum("...i,...i->...", g, z)[..., None]
    return projected.sum(axis=-2)


def follower_command(h: ArrayLike, xi: ArrayLike, r: ArrayLike, gains: ControlGains) -> AgentCommand:
    h = np.asarray(h, dtype=float)
    xi = np.asarray(xi, dtype=float)
    r = np.asarray(r, dtype=float)
    h_r = np.einsum("...i,...i->...", h, r)
    h_xi = np.einsum("...i,...i->...", h, xi)
    u = gains.k1 * h_r + h_xi
    xi_dot = h * h_r[..., None] - (xi - h * h_xi[..., None])
    omega = gains.k2 * geometry.cross(h, r + xi)
    return AgentCommand(u=u, omega=omega, xi_dot=xi_dot)


def leader_command(speed: float, heading: ArrayLike) -> AgentCommand:
    """Leaders cruise at ``speed`` along the fixed ``heading`` without turning."""
    d = np.asarray(heading).shape[-1]
    return AgentCommand(
        u=np.asarray(float(speed)),
        omega=geometry.zero_angular_velocity(d),
        xi_dot=np.zeros(d),
    )
