"""Lyapunov functions, collision certificates and trace metrics.

The stacked (compact) operators built here are diagnostic only: the simulator
runs the per-agent controllers, and :func:`compact_residual` checks that the
stacked matrix form describes the same vector field.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from numpy.typing import NDArray

from .control import Law
from .dynamics import SimulationTrace, StateDerivative, SystemState, TrackingSystem, derivative
from .errors import InvalidKappa
from .formation import bearing_laplacian, build_incidence, spectral_quantities


def _rows(a: NDArray) -> NDArray:
    """Flatten all but the leading axis; safe for zero-length traces."""
    return a.reshape(a.shape[0], math.prod(a.shape[1:]))


def _require_target(system: TrackingSystem):
    if system.target is None:
        raise ValueError("this quantity needs the target formation; build the system with a target")
    return system.target


def laplacian_matrix(system: TrackingSystem) -> NDArray:
    return bearing_laplacian(system.graph, system.desired).matrix


def stacked_incidence(system: TrackingSystem) -> NDArray:
    """``H ⊗ I_d``, mapping stacked positions to stacked edge vectors."""
    return np.kron(build_incidence(system.graph), np.eye(system.d))


@dataclass(frozen=True)
class CompactOperators:
    Z: NDArray
    D_h: NDArray
    D_perp: NDArray
    xi: NDArray


def compact_operators(state: SystemState, system: TrackingSystem) -> CompactOperators:
    n, d = state.p.shape
    n_l = system.graph.n_leaders
    Z = np.diag(np.r_[np.zeros(d * n_l), np.ones(d * (n - n_l))])
    blocks = state.h[:, :, None] * state.h[:, None, :]
    D_h = np.zeros((d * n, d * n))
    for i in range(n):
        D_h[d * i : d * i + d, d * i : d * i + d] = blocks[i]
    xi = state.xi.copy()
    xi[:n_l] = system.velocity
    return CompactOperators(Z=Z, D_h=D_h, D_perp=np.eye(d * n) - D_h, xi=xi.ravel())


@dataclass(frozen=True)
class LyapunovReport:
    V: float
    formation_term: float
    xi_term: float
    heading_term: float
    vdot: float


def _edge_geometry(system: TrackingSystem, p: NDArray):
    g_star = system.desired.vectors
    z = p[..., system.graph.sinks, :] - p[..., system.graph.sources, :]
    dist = np.linalg.norm(z, axis=-1)
    return z, dist, z / dist[..., None], g_star


def _common_terms(system: TrackingSystem, h: NDArray, xi: NDArray):
    n_l = system.graph.n_leaders
    dxi = xi[..., n_l:, :] - system.velocity
    xi_term = 0.5 * np.einsum("...ij,...ij->...", dxi, dxi)
    dh = h - np.asarray(system.heading, dtype=float)
    heading_term = system.speed / (2 * system.gains.k2) * np.einsum("...ij,...ij->...", dh, dh)
    return xi_term, heading_term


def bearing_energy(system: TrackingSystem, p: NDArray) -> NDArray:
    """``z^T (g - g*)`` summed over augmented edges; broadcasts over leading axes."""
    z, dist, _, g_star = _edge_geometry(system, p)
    return np.sum(dist - np.einsum("...kd,kd->...k", z, g_star), axis=-1)


def displacement_energy(system: TrackingSystem, t: NDArray, p: NDArray) -> NDArray:
    """``0.5 δ_p^T B δ_p`` with δ_p measured against the moving target."""
    target = _require_target(system)
    delta = (p - target.at(t, system.velocity)).reshape(*p.shape[:-2], p.shape[-2] * p.shape[-1])
    B = laplacian_matrix(system)
    return 0.5 * np.einsum("...i,ij,...j->...", delta, B, delta)


def _follower_vdot(system: TrackingSystem, state: SystemState) -> float:
    n_l = system.graph.n_leaders
    h, xi = state.h[n_l:], state.xi[n_l:]
    r = system.error_vectors(state.p)
    h_r = np.einsum("ij,ij->i", h, r)
    h_xi = np.einsum("ij,ij->i", h, xi)
    return -float(np.sum(system.gains.k1 * h_r**2 + np.einsum("ij,ij->i", xi, xi) - h_xi**2))


def lyapunov_bearing_only(state: SystemState, system: TrackingSystem) -> LyapunovReport:
    """Bearing-only Lyapunov value and its analytic derivative along the flow."""
    energy = float(bearing_energy(system, state.p))
    xi_term, heading_term = (float(v) for v in _common_terms(system, state.h, state.xi))
    return LyapunovReport(
        V=energy + xi_term + heading_term,
        formation_term=energy,
        xi_term=xi_term,
        heading_term=heading_term,
        vdot=_follower_vdot(system, state),
    )


def lyapunov_displacement(state: SystemState, system: TrackingSystem) -> LyapunovReport:
    """Displacement-law Lyapunov value; ``vdot`` uses the stacked operators."""
    target = _require_target(system)
    energy = float(displacement_energy(system, state.t, state.p))
    xi_term, heading_term = (float(v) for v in _common_terms(system, state.h, state.xi))
    ops = compact_operators(state, system)
    B = laplacian_matrix(system)
    delta = (state.p - target.at(state.t, system.velocity)).ravel()
    Bd = B @ delta
    vdot = -system.gains.k1 * Bd @ ops.Z @ ops.D_h @ Bd - ops.xi @ ops.Z @ ops.D_perp @ ops.xi
    return LyapunovReport(
        V=energy + xi_term + heading_term,
        formation_term=energy,
        xi_term=xi_term,
        heading_term=heading_term,
        vdot=float(vdot),
    )


def lyapunov(state: SystemState, system: TrackingSystem) -> LyapunovReport:
    if system.law is Law.BEARING:
        return lyapunov_bearing_only(state, system)
    return lyapunov_displacement(state, system)


def lyapunov_values(system: TrackingSystem, t: NDArray, p: NDArray, h: NDArray, xi: NDArray) -> NDArray:
    """Vectorized Lyapunov value over a stack of snapshots."""
    if system.law is Law.BEARING:
        energy = bearing_energy(system, p)
    else:
        energy = displacement_energy(system, t, p)
    xi_term, heading_term = _common_terms(system, h, xi)
    return energy + xi_term + heading_term


def compact_derivative(state: SystemState, system: TrackingSystem) -> tuple[NDArray, NDArray, NDArray]:
    """Stacked ``(p_dot, xi_dot, h_dot)`` from the matrix form of the closed loop."""
    n, d = state.p.shape
    ops = compact_operators(state, system)
    if system.law is Law.BEARING:
        _, _, g, g_star = _edge_geometry(system, state.p)
        e = stacked_incidence(system).T @ (g - g_star).ravel()
    else:
        target = _require_target(system)
        e = laplacian_matrix(system) @ (state.p - target.at(state.t, system.velocity)).ravel()
    k1, k2 = system.gains.k1, system.gains.k2
    drift = (np.eye(d * n) - ops.Z) @ np.tile(system.velocity, n)
    p_dot = drift - ops.Z @ ops.D_h @ (k1 * e - ops.xi)
    xi_dot = -ops.Z @ ops.D_h @ e - ops.Z @ ops.D_perp @ ops.xi
    h_dot = -ops.Z @ ops.D_perp @ (k2 * (e - ops.xi))
    return p_dot, xi_dot, h_dot


def compact_residual(
    state: SystemState,
    system: TrackingSystem,
    derivative_fn: Callable[[SystemState, TrackingSystem], StateDerivative] = derivative,
) -> float:
    """Max-norm gap between the stacked matrix dynamics and the per-agent ones."""
    n_l = system.graph.n_leaders
    p_dot, xi_dot, h_dot = compact_derivative(state, system)
    k = derivative_fn(state, system)
    # leader xi rows are a convention (v_c), their rate is zero in both forms
    xi_agent = k.xi.copy()
    xi_agent[:n_l] = 0.0
    return float(
        max(
            np.abs(p_dot - k.p.ravel()).max(),
            np.abs(xi_dot - xi_agent.ravel()).max(),
            np.abs(h_dot - k.h.ravel()).max(),
        )
    )


@dataclass(frozen=True)
class CollisionCertificate:
    law: Law
    kappa: float
    epsilon: float
    gamma: float
    beta: float
    phi: float

    @property
    def holds(self) -> bool:
        return self.phi <= self.epsilon


def _certificate_inputs(system: TrackingSystem, kappa: float, beta: float):
    if not beta >= 0:
        raise ValueError(f"beta must be >= 0, got {beta}")
    target = _require_target(system)
    d_min = target.min_distance
    if not 0 < kappa < d_min:
        raise InvalidKappa(f"kappa must lie in (0, {d_min:.6g}), got {kappa}")
    lam, h_norm = spectral_quantities(
        bearing_laplacian(system.graph, system.desired), build_incidence(system.graph)
    )
    eps = (d_min - kappa) / math.sqrt(system.graph.n)
    return target, lam, h_norm, eps


def collision_certificate_bearing(system: TrackingSystem, kappa: float, beta: float) -> CollisionCertificate:
    """Sufficient no-collision condition for the bearing-only law given ``V(0) <= beta``."""
    target, lam, h_norm, eps = _certificate_inputs(system, kappa, beta)
    gamma = 2 * h_norm / lam
    pattern = float(np.linalg.norm(target.centered))
    gb = gamma * beta
    phi = (gb + math.sqrt(gb * gb + 4 * gb * pattern)) / 2
    return CollisionCertificate(Law.BEARING, kappa, eps, gamma, beta, phi)


def collision_certificate_displacement(system: TrackingSystem, kappa: float, beta: float) -> CollisionCertificate:
    """Same guarantee for the displacement law: ``|δ_p| <= sqrt(2 beta / lambda_min(B_ff))``."""
    _, lam, h_norm, eps = _certificate_inputs(system, kappa, beta)
    phi = math.sqrt(2 * beta / lam)
    return CollisionCertificate(Law.DISPLACEMENT, kappa, eps, 2 * h_norm / lam, beta, phi)


def collision_certificate(
    system: TrackingSystem, kappa: float, initial: SystemState, beta: float | None = None
) -> CollisionCertificate:
    """Certificate for ``system.law``; ``beta`` defaults to ``V(initial)``."""
    if beta is None:
        # V is nonnegative; on the target it can round to about -1e-17
        beta = max(lyapunov(initial, system).V, 0.0)
    if system.law is Law.BEARING:
        return collision_certificate_bearing(system, kappa, beta)
    return collision_certificate_displacement(system, kappa, beta)


@dataclass(frozen=True)
class TraceMetrics:
    """Per-snapshot diagnostics, each indexed by snapshot."""

    V: NDArray
    bearing_error: NDArray
    position_error: NDArray
    min_distance: NDArray
    velocity_errors: NDArray
    bearing_energy: NDArray
    alignment_gap: NDArray
    quadratic_gap: NDArray

    def first_time_below(self, t: NDArray, threshold: float) -> float | None:
        """First snapshot time at which the bearing error is below ``threshold``."""
        below = np.flatnonzero(self.bearing_error < threshold)
        return float(t[below[0]]) if below.size else None

    def settling_time(self, t: NDArray, threshold: float) -> float | None:
        """First time after which the bearing error stays below ``threshold``."""
        above = np.flatnonzero(self.bearing_error >= threshold)
        if above.size == 0:
            return float(t[0]) if len(t) else None
        k = above[-1] + 1
        return float(t[k]) if k < len(t) else None


def trace_metrics(trace: SimulationTrace, system: TrackingSystem) -> TraceMetrics:
    """Compute every per-snapshot metric for ``trace`` in one vectorized pass.

    ``alignment_gap`` is ``(p - p*)^T H̄^T (g - g*)`` and ``quadratic_gap`` is the
    slack ``2|H̄|(|δ_p| + |p̃*|) z^T(g - g*) - lambda_min(B_ff) |δ_p|^2``.
    """
    target = _require_target(system)
    n_l = system.graph.n_leaders
    t, p = trace.t, trace.p
    z, dist, g, g_star = _edge_geometry(system, p)
    dg = g - g_star
    energy = np.sum(dist - np.einsum("tkd,kd->tk", z, g_star), axis=-1)
    p_star = target.at(t, system.velocity)
    delta = p - p_star
    delta_norm = np.linalg.norm(_rows(delta), axis=-1)
    z_star = p_star[:, system.graph.sinks] - p_star[:, system.graph.sources]
    alignment_gap = np.einsum("tkd,tkd->t", z - z_star, dg)
    lam, h_norm = spectral_quantities(
        bearing_laplacian(system.graph, system.desired), build_incidence(system.graph)
    )
    pattern = float(np.linalg.norm(target.centered))
    quadratic_gap = 2 * h_norm * (delta_norm + pattern) * energy - lam * delta_norm**2

    i, j = np.triu_indices(system.graph.n, 1)
    min_dist = np.linalg.norm(p[:, j] - p[:, i], axis=-1).min(axis=-1) if i.size else np.full(len(t), np.inf)
    v = trace.velocities[:, n_l:] - system.velocity
    return TraceMetrics(
        V=lyapunov_values(system, t, p, trace.h, trace.xi),
        bearing_error=np.linalg.norm(_rows(dg), axis=-1),
        position_error=delta_norm,
        min_distance=min_dist,
        velocity_errors=np.linalg.norm(v, axis=-1),
        bearing_energy=energy,
        alignment_gap=alignment_gap,
        quadratic_gap=quadratic_gap,
    )


def descent_tolerance(dt: float, state_norm: NDArray) -> NDArray:
    """Allowed numerical increase of V per snapshot: ``max(1e-9, 10 dt^4 |state|)``."""
    return np.maximum(1e-9, 10 * dt**4 * state_norm)


def lyapunov_increments(trace: SimulationTrace, metrics: TraceMetrics, dt: float, cadence: int = 1):
    """Return ``(dV, eps_num)`` for each consecutive snapshot pair.

    With ``cadence > 1`` the per-step allowance is scaled by the number of
    steps between snapshots.
    """
    stacked = np.concatenate([_rows(trace.p), _rows(trace.h), _rows(trace.xi)], axis=1)
    norms = np.linalg.norm(stacked, axis=1)
    return np.diff(metrics.V), cadence * descent_tolerance(dt, norms[:-1])
