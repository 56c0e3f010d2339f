"""Closed-loop multi-agent dynamics and a fixed-step RK4 integrator."""

from __future__ import annotations

import dataclasses
import logging
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from numpy.typing import NDArray

from . import control, geometry
from .control import ControlGains, Law
from .errors import CoincidentAgents, ValidationError
from .formation import DesiredBearingSet, FormationGraph, FormationTarget

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SystemState:
    """Positions, headings and auxiliary vectors, each of shape ``(n, d)``.

    Leader rows of ``xi`` hold the leaders' velocity by convention.
    """

    t: float
    p: NDArray
    h: NDArray
    xi: NDArray

    @property
    def n(self) -> int:
        return self.p.shape[0]

    @property
    def d(self) -> int:
        return self.p.shape[1]

    def replace(self, **changes) -> SystemState:
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True)
class StateDerivative:
    p: NDArray
    h: NDArray
    xi: NDArray
    u: NDArray
    omega: NDArray


@dataclass(frozen=True)
class IntegratorConfig:
    dt: float = 0.005
    duration: float = 120.0
    min_separation_abort: float = 1e-3
    cadence: int = 1

    def __post_init__(self):
        if not self.dt > 0:
            raise ValidationError("integrator.dt", "dt > 0 required")
        if not self.duration >= self.dt:
            raise ValidationError("integrator.duration", "duration >= dt required")
        if self.min_separation_abort < 0:
            raise ValidationError("integrator.min_separation_abort", "must be >= 0")
        if int(self.cadence) != self.cadence or self.cadence < 1:
            raise ValidationError("output.cadence", "cadence must be a positive integer")

    @property
    def n_steps(self) -> int:
        return int(round(self.duration / self.dt))


@dataclass(frozen=True)
class TrackingSystem:
    """Everything the closed loop needs: graph, bearings, law, gains and leader reference.

    ``target`` is only required by the metrics that compare against the moving
    target formation; the controllers themselves never read it.
    """

    graph: FormationGraph
    desired: DesiredBearingSet
    law: Law
    gains: ControlGains
    speed: float
    heading: NDArray
    target: FormationTarget | None = field(default=None, compare=False)

    @property
    def d(self) -> int:
        return self.desired.d

    @property
    def velocity(self) -> NDArray:
        return self.speed * np.asarray(self.heading, dtype=float)

    @cached_property
    def _sensing(self):
        # (owner, neighbor) pairs for every follower, grouped by owner
        owners, others, slices = [], [], []
        for i in self.graph.followers:
            nbrs = self.graph.neighbors(i)
            start = len(owners)
            owners += [i] * len(nbrs)
            others += nbrs
            slices.append(slice(start, len(owners)))
        owners = np.array(owners, dtype=int)
        others = np.array(others, dtype=int)
        desired = np.array([self.desired[(i, j)] for i, j in zip(owners, others)]).reshape(-1, self.d)
        return owners, others, desired, slices

    @cached_property
    def _pairs(self):
        return np.triu_indices(self.graph.n, 1)

    def check_separation(self, p: NDArray, threshold: float) -> None:
        i, j = self._pairs
        if i.size == 0:
            return
        diff = p[j] - p[i]
        sq = np.einsum("ij,ij->i", diff, diff)
        limit = max(threshold, geometry.COINCIDENCE_TOL)
        if sq.min() <= limit * limit:
            k = int(np.argmin(sq))
            dist = float(np.sqrt(sq[k]))
            if dist < threshold or dist <= geometry.COINCIDENCE_TOL:
                raise CoincidentAgents(int(i[k]), int(j[k]), dist)

    def error_vectors(self, p: NDArray) -> NDArray:
        """Local error vectors ``r_i`` for all followers, shape ``(n_f, d)``."""
        owners, others, desired, slices = self._sensing
        if not slices:
            return np.empty((0, self.d))
        if self.law is Law.BEARING:
            g, _ = geometry.bearings(p, owners, others)
            return np.array([control.bearing_error_vector(g[s], desired[s]) for s in slices])
        z = p[others] - p[owners]
        return np.array([control.displacement_error_vector(z[s], desired[s]) for s in slices])


def derivative(state: SystemState, system: TrackingSystem, min_separation: float = 0.0) -> StateDerivative:
    """Right-hand side of the closed loop at ``state``.

    Raises:
        CoincidentAgents: if two agents are closer than ``min_separation``
            (or coincide outright).
    """
    p, h, xi = state.p, state.h, state.xi
    n_l = system.graph.n_leaders
    system.check_separation(p, min_separation)

    r = system.error_vectors(p)
    cmd = control.follower_command(h[n_l:], xi[n_l:], r, system.gains)
    lead = control.leader_command(system.speed, system.heading)

    p_dot = np.empty_like(p)
    p_dot[:n_l] = system.velocity
    p_dot[n_l:] = h[n_l:] * cmd.u[:, None]
    h_dot = np.zeros_like(h)
    h_dot[n_l:] = geometry.heading_rate(h[n_l:], cmd.omega)
    xi_dot = np.zeros_like(xi)
    xi_dot[n_l:] = cmd.xi_dot

    u = np.empty(len(p))
    u[:n_l] = lead.u
    u[n_l:] = cmd.u
    omega = np.empty((len(p),) + cmd.omega.shape[1:])
    omega[:n_l] = lead.omega
    omega[n_l:] = cmd.omega
    return StateDerivative(p=p_dot, h=h_dot, xi=xi_dot, u=u, omega=omega)


def _rk4(state: SystemState, system: TrackingSystem, dt: float, min_sep: float):
    def shifted(k: StateDerivative, a: float) -> SystemState:
        return SystemState(state.t + a, state.p + a * k.p, state.h + a * k.h, state.xi + a * k.xi)

    k1 = derivative(state, system, min_sep)
    k2 = derivative(shifted(k1, dt / 2), system, min_sep)
    k3 = derivative(shifted(k2, dt / 2), system, min_sep)
    k4 = derivative(shifted(k3, dt), system, min_sep)
    w = dt / 6.0
    p = state.p + w * (k1.p + 2 * k2.p + 2 * k3.p + k4.p)
    h = state.h + w * (k1.h + 2 * k2.h + 2 * k3.h + k4.h)
    xi = state.xi + w * (k1.xi + 2 * k2.xi + 2 * k3.xi + k4.xi)
    h = geometry.normalize(h)
    # leaders never turn; copying avoids last-bit drift from renormalization
    n_l = system.graph.n_leaders
    h[:n_l] = state.h[:n_l]
    return SystemState(state.t + dt, p, h, xi), k1


def step(state: SystemState, system: TrackingSystem, config: IntegratorConfig) -> SystemState:
    """Advance one classical RK4 step and project headings back to the unit sphere."""
    return _rk4(state, system, config.dt, config.min_separation_abort)[0]


@dataclass
class SimulationTrace:
    """Snapshots of the closed loop at a constant cadence.

    Array fields are indexed ``[snapshot, agent, component]``. ``metrics`` is
    filled by :func:`bearingtrack.analysis.trace_metrics`.
    """

    law: Law
    t: NDArray
    p: NDArray
    h: NDArray
    xi: NDArray
    u: NDArray
    omega: NDArray
    aborted: bool = False
    message: str | None = None
    metrics: object | None = None

    def __len__(self) -> int:
        return len(self.t)

    def state(self, k: int) -> SystemState:
        return SystemState(float(self.t[k]), self.p[k], self.h[k], self.xi[k])

    @property
    def velocities(self) -> NDArray:
        return self.h * self.u[..., None]


def integrate(system: TrackingSystem, initial: SystemState, config: IntegratorConfig) -> SimulationTrace:
    """Integrate over ``[t0, t0 + duration]``, recording every ``cadence`` steps.

    A :class:`CoincidentAgents` abort ends the run early; the partial trace is
    returned with ``aborted=True``.
    """
    n_steps = config.n_steps
    n_snap = n_steps // config.cadence + 1
    n, d = initial.p.shape
    w_shape = (n,) if d == 2 else (n, 3)
    buf_t = np.empty(n_snap)
    buf = {k: np.empty((n_snap, n, d)) for k in ("p", "h", "xi")}
    buf_u = np.empty((n_snap, n))
    buf_w = np.empty((n_snap,) + w_shape)

    t0 = initial.t
    state = initial.replace(h=geometry.normalize(initial.h))
    aborted, message, count = False, None, 0

    def record(s: SystemState, k: StateDerivative):
        nonlocal count
        buf_t[count] = s.t
        buf["p"][count], buf["h"][count], buf["xi"][count] = s.p, s.h, s.xi
        buf_u[count], buf_w[count] = k.u, k.omega
        count += 1

    try:
        for k in range(n_steps):
            new_state, k1 = _rk4(state, system, config.dt, config.min_separation_abort)
            if k % config.cadence == 0:
                record(state, k1)
            state = new_state.replace(t=t0 + (k + 1) * config.dt)
        if n_steps % config.cadence == 0:
            record(state, derivative(state, system, config.min_separation_abort))
    except CoincidentAgents as exc:
        aborted, message = True, str(exc)
        log.error("simulation aborted at t=%.4f s: %s", state.t, exc)

    return SimulationTrace(
        law=system.law,
        t=buf_t[:count].copy(),
        p=buf["p"][:count].copy(),
        h=buf["h"][:count].copy(),
        xi=buf["xi"][:count].copy(),
        u=buf_u[:count].copy(),
        omega=buf_w[:count].copy(),
        aborted=aborted,
        message=message,
    )
