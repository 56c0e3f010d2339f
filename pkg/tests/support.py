"""Shared builders for the test suite: random rigid formations and random states."""

from __future__ import annotations

import itertools

import numpy as np

from bearingtrack.control import ControlGains, Law
from bearingtrack.analysis import lyapunov
from bearingtrack.dynamics import SystemState, TrackingSystem, derivative
from bearingtrack.formation import (
    DesiredBearingSet,
    FormationGraph,
    FormationTarget,
    bearing_laplacian,
    build_incidence,
    min_pairwise_distance,
    spectral_quantities,
)
from bearingtrack.harness import load_scenario

FD_STEP = 1e-6

REFERENCE_GAINS = {Law.BEARING: ControlGains(15.0, 7.0), Law.DISPLACEMENT: ControlGains(5.0, 3.0)}


def unit(rng: np.random.Generator, *shape: int) -> np.ndarray:
    v = rng.normal(size=shape)
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def random_formation(rng: np.random.Generator, d: int, n_followers: int, n_leaders: int = 2,
                     min_distance: float = 1.5, scale: float = 5.0):
    """Complete-graph formation on random points, well separated and well conditioned."""
    n = n_leaders + n_followers
    while True:
        p = rng.uniform(-scale, scale, size=(n, d))
        if min_pairwise_distance(p) < min_distance:
            continue
        graph = FormationGraph(n, n_leaders, tuple(itertools.combinations(range(n), 2)))
        desired = DesiredBearingSet.from_positions(graph, p)
        lam, _ = spectral_quantities(bearing_laplacian(graph, desired), build_incidence(graph))
        if lam > 1e-2:
            return graph, desired, FormationTarget(p)


def random_system(rng: np.random.Generator, d: int, law: Law, n_followers: int = 3,
                  speed: float | None = None, gains: ControlGains | None = None) -> TrackingSystem:
    graph, desired, target = random_formation(rng, d, n_followers)
    heading = unit(rng, d)
    return TrackingSystem(
        graph=graph,
        desired=desired,
        law=Law(law),
        gains=gains or ControlGains(*rng.uniform(0.5, 10.0, size=2)),
        speed=float(rng.uniform(0.0, 0.5) if speed is None else speed),
        heading=heading,
        target=target,
    )


def equilibrium_state(system: TrackingSystem, t: float = 0.0) -> SystemState:
    n = system.graph.n
    p = system.target.at(t, system.velocity)
    return SystemState(t, p, np.tile(system.heading, (n, 1)), np.tile(system.velocity, (n, 1)))


def random_state(rng: np.random.Generator, system: TrackingSystem, spread: float = 1.0) -> SystemState:
    """Leaders on their reference trajectory, followers perturbed off target."""
    n, n_l, d = system.graph.n, system.graph.n_leaders, system.d
    t = float(rng.uniform(0.0, 20.0))
    p = system.target.at(t, system.velocity).copy()
    p[n_l:] += spread * rng.normal(size=(n - n_l, d))
    h = np.tile(system.heading, (n, 1))
    h[n_l:] = unit(rng, n - n_l, d)
    xi = np.tile(system.velocity, (n, 1))
    xi[n_l:] = rng.normal(scale=0.5, size=(n - n_l, d))
    return SystemState(t, p, h, xi)


def perturbed_equilibrium(rng: np.random.Generator, system: TrackingSystem, scale: float) -> SystemState:
    """Equilibrium with follower positions, headings and xi nudged by ``scale``."""
    s = equilibrium_state(system)
    n_f, d = system.graph.n_followers, system.d
    p, h, xi = s.p.copy(), s.h.copy(), s.xi.copy()
    p[-n_f:] += scale * rng.normal(size=(n_f, d))
    h[-n_f:] = h[-n_f:] + scale * rng.normal(size=(n_f, d))
    h /= np.linalg.norm(h, axis=1, keepdims=True)
    xi[-n_f:] += scale * rng.normal(scale=0.1, size=(n_f, d))
    return SystemState(s.t, p, h, xi)


def bundled_system(d: int, law: Law | str) -> TrackingSystem:
    return load_scenario(f"paper_{d}d.json").system(law)


def finite_difference_vdot(state: SystemState, system: TrackingSystem, eps: float = FD_STEP) -> float:
    """Central difference of V along the closed-loop vector field."""
    k = derivative(state, system)

    def shifted(a):
        return SystemState(state.t + a, state.p + a * k.p, state.h + a * k.h, state.xi + a * k.xi)

    return (lyapunov(shifted(eps), system).V - lyapunov(shifted(-eps), system).V) / (2 * eps)
