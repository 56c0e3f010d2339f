"""Sensing graphs, incidence / bearing-Laplacian algebra and rigidity tests.

Agents are indexed from 0 inside the library; leaders always occupy indices
``0 .. n_leaders - 1``. Scenario files use 1-based ids and are translated by
the harness.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Mapping

import numpy as np
from numpy.typing import ArrayLike, NDArray

from . import geometry
from .errors import (
    DegenerateTarget,
    FormationError,
    InconsistentLeaders,
    SingularSystem,
    UnrealizableBearings,
    ValidationError,
)

log = logging.getLogger(__name__)

RANK_RTOL = 1e-8
RENORMALIZE_TOL = 1e-6
LEADER_BEARING_TOL = 1e-6
SINGULAR_TOL = 1e-10


Edge = tuple[int, int]


@dataclass(frozen=True)
class FormationGraph:
    """Undirected sensing graph with its leader set.

    ``edges`` is the sensing graph as given. ``augmented_edges`` adds every
    leader-leader pair and is the edge set used everywhere else, in canonical
    order: sorted by ``(min, max)`` and oriented low -> high.
    """

    n: int
    n_leaders: int
    edges: tuple[Edge, ...]

    def __post_init__(self):
        if self.n_leaders < 2:
            raise ValidationError("leaders", f"n_l >= 2 is required, got n_l = {self.n_leaders}")
        if self.n_leaders > self.n:
            raise ValidationError("leaders", "more leaders than agents")
        seen = set()
        for i, j in self.edges:
            if not (0 <= i < self.n and 0 <= j < self.n):
                raise ValidationError("edges", f"edge ({i + 1},{j + 1}) references an unknown agent")
            if i == j:
                raise ValidationError("edges", f"self-loop at agent {i + 1}")
            key = (min(i, j), max(i, j))
            if key in seen:
                raise ValidationError("edges", f"duplicate edge ({key[0] + 1},{key[1] + 1})")
            seen.add(key)

    @property
    def n_followers(self) -> int:
        return self.n - self.n_leaders

    @property
    def leaders(self) -> range:
        return range(self.n_leaders)

    @property
    def followers(self) -> range:
        return range(self.n_leaders, self.n)

    @cached_property
    def augmented_edges(self) -> tuple[Edge, ...]:
        pairs = {(min(i, j), max(i, j)) for i, j in self.edges}
        pairs.update(itertools.combinations(range(self.n_leaders), 2))
        return tuple(sorted(pairs))

    @property
    def m(self) -> int:
        return len(self.augmented_edges)

    @cached_property
    def edge_index(self) -> dict[Edge, int]:
        return {e: k for k, e in enumerate(self.augmented_edges)}

    @cached_property
    def sources(self) -> NDArray:
        return np.array([i for i, _ in self.augmented_edges], dtype=int)

    @cached_property
    def sinks(self) -> NDArray:
        return np.array([j for _, j in self.augmented_edges], dtype=int)

    def neighbors(self, i: int) -> list[int]:
        """Neighbors of ``i`` in the augmented graph, ascending."""
        out = [b for a, b in self.augmented_edges if a == i]
        out += [a for a, b in self.augmented_edges if b == i]
        return sorted(out)


@dataclass(frozen=True)
class DesiredBearingSet:
    """Unit desired bearings, one row per canonical edge (oriented low -> high)."""

    graph: FormationGraph
    vectors: NDArray

    @property
    def d(self) -> int:
        return self.vectors.shape[1]

    def __getitem__(self, edge: Edge) -> NDArray:
        i, j = edge
        if i < j:
            return self.vectors[self.graph.edge_index[(i, j)]]
        return -self.vectors[self.graph.edge_index[(j, i)]]

    @classmethod
    def from_mapping(
        cls, graph: FormationGraph, mapping: Mapping[Edge, ArrayLike]
    ) -> DesiredBearingSet:
        """Build from ``{(i, j): g_ij}``; either orientation is accepted.

        Vectors whose norm is off by more than 1e-6 are renormalized with a
        logged warning.
        """
        oriented: dict[Edge, NDArray] = {}
        for (i, j), g in mapping.items():
            key = (min(i, j), max(i, j))
            if key not in graph.edge_index:
                raise ValidationError("bearings", f"bearing given for ({i + 1},{j + 1}) which is not an edge")
            g = np.asarray(g, dtype=float)
            norm = float(np.linalg.norm(g))
            if norm == 0.0 or not np.isfinite(norm):
                raise ValidationError("bearings", f"bearing ({i + 1},{j + 1}) has zero or non-finite norm")
            if abs(norm - 1.0) > RENORMALIZE_TOL:
                log.warning("desired bearing (%d,%d) has norm %.6g; renormalizing", i + 1, j + 1, norm)
            g = g / norm
            if i > j:
                g = -g
            if key in oriented and not np.allclose(oriented[key], g, atol=RENORMALIZE_TOL):
                raise ValidationError("bearings", f"conflicting bearings for edge ({key[0] + 1},{key[1] + 1})")
            oriented[key] = g
        missing = [e for e in graph.augmented_edges if e not in oriented]
        if missing:
            i, j = missing[0]
            raise ValidationError("bearings", f"missing desired bearing for edge ({i + 1},{j + 1})")
        vectors = np.array([oriented[e] for e in graph.augmented_edges])
        return cls(graph, vectors)

    @classmethod
    def from_positions(cls, graph: FormationGraph, positions: ArrayLike) -> DesiredBearingSet:
        positions = np.asarray(positions, dtype=float)
        g, _ = geometry.bearings(positions, graph.sources, graph.sinks)
        return cls(graph, g)


@dataclass(frozen=True)
class BearingLaplacian:
    """Dense ``dn x dn`` bearing Laplacian with its leader/follower blocks."""

    matrix: NDArray
    d: int
    n_leaders: int

    @property
    def _split(self) -> int:
        return self.d * self.n_leaders

    @property
    def ll(self) -> NDArray:
        return self.matrix[: self._split, : self._split]

    @property
    def lf(self) -> NDArray:
        return self.matrix[: self._split, self._split :]

    @property
    def fl(self) -> NDArray:
        return self.matrix[self._split :, : self._split]

    @property
    def ff(self) -> NDArray:
        return self.matrix[self._split :, self._split :]


@dataclass(frozen=True)
class FormationTarget:
    """Target configuration at t = 0; it translates rigidly with the leaders."""

    positions: NDArray

    @property
    def centroid(self) -> NDArray:
        return self.positions.mean(axis=0)

    @property
    def centered(self) -> NDArray:
        return self.positions - self.centroid

    @property
    def min_distance(self) -> float:
        return float(min_pairwise_distance(self.positions))

    def at(self, t: float | NDArray, velocity: ArrayLike) -> NDArray:
        """Target positions at time(s) ``t`` for leader velocity ``velocity``."""
        t = np.asarray(t, dtype=float)
        v = np.asarray(velocity, dtype=float)
        return self.positions + t[..., None, None] * v


@dataclass(frozen=True)
class RigidityReport:
    rank: int
    dim: int
    d: int
    expected_rank: int
    translation_residual: float
    scale_residual: float

    @property
    def nullity(self) -> int:
        return self.dim - self.rank

    @property
    def rigid(self) -> bool:
        return self.rank == self.expected_rank

    @property
    def null_space_ok(self) -> bool:
        return max(self.translation_residual, self.scale_residual) <= 1e-9

    def __str__(self) -> str:
        flag = "true" if self.rigid else "false"
        return f"rigid: {flag} (rank {self.rank}/{self.dim}, nullity {self.nullity})"


def build_incidence(graph: FormationGraph) -> NDArray:
    """Incidence matrix of the augmented graph, ``-1`` at the source, ``+1`` at the sink."""
    H = np.zeros((graph.m, graph.n))
    k = np.arange(graph.m)
    H[k, graph.sources] = -1.0
    H[k, graph.sinks] = 1.0
    return H


def bearing_laplacian(graph: FormationGraph, bearings: DesiredBearingSet) -> BearingLaplacian:
    d = bearings.d
    B = np.zeros((d * graph.n, d * graph.n))
    for (i, j), g in zip(graph.augmented_edges, bearings.vectors):
        P = geometry.projector(g)
        si, sj = slice(d * i, d * i + d), slice(d * j, d * j + d)
        B[si, si] += P
        B[sj, sj] += P
        B[si, sj] -= P
        B[sj, si] -= P
    return BearingLaplacian(B, d, graph.n_leaders)


def numerical_rank(A: NDArray, rtol: float = RANK_RTOL) -> int:
    s = np.linalg.svd(A, compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.count_nonzero(s > rtol * s[0]))


def min_pairwise_distance(points: NDArray) -> float:
    n = points.shape[0]
    if n < 2:
        return float("inf")
    i, j = np.triu_indices(n, 1)
    return float(np.linalg.norm(points[j] - points[i], axis=-1).min())


def check_rigidity(graph: FormationGraph, target: FormationTarget) -> RigidityReport:
    """Rank and null-space test for infinitesimal bearing rigidity.

    The formation is rigid iff ``rank B(p*) = dn - d - 1``; the report also
    records how well the translations and the centered pattern itself lie in
    the null space.

    Raises:
        DegenerateTarget: if two target positions coincide.
    """
    p = np.asarray(target.positions, dtype=float)
    n, d = p.shape
    if min_pairwise_distance(p) <= geometry.COINCIDENCE_TOL:
        raise DegenerateTarget("two target positions coincide")
    B = bearing_laplacian(graph, DesiredBearingSet.from_positions(graph, p)).matrix
    translation = max(
        float(np.linalg.norm(B @ np.tile(np.eye(d)[k], n))) for k in range(d)
    )
    scale = float(np.linalg.norm(B @ target.centered.ravel()))
    return RigidityReport(
        rank=numerical_rank(B),
        dim=d * n,
        d=d,
        expected_rank=d * n - d - 1,
        translation_residual=translation,
        scale_residual=scale,
    )


def solve_target(
    graph: FormationGraph, bearings: DesiredBearingSet, leader_positions: ArrayLike
) -> FormationTarget:
    """Recover follower target positions from leader positions and bearings.

    Solves ``B_ff p_f = -B_fl p_l``.

    Raises:
        InconsistentLeaders: leader positions contradict a leader-leader bearing.
        SingularSystem: ``lambda_min(B_ff) < 1e-10``.
        UnrealizableBearings: the solution does not reproduce the bearings.
    """
    p_l = np.asarray(leader_positions, dtype=float)
    d = bearings.d
    if p_l.shape != (graph.n_leaders, d):
        raise ValueError(f"expected leader positions of shape {(graph.n_leaders, d)}, got {p_l.shape}")
    for i, j in itertools.combinations(range(graph.n_leaders), 2):
        try:
            g = geometry.bearing(p_l[i], p_l[j])
        except FormationError as exc:
            raise InconsistentLeaders(f"leaders {i + 1} and {j + 1} coincide") from exc
        err = float(np.abs(g - bearings[(i, j)]).max())
        if err > LEADER_BEARING_TOL:
            raise InconsistentLeaders(
                f"leaders {i + 1},{j + 1}: bearing {np.round(g, 6).tolist()} "
                f"differs from desired {np.round(bearings[(i, j)], 6).tolist()} by {err:.2e}"
            )
    if graph.n_followers == 0:
        return FormationTarget(p_l.copy())

    B = bearing_laplacian(graph, bearings)
    lam = float(np.linalg.eigvalsh(B.ff)[0])
    if lam < SINGULAR_TOL:
        raise SingularSystem(f"lambda_min(B_ff) = {lam:.3e}; formation is not bearing rigid")
    p_f = np.linalg.solve(B.ff, -B.fl @ p_l.ravel())
    p = np.vstack([p_l, p_f.reshape(-1, d)])

    if min_pairwise_distance(p) <= geometry.COINCIDENCE_TOL:
        raise DegenerateTarget("solved target places two agents at the same point")
    g, _ = geometry.bearings(p, graph.sources, graph.sinks)
    err = float(np.abs(g - bearings.vectors).max())
    if err > LEADER_BEARING_TOL:
        raise UnrealizableBearings(f"solved target misses desired bearings by {err:.2e}")
    return FormationTarget(p)


def spectral_quantities(B: BearingLaplacian, H: NDArray) -> tuple[float, float]:
    """Return ``(lambda_min(B_ff), ||H||_2)``.

    ``||H ⊗ I_d||_2 = ||H||_2``, so the Kronecker product is never formed.
    ``lambda_min`` is ``inf`` when there are no followers.
    """
    ff = B.ff
    lam = float(np.linalg.eigvalsh(ff)[0]) if ff.size else float("inf")
    h_norm = float(np.linalg.svd(H, compute_uv=False)[0])
    return lam, h_norm
