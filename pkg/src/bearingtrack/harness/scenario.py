"""Scenario documents: JSON parsing, validation and bundled examples.

A scenario is a single JSON object::

    {
      "format_version": 1,
      "name": "paper_3d",
      "dimension": 3,
      "leader_reference": {"speed": 0.15, "heading": [0.866, 0.5, 0.0]},
      "agents": [
        {"id": 1, "leader": true, "position": [10, 0, 0]},
        {"id": 3, "leader": false, "position": [3, 9, 1], "heading": [0, 1, 0], "xi": [0, 0, 0]},
        ...
      ],
      "edges": [{"from": 1, "to": 2, "bearing": [0, 1, 0]}, ...],
      "gains": {"bearing": {"k1": 15, "k2": 7}, "displacement": {"k1": 5, "k2": 3}},
      "integrator": {"dt": 0.005, "duration": 120, "min_separation_abort": 0.001},
      "output": {"cadence": 1}
    }

Ids are 1-based and leaders come first. ``bearing`` is the desired unit
vector from ``from`` toward ``to``. Leader-leader pairs missing from
``edges`` get their bearing from the leaders' initial positions.
"""

from __future__ import annotations

import itertools
import json
import logging
from dataclasses import dataclass
from functools import cached_property
from importlib import resources
from pathlib import Path
from typing import Any

import numpy as np
from numpy.typing import NDArray

from .. import geometry
from ..control import ControlGains, Law
from ..dynamics import IntegratorConfig, SystemState, TrackingSystem
from ..errors import ParseError, ValidationError
from ..formation import (
    DesiredBearingSet,
    FormationGraph,
    FormationTarget,
    RigidityReport,
    check_rigidity,
    solve_target,
)

log = logging.getLogger(__name__)

FORMAT_VERSION = 1
UNIT_TOL = 1e-6
BUNDLED = ("paper_3d.json", "paper_2d.json")


@dataclass(frozen=True)
class Scenario:
    name: str
    dimension: int
    graph: FormationGraph
    desired: DesiredBearingSet
    positions: NDArray
    headings: NDArray
    xi: NDArray
    gains: dict[Law, ControlGains]
    speed: float
    heading: NDArray
    integrator: IntegratorConfig
    notes: str = ""

    @property
    def n(self) -> int:
        return self.graph.n

    @property
    def velocity(self) -> NDArray:
        return self.speed * self.heading

    @cached_property
    def target(self) -> FormationTarget:
        return solve_target(self.graph, self.desired, self.positions[: self.graph.n_leaders])

    def rigidity(self) -> RigidityReport:
        return check_rigidity(self.graph, self.target)

    def system(self, law: Law | str, gains: ControlGains | None = None) -> TrackingSystem:
        law = Law(law)
        if gains is None and law not in self.gains:
            raise ValidationError(f"gains.{law.value}", "scenario has no gains for this law")
        return TrackingSystem(
            graph=self.graph,
            desired=self.desired,
            law=law,
            gains=gains or self.gains[law],
            speed=self.speed,
            heading=self.heading,
            target=self.target,
        )

    def initial_state(self) -> SystemState:
        return SystemState(0.0, self.positions.copy(), self.headings.copy(), self.xi.copy())


def _get(doc: Any, key: str, where: str, kind=None, default: Any = ...):
    if not isinstance(doc, dict):
        raise ParseError(f"{where or 'scenario'} must be a JSON object")
    if key not in doc:
        if default is ...:
            raise ValidationError(f"{where}{key}", "required field is missing")
        return default
    value = doc[key]
    if kind is not None:
        if isinstance(value, bool) and kind is not bool or not isinstance(value, kind):
            name = getattr(kind, "__name__", "number")
            raise ValidationError(f"{where}{key}", f"expected {name}, got {type(value).__name__}")
    return value


def _vector(value: Any, d: int, field: str) -> NDArray:
    try:
        arr = np.asarray(value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ValidationError(field, "expected a list of numbers") from exc
    if arr.shape != (d,):
        raise ValidationError(field, f"expected {d} components, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(field, "components must be finite")
    return arr


def _unit(value: Any, d: int, field: str) -> NDArray:
    v = _vector(value, d, field)
    norm = float(np.linalg.norm(v))
    if norm == 0.0:
        raise ValidationError(field, "zero vector cannot be a direction")
    if abs(norm - 1.0) > UNIT_TOL:
        log.warning("%s has norm %.6g; renormalizing", field, norm)
    return v / norm


def scenario_from_dict(doc: dict) -> Scenario:
    """Validate a parsed scenario document and build a :class:`Scenario`."""
    if not isinstance(doc, dict):
        raise ParseError("scenario document must be a JSON object")
    version = doc.get("format_version", FORMAT_VERSION)
    if version != FORMAT_VERSION:
        raise ValidationError("format_version", f"unsupported version {version!r} (expected {FORMAT_VERSION})")
    d = _get(doc, "dimension", "", int)
    if d not in (2, 3):
        raise ValidationError("dimension", "must be 2 or 3")

    ref = _get(doc, "leader_reference", "", dict)
    speed = float(_get(ref, "speed", "leader_reference.", (int, float)))
    if speed < 0:
        raise ValidationError("leader_reference.speed", "u_c >= 0 required (direction goes in heading)")
    h_c = _unit(_get(ref, "heading", "leader_reference."), d, "leader_reference.heading")
    v_c = speed * h_c

    agents = _get(doc, "agents", "", list)
    ids = [_get(a, "id", "agents[].", int) for a in agents]
    n = len(agents)
    if sorted(ids) != list(range(1, n + 1)):
        raise ValidationError("agents.id", "ids must be 1..n without gaps or repeats")
    agents = sorted(agents, key=lambda a: a["id"])
    is_leader = [bool(_get(a, "leader", f"agents[{a['id']}].", bool)) for a in agents]
    n_l = sum(is_leader)
    if any(is_leader[n_l:]) or not all(is_leader[:n_l]):
        raise ValidationError("agents.leader", "leaders must be the lowest ids (1..n_l)")

    positions = np.empty((n, d))
    headings = np.empty((n, d))
    xi = np.zeros((n, d))
    for k, a in enumerate(agents):
        where = f"agents[{k + 1}]"
        positions[k] = _vector(_get(a, "position", where + "."), d, where + ".position")
        if is_leader[k]:
            if "heading" in a:
                h = _unit(a["heading"], d, where + ".heading")
                if np.abs(h - h_c).max() > UNIT_TOL:
                    raise ValidationError(where + ".heading", "leader headings must equal leader_reference.heading")
            headings[k] = h_c
            xi[k] = v_c
        else:
            headings[k] = _unit(_get(a, "heading", where + "."), d, where + ".heading")
            if "xi" in a:
                xi[k] = _vector(a["xi"], d, where + ".xi")

    edges_doc = _get(doc, "edges", "", list)
    edges, mapping = [], {}
    for k, e in enumerate(edges_doc):
        where = f"edges[{k}]."
        i = _get(e, "from", where, int) - 1
        j = _get(e, "to", where, int) - 1
        edges.append((i, j))
        if "bearing" in e:
            mapping[(i, j)] = _vector(e["bearing"], d, where + "bearing")
    graph = FormationGraph(n=n, n_leaders=n_l, edges=tuple(edges))
    given = {(min(i, j), max(i, j)) for i, j in mapping}
    for i, j in itertools.combinations(range(n_l), 2):
        if float(np.linalg.norm(positions[j] - positions[i])) <= geometry.COINCIDENCE_TOL:
            raise ValidationError(f"agents[{j + 1}].position", f"leaders {i + 1} and {j + 1} coincide")
        if (i, j) not in given:
            mapping[(i, j)] = geometry.bearing(positions[i], positions[j])
    desired = DesiredBearingSet.from_mapping(graph, mapping)
    for i, j in itertools.combinations(range(n_l), 2):
        g = geometry.bearing(positions[i], positions[j])
        if np.abs(g - desired[(i, j)]).max() > UNIT_TOL:
            raise ValidationError(
                f"agents[{i + 1}].position",
                f"leader positions {i + 1},{j + 1} inconsistent with desired bearing g*_{i + 1}{j + 1}",
            )

    gains_doc = _get(doc, "gains", "", dict)
    gains = {}
    for law in Law:
        if law.value in gains_doc:
            g = gains_doc[law.value]
            gains[law] = ControlGains(
                float(_get(g, "k1", f"gains.{law.value}.", (int, float))),
                float(_get(g, "k2", f"gains.{law.value}.", (int, float))),
            )
    if not gains:
        raise ValidationError("gains", "gains for at least one law are required")

    integ = doc.get("integrator", {})
    out = doc.get("output", {})
    config = IntegratorConfig(
        dt=float(integ.get("dt", 0.005)),
        duration=float(integ.get("duration", 120.0)),
        min_separation_abort=float(integ.get("min_separation_abort", 1e-3)),
        cadence=int(out.get("cadence", 1)),
    )
    return Scenario(
        name=str(doc.get("name", "")),
        dimension=d,
        graph=graph,
        desired=desired,
        positions=positions,
        headings=headings,
        xi=xi,
        gains=gains,
        speed=speed,
        heading=h_c,
        integrator=config,
        notes=str(doc.get("notes", "")),
    )


def resolve_path(path: str | Path) -> Path:
    """Return ``path`` if it exists, else the bundled scenario of that name."""
    p = Path(path)
    if p.exists():
        return p
    if p.name in BUNDLED:
        return Path(str(resources.files("bearingtrack.scenarios").joinpath(p.name)))
    return p


def load_scenario(path: str | Path) -> Scenario:
    """Read and validate a scenario file.

    Raises:
        ParseError: unreadable or malformed JSON.
        ValidationError: an invariant is violated; the message names the field.
    """
    p = resolve_path(path)
    try:
        doc = json.loads(p.read_text())
    except OSError as exc:
        raise ParseError(f"cannot read {p}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"{p}: {exc}") from exc
    try:
        return scenario_from_dict(doc)
    except (KeyError, TypeError, AttributeError) as exc:
        raise ParseError(f"{p}: malformed scenario ({exc})") from exc


def scenario_to_dict(s: Scenario) -> dict:
    n_l = s.graph.n_leaders
    agents = []
    for k in range(s.n):
        a = {"id": k + 1, "leader": k < n_l, "position": s.positions[k].tolist()}
        if k >= n_l:
            a["heading"] = s.headings[k].tolist()
            a["xi"] = s.xi[k].tolist()
        agents.append(a)
    return {
        "format_version": FORMAT_VERSION,
        "name": s.name,
        "dimension": s.dimension,
        "leader_reference": {"speed": s.speed, "heading": s.heading.tolist()},
        "agents": agents,
        "edges": [
            {"from": i + 1, "to": j + 1, "bearing": g.tolist()}
            for (i, j), g in zip(s.graph.augmented_edges, s.desired.vectors)
        ],
        "gains": {law.value: {"k1": g.k1, "k2": g.k2} for law, g in s.gains.items()},
        "integrator": {
            "dt": s.integrator.dt,
            "duration": s.integrator.duration,
            "min_separation_abort": s.integrator.min_separation_abort,
        },
        "output": {"cadence": s.integrator.cadence},
        "notes": s.notes,
    }
