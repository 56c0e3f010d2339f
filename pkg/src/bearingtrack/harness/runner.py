"""Scenario-level simulation: validation, integration and metrics in one call."""

from __future__ import annotations

import dataclasses

from ..analysis import trace_metrics
from ..control import Law
from ..dynamics import IntegratorConfig, SimulationTrace, integrate
from ..errors import ValidationError
from .scenario import Scenario


def simulate(
    scenario: Scenario,
    law: Law | str,
    *,
    dt: float | None = None,
    duration: float | None = None,
    cadence: int | None = None,
    check: bool = True,
) -> SimulationTrace:
    """Run ``scenario`` under ``law`` and attach per-snapshot metrics.

    With ``check`` the target formation must pass the rigidity test first.
    """
    changes = {k: v for k, v in (("dt", dt), ("duration", duration), ("cadence", cadence)) if v is not None}
    config: IntegratorConfig = dataclasses.replace(scenario.integrator, **changes)
    if check:
        report = scenario.rigidity()
        if not report.rigid:
            raise ValidationError("edges", f"target formation is not infinitesimally bearing rigid ({report})")
    system = scenario.system(law)
    trace = integrate(system, scenario.initial_state(), config)
    trace.metrics = trace_metrics(trace, system)
    return trace
