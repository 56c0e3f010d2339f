"""Plain CSV tables, one per figure panel, for any plotting tool."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from ..dynamics import SimulationTrace
from .tracefile import AXES

PANELS = ("trajectories.csv", "velocity_errors.csv", "bearing_error.csv", "lyapunov.csv")


def _write(path: Path, header: list[str], columns: list[np.ndarray]) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        if columns and len(columns[0]):
            np.savetxt(fh, np.column_stack(columns), fmt="%.17g", delimiter=",")


def emit_plot_data(trace: SimulationTrace, out_dir: str | Path, n_leaders: int) -> list[Path]:
    """Write the trajectory, velocity-error, bearing-error and Lyapunov tables.

    An empty trace still produces all four files, with headers only.
    Returns the written paths in :data:`PANELS` order.
    """
    if trace.metrics is None:
        raise ValueError("trace has no metrics; run analysis.trace_metrics first")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    m = trace.metrics
    T, n, d = trace.p.shape
    t = trace.t
    paths = [out / name for name in PANELS]

    traj_header = ["t"] + [f"p{i}_{a}" for i in range(1, n + 1) for a in AXES[:d]]
    _write(paths[0], traj_header, [t, trace.p.reshape(T, n * d)])

    followers = range(n_leaders + 1, n + 1)
    _write(paths[1], ["t"] + [f"vel_err{i}" for i in followers], [t, m.velocity_errors])
    _write(paths[2], ["t", "bearing_error"], [t, m.bearing_error])
    _write(paths[3], ["t", f"V_{trace.law.value}"], [t, m.V])
    return paths
