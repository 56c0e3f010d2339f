"""Trace CSV format (format version 1).

One header row, then one row per snapshot::

    t,
    for each agent i: p{i}_x.. (d), h{i}_x.. (d), xi{i}_x.. (d), u{i}, omega
    V_<law>, bearing_error, position_error, min_distance,
    vel_err{i} for each follower i

``omega`` is a single ``w{i}`` column in 2-D and ``w{i}_x, w{i}_y, w{i}_z``
in 3-D. Floats are written with 17 significant digits so a read-back is
lossless.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from numpy.typing import NDArray

from ..analysis import TraceMetrics
from ..control import Law
from ..dynamics import SimulationTrace
from ..errors import ParseError

AXES = "xyz"
METRIC_COLUMNS = ("bearing_error", "position_error", "min_distance")


def columns(n: int, n_leaders: int, d: int, law: Law) -> list[str]:
    cols = ["t"]
    for i in range(1, n + 1):
        for name in ("p", "h", "xi"):
            cols += [f"{name}{i}_{a}" for a in AXES[:d]]
        cols.append(f"u{i}")
        cols += [f"w{i}"] if d == 2 else [f"w{i}_{a}" for a in AXES]
    cols.append(f"V_{Law(law).value}")
    cols += METRIC_COLUMNS
    cols += [f"vel_err{i}" for i in range(n_leaders + 1, n + 1)]
    return cols


def column_count(n: int, n_leaders: int, d: int) -> int:
    return 1 + n * (3 * d + 1 + (1 if d == 2 else 3)) + 4 + (n - n_leaders)


def trace_table(trace: SimulationTrace, metrics: TraceMetrics) -> NDArray:
    T, n, d = trace.p.shape
    per_agent = [
        trace.p,
        trace.h,
        trace.xi,
        trace.u[..., None],
        trace.omega[..., None] if d == 2 else trace.omega,
    ]
    agents = np.concatenate(per_agent, axis=-1)
    agents = agents.reshape(T, n * agents.shape[-1])
    return np.column_stack(
        [
            trace.t,
            agents,
            metrics.V,
            metrics.bearing_error,
            metrics.position_error,
            metrics.min_distance,
            metrics.velocity_errors,
        ]
    )


def write_trace(path: str | Path, trace: SimulationTrace, n_leaders: int) -> None:
    """Write ``trace`` (with metrics attached) as CSV."""
    if trace.metrics is None:
        raise ValueError("trace has no metrics; run analysis.trace_metrics first")
    n, d = trace.p.shape[1:] if trace.p.ndim == 3 else (0, 0)
    header = ",".join(columns(n, n_leaders, d, trace.law))
    table = trace_table(trace, trace.metrics)
    with open(path, "w", newline="") as fh:
        fh.write(header + "\n")
        if len(table):
            np.savetxt(fh, table, fmt="%.17g", delimiter=",")


def read_trace(path: str | Path, n: int, n_leaders: int, d: int) -> tuple[SimulationTrace, dict[str, NDArray]]:
    """Parse a trace CSV written by :func:`write_trace`.

    Returns the state/command trace and the stored metric columns keyed by
    column name (``V``, ``bearing_error``, ..., ``velocity_errors``).
    """
    try:
        with open(path) as fh:
            header = fh.readline().strip().split(",")
            data = np.loadtxt(fh, delimiter=",", ndmin=2)
    except (OSError, ValueError) as exc:
        raise ParseError(f"cannot read trace {path}: {exc}") from exc
    law_cols = [c for c in header if c.startswith("V_")]
    if len(law_cols) != 1:
        raise ParseError(f"{path}: header has no V_<law> column")
    try:
        law = Law(law_cols[0][2:])
    except ValueError as exc:
        raise ParseError(f"{path}: unknown law {law_cols[0][2:]!r}") from exc
    expected = columns(n, n_leaders, d, law)
    if header != expected:
        raise ParseError(f"{path}: header does not match a {n}-agent {d}-D trace")
    if data.size == 0:
        data = np.empty((0, len(expected)))
    if data.shape[1] != len(expected):
        raise ParseError(f"{path}: expected {len(expected)} columns, got {data.shape[1]}")

    T = data.shape[0]
    w = 1 if d == 2 else 3
    width = 3 * d + 1 + w
    agents = data[:, 1 : 1 + n * width].reshape(T, n, width)
    omega = agents[..., 3 * d + 1 :]
    trace = SimulationTrace(
        law=law,
        t=data[:, 0].copy(),
        p=agents[..., :d].copy(),
        h=agents[..., d : 2 * d].copy(),
        xi=agents[..., 2 * d : 3 * d].copy(),
        u=agents[..., 3 * d].copy(),
        omega=(omega[..., 0] if d == 2 else omega).copy(),
    )
    base = 1 + n * width
    stored = {
        "V": data[:, base],
        "bearing_error": data[:, base + 1],
        "position_error": data[:, base + 2],
        "min_distance": data[:, base + 3],
        "velocity_errors": data[:, base + 4 :],
    }
    return trace, stored
