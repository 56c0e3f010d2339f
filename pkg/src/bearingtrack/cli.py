"""Command-line interface: ``check``, ``run`` and ``metrics``.

Exit codes: 0 on success, 1 on validation or parse failure, 2 when a run is
aborted because two agents came too close.
"""

from __future__ import annotations

import argparse
import logging
import sys

import numpy as np

from .analysis import collision_certificate, trace_metrics
from .control import Law
from .errors import FormationError
from .formation import bearing_laplacian, build_incidence, spectral_quantities
from .harness import load_scenario, simulate
from .harness.plotdata import emit_plot_data
from .harness.tracefile import read_trace, write_trace

EXIT_OK, EXIT_INVALID, EXIT_ABORT = 0, 1, 2
METRICS_TOL = 1e-9
CONVERGED = 1e-2


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="bearingtrack", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = ap.add_subparsers(dest="command", required=True)

    c = sub.add_parser("check", help="rigidity, spectral quantities and collision certificates")
    c.add_argument("scenario")
    c.add_argument("--kappa", type=float, help="safety distance (default: half the closest target pair)")

    r = sub.add_parser("run", help="simulate one law and write a trace CSV")
    r.add_argument("scenario")
    r.add_argument("--law", required=True, choices=[law.value for law in Law])
    r.add_argument("--dt", type=float)
    r.add_argument("--duration", type=float)
    r.add_argument("--out", required=True, help="trace CSV path")
    r.add_argument("--plot-dir", help="also write per-panel plot tables here")

    m = sub.add_parser("metrics", help="recompute metric columns of a trace and compare")
    m.add_argument("trace")
    m.add_argument("scenario")
    return ap


def _check(args) -> int:
    sc = load_scenario(args.scenario)
    report = sc.rigidity()
    print(report)
    B = bearing_laplacian(sc.graph, sc.desired)
    lam, h_norm = spectral_quantities(B, build_incidence(sc.graph))
    print(f"lambda_min(B_ff) = {lam:.6g}")
    print(f"|H| = {h_norm:.6g}")
    d_min = sc.target.min_distance
    kappa = args.kappa if args.kappa is not None else d_min / 2
    print(f"min target distance = {d_min:.6g}, kappa = {kappa:.6g}")
    for law in sc.gains:
        cert = collision_certificate(sc.system(law), kappa, sc.initial_state())
        verdict = "holds" if cert.holds else "does not hold"
        print(
            f"certificate[{law.value}]: {verdict} "
            f"(beta = V(0) = {cert.beta:.6g}, phi = {cert.phi:.6g}, epsilon = {cert.epsilon:.6g})"
        )
    return EXIT_OK if report.rigid else EXIT_INVALID


def _run(args) -> int:
    sc = load_scenario(args.scenario)
    law = Law(args.law)
    trace = simulate(sc, law, dt=args.dt, duration=args.duration)
    write_trace(args.out, trace, sc.graph.n_leaders)
    if args.plot_dir:
        emit_plot_data(trace, args.plot_dir, sc.graph.n_leaders)
    m = trace.metrics
    if len(trace) == 0:
        print(f"{law.value}: no snapshots recorded", file=sys.stderr)
    else:
        first = m.first_time_below(trace.t, CONVERGED)
        first_txt = "never" if first is None else f"{first:.3f} s"
        vel = float(m.velocity_errors[-1].max()) if m.velocity_errors.shape[-1] else 0.0
        print(
            f"{law.value}: t = {trace.t[-1]:.3f} s, bearing error = {m.bearing_error[-1]:.3e}, "
            f"max velocity error = {vel:.3e}, V = {m.V[-1]:.3e}, "
            f"min distance = {m.min_distance.min():.4g}, bearing error < {CONVERGED:g} first at {first_txt}"
        )
    if trace.aborted:
        print(f"aborted: {trace.message}", file=sys.stderr)
        return EXIT_ABORT
    return EXIT_OK


def _metrics(args) -> int:
    sc = load_scenario(args.scenario)
    trace, stored = read_trace(args.trace, sc.n, sc.graph.n_leaders, sc.dimension)
    fresh = trace_metrics(trace, sc.system(trace.law))
    worst = 0.0
    for name, values in stored.items():
        diff = float(np.max(np.abs(getattr(fresh, name) - values), initial=0.0))
        worst = max(worst, diff)
        print(f"{name}: max discrepancy {diff:.3e}")
    print(f"max discrepancy {worst:.3e} over {len(trace)} snapshots")
    return EXIT_OK if worst <= METRICS_TOL else EXIT_INVALID


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    handler = {"check": _check, "run": _run, "metrics": _metrics}[args.command]
    try:
        return handler(args)
    except FormationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
