"""Command-line front end: ``blockgibbs {simulate,integrate,fixed-points,verify}``.

Every command is a pure function of its model file, flags and seed and
returns a ``CommandOutcome``. Exit codes: 0 ok, 1 verify failure, 2 bad
input, 3 I/O failure, 4 descent violation.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import fixed_points as fp
from . import verify as vf
from .exceptions import BlockGibbsError
from .experiments import sizes_for_total
from .finite_system import SimulationRun, simulate
from .limit_system import integrate
from .lyapunov import descent_monitor
from .model import (ModelSpec, check_empirical, configuration_from_counts, load_model,
                    round_counts, uniform_vector)
from .trajectory import mean_trajectory, write_trajectory_csv

EXIT_OK, EXIT_VERIFY, EXIT_INPUT, EXIT_IO, EXIT_DESCENT = 0, 1, 2, 3, 4


@dataclass
class CommandOutcome:
    exit_code: int
    artifacts: list = field(default_factory=list)
    summary: list = field(default_factory=list)


class InputError(Exception):
    pass


def parse_q0(spec: ModelSpec, text: str | None) -> np.ndarray:
    """``uniform``, ``delta:<z>`` or a JSON vector (one row for all classes, or one per class)."""
    if text is None or text == "uniform":
        return uniform_vector(spec)
    if text.startswith("delta:"):
        try:
            z = int(text[6:])
        except ValueError:
            raise InputError(f"bad q0 '{text}': expected delta:<state>") from None
        if not 1 <= z <= spec.K:
            raise InputError(f"q0 state {z} outside 1..{spec.K}")
        q = np.zeros((spec.n_classes, spec.K))
        q[:, z - 1] = 1.0
        return q
    try:
        q = np.asarray(json.loads(text), dtype=float)
    except (json.JSONDecodeError, TypeError, ValueError) as exc:
        raise InputError(f"bad q0 '{text}': {exc}") from None
    if q.ndim == 1:
        q = np.tile(q, (spec.n_classes, 1))
    try:
        return check_empirical(spec, q, tol=1e-9)
    except ValueError as exc:
        raise InputError(f"bad q0: {exc}") from None


def _load(model_file) -> ModelSpec:
    try:
        return load_model(model_file)
    except OSError as exc:
        raise OSError(f"cannot read model file: {exc}") from exc


def _sized(spec: ModelSpec, n_scale: float) -> ModelSpec:
    """Scale the file's sizes; without sizes, ``n_scale`` is read as the total N."""
    if not n_scale > 0:
        raise InputError("--n-scale must be positive")
    if spec.has_sizes:
        return spec.scaled(n_scale)
    return spec.with_sizes(sizes_for_total(spec, n_scale))


def _outdir(out) -> Path:
    p = Path(out)
    p.mkdir(parents=True, exist_ok=True)
    return p


def _guard(fn):
    """Map package exceptions onto the exit-code contract."""
    def wrapped(*a, **kw):
        try:
            return fn(*a, **kw)
        except (InputError, BlockGibbsError, ValueError) as exc:
            return CommandOutcome(EXIT_INPUT, [], [f"error: {exc}"])
        except OSError as exc:
            return CommandOutcome(EXIT_IO, [], [f"I/O error: {exc}"])
    wrapped.__name__, wrapped.__doc__ = fn.__name__, fn.__doc__
    return wrapped


# -- artifact writers, shared by the commands and the determinism probe --

def simulate_artifacts(spec, T, samples, replicates, seed, out, q0=None):
    if samples < 2 or replicates < 1 or not T > 0:
        raise InputError("need T > 0, samples >= 2 and replicates >= 1")
    q0 = uniform_vector(spec) if q0 is None else q0
    x0 = configuration_from_counts(spec, round_counts(spec, q0))
    trajs = simulate(spec, x0, SimulationRun.grid(T, samples, seed, replicates))
    out = _outdir(out)
    paths = []
    for k, tr in enumerate(trajs):
        paths.append(out / f"replicate_{k:03d}.csv")
        write_trajectory_csv(tr, paths[-1])
    paths.append(out / "mean.csv")
    write_trajectory_csv(mean_trajectory(trajs), paths[-1])
    return paths


def integrate_artifacts(spec, q0, T, dt, out):
    if not T > 0:
        raise InputError("T must be positive")
    if not dt > 0:
        raise InputError("dt must be positive")
    traj = integrate(spec, q0, T, dt)
    report = descent_monitor(spec, traj)
    out = _outdir(out)
    paths = [out / "trajectory.csv", out / "descent.csv"]
    write_trajectory_csv(traj, paths[0])
    report.write_csv(paths[1])
    return paths, report


def fixed_point_artifacts(spec, n_starts, seed, out):
    if n_starts < 0:
        raise InputError("--n-starts must be non-negative")
    reports = fp.find_all_fixed_points(spec, n_starts, seed=seed)
    path = _outdir(out) / "fixed_points.json"
    fp.write_reports_json(reports, path)
    return [path], reports


# -- commands -------------------------------------------------------------

@_guard
def cmd_simulate(model_file, N_scale=1.0, T=10.0, samples=101, replicates=1, seed=0,
                 out=".", q0=None) -> CommandOutcome:
    spec = _sized(_load(model_file), N_scale)
    paths = simulate_artifacts(spec, T, samples, replicates, seed, out, parse_q0(spec, q0))
    return CommandOutcome(EXIT_OK, paths,
                          [f"N={spec.N}: {replicates} replicate(s) to T={T:g}, {len(paths)} files"])


@_guard
def cmd_integrate(model_file, q0_spec="uniform", T=10.0, dt=1e-2, out=".") -> CommandOutcome:
    spec = _load(model_file)
    paths, report = integrate_artifacts(spec, parse_q0(spec, q0_spec), T, dt, out)
    lines = [f"F: {report.F[0]:.10g} -> {report.F[-1]:.10g}, max dF/dt = {report.dFdt.max():.3e}"]
    if report.violated:
        lines.append(f"descent violated at {int(report.flags.sum())} sample(s)")
        return CommandOutcome(EXIT_DESCENT, paths, lines)
    return CommandOutcome(EXIT_OK, paths, lines)


@_guard
def cmd_fixed_points(model_file, n_starts=200, seed=0, out=".") -> CommandOutcome:
    spec = _load(model_file)
    paths, reports = fixed_point_artifacts(spec, n_starts, seed, out)
    lines = [fp.summary_line(reports)]
    for r in reports:
        lines.append(f"  {r.classification:<8} F={r.F_value:.8f} q[:,1]="
                     + ",".join(f"{v:.4f}" for v in r.point[:, 0]))
    return CommandOutcome(EXIT_OK, paths, lines)


@_guard
def cmd_verify(model_file, level="fast", seed=0, mutate=None) -> CommandOutcome:
    """Run the property table. ``mutate`` (test hook) edits the validated model."""
    if level not in vf.LEVELS:
        raise InputError(f"unknown level '{level}'")
    spec = _load(model_file)
    if mutate is not None:
        spec = mutate(spec)
    results = vf.run_checks(spec, level, seed=seed)
    n_fail = sum(not r.passed for r in results)
    lines = vf.format_table(results).splitlines()
    lines.append(f"{len(results) - n_fail}/{len(results)} checks passed")
    return CommandOutcome(EXIT_VERIFY if n_fail else EXIT_OK, [], lines)


def determinism_probe(spec: ModelSpec):
    """Run each artifact writer twice at small scale and compare bytes."""
    tiny = vf.tiny_instance(spec).scaled(3)
    runs = []
    for _ in range(2):
        with tempfile.TemporaryDirectory() as d:
            paths = simulate_artifacts(tiny, 2.0, 11, 2, 7, os.path.join(d, "s"))
            paths += integrate_artifacts(spec, uniform_vector(spec), 2.0, 0.05, os.path.join(d, "i"))[0]
            paths += fixed_point_artifacts(spec, 5, 7, os.path.join(d, "f"))[0]
            runs.append([p.read_bytes() for p in paths])
    same = runs[0] == runs[1]
    return same, f"{len(runs[0])} artifacts compared"


# -- argument parsing -----------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="blockgibbs", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, *flags):
        sp.add_argument("--model", required=True, metavar="PATH")
        table = {
            "out": dict(metavar="DIR", default="."),
            "seed": dict(type=int, default=0, metavar="U64"),
            "T": dict(type=float, default=10.0, metavar="FLOAT"),
            "dt": dict(type=float, default=1e-2, metavar="FLOAT"),
            "samples": dict(type=int, default=101, metavar="INT"),
            "replicates": dict(type=int, default=1, metavar="INT"),
            "n-starts": dict(type=int, default=200, metavar="INT"),
            "n-scale": dict(type=float, default=1.0, metavar="FLOAT"),
            "level": dict(choices=["fast", "deep"], default="fast"),
            "q0": dict(default="uniform", metavar="SPEC"),
        }
        for f in flags:
            sp.add_argument(f"--{f}", **table[f])

    common(sub.add_parser("simulate", help="particle-system trajectories"),
           "out", "seed", "T", "samples", "replicates", "n-scale", "q0")
    common(sub.add_parser("integrate", help="limit ODE plus descent report"),
           "out", "T", "dt", "q0")
    common(sub.add_parser("fixed-points", help="multi-start fixed-point search"),
           "out", "seed", "n-starts")
    common(sub.add_parser("verify", help="property checks"), "level", "seed")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        a = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    if a.command == "simulate":
        res = cmd_simulate(a.model, a.n_scale, a.T, a.samples, a.replicates, a.seed, a.out, a.q0)
    elif a.command == "integrate":
        res = cmd_integrate(a.model, a.q0, a.T, a.dt, a.out)
    elif a.command == "fixed-points":
        res = cmd_fixed_points(a.model, a.n_starts, a.seed, a.out)
    else:
        res = cmd_verify(a.model, a.level, a.seed)
    stream = sys.stdout if res.exit_code in (EXIT_OK, EXIT_VERIFY, EXIT_DESCENT) else sys.stderr
    for line in res.summary:
        print(line, file=stream)
    for path in res.artifacts:
        print(f"wrote {path}")
    return res.exit_code


if __name__ == "__main__":
    sys.exit(main())
