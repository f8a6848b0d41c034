"""Finite-N versus limit comparisons used by the verification suite and demos."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .finite_system import SimulationRun, finite_rate, simulate
from .limit_system import integrate, limit_rate
from .lyapunov import finite_n_entropy, free_energy_constant, lyapunov_value
from .model import (ROLES, ModelSpec, configuration_from_counts, empirical_vector,
                    round_counts)
from .trajectory import mean_trajectory


def sizes_for_total(spec: ModelSpec, N: int):
    """Class sizes closest to ``N * alpha_j * p_j^iota`` (each at least 1)."""
    s = np.maximum(1, np.rint(spec.weights * N)).astype(int)
    return s.reshape(-1, 2)


@dataclass
class LLNResult:
    N: int
    gap: float
    replicate_gaps: list


def lln_gap(spec: ModelSpec, N: int, q0, T: float = 10.0, replicates: int = 20,
            seed: int = 0, samples: int = 101, dt: float = 1e-2) -> LLNResult:
    """Sup-in-time max-norm gap between the replicate mean of the particle system and the ODE.

    Every replicate starts from the same deterministic configuration whose
    class counts best match ``q0``; the ODE starts from that configuration's
    empirical vector, so initial data match exactly.
    """
    fin = spec.with_sizes(sizes_for_total(spec, N))
    x0 = configuration_from_counts(fin, round_counts(fin, q0))
    run = SimulationRun(seed, T, np.linspace(0.0, T, samples), replicates)
    trajs = simulate(fin, x0, run)
    ode = integrate(spec, empirical_vector(fin, x0), T, dt)
    stride = int(round((T / (samples - 1)) / dt))
    ode_vals = ode.values[::stride][:samples]
    mean = mean_trajectory(trajs).values
    per_rep = [float(np.max(np.abs(t.values - ode_vals))) for t in trajs]
    return LLNResult(fin.N, float(np.max(np.abs(mean - ode_vals))), per_rep)


def lln_sweep(spec: ModelSpec, Ns=(200, 800, 3200), q0=None, **kw) -> list:
    if q0 is None:
        q0 = np.tile(np.linspace(0.8, 0.2, spec.K) / np.linspace(0.8, 0.2, spec.K).sum(),
                     (spec.n_classes, 1))
    return [lln_gap(spec, N, q0, **kw) for N in Ns]


def rate_gap(spec: ModelSpec, N: int, n_q: int = 20, seed: int = 0) -> float:
    """Sup over random ``q``, classes and edges of ``|finite rate - limit rate|``."""
    fin = spec.with_sizes(sizes_for_total(spec, N))
    rng = np.random.default_rng(seed)
    edges = list(zip(*np.nonzero(spec.adjacency)))
    worst = 0.0
    for _ in range(n_q):
        q = rng.dirichlet(np.ones(spec.K), size=spec.n_classes)
        for j in range(1, spec.r + 1):
            for role in ROLES:
                for a, b in edges:
                    z, zp = int(a) + 1, int(b) + 1
                    d = abs(finite_rate(fin, q, j, role, z, zp) - limit_rate(fin, q, j, role, z, zp))
                    worst = max(worst, d)
    return worst


@dataclass
class EntropyGap:
    N: int
    gaps: np.ndarray

    @property
    def spread(self):
        return float(np.ptp(self.gaps))

    @property
    def mean(self):
        return float(np.mean(self.gaps))


def entropy_gaps(spec: ModelSpec, scales=(1, 2, 3), n_q: int = 20, seed: int = 0,
                 C: float | None = None) -> list:
    """``Fbar^N(q) - (F(q) - C) - C`` over random ``q`` for a family of scaled sizes.

    ``spec`` must carry ``finite_sizes``; member ``k`` of the family scales
    them by ``scales[k]``. With ``C`` omitted the gap is reported relative to
    ``lyapunov_value`` alone.
    """
    rng = np.random.default_rng(seed)
    qs = [rng.dirichlet(np.ones(spec.K), size=spec.n_classes) for _ in range(n_q)]
    out = []
    c = 0.0 if C is None else C
    for s in scales:
        fin = spec.scaled(s)
        g = np.array([finite_n_entropy(fin, q) - lyapunov_value(fin, q) - c for q in qs])
        out.append(EntropyGap(fin.N, g))
    return out


def estimate_constant(spec: ModelSpec, **kw) -> float:
    return free_energy_constant(spec, **kw).C
