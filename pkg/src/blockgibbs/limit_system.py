"""The N -> infinity dynamics: limiting rates, stationary maps and the ODE.

Batched helpers accept arrays of shape ``(..., 2r, K)`` so several initial
conditions can be integrated in one pass.
"""
from __future__ import annotations

import numpy as np

from .exceptions import StepTooLarge
from .model import ModelSpec, check_empirical, class_index
from .trajectory import Trajectory


def class_energies(spec: ModelSpec, q) -> np.ndarray:
    """``beta * sum_m' coupling[m, m'] (W q^m')``: per-class single-site energies.

    ``pi^m(q)`` is the Gibbs law of these energies and the limiting jump
    exponent is their increment along the jump.
    """
    q = np.asarray(q, dtype=float)
    return spec.beta * np.einsum("ab,...bk->...ak", spec.coupling, q @ spec.W)


def limit_psi(spec: ModelSpec, q, j: int, role: str, z: int, zp: int) -> float:
    """Limiting energy increment of a ``z -> zp`` jump in class ``(j, role)``."""
    W, q = spec.W, np.asarray(q, dtype=float)
    a, pc, pp = spec.proportions[j - 1]
    x, y = z - 1, zp - 1
    qc, qp = q[class_index(j, "c")], q[class_index(j, "p")]
    if role == "c":
        return spec.beta * (a * pc * np.dot(W[:, y] - W[:, x], qc)
                            + a * pp * np.dot(W[y, :] - W[x, :], qp))
    total = a * pc * np.dot(W[y, :] - W[x, :], qc)
    for l in range(1, spec.r + 1):
        al, _, ppl = spec.proportions[l - 1]
        total += al * ppl * np.dot(W[:, y] - W[:, x], q[class_index(l, "p")])
    return spec.beta * total


def limit_rate(spec: ModelSpec, q, j: int, role: str, z: int, zp: int) -> float:
    psi = limit_psi(spec, q, j, role, z, zp)
    return float(np.exp(-max(psi, 0.0)) * spec.adjacency[z - 1, zp - 1])


def _rate_tables(spec: ModelSpec, q) -> np.ndarray:
    """Off-diagonal rates for every class, shape ``(..., 2r, K, K)``."""
    h = class_energies(spec, q)
    psi = h[..., None, :] - h[..., :, None]
    return np.exp(-np.maximum(psi, 0.0)) * spec.adjacency


def generators(spec: ModelSpec, q) -> np.ndarray:
    """All ``2r`` generator matrices ``A^m_q`` stacked, shape ``(..., 2r, K, K)``."""
    lam = _rate_tables(spec, q)
    K = spec.K
    idx = np.arange(K)
    lam[..., idx, idx] = -lam.sum(axis=-1)
    return lam


def generator(spec: ModelSpec, q, j: int, role: str) -> np.ndarray:
    """Rate matrix of class ``(j, role)`` in the frozen environment ``q``."""
    return generators(spec, q)[class_index(j, role)]


def stationary_maps(spec: ModelSpec, q) -> np.ndarray:
    """``pi^m(q)`` for every class; softmax of minus the class energies."""
    h = -class_energies(spec, q)
    h -= h.max(axis=-1, keepdims=True)
    e = np.exp(h)
    return e / e.sum(axis=-1, keepdims=True)


def stationary_map(spec: ModelSpec, q, j: int, role: str) -> np.ndarray:
    return stationary_maps(spec, q)[class_index(j, role)]


def vector_field(spec: ModelSpec, q) -> np.ndarray:
    """Right-hand side ``q^m A^m_q`` of the McKean-Vlasov system."""
    q = np.asarray(q, dtype=float)
    lam = _rate_tables(spec, q)
    inflow = np.einsum("...mz,...mzy->...my", q, lam)
    return inflow - q * lam.sum(axis=-1)


def rk4_integrate(spec: ModelSpec, q0, T: float, dt: float):
    """Fixed-step RK4 over ``[0, T]``; returns ``(times, states)`` for batched ``q0``.

    After each step rows are clamped at zero and renormalised. A pre-clamp
    entry below ``-1e-9`` raises ``StepTooLarge``.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    if T < 0:
        raise ValueError("T must be non-negative")
    n = int(round(T / dt))
    if abs(n * dt - T) > 1e-9 * max(1.0, T):
        n = int(np.ceil(T / dt))
    q = np.array(q0, dtype=float)
    out = np.empty((n + 1,) + q.shape)
    out[0] = q
    f = lambda s: vector_field(spec, s)  # noqa: E731
    for i in range(n):
        k1 = f(q)
        k2 = f(q + 0.5 * dt * k1)
        k3 = f(q + 0.5 * dt * k2)
        k4 = f(q + dt * k3)
        q = q + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        if q.min() < -1e-9:
            raise StepTooLarge(f"negative mass {q.min():.3g} at t={(i + 1) * dt:g}; reduce dt")
        np.maximum(q, 0.0, out=q)
        q /= q.sum(axis=-1, keepdims=True)
        out[i + 1] = q
    return np.arange(n + 1) * dt, out


def integrate(spec: ModelSpec, q0, T: float, dt: float = 1e-2) -> Trajectory:
    """Solve the McKean-Vlasov ODE from ``q0``, sampled at every step."""
    q0 = check_empirical(spec, q0, tol=1e-9)
    times, states = rk4_integrate(spec, q0, T, dt)
    return Trajectory(times, states)
