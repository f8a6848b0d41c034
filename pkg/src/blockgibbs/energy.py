"""Finite-N energy and the single-flip energy-difference decomposition."""
from __future__ import annotations

import numpy as np

from .exceptions import InconsistentFlip, SizeMismatch
from .model import ROLES, Configuration, FlipProposal, ModelSpec, class_index, empirical_vector


def total_energy(spec: ModelSpec, x: Configuration) -> float:
    """Brute-force energy of configuration ``x``.

    Sums the potential over nodes plus ``beta/(2N)`` times ``W(x_i, x_k)``
    over every interacting ordered pair, self pairs included. This is the
    O(N^2) reference the flip formula is tested against.
    """
    s = np.asarray(x.states)
    if s.shape != (spec.N,):
        raise SizeMismatch(f"configuration has {s.size} nodes, model has {spec.N}")
    z = s - 1
    pair = spec.W[z[:, None], z[None, :]]
    return float(spec.V[z].sum() + spec.beta / (2 * spec.N) * np.sum(spec.interaction_mask * pair))


def psi_c_finite(spec: ModelSpec, z: int, zp: int, q, j: int, a: float, b1: float) -> float:
    """Mean-field part of a central flip ``z -> zp`` in block ``j``."""
    W, q = spec.W, np.asarray(q)
    c, p = q[class_index(j, "c")], q[class_index(j, "p")]
    x, y = z - 1, zp - 1
    return spec.beta / spec.N * (a * np.dot(W[:, y] - W[:, x], c)
                                 + b1 * np.dot(W[y, :] - W[x, :], p))


def psi_p_finite(spec: ModelSpec, z: int, zp: int, q, j: int, a: float, b) -> float:
    """Mean-field part of a peripheral flip; ``b`` holds one size per block."""
    W, q = spec.W, np.asarray(q)
    x, y = z - 1, zp - 1
    total = a * np.dot(W[y, :] - W[x, :], q[class_index(j, "c")])
    for l, bl in enumerate(b, start=1):
        total += bl * np.dot(W[:, y] - W[:, x], q[class_index(l, "p")])
    return spec.beta / spec.N * total


def b_correction(spec: ModelSpec, role: str, z: int, zp: int) -> float:
    """O(1/N) self-interaction remainder of a single flip ``z -> zp``.

    The same expression holds for central and peripheral nodes: the flipped
    node's self pair changes from ``W(z,z)`` to ``W(zp,zp)`` and its pairs
    with itself-as-neighbour are double counted in the mean field.
    """
    if role not in ROLES:
        raise ValueError(f"role must be 'c' or 'p', got {role!r}")
    W = spec.W
    x, y = z - 1, zp - 1
    return spec.beta / (2 * spec.N) * (W[y, y] + W[x, x] - W[x, y] - W[y, x])


def correction_bound(spec: ModelSpec) -> float:
    """``2 beta max|W| / N``, an upper bound on ``|b_correction|``."""
    return 2 * spec.beta * np.max(np.abs(spec.W)) / spec.N


def _flip_sizes(spec: ModelSpec, j: int, role: str):
    s = spec.sizes
    a = s[class_index(j, "c")]
    if role == "c":
        return a, s[class_index(j, "p")]
    return a, s[1::2]


def flip_delta(spec: ModelSpec, q, j: int, role: str, z: int, zp: int) -> float:
    """Energy change of one ``z -> zp`` move in class ``(j, role)`` given empirical vector ``q``."""
    a, b = _flip_sizes(spec, j, role)
    if role == "c":
        psi = psi_c_finite(spec, z, zp, q, j, a, b)
    else:
        psi = psi_p_finite(spec, z, zp, q, j, a, b)
    return psi + b_correction(spec, role, z, zp) + spec.V[zp - 1] - spec.V[z - 1]


def energy_difference(spec: ModelSpec, x: Configuration, flip: FlipProposal) -> float:
    """``U(y) - U(x)`` for the configuration ``y`` reached by ``flip``, in O(K) per class."""
    z, zp = flip.from_state, flip.to_state
    if z == zp or not (1 <= zp <= spec.K):
        raise InconsistentFlip(f"{z} -> {zp} is not a move")
    if spec.adjacency[z - 1, zp - 1] == 0:
        raise InconsistentFlip(f"({z}, {zp}) is not an admissible jump")
    try:
        l = spec.node_index(flip.block, flip.role, flip.index)
    except (SizeMismatch, ValueError) as exc:
        raise InconsistentFlip(str(exc)) from exc
    if x.states[l] != z:
        raise InconsistentFlip(f"node is in state {x.states[l]}, not {z}")
    return flip_delta(spec, empirical_vector(spec, x), flip.block, flip.role, z, zp)
