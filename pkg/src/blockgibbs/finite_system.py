"""The N-particle Metropolis chain: rates, exact Gibbs law, simulation."""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy import sparse

from .energy import flip_delta
from .exceptions import TooLarge
from .model import Configuration, ModelSpec, class_counts
from .trajectory import Trajectory

EXACT_LIMIT = 2 ** 20


def finite_rate(spec: ModelSpec, q, j: int, role: str, z: int, zp: int) -> float:
    """Jump rate of one class-``(j, role)`` particle from ``z`` to ``zp`` at empirical vector ``q``."""
    if spec.adjacency[z - 1, zp - 1] == 0:
        return 0.0
    return float(np.exp(-max(flip_delta(spec, q, j, role, z, zp), 0.0)))


def _rate_kernel(spec: ModelSpec):
    """Closure mapping class counts to the ``(2r, K, K)`` table of per-particle rates.

    Rates depend on the configuration only through the counts, so one
    event costs a few ``(2r, K)`` matrix products.
    """
    W, beta, N, K = spec.W, spec.beta, spec.N, spec.K
    C = spec.n_classes
    # mean-field drive g[m] = sum_m' T[m, m'] * counts[m'] @ W (or @ W.T)
    Tw = np.zeros((C, C))
    Twt = np.zeros((C, C))
    for j in range(spec.r):
        c, p = 2 * j, 2 * j + 1
        Tw[c, c] = 1.0     # sum_x W(x, y) n^c_x
        Twt[c, p] = 1.0    # sum_x W(y, x) n^p_x
        Twt[p, c] = 1.0
        Tw[p, 1::2] = 1.0
    d = np.diag(W)
    B = beta / (2 * N) * (d[None, :] + d[:, None] - W - W.T)
    B = B + (spec.V[None, :] - spec.V[:, None])
    adj = spec.adjacency
    WT = W.T.copy()

    def rates(counts):
        g = Tw @ (counts @ W) + Twt @ (counts @ WT)
        delta = beta / N * (g[:, None, :] - g[:, :, None]) + B
        return np.exp(-np.maximum(delta, 0.0)) * adj

    return rates


def class_rate_table(spec: ModelSpec, x: Configuration) -> np.ndarray:
    """Per-particle rates ``lambda^{m,N}_{z,z'}`` at configuration ``x``."""
    return _rate_kernel(spec)(class_counts(spec, x.states).astype(float))


def total_outflow(spec: ModelSpec, x: Configuration) -> float:
    """Total jump rate out of ``x``, aggregated per class and state."""
    counts = class_counts(spec, x.states).astype(float)
    lam = _rate_kernel(spec)(counts)
    return float(np.sum(counts[:, :, None] * lam))


# -- exact enumeration ----------------------------------------------------

def _check_tiny(spec: ModelSpec, limit: int = EXACT_LIMIT):
    if float(spec.K) ** spec.N > limit:
        raise TooLarge(f"K^N = {spec.K}^{spec.N} exceeds {limit}")


def enumerate_configurations(spec: ModelSpec) -> np.ndarray:
    """Every configuration as rows of 0-based states, in base-K lexicographic order."""
    _check_tiny(spec)
    K, N = spec.K, spec.N
    idx = np.arange(K ** N)
    powers = K ** np.arange(N - 1, -1, -1)
    return (idx[:, None] // powers[None, :]) % K


def all_energies(spec: ModelSpec, chunk: int = 1 << 14) -> np.ndarray:
    """Energy of every configuration, aligned with ``enumerate_configurations``."""
    X = enumerate_configurations(spec)
    mask, W, K = spec.interaction_mask, spec.W, spec.K
    out = np.empty(len(X))
    for s in range(0, len(X), chunk):
        E = np.eye(K)[X[s:s + chunk]]             # (M, N, K) one-hot
        P = E @ W                                 # W(x_i, .) rows
        pair = np.einsum("mia,ik,mka->m", P, mask, E)
        out[s:s + chunk] = spec.V[X[s:s + chunk]].sum(axis=1) + spec.beta / (2 * spec.N) * pair
    return out


def exact_stationary(spec: ModelSpec) -> np.ndarray:
    """Gibbs probabilities ``exp(-U)/Z`` over all configurations (base-K order)."""
    U = all_energies(spec)
    w = np.exp(-(U - U.min()))
    return w / w.sum()


def log_partition(spec: ModelSpec) -> float:
    U = all_energies(spec)
    m = U.min()
    return float(-m + np.log(np.sum(np.exp(-(U - m)))))


def metropolis_generator(spec: ModelSpec, limit: int = EXACT_LIMIT) -> sparse.csr_matrix:
    """Full rate matrix ``exp(-(U(y)-U(x))^+)`` on single admissible flips, with diagonal."""
    _check_tiny(spec, limit)
    K, N = spec.K, spec.N
    U = all_energies(spec)
    X = enumerate_configurations(spec)
    M = len(U)
    powers = K ** np.arange(N - 1, -1, -1)
    rows, cols, vals = [], [], []
    src = np.arange(M)
    for l in range(N):
        for a, b in zip(*np.nonzero(spec.adjacency)):
            sel = src[X[:, l] == a]
            dst = sel + (b - a) * powers[l]
            rows.append(sel)
            cols.append(dst)
            vals.append(np.exp(-np.maximum(U[dst] - U[sel], 0.0)))
    rows, cols, vals = map(np.concatenate, (rows, cols, vals))
    Q = sparse.coo_matrix((vals, (rows, cols)), shape=(M, M)).tocsr()
    Q = Q - sparse.diags(np.asarray(Q.sum(axis=1)).ravel())
    return Q.tocsr()


def detailed_balance_residual(Q, pi) -> float:
    """``max |pi(x) Q(x,y) - pi(y) Q(y,x)|`` over off-diagonal pairs."""
    F = sparse.diags(pi) @ sparse.csr_matrix(Q)
    F = F - sparse.diags(F.diagonal())
    D = (F - F.T).tocoo()
    return float(np.max(np.abs(D.data))) if D.nnz else 0.0


def detailed_balance_check(spec: ModelSpec) -> float:
    return detailed_balance_residual(metropolis_generator(spec), exact_stationary(spec))


def config_index(spec: ModelSpec, x: Configuration) -> int:
    powers = spec.K ** np.arange(spec.N - 1, -1, -1)
    return int(np.dot(x.states - 1, powers))


# -- simulation -----------------------------------------------------------

@dataclass
class SimulationRun:
    seed: int
    T: float
    sample_times: np.ndarray
    replicate_count: int = 1

    def __post_init__(self):
        self.sample_times = np.asarray(self.sample_times, dtype=float)
        st = self.sample_times
        if st.size == 0 or np.any(np.diff(st) <= 0) or st[0] < 0 or st[-1] > self.T:
            raise ValueError("sample_times must be strictly increasing within [0, T]")
        if self.replicate_count < 1:
            raise ValueError("replicate_count must be >= 1")

    @classmethod
    def grid(cls, T, samples, seed=0, replicates=1):
        return cls(seed, T, np.linspace(0.0, T, samples), replicates)


def _simulate_one(spec: ModelSpec, counts0, sample_times, rng, on_event=None):
    rates = _rate_kernel(spec)
    sizes = spec.sizes[:, None].astype(float)
    counts = counts0.astype(float)
    C, K = counts.shape
    out = np.empty((len(sample_times), C, K))
    t, k = 0.0, 0
    n_samples = len(sample_times)
    while k < n_samples:
        lam = rates(counts)
        prop = (counts[:, :, None] * lam).ravel()
        cum = np.cumsum(prop)
        total = cum[-1]
        t_next = t + rng.exponential(1.0 / total) if total > 0 else np.inf
        while k < n_samples and sample_times[k] < t_next:
            out[k] = counts / sizes
            k += 1
        if k >= n_samples:
            break
        pick = int(np.searchsorted(cum, rng.random() * total, side="right"))
        pick = min(pick, len(cum) - 1)
        m, rest = divmod(pick, K * K)
        z, zp = divmod(rest, K)
        counts[m, z] -= 1
        counts[m, zp] += 1
        if on_event is not None:
            on_event(t_next, m, z, zp)
        t = t_next
    return out


def simulate(spec: ModelSpec, x0: Configuration, run: SimulationRun, on_event=None) -> list:
    """Exact event-driven simulation; one ``Trajectory`` of empirical vectors per replicate.

    Replicate ``k`` draws from the ``k``-th child of ``SeedSequence(run.seed)``.
    ``on_event(t, m, z, zp)`` is called for every jump (0-based class and states).
    """
    counts0 = class_counts(spec, x0.states)
    streams = np.random.SeedSequence(run.seed).spawn(run.replicate_count)
    return [Trajectory(run.sample_times,
                       _simulate_one(spec, counts0, run.sample_times,
                                     np.random.default_rng(s), on_event))
            for s in streams]


def configuration_space_walk(spec: ModelSpec, x0: Configuration, T: float, seed: int):
    """Particle-level path for tiny systems: ``(jump_times, config_indices)``.

    Tracks which node moved so occupation of full configurations can be
    compared with the Gibbs law. Nodes of a class are exchangeable, so the
    mover is drawn uniformly among the class's nodes in the source state.
    """
    rng = np.random.default_rng(seed)
    rates = _rate_kernel(spec)
    states = x0.states.copy() - 1
    K = spec.K
    times, idx = [0.0], [config_index(spec, Configuration(states + 1))]
    t = 0.0
    while True:
        counts = class_counts(spec, states + 1).astype(float)
        prop = (counts[:, :, None] * rates(counts)).ravel()
        cum = np.cumsum(prop)
        t += rng.exponential(1.0 / cum[-1])
        if t > T:
            break
        pick = min(int(np.searchsorted(cum, rng.random() * cum[-1], side="right")), len(cum) - 1)
        m, rest = divmod(pick, K * K)
        z, zp = divmod(rest, K)
        movers = np.flatnonzero((spec.node_class == m) & (states == z))
        states[rng.choice(movers)] = zp
        times.append(t)
        idx.append(config_index(spec, Configuration(states + 1)))
    return np.array(times), np.array(idx)


def occupation_frequencies(spec: ModelSpec, times, idx, T: float) -> np.ndarray:
    hold = np.diff(np.append(times, T))
    return np.bincount(idx, weights=hold, minlength=spec.K ** spec.N) / T


def iter_configurations(spec: ModelSpec):
    _check_tiny(spec)
    for tup in itertools.product(range(1, spec.K + 1), repeat=spec.N):
        yield Configuration(np.array(tup))
