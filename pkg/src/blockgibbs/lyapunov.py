"""Relative entropy, the limiting Lyapunov function and its derivatives."""
from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .exceptions import BoundaryPoint
from .finite_system import all_energies, enumerate_configurations
from .limit_system import class_energies, stationary_maps, vector_field
from .model import ModelSpec
from .trajectory import Trajectory, atomic_write

LOG_FLOOR = 1e-300
DESCENT_TOL = 1e-8


def _xlogx(q):
    q = np.asarray(q, dtype=float)
    return np.where(q > 0, q * np.log(np.where(q > 0, q, 1.0)), 0.0)


def relative_entropy(p, q) -> float:
    """``sum p log(p/q)`` with ``0 log 0 = 0``; ``inf`` when ``p`` is not dominated by ``q``."""
    p, q = np.asarray(p, dtype=float), np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise ValueError("p and q must have the same shape")
    if np.any((q <= 0) & (p > 0)):
        return float("inf")
    pos = p > 0
    return float(np.sum(p[pos] * np.log(p[pos] / q[pos])))


def interaction_term(spec: ModelSpec, q) -> np.ndarray:
    """Quadratic interaction part of F, batched over leading axes."""
    q = np.asarray(q, dtype=float)
    w = spec.weights
    Wq = q @ spec.W.T                      # (W q^m)_z
    qc, qp = q[..., 0::2, :], q[..., 1::2, :]
    Wc, Wp = Wq[..., 0::2, :], Wq[..., 1::2, :]
    wc, wp = w[0::2], w[1::2]
    own = np.sum(wc ** 2 * np.sum(qc * Wc, axis=-1), axis=-1)
    cross = np.sum(2 * wc * wp * np.sum(qc * Wp, axis=-1), axis=-1)
    mix = np.einsum("...jz,...z->...j", qp, np.einsum("l,...lz->...z", wp, Wp))
    periph = np.sum(wp * mix, axis=-1)
    return spec.beta / 2 * (own + cross + periph)


def entropy_term(spec: ModelSpec, q) -> np.ndarray:
    return np.sum(spec.weights * np.sum(_xlogx(q), axis=-1), axis=-1)


def lyapunov_value(spec: ModelSpec, q):
    """F(q) minus its additive constant; scalar for one point, array for a batch."""
    val = interaction_term(spec, q) + entropy_term(spec, q)
    return float(val) if np.ndim(val) == 0 else val


def gradient(spec: ModelSpec, q) -> np.ndarray:
    """Partial derivatives of F in every coordinate, shape ``(2r, K)``.

    ``w_m * (class energy + log q + 1)`` for class weight ``w_m``; the class
    energies are the same ones that define the stationary maps.
    """
    q = np.asarray(q, dtype=float)
    if np.any(q < LOG_FLOOR):
        raise BoundaryPoint("gradient needs a point of the open simplex")
    w = spec.weights[:, None]
    return w * (class_energies(spec, q) + np.log(q) + 1.0)


def directional_derivative(spec: ModelSpec, q, v) -> float:
    """Derivative of F at interior ``q`` along tangent ``v`` (rows summing to 0)."""
    v = np.asarray(v, dtype=float)
    if v.shape != np.shape(q):
        raise ValueError("v must have the shape of q")
    if np.any(np.abs(v.sum(axis=-1)) > 1e-12 * max(1.0, np.abs(v).max())):
        raise ValueError("v must lie in the tangent space (rows summing to 0)")
    return float(np.sum(gradient(spec, q) * v))


def pairwise_directions(spec: ModelSpec):
    """Yield ``e_x - e_y`` placed in a single class row, for every class and ``x < y``."""
    C, K = spec.n_classes, spec.K
    for m in range(C):
        for x in range(K):
            for y in range(x + 1, K):
                v = np.zeros((C, K))
                v[m, x], v[m, y] = 1.0, -1.0
                yield v


def max_pairwise_derivative(spec: ModelSpec, q) -> float:
    g = gradient(spec, q)
    return float(max(abs(np.sum(g * v)) for v in pairwise_directions(spec)))


def frozen_entropy_sum(spec: ModelSpec, mu, nu) -> float:
    """``sum_m w_m R(mu^m || pi^m(nu))`` with the environment ``nu`` held fixed."""
    pis = stationary_maps(spec, nu)
    return float(sum(w * relative_entropy(a, b)
                     for w, a, b in zip(spec.weights, np.asarray(mu), pis)))


# -- finite-N entropy functional and the free-energy constant -------------

def finite_n_entropy(spec: ModelSpec, q) -> float:
    """``(1/N) R(product of class laws || Gibbs measure)`` by exact summation."""
    q = np.asarray(q, dtype=float)
    X = enumerate_configurations(spec)
    U = all_energies(spec)
    m = U.min()
    logZ = -m + np.log(np.sum(np.exp(-(U - m))))
    logpi = -U - logZ
    rows = q[spec.node_class[None, :], X]          # q^{class(i)}_{x_i}
    support = np.all(rows > 0, axis=1)
    logp = np.sum(np.log(np.where(rows > 0, rows, 1.0)), axis=1)
    p = np.where(support, np.exp(logp), 0.0)
    return float(np.sum(p[support] * (logp[support] - logpi[support])) / spec.N)


def project_simplex(y, floor: float = 0.0):
    """Euclidean projection of each row onto ``{x >= floor, sum x = 1}``."""
    y = np.atleast_2d(np.asarray(y, dtype=float))
    K = y.shape[-1]
    mass = 1.0 - K * floor
    u = np.sort(y - floor, axis=-1)[..., ::-1]
    css = np.cumsum(u, axis=-1) - mass
    ks = np.arange(1, K + 1)
    cond = u - css / ks > 0
    rho = K - 1 - np.argmax(cond[..., ::-1], axis=-1)
    theta = np.take_along_axis(css, rho[..., None], axis=-1) / (rho[..., None] + 1)
    return np.maximum(y - floor - theta, 0.0) + floor


@dataclass
class FreeEnergyResult:
    C: float
    minimizer: np.ndarray
    min_value: float
    grad_norm: float


def _softmax(theta):
    e = np.exp(theta - theta.max(axis=-1, keepdims=True))
    return e / e.sum(axis=-1, keepdims=True)


def minimize_lyapunov(spec: ModelSpec, q0, tol: float = 1e-9, max_iter: int = 5000):
    """Minimise F over the product of simplices from ``q0``.

    L-BFGS on logits ``q = softmax(theta)``; the entropy term keeps every
    minimiser interior, so nothing is lost by the open parametrisation.
    Returns ``(q, F(q), stationarity)`` where stationarity is the max-norm
    of the unit-step projected-gradient move.
    """
    shape = np.shape(q0)
    theta0 = np.log(np.clip(np.asarray(q0, dtype=float), 1e-300, None)).ravel()

    def fun(theta):
        q = _softmax(theta.reshape(shape))
        g = gradient(spec, q)
        gt = q * (g - np.sum(q * g, axis=-1, keepdims=True))
        return lyapunov_value(spec, q), gt.ravel()

    res = optimize.minimize(fun, theta0, jac=True, method="L-BFGS-B",
                            options=dict(maxiter=max_iter, gtol=tol * 1e-3, ftol=0.0))
    q = _softmax(res.x.reshape(shape))
    g = gradient(spec, q)
    gnorm = float(np.max(np.abs(project_simplex(q - g) - q)))
    return q, lyapunov_value(spec, q), gnorm


def free_energy_constant(spec: ModelSpec, n_starts: int = 32, seed: int = 0,
                         tol: float = 1e-9) -> FreeEnergyResult:
    """Best estimate of the additive constant of F, ``-min F`` over the product simplex.

    ``lim (1/N) log Z_N`` equals minus the infimum of class-weighted relative
    entropies to the uniform law plus the limiting interaction, which is
    ``-min_q F(q)`` once the ``log K`` terms cancel. Multi-start: the uniform
    point plus Dirichlet(1) draws.
    """
    rng = np.random.default_rng(seed)
    C, K = spec.n_classes, spec.K
    starts = [np.full((C, K), 1.0 / K)]
    starts += [rng.dirichlet(np.ones(K), size=C) for _ in range(max(n_starts - 1, 0))]
    best = None
    for s in starts:
        q, f, g = minimize_lyapunov(spec, s, tol=tol)
        if best is None or f < best[1]:
            best = (q, f, g)
    q, f, g = best
    return FreeEnergyResult(C=-f, minimizer=q, min_value=f, grad_norm=g)


# -- descent along trajectories -------------------------------------------

@dataclass
class DescentReport:
    t: np.ndarray
    F: np.ndarray
    dFdt: np.ndarray
    flags: np.ndarray
    tol: float = DESCENT_TOL

    @property
    def violated(self) -> bool:
        return bool(self.flags.any())

    def rows(self):
        return list(zip(self.t.tolist(), self.F.tolist(), self.dFdt.tolist()))

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("t,F,dFdt,flag\n")
        for t, F, d, fl in zip(self.t, self.F, self.dFdt, self.flags):
            buf.write(f"{t:.17g},{F:.17g},{d:.17g},{int(fl)}\n")
        return buf.getvalue()

    def write_csv(self, path) -> None:
        atomic_write(path, self.to_csv())


def descent_monitor(spec: ModelSpec, trajectory: Trajectory, tol: float = DESCENT_TOL) -> DescentReport:
    """F along a trajectory with central-difference time derivatives; flags ``dF/dt > tol``."""
    t = trajectory.times
    F = lyapunov_value(spec, trajectory.values)
    F = np.atleast_1d(np.asarray(F, dtype=float))
    dF = np.gradient(F, t) if len(t) > 1 else np.zeros_like(F)
    return DescentReport(t, F, dF, dF > tol, tol)


def descent_rate(spec: ModelSpec, q) -> float:
    """``dF/dt`` at ``q`` along the McKean-Vlasov flow."""
    return directional_derivative(spec, q, vector_field(spec, q))
