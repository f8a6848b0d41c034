"""Fixed points of the McKean-Vlasov system and their local stability."""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .exceptions import NonConvergence, NotAFixedPoint
from .limit_system import rk4_integrate, stationary_maps, vector_field
from .lyapunov import lyapunov_value, max_pairwise_derivative
from .model import ModelSpec, check_empirical, uniform_vector
from .trajectory import atomic_write

STABILITY_TOL = 1e-8
DEDUP_RADIUS = 1e-6


@dataclass
class FixedPointReport:
    point: np.ndarray
    residual: float
    field_residual: float
    F_value: float = float("nan")
    classification: str | None = None
    eigen_real_parts: list = field(default_factory=list)
    iterations: int = 0
    perturbation_returned: list = field(default_factory=list)
    perturbation_endpoints: list = field(default_factory=list)

    @property
    def corroborated(self):
        """Perturbed trajectories agree with the eigenvalue verdict (``None`` if not run)."""
        if not self.perturbation_returned or self.classification is None:
            return None
        back = all(self.perturbation_returned)
        if self.classification == "stable":
            return back
        if self.classification == "unstable":
            return not any(self.perturbation_returned)
        return True

    def to_dict(self):
        return {
            "point": self.point.tolist(),
            "residual": self.residual,
            "field_residual": self.field_residual,
            "F_value": self.F_value,
            "classification": self.classification,
            "eigen_real_parts": [float(v) for v in self.eigen_real_parts],
        }


def residuals(spec: ModelSpec, q):
    """``(max|q - pi(q)|, max|vector_field(q)|)``."""
    return (float(np.max(np.abs(q - stationary_maps(spec, q)))),
            float(np.max(np.abs(vector_field(spec, q)))))


def _report(spec, q, iterations=0):
    res, fres = residuals(spec, q)
    return FixedPointReport(q, res, fres, lyapunov_value(spec, q), iterations=iterations)


def _newton_polish(spec: ModelSpec, q):
    """Solve ``q = pi(q)`` on the free coordinates; keeps ``q`` if the root fails."""
    C, K = q.shape

    def full(x):
        head = x.reshape(C, K - 1)
        return np.column_stack([head, 1.0 - head.sum(axis=1)])

    def fun(x):
        p = full(x)
        return (p - stationary_maps(spec, p))[:, :-1].ravel()

    sol = optimize.root(fun, q[:, :-1].ravel(), method="hybr", tol=1e-15)
    p = full(sol.x)
    if sol.success and p.min() > 0 and residuals(spec, p)[0] <= residuals(spec, q)[0]:
        return p
    return q


def self_consistency_iterate(spec: ModelSpec, q0, damping: float = 1.0,
                             max_iter: int = 100_000, tol: float = 1e-12) -> FixedPointReport:
    """Iterate ``q <- (1-d) q + d pi(q)`` until the update is below ``tol``.

    Switches to ``d = 0.5`` when the update size has not decreased for 10
    consecutive steps. Raises ``NonConvergence`` carrying the last iterate.
    """
    if not 0 < damping <= 1:
        raise ValueError("damping must lie in (0, 1]")
    q = check_empirical(spec, q0, tol=1e-9).copy()
    d = damping
    prev, stalled = np.inf, 0
    for it in range(1, max_iter + 1):
        new = (1 - d) * q + d * stationary_maps(spec, q)
        step = float(np.max(np.abs(new - q)))
        q = new
        if step < tol:
            if residuals(spec, q)[0] > 1e-10:
                q = _newton_polish(spec, q)
            return _report(spec, q, it)
        stalled = stalled + 1 if step >= prev else 0
        prev = step
        if stalled >= 10 and d > 0.5:
            d, stalled = 0.5, 0
    raise NonConvergence(f"no convergence after {max_iter} iterations", _report(spec, q, max_iter))


def tangent_jacobian(spec: ModelSpec, q, h: float = 1e-6) -> np.ndarray:
    """Jacobian of the vector field in the basis ``e_z - e_K`` of each class row."""
    C, K = q.shape
    n = C * (K - 1)
    J = np.empty((n, n))
    col = 0
    for m in range(C):
        for z in range(K - 1):
            v = np.zeros((C, K))
            v[m, z], v[m, K - 1] = 1.0, -1.0
            d = (vector_field(spec, q + h * v) - vector_field(spec, q - h * v)) / (2 * h)
            J[:, col] = d[:, :-1].ravel()
            col += 1
    return J


def classify(real_parts, tol: float = STABILITY_TOL) -> str:
    real_parts = np.asarray(real_parts)
    if np.all(real_parts < -tol):
        return "stable"
    if np.any(real_parts > tol):
        return "unstable"
    return "marginal"


def classify_stability(spec: ModelSpec, q, n_perturb: int = 8, radius: float = 1e-3,
                       T: float = 200.0, dt: float = 0.05, seed: int = 0,
                       return_tol: float = 1e-6) -> FixedPointReport:
    """Eigenvalue classification plus perturbed-trajectory corroboration.

    The verdict comes from the finite-difference Jacobian on the tangent
    space. ``n_perturb`` starts at max-norm distance ``radius`` are then
    integrated to ``T``; ``perturbation_returned`` records which ended within
    ``return_tol`` of ``q``.
    """
    q = np.asarray(q, dtype=float)
    rep = _report(spec, q)
    if rep.residual >= 1e-8:
        raise NotAFixedPoint(f"residual {rep.residual:.3g} >= 1e-8")
    ev = np.linalg.eigvals(tangent_jacobian(spec, q))
    rep.eigen_real_parts = sorted(float(v) for v in ev.real)
    rep.classification = classify(rep.eigen_real_parts)
    if n_perturb > 0:
        rng = np.random.default_rng(seed)
        v = rng.normal(size=(n_perturb,) + q.shape)
        v -= v.mean(axis=-1, keepdims=True)
        v *= radius / np.abs(v).max(axis=(-2, -1), keepdims=True)
        starts = np.clip(q + v, 1e-12, None)
        starts /= starts.sum(axis=-1, keepdims=True)
        _, path = rk4_integrate(spec, starts, T, dt)
        end = path[-1]
        dist = np.abs(end - q).max(axis=(-2, -1))
        rep.perturbation_returned = [bool(d < return_tol) for d in dist]
        rep.perturbation_endpoints = [e for e in end]
    return rep


def deduplicate(points, radius: float = DEDUP_RADIUS):
    kept = []
    for p in points:
        if all(np.max(np.abs(p.point - k.point)) >= radius for k in kept):
            kept.append(p)
    return kept


def find_all_fixed_points(spec: ModelSpec, n_starts: int = 200, seed: int = 0,
                          classify_points: bool = True, **classify_kw) -> list:
    """Multi-start search from the uniform point and ``n_starts`` Dirichlet(1) draws.

    Points closer than ``DEDUP_RADIUS`` in max-norm are merged; the result is
    sorted by Lyapunov value.
    """
    rng = np.random.default_rng(seed)
    C, K = spec.n_classes, spec.K
    starts = [uniform_vector(spec)]
    starts += [rng.dirichlet(np.ones(K), size=C) for _ in range(n_starts)]
    found = []
    for s in starts:
        try:
            found.append(self_consistency_iterate(spec, s))
        except NonConvergence:
            continue
    points = deduplicate(found)
    if classify_points:
        points = [classify_stability(spec, p.point, **classify_kw) for p in points]
    return sorted(points, key=lambda p: p.F_value)


def summary_line(reports) -> str:
    n = len(reports)
    counts = {}
    for r in reports:
        counts[r.classification] = counts.get(r.classification, 0) + 1
    parts = [f"{counts[k]} {k}" for k in ("unstable", "stable", "marginal") if k in counts]
    return f"{n} fixed point{'s' if n != 1 else ''}: " + ", ".join(parts)


def reports_to_json(reports) -> str:
    return json.dumps([r.to_dict() for r in reports], indent=2)


def write_reports_json(reports, path) -> None:
    atomic_write(path, reports_to_json(reports) + "\n")
