"""Problem instances: state space, interaction, block structure.

States are the integers ``1..K`` and blocks are numbered ``1..r`` in every
public signature. Arrays indexed by state or class are 0-based internally.

The 2r node classes are ordered ``(1,c), (1,p), ..., (r,c), (r,p)``; an
empirical vector is stored as a ``(2r, K)`` float array in that order and a
configuration as a flat array of node states, nodes grouped by class in the
same order.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.sparse.csgraph import connected_components

from .exceptions import ModelValidationError, SizeMismatch

ROLES = ("c", "p")
PROPORTION_TOL = 1e-12
AGREEMENT_TOL = 1e-9


def class_index(j: int, role: str) -> int:
    """Row of class ``(j, role)`` in an empirical vector (``j`` is 1-based)."""
    if role not in ROLES:
        raise ValueError(f"role must be 'c' or 'p', got {role!r}")
    return 2 * (j - 1) + ROLES.index(role)


def class_label(m: int) -> str:
    return f"{m // 2 + 1}.{ROLES[m % 2]}"


@dataclass(frozen=True, eq=False)
class StateSpace:
    K: int
    edges: tuple

    @classmethod
    def complete(cls, K):
        return cls(K, tuple((a, b) for a in range(1, K + 1)
                            for b in range(1, K + 1) if a != b))

    @cached_property
    def adjacency(self) -> np.ndarray:
        a = np.zeros((self.K, self.K))
        for z, zp in self.edges:
            if 1 <= z <= self.K and 1 <= zp <= self.K and z != zp:
                a[z - 1, zp - 1] = 1.0
        return a


@dataclass(frozen=True, eq=False)
class InteractionModel:
    W: np.ndarray
    beta: float
    V: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "W", np.asarray(self.W, dtype=float))
        V = np.zeros(len(self.W)) if self.V is None else self.V
        object.__setattr__(self, "V", np.asarray(V, dtype=float))


@dataclass(frozen=True, eq=False)
class BlockStructure:
    r: int
    finite_sizes: tuple | None = None
    limit_proportions: tuple | None = None


@dataclass(frozen=True, eq=False)
class ModelSpec:
    state_space: StateSpace
    interaction: InteractionModel
    blocks: BlockStructure

    # -- shorthands -------------------------------------------------------
    @property
    def K(self):
        return self.state_space.K

    @property
    def r(self):
        return self.blocks.r

    @property
    def n_classes(self):
        return 2 * self.blocks.r

    @property
    def W(self):
        return self.interaction.W

    @property
    def beta(self):
        return self.interaction.beta

    @property
    def V(self):
        return self.interaction.V

    @property
    def adjacency(self):
        return self.state_space.adjacency

    @property
    def has_sizes(self):
        return self.blocks.finite_sizes is not None

    # -- finite system ----------------------------------------------------
    @cached_property
    def sizes(self) -> np.ndarray:
        """Class sizes ``N_j^iota`` in class order."""
        if self.blocks.finite_sizes is None:
            raise SizeMismatch("model has no finite_sizes")
        return np.array([n for pair in self.blocks.finite_sizes for n in pair],
                        dtype=np.int64)

    @property
    def N(self) -> int:
        return int(self.sizes.sum())

    @cached_property
    def node_class(self) -> np.ndarray:
        """Class index of every node, nodes grouped by class."""
        return np.repeat(np.arange(self.n_classes), self.sizes)

    @cached_property
    def class_offsets(self) -> np.ndarray:
        return np.concatenate([[0], np.cumsum(self.sizes)])

    def node_index(self, j: int, role: str, i: int) -> int:
        """Flat node position of node ``i`` (0-based) in class ``(j, role)``."""
        m = class_index(j, role)
        if not 0 <= i < self.sizes[m]:
            raise SizeMismatch(f"class {class_label(m)} has {self.sizes[m]} nodes, got index {i}")
        return int(self.class_offsets[m] + i)

    def node_address(self, l: int):
        m = int(self.node_class[l])
        return m // 2 + 1, ROLES[m % 2], int(l - self.class_offsets[m])

    @cached_property
    def interaction_mask(self) -> np.ndarray:
        """``mask[i, k] = 1`` when the pair ``(i, k)`` enters the energy double sum.

        Central nodes pair with their whole block; peripheral nodes pair with
        the centrals of their block and with every peripheral node. Self
        pairs are included.
        """
        cls = self.node_class
        blk = cls // 2
        central = (cls % 2) == 0
        same_block = blk[:, None] == blk[None, :]
        both_periph = (~central)[:, None] & (~central)[None, :]
        row_c = central[:, None] & same_block
        row_p = (~central)[:, None] & ((same_block & central[None, :]) | both_periph)
        return (row_c | row_p).astype(float)

    # -- limit system -----------------------------------------------------
    @cached_property
    def proportions(self) -> np.ndarray:
        """``(r, 3)`` array of ``(alpha_j, p_j^c, p_j^p)``."""
        if self.blocks.limit_proportions is not None:
            return np.asarray(self.blocks.limit_proportions, dtype=float).reshape(-1, 3)
        s = self.sizes.reshape(-1, 2).astype(float)
        nj = s.sum(axis=1)
        return np.column_stack([nj / nj.sum(), s[:, 0] / nj, s[:, 1] / nj])

    @cached_property
    def weights(self) -> np.ndarray:
        """Limiting class fractions ``alpha_j p_j^iota`` in class order."""
        a = self.proportions
        return np.column_stack([a[:, 0] * a[:, 1], a[:, 0] * a[:, 2]]).ravel()

    @cached_property
    def coupling(self) -> np.ndarray:
        """``(2r, 2r)`` weights of the mean fields seen by each class.

        The limiting energy of class ``m`` at state ``z`` is
        ``beta * sum_m' coupling[m, m'] * (W q^m')_z``.
        """
        w = self.weights
        G = np.zeros((self.n_classes, self.n_classes))
        for j in range(self.r):
            c, p = 2 * j, 2 * j + 1
            G[c, c] = w[c]
            G[c, p] = w[p]
            G[p, c] = w[c]
            G[p, 1::2] = w[1::2]
        return G

    # -- derived instances ------------------------------------------------
    def with_sizes(self, sizes) -> "ModelSpec":
        """Same model with new ``finite_sizes``; proportions follow the sizes."""
        sizes = tuple((int(a), int(b)) for a, b in sizes)
        blocks = BlockStructure(self.r, sizes, None)
        derived = ModelSpec(self.state_space, self.interaction, blocks).proportions
        return ModelSpec(self.state_space, self.interaction,
                         BlockStructure(self.r, sizes, tuple(map(tuple, derived))))

    def scaled(self, factor: float) -> "ModelSpec":
        """Scale every class size by ``factor`` (rounded, at least 1)."""
        s = np.maximum(1, np.rint(self.sizes * factor)).astype(int).reshape(-1, 2)
        return self.with_sizes(s)

    def with_interaction(self, W=None, beta=None, V=None) -> "ModelSpec":
        it = self.interaction
        new = InteractionModel(it.W if W is None else W,
                               it.beta if beta is None else beta,
                               it.V if V is None else V)
        return ModelSpec(self.state_space, new, self.blocks)


@dataclass(eq=False)
class Configuration:
    """Node states (1-based), nodes grouped by class in class order."""
    states: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))

    def __post_init__(self):
        self.states = np.asarray(self.states, dtype=np.int64)

    def copy(self):
        return Configuration(self.states.copy())


@dataclass(frozen=True, eq=False)
class FlipProposal:
    """Move node ``(block, role, index)`` from ``from_state`` to ``to_state``."""
    block: int
    role: str
    index: int
    from_state: int
    to_state: int


# -- validation -----------------------------------------------------------

def model_errors(spec: ModelSpec) -> list:
    """Every invariant violation of ``spec`` as ``(code, message)`` pairs."""
    errs = []
    K = spec.K
    if not isinstance(K, (int, np.integer)) or K < 1:
        return [("BadShape", f"K must be a positive integer, got {K!r}")]

    edges = set()
    for e in spec.state_space.edges:
        z, zp = (int(v) for v in e)
        if not (1 <= z <= K and 1 <= zp <= K) or z == zp:
            errs.append(("BadShape", f"edge {(z, zp)} is not a pair of distinct states in 1..{K}"))
        edges.add((z, zp))
    missing = sorted((b, a) for a, b in edges if (b, a) not in edges)
    if missing:
        errs.append(("AsymmetricEdges", f"reverse edges missing: {missing}"))
    a = spec.adjacency
    if K > 1:
        n_comp, _ = connected_components(a, directed=True, connection="strong")
        if n_comp != 1:
            errs.append(("ReducibleJumpGraph", f"jump graph has {n_comp} strongly connected components"))

    W = spec.W
    if W.shape != (K, K):
        errs.append(("BadShape", f"W must be {K}x{K}, got {W.shape}"))
    elif not np.array_equal(W, W.T):
        errs.append(("AsymmetricW", "W is not symmetric"))
    if spec.V.shape != (K,):
        errs.append(("BadShape", f"V must have length {K}, got {spec.V.shape}"))
    if not np.isfinite(spec.beta) or spec.beta <= 0:
        errs.append(("BadBeta", f"beta must be positive, got {spec.beta}"))

    b = spec.blocks
    if not isinstance(b.r, (int, np.integer)) or b.r < 1:
        errs.append(("BadSizes", f"r must be a positive integer, got {b.r!r}"))
        return errs
    if b.finite_sizes is None and b.limit_proportions is None:
        errs.append(("BadProportions", "neither finite_sizes nor limit_proportions given"))
        return errs
    if b.finite_sizes is not None:
        fs = list(b.finite_sizes)
        if len(fs) != b.r or any(len(pair) != 2 for pair in fs):
            errs.append(("BadSizes", f"finite_sizes must hold {b.r} pairs"))
        elif any(int(n) != n or n < 1 for pair in fs for n in pair):
            errs.append(("BadSizes", "all class sizes must be integers >= 1"))
    if b.limit_proportions is not None:
        lp = np.asarray(b.limit_proportions, dtype=float)
        if lp.shape != (b.r, 3):
            errs.append(("BadProportions", f"limit_proportions must be {b.r} triples"))
        else:
            if np.any(lp <= 0) or np.any(lp >= 1):
                errs.append(("BadProportions", "all proportions must lie in (0, 1)"))
            if abs(lp[:, 0].sum() - 1) > PROPORTION_TOL:
                errs.append(("BadProportions", f"alphas sum to {lp[:, 0].sum()!r}, not 1"))
            bad = np.abs(lp[:, 1] + lp[:, 2] - 1) > PROPORTION_TOL
            if bad.any():
                errs.append(("BadProportions", f"p_c + p_p != 1 in blocks {list(np.flatnonzero(bad) + 1)}"))
            if b.finite_sizes is not None and not any(c == "BadSizes" for c, _ in errs):
                derived = ModelSpec(spec.state_space, spec.interaction,
                                    BlockStructure(b.r, b.finite_sizes, None)).proportions
                if np.max(np.abs(derived - lp)) > AGREEMENT_TOL:
                    errs.append(("BadProportions", "limit_proportions disagree with finite_sizes"))
    return errs


def validate_model(spec: ModelSpec) -> ModelSpec:
    """Return ``spec`` unchanged if valid; raise ``ModelValidationError`` listing all violations."""
    errs = model_errors(spec)
    if errs:
        raise ModelValidationError(errs)
    return spec


# -- empirical vectors and configurations ---------------------------------

def check_empirical(spec: ModelSpec, q, tol: float = PROPORTION_TOL) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    if q.shape != (spec.n_classes, spec.K):
        raise SizeMismatch(f"empirical vector must have shape {(spec.n_classes, spec.K)}, got {q.shape}")
    if np.any(q < 0) or np.any(np.abs(q.sum(axis=1) - 1) > tol):
        raise ValueError("every component must be a probability vector")
    return q


def uniform_vector(spec: ModelSpec) -> np.ndarray:
    return np.full((spec.n_classes, spec.K), 1.0 / spec.K)


def empirical_vector(spec: ModelSpec, x: Configuration) -> np.ndarray:
    """Per-class state frequencies of configuration ``x``, shape ``(2r, K)``."""
    states = np.asarray(x.states)
    if states.shape != (spec.N,):
        raise SizeMismatch(f"configuration has {states.size} nodes, model has {spec.N}")
    if states.size and (states.min() < 1 or states.max() > spec.K):
        raise SizeMismatch(f"states must lie in 1..{spec.K}")
    counts = class_counts(spec, states)
    return counts / spec.sizes[:, None]


def class_counts(spec: ModelSpec, states) -> np.ndarray:
    idx = spec.node_class * spec.K + (np.asarray(states) - 1)
    return np.bincount(idx, minlength=spec.n_classes * spec.K).reshape(spec.n_classes, spec.K)


def configuration_from_counts(spec: ModelSpec, counts) -> Configuration:
    """Deterministic configuration with the given per-class state counts."""
    counts = np.asarray(counts, dtype=np.int64)
    if counts.shape != (spec.n_classes, spec.K) or np.any(counts.sum(axis=1) != spec.sizes):
        raise SizeMismatch("counts do not match class sizes")
    states = np.concatenate([np.repeat(np.arange(1, spec.K + 1), row) for row in counts])
    return Configuration(states)


def round_counts(spec: ModelSpec, q) -> np.ndarray:
    """Integer class counts closest to ``sizes * q`` (largest-remainder rounding)."""
    q = np.asarray(q, dtype=float)
    target = q * spec.sizes[:, None]
    counts = np.floor(target).astype(np.int64)
    for m in range(spec.n_classes):
        short = spec.sizes[m] - counts[m].sum()
        order = np.argsort(-(target[m] - counts[m]), kind="stable")
        counts[m, order[:short]] += 1
    return counts


def sample_initial_configuration(spec: ModelSpec, nu, seed: int) -> Configuration:
    """Draw each class's nodes i.i.d. from the matching row of ``nu``."""
    nu = check_empirical(spec, nu, tol=1e-9)
    rng = np.random.default_rng(seed)
    parts = [rng.choice(spec.K, size=int(n), p=nu[m]) + 1
             for m, n in enumerate(spec.sizes)]
    return Configuration(np.concatenate(parts))


def apply_flip(spec: ModelSpec, x: Configuration, flip: FlipProposal) -> Configuration:
    y = x.copy()
    y.states[spec.node_index(flip.block, flip.role, flip.index)] = flip.to_state
    return y


# -- construction helpers and JSON ---------------------------------------

def make_model(W, beta, *, K=None, edges=None, V=None, r=None,
               finite_sizes=None, limit_proportions=None) -> ModelSpec:
    W = np.asarray(W, dtype=float)
    K = len(W) if K is None else K
    space = StateSpace(K, tuple(map(tuple, edges))) if edges is not None else StateSpace.complete(K)
    if r is None:
        r = len(finite_sizes if finite_sizes is not None else limit_proportions)
    fs = None if finite_sizes is None else tuple(tuple(int(n) for n in p) for p in finite_sizes)
    lp = None if limit_proportions is None else tuple(tuple(float(v) for v in t) for t in limit_proportions)
    return ModelSpec(space, InteractionModel(W, float(beta), V), BlockStructure(r, fs, lp))


def example_model(beta: float = 4.0, class_size: int | None = None) -> ModelSpec:
    """Two states, a kernel charging disagreement, two blocks, every proportion 1/2."""
    sizes = None if class_size is None else ((class_size, class_size),) * 2
    return make_model([[0.0, 1.0], [1.0, 0.0]], beta, finite_sizes=sizes,
                      limit_proportions=((0.5, 0.5, 0.5), (0.5, 0.5, 0.5)))


def model_to_dict(spec: ModelSpec) -> dict:
    b = spec.blocks
    d = {
        "state_space": {"K": spec.K, "edges": [list(e) for e in spec.state_space.edges]},
        "interaction": {"W": spec.W.tolist(), "beta": spec.beta, "V": spec.V.tolist()},
        "blocks": {"r": b.r},
    }
    if b.finite_sizes is not None:
        d["blocks"]["finite_sizes"] = [list(p) for p in b.finite_sizes]
    d["blocks"]["limit_proportions"] = spec.proportions.tolist()
    return d


def _require(d, key, where):
    if not isinstance(d, dict) or key not in d:
        raise ModelValidationError([("MissingKey", f"missing key '{where}{key}'")])
    return d[key]


def model_from_dict(d: dict) -> ModelSpec:
    """Build (but do not validate) a model from the JSON object layout."""
    ss = _require(d, "state_space", "")
    it = _require(d, "interaction", "")
    bl = _require(d, "blocks", "")
    try:
        K = int(_require(ss, "K", "state_space."))
        edges = tuple((int(a), int(b)) for a, b in _require(ss, "edges", "state_space."))
        W = np.asarray(_require(it, "W", "interaction."), dtype=float)
        beta = float(_require(it, "beta", "interaction."))
        V = it.get("V")
        r = int(_require(bl, "r", "blocks."))
        fs = bl.get("finite_sizes")
        lp = bl.get("limit_proportions")
        fs = None if fs is None else tuple(tuple(p) for p in fs)
        lp = None if lp is None else tuple(tuple(float(v) for v in t) for t in lp)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ModelValidationError):
            raise
        raise ModelValidationError([("BadShape", f"malformed model field: {exc}")]) from exc
    return ModelSpec(StateSpace(K, edges), InteractionModel(W, beta, V), BlockStructure(r, fs, lp))


def load_model(path) -> ModelSpec:
    """Read and validate a model JSON file."""
    with open(path) as fh:
        try:
            d = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ModelValidationError([("BadJSON", f"{path}: {exc}")]) from exc
    return validate_model(model_from_dict(d))


def save_model(spec: ModelSpec, path) -> None:
    with open(path, "w") as fh:
        json.dump(model_to_dict(spec), fh, indent=2)
