"""Lazy, reproducible realisations of a Mandelbrot cascade.

A :class:`CascadeTree` is a pure function ``(seed, word) -> X_u``.  Under
``M1`` every node draws its own weight from the scalar law; under ``M2`` each
parent draws one atom of the vector law and hands coordinate ``j`` to its
child ``j``.

Partition masses ``Z_n = sum_{|u|=n} Y_u nu([u])`` are computed by exact
enumeration, level by level and depth-first once a level gets large, with
every product kept in log space.  Zero weights and zero-mass cylinders are
pruned as soon as they appear.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from scipy.special import logsumexp

from . import keyed
from . import measures as ms
from .errors import InputError, OutsideSupportError, ResourceGuardError
from .weights import QAlpha, VectorWeightModel, WeightModel

LEAF_GUARD = 2**26
CHUNK = 2**18


@dataclass(frozen=True)
class CascadeTree:
    """One realisation of the weights, addressed by word."""

    seed: int
    weights: WeightModel | VectorWeightModel
    b: int | None = None
    salts: tuple = field(default=())  # ((depth, salt), ...) regenerated generations

    def __post_init__(self):
        if isinstance(self.weights, VectorWeightModel):
            if self.b is not None and self.b != self.weights.b:
                raise InputError(f"vector length {self.weights.b} does not match b = {self.b}")
            object.__setattr__(self, "b", self.weights.b)
        elif isinstance(self.weights, WeightModel):
            if self.b is None or int(self.b) < 2:
                raise InputError("scalar weight trees need an alphabet size b >= 2")
            if isinstance(self.weights, QAlpha):
                self.weights.check_alphabet(self.b)
        else:
            raise InputError(f"unsupported weight law {self.weights!r}")
        object.__setattr__(self, "seed", int(self.seed) & keyed.MASK)
        object.__setattr__(self, "b", int(self.b))

    @property
    def mode(self) -> str:
        return "M2" if isinstance(self.weights, VectorWeightModel) else "M1"

    def regenerated(self, depth: int, salt: int) -> "CascadeTree":
        """Same tree except that generation ``depth`` is redrawn with ``salt``."""
        salts = tuple((d, s) for d, s in self.salts if d != depth) + ((depth, salt),)
        return replace(self, salts=salts)

    def _consts(self, depth: int, tag: int) -> tuple[int, int]:
        salt = dict(self.salts).get(depth, 0)
        return keyed.stream_constants(self.seed, depth, salt, tag)

    def child_log_weights(self, ka, kb, depth: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Keys and ``log X`` of all children (at ``depth``) of the given parents.

        Output is node-major: child ``i*b + j`` is ``parent_i · j``.
        """
        b = self.b
        n = ka.shape[0]
        j = np.tile(np.arange(b, dtype=np.uint64), n)
        ca, cb = keyed.child_keys(np.repeat(ka, b), np.repeat(kb, b), j)
        if self.mode == "M1":
            u = keyed.uniforms(ca, cb, self._consts(depth, 0))
            logx = self.weights.log_from_uniform(u)
        else:
            u = keyed.uniforms(ka, kb, self._consts(depth, 1))
            atoms = self.weights.atom_from_uniform(u)
            with np.errstate(divide="ignore"):
                logx = np.log(self.weights.vectors[atoms]).ravel()
        return ca, cb, np.asarray(logx, dtype=float)


def _check_word(t: CascadeTree, u) -> tuple:
    u = tuple(int(j) for j in u)
    if any(not 0 <= j < t.b for j in u):
        raise InputError(f"word {u} has symbols outside alphabet of size {t.b}")
    return u


def node_log_weight(t: CascadeTree, u: Sequence[int]) -> float:
    """``log X_u`` for the realisation; ``-inf`` encodes ``X_u = 0``."""
    u = _check_word(t, u)
    if not u:
        raise InputError("the root carries no weight (X_empty = 1 implicitly)")
    ka, kb = keyed.word_key(u[:-1])
    _, _, logx = t.child_log_weights(ka, kb, len(u))
    return float(logx[u[-1]])


def log_path_weight(t: CascadeTree, u: Sequence[int]) -> float:
    """``log Y_u = sum_k log X_{u|k}``."""
    u = _check_word(t, u)
    total = 0.0
    ka, kb = keyed.word_key(())
    for depth, j in enumerate(u, start=1):
        ca, cb, logx = t.child_log_weights(ka, kb, depth)
        total += float(logx[j])
        ka, kb = ca[j : j + 1], cb[j : j + 1]
    return total


# ---------------------------------------------------------------------------
# enumeration


@dataclass
class _Frontier:
    depth: int
    ka: np.ndarray
    kb: np.ndarray
    log_y: np.ndarray
    states: np.ndarray
    comp_log: np.ndarray

    def __len__(self):
        return self.log_y.shape[0]

    def log_total(self) -> float:
        if len(self) == 0:
            return -np.inf
        return float(logsumexp(self.log_y + ms.node_log_mass(self.comp_log)))

    def take(self, sl) -> "_Frontier":
        return _Frontier(
            self.depth, self.ka[sl], self.kb[sl], self.log_y[sl], self.states[:, sl], self.comp_log[:, sl]
        )


def _root_frontier(t: CascadeTree, m: ms.MeasureModel, u: tuple = ()) -> _Frontier:
    """Frontier holding the single node ``u``, with masses relative to ``nu([u])``."""
    states, comp_log = ms.initial_state(m)
    for j in u:
        states, comp_log = ms.advance(m, states, comp_log, [j])
    log_mass = ms.node_log_mass(comp_log)[0]
    if not np.isfinite(log_mass):
        raise OutsideSupportError(f"cylinder {u} has zero mass")
    ka, kb = keyed.word_key(u)
    return _Frontier(len(u), ka, kb, np.zeros(1), states, comp_log - log_mass)


def _expand(t: CascadeTree, m: ms.MeasureModel, f: _Frontier) -> _Frontier:
    ca, cb, logx = t.child_log_weights(f.ka, f.kb, f.depth + 1)
    log_y = np.repeat(f.log_y, t.b) + logx
    states, comp_log = ms.expand(m, f.states, f.comp_log)
    keep = np.isfinite(log_y) & np.isfinite(ms.node_log_mass(comp_log))
    return _Frontier(f.depth + 1, ca[keep], cb[keep], log_y[keep], states[:, keep], comp_log[:, keep])


def _accumulate(t, m, f: _Frontier, levels: int, acc: np.ndarray, offset: int = 0) -> None:
    """Add ``log sum Y nu`` of each of the next ``levels`` generations into ``acc``."""
    for level in range(levels):
        if len(f) == 0:
            return
        if len(f) * t.b > CHUNK and level < levels:
            remaining = levels - level
            for start in range(0, len(f), max(1, CHUNK // t.b)):
                _accumulate(t, m, f.take(slice(start, start + CHUNK // t.b)), remaining, acc, offset + level)
            return
        f = _expand(t, m, f)
        acc[offset + level] = np.logaddexp(acc[offset + level], f.log_total())


def _guard(t: CascadeTree, levels: int) -> None:
    if levels < 0:
        raise InputError("depth must be >= 0")
    if t.b**levels > LEAF_GUARD:
        raise ResourceGuardError(
            f"b**depth = {t.b}**{levels} exceeds the enumeration guard 2**26", "depth"
        )


def _log_masses(t, m, levels: int, start: tuple = ()) -> np.ndarray:
    _guard(t, levels)
    acc = np.full(levels, -np.inf)
    _accumulate(t, m, _root_frontier(t, m, start), levels, acc)
    return acc


def _check_measure(t: CascadeTree, m: ms.MeasureModel) -> None:
    if m.b != t.b:
        raise InputError(f"measure alphabet {m.b} does not match tree alphabet {t.b}")


def partition_mass(t: CascadeTree, m: ms.MeasureModel, n: int) -> float:
    """``Z_n`` for the realisation."""
    _check_measure(t, m)
    if n == 0:
        return 1.0
    return math.exp(_log_masses(t, m, n)[-1])


@dataclass(frozen=True)
class MassTrajectory:
    values: tuple  # ((n, Z_n), ...) with n = 0..n_max
    measure: ms.MeasureModel
    seed: int

    @property
    def Z(self) -> np.ndarray:
        return np.array([z for _, z in self.values])


def mass_trajectory(t: CascadeTree, m: ms.MeasureModel, n_max: int) -> MassTrajectory:
    """``(Z_0, ..., Z_{n_max})`` on one shared realisation."""
    _check_measure(t, m)
    log_z = _log_masses(t, m, n_max)
    values = ((0, 1.0),) + tuple((n + 1, math.exp(v)) for n, v in enumerate(log_z))
    return MassTrajectory(values, m, t.seed)


def subtree_mass(t: CascadeTree, m: ms.MeasureModel, u: Sequence[int], k: int) -> float:
    """``Z_k^{(u)} = sum_{|w|=k} Y^{[u]}_w nu([uw]) / nu([u])``."""
    _check_measure(t, m)
    u = _check_word(t, u)
    if k == 0:
        _root_frontier(t, m, u)  # support check
        return 1.0
    return math.exp(_log_masses(t, m, k, u)[-1])


def limit_cylinder_mass(t: CascadeTree, m: ms.MeasureModel, u: Sequence[int], k: int) -> float:
    """Approximant ``Y_u nu([u]) Z_k^{(u)}`` of ``(Q.nu)([u])``."""
    u = _check_word(t, u)
    log_nu = ms.log_cylinder_mass(m, u)
    if not np.isfinite(log_nu):
        raise OutsideSupportError(f"cylinder {u} has zero mass")
    log_y = log_path_weight(t, u) if u else 0.0
    if log_y == -np.inf:
        return 0.0
    return math.exp(log_y + log_nu) * subtree_mass(t, m, u, k)


def level_frontier(t: CascadeTree, m: ms.MeasureModel, n: int) -> _Frontier:
    """All surviving depth-``n`` nodes (no chunking; guarded)."""
    _check_measure(t, m)
    _guard(t, n)
    f = _root_frontier(t, m)
    for _ in range(n):
        f = _expand(t, m, f)
    return f


def conditional_increment(t: CascadeTree, m: ms.MeasureModel, n: int, replicates: int) -> float:
    """Average of ``Z_{n+1} - Z_n`` over ``replicates`` redraws of generation ``n+1``.

    The depth-``n`` tree is held fixed; each replicate uses a fresh salt for
    generation ``n + 1`` only.
    """
    f = level_frontier(t, m, n)
    z_n = math.exp(f.log_total())
    nxt = []
    for r in range(1, replicates + 1):
        g = _expand(t.regenerated(n + 1, r), m, f)
        nxt.append(math.exp(g.log_total()))
    return float(np.mean(nxt)) - z_n


def ensemble_trajectories(
    m: ms.MeasureModel,
    weights: WeightModel | VectorWeightModel,
    n_max: int,
    seeds: Sequence[int],
    b: int | None = None,
    threads: int = 1,
) -> np.ndarray:
    """``Z_0..Z_{n_max}`` for each tree seed; rows follow ``seeds`` order."""
    b = m.b if b is None else b

    def one(seed):
        return mass_trajectory(CascadeTree(seed, weights, b), m, n_max).Z

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(one, seeds))
    else:
        rows = [one(s) for s in seeds]
    return np.array(rows)
