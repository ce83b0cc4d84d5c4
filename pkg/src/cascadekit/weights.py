"""Laws of the cascade weights.

Scalar laws (i.i.d. weights, mean one) come in three kinds: :class:`Discrete`,
:class:`LogNormal` and the beta-model :class:`QAlpha`.  Each can turn a
uniform variate into ``log X`` by inverse CDF, which is what the
counter-based cascade tree uses, and each knows its size-biased companion:
the law of ``U`` with ``E f(U) = E[X f(log X)]``.

:class:`VectorWeightModel` is a discrete law for a sibling vector
``(V_0, ..., V_{b-1})`` with every coordinate of mean one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from itertools import product
from typing import NamedTuple

import numpy as np
from scipy.optimize import brentq
from scipy.special import ndtri

from .errors import InputError
from .measures import MeasureModel, cylinder_mass

MEAN_TOL = 1e-12


def _xlogx(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(v > 0, v * np.log(np.where(v > 0, v, 1.0)), 0.0)


def _safe_log(v) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.log(np.asarray(v, dtype=float))


class WeightModel:
    """Common interface of the scalar weight laws."""

    def log_from_uniform(self, u: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def sample(self, rng: np.random.Generator, size=None):
        """Draws of ``X`` itself."""
        return np.exp(self.log_from_uniform(rng.random(size)))

    def h_X(self) -> float:
        raise NotImplementedError

    def sample_size_biased_log(self, rng: np.random.Generator, size=None):
        raise NotImplementedError

    def qalpha_parameter(self) -> float | None:
        """``alpha`` if ``X`` takes only the values 0 and ``e**alpha`` (alpha > 0)."""
        return None

    def is_identity(self) -> bool:
        """True when ``X == 1`` almost surely."""
        return False


@dataclass(frozen=True)
class Discrete(WeightModel):
    """Finitely many atoms ``(value, probability)`` with unit mean."""

    atoms: tuple

    def __post_init__(self):
        pairs = tuple((float(v), float(q)) for v, q in self.atoms)
        if not pairs:
            raise InputError("discrete weight law needs at least one atom")
        values = np.array([v for v, _ in pairs])
        probs = np.array([q for _, q in pairs])
        if np.any(values < 0) or not np.all(np.isfinite(values)):
            raise InputError("weight values must be finite and >= 0")
        if np.any(probs < 0):
            raise InputError("atom probabilities must be >= 0")
        if abs(probs.sum() - 1.0) > MEAN_TOL:
            raise InputError(f"atom probabilities sum to {probs.sum():.12g}, not 1")
        mean = float(values @ probs)
        if abs(mean - 1.0) > MEAN_TOL:
            raise InputError(f"weight law has mean {mean:.12g}, not 1")
        object.__setattr__(self, "atoms", pairs)

    @classmethod
    def with_entropy(cls, h: float, spread: float = 0.5) -> "Discrete":
        """Three-atom law ``{(1 +- spread)/p w.p. p/2 each, 0 w.p. 1-p}`` tuned so ``h_X = h``.

        Not of Q_alpha type when ``spread > 0``.  Needs
        ``h >= ((1+s)log(1+s) + (1-s)log(1-s))/2``.
        """
        s = float(spread)
        base = 0.5 * float(_xlogx(1 + s) + _xlogx(1 - s))
        if h < base - 1e-15:
            raise InputError(f"entropy {h} below the minimum {base:.6g} for spread {s}")
        p = math.exp(-(h - base))
        atoms = [((1 + s) / p, p / 2), ((1 - s) / p, p / 2)]
        if p < 1:
            atoms.append((0.0, 1 - p))
        return cls(tuple(atoms))

    @cached_property
    def values(self) -> np.ndarray:
        return np.array([v for v, _ in self.atoms])

    @cached_property
    def probs(self) -> np.ndarray:
        return np.array([q for _, q in self.atoms])

    @cached_property
    def _cum(self) -> np.ndarray:
        c = np.cumsum(self.probs)
        return c / c[-1]

    @cached_property
    def _biased_cum(self) -> np.ndarray:
        w = self.probs * self.values
        c = np.cumsum(w)
        return c / c[-1]

    def log_from_uniform(self, u):
        idx = np.searchsorted(self._cum, u, side="right")
        idx = np.minimum(idx, len(self.atoms) - 1)
        return _safe_log(self.values)[idx]

    def h_X(self) -> float:
        return float(self.probs @ _xlogx(self.values))

    def sample_size_biased_log(self, rng, size=None):
        idx = np.searchsorted(self._biased_cum, rng.random(size), side="right")
        idx = np.minimum(idx, len(self.atoms) - 1)
        return _safe_log(self.values)[idx]

    def qalpha_parameter(self):
        pos = self.values[(self.values > 0) & (self.probs > 0)]
        if pos.size == 0 or np.ptp(pos) > 0:
            return None
        alpha = math.log(pos[0])
        return alpha if alpha > 0 else None

    def is_identity(self):
        live = self.probs > 0
        return bool(np.all(self.values[live] == 1.0))


@dataclass(frozen=True)
class LogNormal(WeightModel):
    """``log X ~ Normal(-s2/2, s2)``, so ``E X = 1`` and ``h_X = s2/2``."""

    s2: float

    def __post_init__(self):
        if not (self.s2 > 0 and math.isfinite(self.s2)):
            raise InputError(f"log-variance must be > 0, got {self.s2!r}")
        object.__setattr__(self, "s2", float(self.s2))

    def log_from_uniform(self, u):
        return -0.5 * self.s2 + math.sqrt(self.s2) * ndtri(u)

    def sample(self, rng, size=None):
        return np.exp(rng.normal(-0.5 * self.s2, math.sqrt(self.s2), size))

    def h_X(self) -> float:
        return 0.5 * self.s2

    def sample_size_biased_log(self, rng, size=None):
        # exponential tilt by X shifts the Gaussian mean by s2
        return rng.normal(0.5 * self.s2, math.sqrt(self.s2), size)


@dataclass(frozen=True)
class QAlpha(WeightModel):
    """Beta model: ``X = e**alpha`` with probability ``e**-alpha``, else 0."""

    alpha: float

    def __post_init__(self):
        if not (self.alpha > 0 and math.isfinite(self.alpha)):
            raise InputError(f"alpha must be > 0, got {self.alpha!r}")
        object.__setattr__(self, "alpha", float(self.alpha))

    def check_alphabet(self, b: int) -> None:
        if self.alpha > math.log(b) + 1e-12:
            raise InputError(f"alpha {self.alpha:g} exceeds log b = {math.log(b):.6g}")

    def log_from_uniform(self, u):
        return np.where(np.asarray(u) < math.exp(-self.alpha), self.alpha, -np.inf)

    def h_X(self) -> float:
        return self.alpha

    def sample_size_biased_log(self, rng, size=None):
        if size is None:
            return self.alpha
        return np.full(size, self.alpha)

    def qalpha_parameter(self):
        return self.alpha

    def as_discrete(self) -> Discrete:
        return Discrete(((math.exp(self.alpha), math.exp(-self.alpha)), (0.0, 1 - math.exp(-self.alpha))))


def sample_weight(w: WeightModel, rng: np.random.Generator, size=None):
    return w.sample(rng, size)


def h_X(w: WeightModel) -> float:
    """``E(X log X)`` in closed form."""
    return w.h_X()


def sample_size_biased_log_weight(w: WeightModel, rng: np.random.Generator, size=None):
    return w.sample_size_biased_log(rng, size)


# ---------------------------------------------------------------------------
# vector weights


class QAlphaType(NamedTuple):
    alpha: float
    degenerate: bool


@dataclass(frozen=True)
class VectorWeightModel:
    """Discrete law of the sibling vector ``V``; atoms are ``(vector, probability)``."""

    atoms: tuple

    def __post_init__(self):
        pairs = []
        for v, q in self.atoms:
            pairs.append((tuple(float(x) for x in v), float(q)))
        if not pairs:
            raise InputError("vector weight law needs at least one atom")
        if len({len(v) for v, _ in pairs}) != 1 or len(pairs[0][0]) < 2:
            raise InputError("all vector atoms must have the same length >= 2")
        V = np.array([v for v, _ in pairs])
        q = np.array([q for _, q in pairs])
        if np.any(V < 0) or not np.all(np.isfinite(V)):
            raise InputError("vector entries must be finite and >= 0")
        if np.any(q < 0):
            raise InputError("atom probabilities must be >= 0")
        if abs(q.sum() - 1.0) > MEAN_TOL:
            raise InputError(f"atom probabilities sum to {q.sum():.12g}, not 1")
        means = q @ V
        bad = np.nonzero(np.abs(means - 1.0) > MEAN_TOL)[0]
        if bad.size:
            raise InputError(f"coordinate {int(bad[0])} has mean {means[bad[0]]:.12g}, not 1")
        object.__setattr__(self, "atoms", tuple(pairs))

    @classmethod
    def independent(cls, w: WeightModel, b: int) -> "VectorWeightModel":
        """Product law of ``b`` independent coordinates with the discrete law ``w``."""
        if isinstance(w, QAlpha):
            w = w.as_discrete()
        if not isinstance(w, Discrete):
            raise InputError("independent vector laws need a discrete coordinate law")
        atoms = []
        for combo in product(w.atoms, repeat=b):
            atoms.append((tuple(v for v, _ in combo), math.prod(q for _, q in combo)))
        return cls(tuple(atoms))

    @property
    def b(self) -> int:
        return len(self.atoms[0][0])

    @cached_property
    def vectors(self) -> np.ndarray:
        return np.array([v for v, _ in self.atoms])

    @cached_property
    def probs(self) -> np.ndarray:
        return np.array([q for _, q in self.atoms])

    @cached_property
    def _cum(self) -> np.ndarray:
        c = np.cumsum(self.probs)
        return c / c[-1]

    def atom_from_uniform(self, u) -> np.ndarray:
        return np.minimum(np.searchsorted(self._cum, u, side="right"), len(self.atoms) - 1)

    def coordinate_entropies(self) -> np.ndarray:
        """``E(V_j log V_j)`` for each ``j``."""
        return self.probs @ _xlogx(self.vectors)

    def is_identity(self) -> bool:
        live = self.probs > 0
        return bool(np.all(self.vectors[live] == 1.0))


def h_V_nu(v: VectorWeightModel, m: MeasureModel) -> float:
    """``sum_j E(V_j log V_j) nu([j])``."""
    if v.b != m.b:
        raise InputError(f"vector length {v.b} does not match alphabet size {m.b}")
    first = np.array([cylinder_mass(m, (j,)) for j in range(m.b)])
    return float(v.coordinate_entropies() @ first)


def is_Qalpha_type(v: VectorWeightModel, tol: float = 1e-12) -> QAlphaType | None:
    """Common ``alpha`` when every ``V_j`` equals ``e**alpha`` given ``V_j > 0``.

    ``degenerate`` marks the case where almost surely one coordinate equals
    ``b`` and all others vanish.
    """
    live = v.probs > 0
    V = v.vectors[live]
    pos = V[V > 0]
    if pos.size == 0 or np.ptp(pos) > tol * max(1.0, pos.max()):
        return None
    alpha = math.log(pos.mean())
    if alpha <= tol:
        return None
    b = v.b
    one_hot = (np.count_nonzero(V, axis=1) == 1) & (np.abs(V.max(axis=1) - b) <= tol * b)
    return QAlphaType(alpha, bool(np.all(one_hot)))
