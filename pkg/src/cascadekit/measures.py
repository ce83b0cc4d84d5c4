"""Computable probability measures on the symbolic space.

Every non-mixture model compiles to a small deterministic automaton: a state
set, a table ``log_trans[state, j]`` holding ``log nu(j | history)`` and a
table ``next_state[state, j]``.  Uniform and Bernoulli measures have a single
state; an order-``k`` Markov measure has one state per prefix of length
``< k`` (read off the initial law) plus one per ``k``-word.  Mixtures carry one
automaton per component and combine component masses in log space, so a
cylinder mass never goes through linear-space products.

All masses are handled as logs internally; ``cylinder_mass`` exponentiates on
output only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np
from scipy.sparse.csgraph import connected_components
from scipy.special import logsumexp

from .errors import InputError, OutsideSupportError, ResourceGuardError

PROB_TOL = 1e-12
ENUMERATION_GUARD = 2**24
STATIONARY_RESIDUAL = 1e-13


def _as_prob_vector(p, name="probability vector", size=None) -> np.ndarray:
    arr = np.asarray(p, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise InputError(f"{name} must be a non-empty 1-d sequence")
    if size is not None and arr.size != size:
        raise InputError(f"{name} must have length {size}, got {arr.size}")
    if not np.all(np.isfinite(arr)) or np.any(arr < 0):
        raise InputError(f"{name} has negative or non-finite entries")
    total = float(arr.sum())
    if abs(total - 1.0) > PROB_TOL:
        raise InputError(f"{name} sums to {total:.12g}, not 1")
    return arr


def _log(arr) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.log(np.asarray(arr, dtype=float))


@dataclass(frozen=True)
class Automaton:
    """Finite-state description of a measure; the start state is 0."""

    log_trans: np.ndarray  # (S, b)
    next_state: np.ndarray  # (S, b), int

    @property
    def n_states(self) -> int:
        return self.log_trans.shape[0]


class MeasureModel:
    """Base class.  Subclasses provide ``b`` and ``automaton``."""

    b: int

    @property
    def is_mixture(self) -> bool:
        return False

    def components(self) -> list[tuple[float, "MeasureModel"]]:
        return [(1.0, self)]

    @cached_property
    def _compiled(self) -> tuple[np.ndarray, tuple[Automaton, ...]]:
        comps = self.components()
        log_w = np.log(np.array([w for w, _ in comps], dtype=float))
        return log_w, tuple(c.automaton for _, c in comps)


@dataclass(frozen=True, eq=True)
class Uniform(MeasureModel):
    """The uniform measure: mass ``b**-|u|`` on every cylinder."""

    b: int

    def __post_init__(self):
        if not isinstance(self.b, (int, np.integer)) or self.b < 2:
            raise InputError(f"alphabet size must be an integer >= 2, got {self.b!r}")

    @cached_property
    def automaton(self) -> Automaton:
        return Automaton(
            np.full((1, self.b), -math.log(self.b)),
            np.zeros((1, self.b), dtype=np.int64),
        )


@dataclass(frozen=True, eq=True)
class Bernoulli(MeasureModel):
    """Product measure with i.i.d. symbols of law ``p``."""

    p: tuple

    def __post_init__(self):
        arr = _as_prob_vector(self.p, "Bernoulli probability vector")
        if arr.size < 2:
            raise InputError("Bernoulli measure needs at least 2 symbols")
        object.__setattr__(self, "p", tuple(float(x) for x in arr))

    @property
    def b(self) -> int:
        return len(self.p)

    @cached_property
    def automaton(self) -> Automaton:
        return Automaton(_log(self.p)[None, :], np.zeros((1, self.b), dtype=np.int64))


@dataclass(frozen=True, eq=True)
class Markov(MeasureModel):
    """Order-``k`` Markov measure.

    ``initial`` is the law of the first ``k`` symbols, indexed by the base-``b``
    value of the ``k``-word (first symbol most significant).  ``transition`` has
    one row per ``k``-word, giving the law of the next symbol.
    """

    transition: tuple
    initial: tuple
    order: int = 1

    def __post_init__(self):
        if not isinstance(self.order, (int, np.integer)) or self.order < 1:
            raise InputError(f"Markov order must be >= 1, got {self.order!r}")
        P = np.asarray(self.transition, dtype=float)
        if P.ndim != 2 or P.shape[1] < 2:
            raise InputError("transition must be a 2-d table with at least 2 columns")
        b = P.shape[1]
        if P.shape[0] != b**self.order:
            raise InputError(
                f"transition needs {b**self.order} rows for order {self.order}, got {P.shape[0]}"
            )
        for i, row in enumerate(P):
            _as_prob_vector(row, f"transition row {i}")
        init = _as_prob_vector(self.initial, "initial law", size=b**self.order)
        object.__setattr__(self, "transition", tuple(tuple(float(x) for x in r) for r in P))
        object.__setattr__(self, "initial", tuple(float(x) for x in init))

    @classmethod
    def stationary(cls, transition, order: int = 1) -> "Markov":
        """Markov measure started from the stationary law of its ``k``-word chain."""
        P = np.asarray(transition, dtype=float)
        b = P.shape[1]
        pi = _stationary(_word_chain(P, b, order))
        pi = np.clip(pi, 0.0, None)
        return cls(transition=P.tolist(), initial=(pi / pi.sum()).tolist(), order=order)

    @property
    def b(self) -> int:
        return len(self.transition[0])

    @cached_property
    def word_chain(self) -> np.ndarray:
        return _word_chain(np.asarray(self.transition), self.b, self.order)

    @cached_property
    def automaton(self) -> Automaton:
        b, k = self.b, self.order
        P = np.asarray(self.transition)
        init = np.asarray(self.initial)
        offsets = [(b**m - 1) // (b - 1) for m in range(k + 1)]
        n_states = offsets[k] + b**k
        log_trans = np.full((n_states, b), -np.inf)
        next_state = np.zeros((n_states, b), dtype=np.int64)
        # marginal law of the first m symbols
        margs = [init.reshape(b**m, b ** (k - m)).sum(axis=1) for m in range(k + 1)]
        for m in range(k):
            for v in range(b**m):
                for j in range(b):
                    c = v * b + j
                    next_state[offsets[m] + v, j] = offsets[m + 1] + c
                    if margs[m][v] > 0 and margs[m + 1][c] > 0:
                        log_trans[offsets[m] + v, j] = math.log(margs[m + 1][c]) - math.log(margs[m][v])
        full = np.arange(b**k)
        for j in range(b):
            next_state[offsets[k] + full, j] = offsets[k] + (full * b + j) % b**k
        log_trans[offsets[k]:] = _log(P)
        return Automaton(log_trans, next_state)


@dataclass(frozen=True, eq=True)
class Mixture(MeasureModel):
    """Finite convex combination of non-mixture models on a common alphabet."""

    weighted: tuple  # ((w_1, model_1), ...)

    def __post_init__(self):
        pairs = tuple((float(w), m) for w, m in self.weighted)
        if len(pairs) < 1:
            raise InputError("mixture needs at least one component")
        for w, m in pairs:
            if not isinstance(m, MeasureModel):
                raise InputError(f"mixture component {m!r} is not a measure model")
            if m.is_mixture:
                raise InputError("mixtures may not be nested")
            if not w > 0:
                raise InputError(f"mixture weights must be positive, got {w}")
        if len({m.b for _, m in pairs}) != 1:
            raise InputError("mixture components must share the alphabet size")
        total = sum(w for w, _ in pairs)
        if abs(total - 1.0) > PROB_TOL:
            raise InputError(f"mixture weights sum to {total:.12g}, not 1")
        object.__setattr__(self, "weighted", pairs)

    @property
    def b(self) -> int:
        return self.weighted[0][1].b

    @property
    def is_mixture(self) -> bool:
        return True

    def components(self):
        return list(self.weighted)


# ---------------------------------------------------------------------------
# vectorised walking of the automata


def initial_state(m: MeasureModel, count: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """States and per-component log masses of the empty word, for ``count`` copies.

    Returns arrays of shape ``(C, count)``; component log masses start at the
    log mixture weights.
    """
    log_w, autos = m._compiled
    states = np.zeros((len(autos), count), dtype=np.int64)
    comp_log = np.repeat(log_w[:, None], count, axis=1)
    return states, comp_log


def advance(m: MeasureModel, states, comp_log, symbols) -> tuple[np.ndarray, np.ndarray]:
    """Append ``symbols`` (one per node) to each node's history."""
    _, autos = m._compiled
    symbols = np.asarray(symbols, dtype=np.int64)
    new_states = np.empty_like(states)
    new_log = np.empty_like(comp_log)
    for c, a in enumerate(autos):
        new_log[c] = comp_log[c] + a.log_trans[states[c], symbols]
        new_states[c] = a.next_state[states[c], symbols]
    return new_states, new_log


def expand(m: MeasureModel, states, comp_log) -> tuple[np.ndarray, np.ndarray]:
    """All ``b`` children of every node, node-major (child ``i*b + j``)."""
    b = m.b
    n = states.shape[1]
    symbols = np.tile(np.arange(b), n)
    return advance(m, np.repeat(states, b, axis=1), np.repeat(comp_log, b, axis=1), symbols)


def node_log_mass(comp_log) -> np.ndarray:
    if comp_log.shape[0] == 1:
        return comp_log[0]
    return logsumexp(comp_log, axis=0)


def next_log_probs(m: MeasureModel, states, comp_log) -> np.ndarray:
    """``log nu(j | history)`` for each node, shape ``(N, b)``."""
    _, autos = m._compiled
    if len(autos) == 1:
        return autos[0].log_trans[states[0]]
    per_comp = np.stack([comp_log[c][:, None] + a.log_trans[states[c]] for c, a in enumerate(autos)])
    joint = logsumexp(per_comp, axis=0)
    with np.errstate(invalid="ignore"):
        return joint - node_log_mass(comp_log)[:, None]


# ---------------------------------------------------------------------------
# public operations


def _check_word(m: MeasureModel, u) -> np.ndarray:
    arr = np.asarray(tuple(u), dtype=np.int64)
    if arr.size and (arr.min() < 0 or arr.max() >= m.b):
        raise InputError(f"word {tuple(u)} has symbols outside alphabet of size {m.b}")
    return arr


def log_cylinder_mass(m: MeasureModel, u: Sequence[int]) -> float:
    arr = _check_word(m, u)
    if arr.size == 0:
        return 0.0
    states, comp_log = initial_state(m)
    for j in arr:
        states, comp_log = advance(m, states, comp_log, [j])
    return float(node_log_mass(comp_log)[0])


def cylinder_mass(m: MeasureModel, u: Sequence[int]) -> float:
    """Exact ``nu([u])``."""
    return math.exp(log_cylinder_mass(m, u))


def prefix_log_masses(m: MeasureModel, x) -> np.ndarray:
    """``log nu([x|_k])`` for ``k = 1..n``; ``x`` is a word or a ``(count, n)`` array."""
    x = np.asarray(x, dtype=np.int64)
    single = x.ndim == 1
    x = np.atleast_2d(x)
    if x.size and (x.min() < 0 or x.max() >= m.b):
        raise InputError(f"path has symbols outside alphabet of size {m.b}")
    count, n = x.shape
    states, comp_log = initial_state(m, count)
    out = np.empty((count, n))
    for k in range(n):
        states, comp_log = advance(m, states, comp_log, x[:, k])
        out[:, k] = node_log_mass(comp_log)
    return out[0] if single else out


def sample_prefixes(m: MeasureModel, n: int, count: int, rng: np.random.Generator) -> np.ndarray:
    """``count`` independent length-``n`` prefixes, exact sequential conditional sampling."""
    if n < 0:
        raise InputError("depth must be >= 0")
    states, comp_log = initial_state(m, count)
    out = np.empty((count, n), dtype=np.int64)
    for k in range(n):
        probs = np.exp(next_log_probs(m, states, comp_log))
        cum = np.cumsum(probs, axis=1)
        target = rng.random(count) * cum[:, -1]
        j = (target[:, None] >= cum).sum(axis=1)
        out[:, k] = j
        states, comp_log = advance(m, states, comp_log, j)
    return out


def sample_prefix(m: MeasureModel, n: int, rng: np.random.Generator) -> tuple:
    return tuple(int(j) for j in sample_prefixes(m, n, 1, rng)[0])


def local_dimension_trace(m: MeasureModel, x: Sequence[int], n_list: Sequence[int]) -> list[float]:
    """``-log nu([x|_n]) / n`` for each requested ``n``."""
    n_list = [int(n) for n in n_list]
    if not n_list:
        return []
    if min(n_list) < 1:
        raise InputError("depths must be >= 1")
    if len(x) < max(n_list):
        raise InputError(f"word of length {len(x)} is shorter than depth {max(n_list)}")
    lm = prefix_log_masses(m, np.asarray(tuple(x)[: max(n_list)]))
    out = []
    for n in n_list:
        if not np.isfinite(lm[n - 1]):
            raise OutsideSupportError(f"point outside support: nu([x|_{n}]) = 0")
        out.append(-float(lm[n - 1]) / n)
    return out


def _word_chain(P: np.ndarray, b: int, order: int) -> np.ndarray:
    K = np.zeros((b**order, b**order))
    w = np.arange(b**order)
    for j in range(b):
        K[w, (w * b + j) % b**order] += P[:, j]
    return K


def _stationary(K: np.ndarray, max_iter: int = 2_000_000) -> np.ndarray:
    # lazy chain (I + K)/2: same fixed point, no periodicity trouble
    pi = np.full(K.shape[0], 1.0 / K.shape[0])
    for _ in range(max_iter):
        nxt = 0.5 * (pi + pi @ K)
        nxt /= nxt.sum()
        if np.abs(nxt @ K - nxt).sum() < STATIONARY_RESIDUAL:
            return nxt
        pi = nxt
    raise ArithmeticError("stationary distribution did not converge")


def _closed_classes(K: np.ndarray) -> int:
    n_comp, labels = connected_components(K > 0, directed=True, connection="strong")
    leaves = np.ones(n_comp, dtype=bool)
    src, dst = np.nonzero(K > 0)
    leaves[labels[src][labels[src] != labels[dst]]] = False
    return int(leaves.sum())


def stationary_word_law(m: Markov) -> np.ndarray:
    """Stationary law of the ``k``-word chain of an ergodic Markov measure."""
    if _closed_classes(m.word_chain) != 1:
        raise InputError("Markov chain has several closed classes; the measure is not ergodic")
    return _stationary(m.word_chain)


def entropy(m: MeasureModel) -> float:
    """Entropy rate in nats."""
    if m.is_mixture:
        raise InputError("entropy undefined for non-ergodic mixture; query components")
    if isinstance(m, Uniform):
        return math.log(m.b)
    if isinstance(m, Bernoulli):
        p = np.asarray(m.p)
        p = p[p > 0]
        return float(-(p * np.log(p)).sum())
    if isinstance(m, Markov):
        pi = stationary_word_law(m)
        P = np.asarray(m.transition)
        with np.errstate(divide="ignore", invalid="ignore"):
            plogp = np.where(P > 0, P * np.log(np.where(P > 0, P, 1.0)), 0.0)
        return float(-(pi[:, None] * plogp).sum())
    raise InputError(f"entropy not available for {type(m).__name__}")


def _moment_matrix(a: Automaton, q: float) -> np.ndarray:
    S, b = a.log_trans.shape
    M = np.zeros((S, S))
    fin = np.isfinite(a.log_trans)
    weights = np.where(fin, np.exp(q * np.where(fin, a.log_trans, 0.0)), 0.0)
    for j in range(b):
        np.add.at(M, (np.arange(S), a.next_state[:, j]), weights[:, j])
    return M


def enumerate_log_masses(m: MeasureModel, n: int, guard: int = ENUMERATION_GUARD) -> np.ndarray:
    """Log masses of all ``b**n`` words of length ``n``, lexicographic order."""
    if m.b**n > guard:
        raise ResourceGuardError(f"enumeration of {m.b}**{n} words exceeds guard {guard}", "depth")
    states, comp_log = initial_state(m)
    for _ in range(n):
        states, comp_log = expand(m, states, comp_log)
    return node_log_mass(comp_log)


def log_moment_sums(m: MeasureModel, q: float, n_max: int, guard: int = ENUMERATION_GUARD) -> np.ndarray:
    """``log sum_{|u|=n} nu([u])**q`` for ``n = 0..n_max``.

    Zero-mass words are excluded, so ``q = 0`` counts the support.  Closed form
    for Uniform and Bernoulli, transfer-matrix iteration for Markov, guarded
    enumeration for mixtures.
    """
    if q < 0:
        raise InputError("q must be >= 0")
    ns = np.arange(n_max + 1)
    if isinstance(m, Uniform):
        return ns * (1.0 - q) * math.log(m.b)
    if isinstance(m, Bernoulli):
        p = np.asarray(m.p)
        p = p[p > 0]
        return ns * math.log(float((p**q).sum()))
    if isinstance(m, Markov):
        M = _moment_matrix(m.automaton, q)
        v = np.zeros(M.shape[0])
        v[0] = 1.0
        out = np.zeros(n_max + 1)
        log_scale = 0.0
        for n in range(1, n_max + 1):
            v = v @ M
            s = v.sum()
            if s == 0:
                out[n:] = -np.inf
                break
            log_scale += math.log(s)
            v /= s
            out[n] = log_scale
        return out
    if m.b**n_max > guard:
        raise ResourceGuardError(f"enumeration of {m.b}**{n_max} words exceeds guard {guard}", "depth")
    out = np.zeros(n_max + 1)
    states, comp_log = initial_state(m)
    for n in range(1, n_max + 1):
        states, comp_log = expand(m, states, comp_log)
        lm = node_log_mass(comp_log)
        keep = np.isfinite(lm)
        states, comp_log, lm = states[:, keep], comp_log[:, keep], lm[keep]
        out[n] = logsumexp(q * lm)
    return out


def lq_sum(m: MeasureModel, q: float, n: int, guard: int = ENUMERATION_GUARD) -> float:
    """Finite-``n`` approximant ``-(1/n) log sum_{|u|=n} nu([u])**q`` of the L^q spectrum."""
    if n < 1:
        raise InputError("depth must be >= 1")
    if q < 0:
        raise InputError("q must be >= 0")
    if q == 1:
        return 0.0
    return -float(log_moment_sums(m, q, n, guard)[n]) / n
