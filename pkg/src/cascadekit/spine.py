"""Spine sampling under the size-biased measure.

Under i.i.d. weights the spine point ``x`` has law ``nu`` and the spine
log-weights ``U_k`` are i.i.d. with the size-biased law of ``log X``, so the
two are drawn independently.  Under vector weights the tilt couples the two:
at each step the pair (atom ``a``, next symbol ``j``) is drawn with weight
``q_a * v_a[j] * nu(j | history)`` and ``U = log v_a[j]``.

Also here: the ``L`` and ``S`` statistics, the random-walk/Birkhoff split of
the cumulative log-mass, and the regularity classifier.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from . import measures as ms
from .errors import InputError, NullPathError
from .weights import QAlpha, VectorWeightModel, WeightModel, h_V_nu, is_Qalpha_type


@dataclass(frozen=True)
class SpineSample:
    """One spine of depth ``n``; index ``k`` holds depth ``k + 1``."""

    x: tuple
    spine_log_weights: np.ndarray
    log_masses: np.ndarray
    cumulative: np.ndarray

    @property
    def depth(self) -> int:
        return len(self.x)


@dataclass(frozen=True)
class SpineBatch:
    """``count`` spines stored row-wise; arrays have shape ``(count, n)``."""

    x: np.ndarray
    spine_log_weights: np.ndarray
    log_masses: np.ndarray

    @property
    def cumulative(self) -> np.ndarray:
        return np.cumsum(self.spine_log_weights, axis=1) + self.log_masses

    def __len__(self):
        return self.x.shape[0]

    def __getitem__(self, i) -> SpineSample:
        return SpineSample(
            tuple(int(j) for j in self.x[i]),
            self.spine_log_weights[i].copy(),
            self.log_masses[i].copy(),
            self.cumulative[i],
        )


def _m1_batch(m, w: WeightModel, n, count, rng) -> SpineBatch:
    x = ms.sample_prefixes(m, n, count, rng)
    U = np.asarray(w.sample_size_biased_log(rng, (count, n)), dtype=float)
    return SpineBatch(x, U, ms.prefix_log_masses(m, x).reshape(count, n))


def _m2_batch(m, v: VectorWeightModel, n, count, rng) -> SpineBatch:
    if v.b != m.b:
        raise InputError(f"vector length {v.b} does not match alphabet size {m.b}")
    b = m.b
    A = len(v.atoms)
    # joint weights q_a v_a[j], flattened as a*b + j
    with np.errstate(divide="ignore"):
        log_qv = (np.log(v.probs)[:, None] + np.log(v.vectors)).ravel()
        log_v = np.log(v.vectors).ravel()
    states, comp_log = ms.initial_state(m, count)
    x = np.empty((count, n), dtype=np.int64)
    U = np.empty((count, n))
    for k in range(n):
        lp = ms.next_log_probs(m, states, comp_log)  # (count, b)
        joint = log_qv[None, :] + np.tile(lp, (1, A))
        with np.errstate(invalid="ignore"):
            probs = np.exp(joint - joint.max(axis=1, keepdims=True))
        probs = np.nan_to_num(probs, nan=0.0)
        cum = np.cumsum(probs, axis=1)
        if np.any(cum[:, -1] <= 0):
            raise NullPathError(f"all tilted transition mass vanishes at depth {k + 1}")
        pick = (rng.random(count)[:, None] * cum[:, -1:] >= cum).sum(axis=1)
        j = pick % b
        x[:, k] = j
        U[:, k] = log_v[pick]
        states, comp_log = ms.advance(m, states, comp_log, j)
    return SpineBatch(x, U, ms.prefix_log_masses(m, x).reshape(count, n))


def sample_spines(m: ms.MeasureModel, w, n: int, count: int, rng: np.random.Generator) -> SpineBatch:
    """``count`` independent spines of depth ``n``."""
    if n < 1:
        raise InputError("spine depth must be >= 1")
    if count < 1:
        raise InputError("count must be >= 1")
    if isinstance(w, VectorWeightModel):
        return _m2_batch(m, w, n, count, rng)
    if isinstance(w, WeightModel):
        if isinstance(w, QAlpha):
            w.check_alphabet(m.b)
        return _m1_batch(m, w, n, count, rng)
    raise InputError(f"unsupported weight law {w!r}")


def sample_spine(m: ms.MeasureModel, w, n: int, rng: np.random.Generator) -> SpineSample:
    return sample_spines(m, w, n, 1, rng)[0]


# ---------------------------------------------------------------------------
# statistics


def _cum(s, depth):
    c = np.asarray(s.cumulative, dtype=float)
    if depth is not None:
        if depth < 0 or depth > c.shape[-1]:
            raise InputError(f"depth {depth} outside 0..{c.shape[-1]}")
        c = c[..., :depth]
    return c


def log_L_statistic(s, depth: int | None = None):
    """``log L`` truncated at ``depth``; works on a sample or a batch (row-wise)."""
    c = _cum(s, depth)
    if c.shape[-1] == 0:
        return np.zeros(c.shape[:-1]) if c.ndim > 1 else 0.0
    out = np.maximum(0.0, c.max(axis=-1))
    return out if c.ndim > 1 else float(out)


def L_statistic(s, depth: int | None = None):
    """``max(1, max_k Y_{x|k} nu([x|k]))`` over ``k <= depth``."""
    with np.errstate(over="ignore"):
        return np.exp(log_L_statistic(s, depth))


def log_S_statistic(s, depth: int | None = None):
    c = _cum(s, depth)
    pad = np.zeros(c.shape[:-1] + (1,))
    out = logsumexp(np.concatenate([pad, c], axis=-1), axis=-1)
    return out if c.ndim > 1 else float(out)


def S_statistic(s, depth: int | None = None):
    """``sum_{k=0}^{depth} Y_{x|k} nu([x|k])`` with the ``k = 0`` term equal to 1."""
    c = _cum(s, depth)
    if c.size == 0 or np.max(c) < 700:
        # direct sum keeps integer-valued cases exact
        out = 1.0 + np.exp(c).sum(axis=-1)
    else:
        with np.errstate(over="ignore"):
            out = np.exp(log_S_statistic(s, depth))
    return out if c.ndim > 1 else float(out)


def walk_trace(s, h_ref: float) -> tuple[np.ndarray, np.ndarray]:
    """Split ``cumulative`` into ``sum (U_k - h_ref)`` and ``k h_ref + log nu([x|k])``."""
    if not math.isfinite(h_ref):
        raise InputError("h_ref must be finite")
    U = np.asarray(s.spine_log_weights, dtype=float)
    k = np.arange(1, U.shape[-1] + 1)
    walk = np.cumsum(U - h_ref, axis=-1)
    birkhoff = k * h_ref + np.asarray(s.log_masses, dtype=float)
    return walk, birkhoff


# ---------------------------------------------------------------------------
# classifier


class Verdict(enum.Enum):
    REGULAR = "Regular"
    SINGULAR = "Singular"
    CRITICAL_SINGULAR = "CriticalSingular"
    UNDETERMINED = "Undetermined"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class Classification:
    verdict: Verdict
    h_weight: float
    h_measure: float
    eps: float
    reason: str = ""


def _gibbs_class(m: ms.MeasureModel) -> bool:
    """Finite-memory Gibbs class with a single ergodic component."""
    if isinstance(m, (ms.Uniform, ms.Bernoulli)):
        return True
    if isinstance(m, ms.Markov):
        return ms._closed_classes(m.word_chain) == 1
    return False


def _g_tilde(m: ms.MeasureModel, h_nu: float, tol: float = 1e-9) -> bool:
    """Either ``nu`` is uniform, or its potential is not cohomologous to a constant.

    A finite-memory potential is cohomologous to a constant exactly when the
    q = 2 moment exponent reaches its upper bound ``h_nu``; otherwise the
    exponent sits strictly below it.
    """
    if isinstance(m, ms.Uniform):
        return True
    if isinstance(m, ms.Bernoulli) and np.allclose(m.p, 1.0 / m.b, atol=0, rtol=1e-12):
        return True
    M = ms._moment_matrix(m.automaton, 2.0)
    rho = float(np.max(np.abs(np.linalg.eigvals(M))))
    tau2 = -math.log(rho)
    return tau2 < h_nu - tol


def classify_regularity(
    m: ms.MeasureModel,
    w,
    eps: float = 1e-9,
    h_measure: float | None = None,
    h_measure_se: float | None = None,
) -> Classification:
    """Regular / Singular by comparing ``h_X`` (or ``h_{V,nu}``) with ``h_nu``.

    Pass ``h_measure`` and ``h_measure_se`` when the entropy is an estimate;
    the tie band is then widened to three standard errors.
    """
    if m.is_mixture:
        raise InputError("mixture measures have no single verdict; classify each component")
    if not eps > 0:
        raise InputError("eps must be > 0")
    if h_measure is None:
        h_nu = ms.entropy(m)
    else:
        h_nu = float(h_measure)
        if h_measure_se is not None:
            eps = max(eps, 3.0 * float(h_measure_se))
    if isinstance(w, VectorWeightModel):
        h_w = h_V_nu(w, m)
        identity = w.is_identity()
        qa = is_Qalpha_type(w)
        alpha = qa.alpha if qa else None
        degenerate = bool(qa and qa.degenerate)
    else:
        h_w = w.h_X()
        identity = w.is_identity()
        alpha = w.qalpha_parameter()
        degenerate = False

    def out(v, why=""):
        return Classification(v, h_w, h_nu, eps, why)

    if identity:
        return out(Verdict.REGULAR, "identity cascade")
    if h_w < h_nu - eps:
        return out(Verdict.REGULAR)
    if h_w > h_nu + eps:
        return out(Verdict.SINGULAR)
    if not _gibbs_class(m):
        return out(Verdict.UNDETERMINED, "measure outside the ergodic finite-memory class")
    if degenerate:
        return out(Verdict.UNDETERMINED, "degenerate one-hot vector law")
    if alpha is not None and abs(alpha - h_nu) <= eps and not _g_tilde(m, h_nu):
        return out(Verdict.UNDETERMINED, "Q_alpha at alpha = h_nu without fluctuation condition")
    return out(Verdict.CRITICAL_SINGULAR)
