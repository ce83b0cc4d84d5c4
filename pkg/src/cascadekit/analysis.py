"""Dimension of the limit measure, Riesz energies, and the bounds check.

The dimension estimator reads ``-log(Y_{x|n} nu([x|n])) / n`` off size-biased
spines: the spine point is typical for the limit measure, and the missing
subtree factor ``log Z^{(x|n)}`` is ``o(n)`` in the regular regime.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import measures as ms
from .errors import InputError, PreconditionError
from .spine import Verdict, classify_regularity, sample_spines
from .weights import VectorWeightModel


@dataclass(frozen=True)
class DimensionEstimate:
    point_estimate: float
    stderr: float
    depth: int
    samples: int
    method: str
    values: np.ndarray = field(repr=False, compare=False, default=None)

    @classmethod
    def from_values(cls, values, depth, method):
        values = np.asarray(values, dtype=float)
        se = float(values.std(ddof=1) / math.sqrt(values.size)) if values.size > 1 else 0.0
        return cls(float(values.mean()), se, int(depth), int(values.size), method, values)


def _weight_entropy(w, m) -> float:
    if isinstance(w, VectorWeightModel):
        from .weights import h_V_nu

        return h_V_nu(w, m)
    return w.h_X()


def require_regular(m: ms.MeasureModel, w) -> None:
    """Raise :class:`PreconditionError` unless every ergodic component is regular."""
    for _, comp in m.components():
        c = classify_regularity(comp, w)
        if c.verdict is not Verdict.REGULAR:
            raise PreconditionError(
                f"pair is {c.verdict} (h_weight = {c.h_weight:.6g}, h_measure = {c.h_measure:.6g}); "
                "dimension estimates need the regular regime"
            )


def limit_dimension_profile(m, w, depths, n_spines: int, rng) -> list[DimensionEstimate]:
    """Spine estimates at several depths, all read from the same spines."""
    depths = sorted(int(d) for d in depths)
    if not depths or depths[0] < 1:
        raise InputError("depths must be >= 1")
    require_regular(m, w)
    batch = sample_spines(m, w, depths[-1], n_spines, rng)
    cum = batch.cumulative
    return [DimensionEstimate.from_values(-cum[:, d - 1] / d, d, "spine") for d in depths]


def estimate_limit_dimension(m, w, n: int, n_spines: int, rng) -> DimensionEstimate:
    """Mean over spines of ``-cumulative[n] / n``, with its standard error."""
    return limit_dimension_profile(m, w, [n], n_spines, rng)[0]


def riesz_energy_partial(m: ms.MeasureModel, alpha: float, n_max: int, guard: int = ms.ENUMERATION_GUARD) -> np.ndarray:
    """Partial sums ``E_1..E_{n_max}`` of ``sum_n e^{n alpha} (m_{n-1} - m_n)``.

    ``m_n = sum_{|u|=n} nu([u])**2`` comes from the transfer matrix (exact) or,
    for mixtures, from guarded enumeration.
    """
    if not alpha > 0:
        raise InputError("alpha must be > 0")
    if n_max < 1:
        raise InputError("n_max must be >= 1")
    n = np.arange(1, n_max + 1)
    if isinstance(m, ms.Uniform):
        # e^{n alpha} b^{-(n-1)} (1 - 1/b)
        log_terms = n * (alpha - math.log(m.b)) + math.log(m.b - 1)
    else:
        lm = ms.log_moment_sums(m, 2.0, n_max, guard)
        with np.errstate(divide="ignore", invalid="ignore"):
            gap = lm[:-1] + np.log1p(-np.exp(lm[1:] - lm[:-1]))
        gap = np.where(np.isnan(gap), -np.inf, gap)
        log_terms = n * alpha + gap
    with np.errstate(over="ignore"):
        return np.cumsum(np.exp(log_terms))


@dataclass(frozen=True)
class BoundsReport:
    estimate: DimensionEstimate
    lower: float
    upper: float
    tol: float
    passed: bool
    targets: tuple = ()  # per-component D_i - h
    weights: tuple = ()
    cluster_fractions: tuple = ()


def dimension_bounds_check(m, w, n: int, n_spines: int, rng, tol: float = 0.05) -> BoundsReport:
    """Compare the spine estimate with ``[D_lower - h, D_upper - h]``.

    For a mixture each spine is assigned to the nearest component target and
    the cluster fractions must match the mixture weights within 4 SE.
    """
    est = estimate_limit_dimension(m, w, n, n_spines, rng)
    h = _weight_entropy(w, m)
    comps = m.components()
    targets = np.array([ms.entropy(c) - h for _, c in comps])
    lo, hi = float(targets.min()), float(targets.max())
    if not m.is_mixture:
        passed = abs(est.point_estimate - lo) <= tol
        return BoundsReport(est, lo, hi, tol, bool(passed), tuple(targets), (1.0,))
    wts = np.array([wt for wt, _ in comps])
    nearest = np.abs(est.values[:, None] - targets[None, :]).argmin(axis=1)
    frac = np.bincount(nearest, minlength=len(comps)) / est.samples
    se = np.sqrt(wts * (1 - wts) / est.samples)
    in_range = lo - tol <= est.point_estimate <= hi + tol
    passed = bool(in_range and np.all(np.abs(frac - wts) <= 4 * se + 1e-12))
    return BoundsReport(est, lo, hi, tol, passed, tuple(targets), tuple(wts), tuple(frac))
