"""Geometric applications: Bedford–McMullen carpets and self-similar measures.

A carpet digit is a pair ``(i, k)`` with ``i < b1`` and ``k < b2``; the
measure ``nu`` lives on words over the digit list, so symbol ``d`` stands for
``digits[d]``.  Distances use the anisotropic metric in which a ball of radius
``b1**-n`` fixes ``n`` full digits and then the second coordinate alone up to
position ``ceil(n log b1 / log b2)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import measures as ms
from .analysis import DimensionEstimate, require_regular
from .errors import InputError, PreconditionError
from .spine import sample_spines
from .weights import WeightModel


@dataclass(frozen=True)
class CarpetModel:
    b1: int
    b2: int
    digits: tuple  # ((i, k), ...)
    nu: ms.MeasureModel

    def __post_init__(self):
        if not (int(self.b2) >= 2 and int(self.b1) > int(self.b2)):
            raise InputError(f"need b1 > b2 >= 2, got b1={self.b1}, b2={self.b2}")
        digits = tuple((int(i), int(k)) for i, k in self.digits)
        if len(digits) < 2:
            raise InputError("digit set needs at least 2 pairs")
        if len(set(digits)) != len(digits):
            raise InputError("digit pairs must be distinct")
        for i, k in digits:
            if not (0 <= i < self.b1 and 0 <= k < self.b2):
                raise InputError(f"digit ({i}, {k}) outside {self.b1} x {self.b2} grid")
        if self.nu.b != len(digits):
            raise InputError(f"measure alphabet {self.nu.b} does not match {len(digits)} digits")
        object.__setattr__(self, "digits", digits)

    @property
    def second(self) -> np.ndarray:
        """Second coordinate of each digit."""
        return np.array([k for _, k in self.digits])

    def digit_probs(self) -> np.ndarray:
        if isinstance(self.nu, ms.Uniform):
            return np.full(self.nu.b, 1.0 / self.nu.b)
        if isinstance(self.nu, ms.Bernoulli):
            return np.asarray(self.nu.p)
        raise InputError("digit marginal needs a Uniform or Bernoulli measure")

    def projected_probs(self) -> np.ndarray:
        """Law of the second coordinate under a product ``nu``."""
        return np.bincount(self.second, weights=self.digit_probs(), minlength=self.b2)

    def projected_entropy(self) -> float:
        p = self.projected_probs()
        p = p[p > 0]
        return float(-(p * np.log(p)).sum())


@dataclass(frozen=True)
class CarpetDimension:
    dimension: float
    fibre_dimension: float
    h_nu: float
    h_proj: float


def carpet_dimension(c: CarpetModel, h_X: float, h_proj: float | None = None) -> CarpetDimension:
    """Dimension of the limit measure on the carpet.

    For Markov ``nu`` the projected entropy is hidden-Markov and must be
    supplied as ``h_proj``.
    """
    h_nu = ms.entropy(c.nu)
    if h_proj is None:
        if isinstance(c.nu, ms.Markov):
            raise InputError("Markov digit measures need an externally supplied h_proj")
        h_proj = c.projected_entropy()
    h_proj = float(h_proj)
    if not h_X < h_nu - h_proj:
        raise PreconditionError(
            f"need h_X < h_nu - h_proj; got h_X = {h_X:.6g}, h_nu = {h_nu:.6g}, h_proj = {h_proj:.6g}"
        )
    l1, l2 = math.log(c.b1), math.log(c.b2)
    dim = (h_nu - h_X) / l1 + (1 / l2 - 1 / l1) * h_proj
    return CarpetDimension(dim, h_nu - h_proj - h_X, h_nu, h_proj)


def carpet_local_dim_estimate(
    c: CarpetModel, w: WeightModel, n: int, n_spines: int, rng: np.random.Generator
) -> DimensionEstimate:
    """Spine estimate of the local dimension under the anisotropic metric.

    The approximate ball around a spine point ``z`` is the cylinder ``[z|n]``
    cut down to the second-coordinate fibre of ``z`` at positions
    ``n+1..m``.  Its log-mass is ``log(Y_{z|n} nu([z|n]))`` plus the log
    projected mass of that fibre; the normalised fibre cascade factor is
    ``O(1)`` under the carpet hypothesis and is dropped.
    """
    if not isinstance(c.nu, (ms.Uniform, ms.Bernoulli)):
        raise InputError("carpet local dimension supports Uniform and Bernoulli digit measures only")
    if n < 1:
        raise InputError("depth must be >= 1")
    carpet_dimension(c, w.h_X())  # hypothesis check
    require_regular(c.nu, w)
    m_depth = math.ceil(n * math.log(c.b1) / math.log(c.b2))
    batch = sample_spines(c.nu, w, m_depth, n_spines, rng)
    with np.errstate(divide="ignore"):
        log_p2 = np.log(c.projected_probs())
    fibre = log_p2[c.second[batch.x[:, n:]]].sum(axis=1)
    log_ball = batch.cumulative[:, n - 1] + fibre
    return DimensionEstimate.from_values(-log_ball / (n * math.log(c.b1)), n, "carpet-spine")


def self_similar_dimension(p, r, h_X: float) -> float:
    """``(h_p - h_X) / chi_{p,r}`` with ``chi = -sum p_i log r_i``."""
    p = np.asarray(p, dtype=float)
    r = np.asarray(r, dtype=float)
    if p.shape != r.shape or p.ndim != 1 or p.size < 2:
        raise InputError("p and r must be 1-d of equal length >= 2")
    if np.any(p < 0) or abs(p.sum() - 1) > ms.PROB_TOL:
        raise InputError(f"p must be a probability vector (sums to {p.sum():.12g})")
    if np.any(r <= 0) or np.any(r >= 1):
        raise InputError("contraction ratios must lie in (0, 1)")
    live = p > 0
    h_p = float(-(p[live] * np.log(p[live])).sum())
    if not h_X < h_p:
        raise PreconditionError(f"need h_X < h_p; got h_X = {h_X:.6g}, h_p = {h_p:.6g}")
    chi = float(-(p[live] * np.log(r[live])).sum())
    return (h_p - h_X) / chi
