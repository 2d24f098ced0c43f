"""
Poisson Distribution

Inversion for small means, Hormann's PTRS transformed rejection for large
ones. Both run on counter-addressed uniforms only, so a given stream yields
the same variates on every platform.
"""

import math
from fractions import Fraction
from typing import Literal

import numpy as np
from pydantic import Field, field_validator
from scipy.special import gammaln

from ..services.random_stream import RandomStream, UniformDraw
from .base import FLOAT_COUNT_LIMIT, BaseDistribution, as_counts, decimal_fraction, raise_overflow

INVERSION_MAX_MEAN = 10.0
_INVERSION_MAX_TERMS = 120


def _poisson_inversion(mu: np.ndarray, draw: UniformDraw, where: np.ndarray) -> np.ndarray:
    u = draw.uniform(0, where)
    k = np.zeros(mu.shape, dtype=np.uint64)
    p = np.exp(-mu)
    cdf = p.copy()
    active = np.flatnonzero(u > cdf)
    j = 0
    while active.size and j < _INVERSION_MAX_TERMS:
        j += 1
        p[active] *= mu[active] / j
        cdf[active] += p[active]
        k[active] = j
        active = active[u[active] > cdf[active]]
    return k


def _poisson_ptrs(mu: np.ndarray, draw: UniformDraw, where: np.ndarray) -> np.ndarray:
    slam = np.sqrt(mu)
    loglam = np.log(mu)
    b = 0.931 + 2.53 * slam
    a = -0.059 + 0.02483 * b
    invalpha = 1.1239 + 1.1328 / (b - 3.4)
    vr = 0.9277 - 3.6224 / (b - 2.0)

    out = np.zeros(mu.shape, dtype=np.float64)
    pending = np.arange(mu.size)
    attempt = 0
    while pending.size:
        u, v = draw.pair(attempt, where[pending])
        u = u - 0.5
        us = 0.5 - np.abs(u)
        ap, bp = a[pending], b[pending]
        k = np.floor((2.0 * ap / us + bp) * u + mu[pending] + 0.43)

        accept = (us >= 0.07) & (v <= vr[pending]) & (k >= 0)
        maybe = ~accept & (k >= 0) & ((us >= 0.013) | (v <= us))
        with np.errstate(divide="ignore", invalid="ignore"):
            lhs = np.log(v) + np.log(invalpha[pending]) - np.log(ap / (us * us) + bp)
            rhs = -mu[pending] + k * loglam[pending] - gammaln(k + 1.0)
        accept |= maybe & (lhs <= rhs)

        out[pending[accept]] = k[accept]
        pending = pending[~accept]
        attempt += 1
    return out.astype(np.uint64)


def poisson_variates(mu: np.ndarray, draw: UniformDraw) -> np.ndarray:
    """
    Poisson variates with per-lane means from a single draw.

    Args:
        mu: Nonnegative finite means, one per lane of the draw's stream
        draw: The draw to consume

    Returns:
        np.ndarray: uint64 variates (0 where mu == 0)
    """
    mu = np.asarray(mu, dtype=np.float64)
    out = np.zeros(mu.shape, dtype=np.uint64)

    small = np.flatnonzero((mu > 0) & (mu <= INVERSION_MAX_MEAN))
    large = np.flatnonzero(mu > INVERSION_MAX_MEAN)
    if small.size:
        out[small] = _poisson_inversion(mu[small], draw, small)
    if large.size:
        out[large] = _poisson_ptrs(mu[large], draw, large)
    return out


class Poisson(BaseDistribution):
    """Poisson(lambda) on the nonnegative integers"""

    type: Literal["poisson"] = "poisson"
    lam: float = Field(alias="lambda", gt=0)

    @field_validator("lam")
    @classmethod
    def _finite(cls, v: float) -> float:
        if not math.isfinite(v):
            raise ValueError("lambda must be finite")
        return v

    def mean(self) -> float:
        return self.lam

    def variance(self) -> float:
        return self.lam

    def mean_exact(self) -> Fraction:
        return decimal_fraction(self.lam)

    def sample_array(self, stream: RandomStream) -> np.ndarray:
        return poisson_variates(np.full(stream.size, self.lam), stream.next_draw())

    def sample_sum_array(self, counts, stream: RandomStream) -> np.ndarray:
        # Poisson(lambda) convolved count times is Poisson(count * lambda)
        counts = as_counts(counts)
        mu = counts.astype(np.float64) * self.lam
        bad = mu >= FLOAT_COUNT_LIMIT / 2
        if bad.any():
            raise_overflow(stream, bad, f"Poisson mean {mu[bad][0]:.3e} out of range")
        return poisson_variates(mu, stream.next_draw())
