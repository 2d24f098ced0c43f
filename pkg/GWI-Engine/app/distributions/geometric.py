"""
Geometric Distribution

Failures before the first success: P(k) = (1 - p)^k p on {0, 1, 2, ...}.
"""

from fractions import Fraction
from typing import Literal

import numpy as np
from pydantic import Field
from scipy.stats import nbinom

from ..services.random_stream import RandomStream
from .base import BaseDistribution, as_counts, decimal_fraction, float_counts


class Geometric(BaseDistribution):
    type: Literal["geometric"] = "geometric"
    p: float = Field(gt=0, le=1)

    def mean(self) -> float:
        return (1.0 - self.p) / self.p

    def variance(self) -> float:
        return (1.0 - self.p) / (self.p * self.p)

    def mean_exact(self) -> Fraction:
        p = decimal_fraction(self.p)
        return (1 - p) / p

    def sample_array(self, stream: RandomStream) -> np.ndarray:
        u = stream.next_draw().uniform()
        if self.p == 1.0:
            return np.zeros(stream.size, dtype=np.uint64)
        return float_counts(np.floor(np.log(u) / np.log1p(-self.p)), stream)

    def sample_sum_array(self, counts, stream: RandomStream) -> np.ndarray:
        # sum of count geometrics is negative binomial(count, p)
        counts = as_counts(counts)
        u = stream.next_draw().uniform()
        values = np.zeros(counts.shape, dtype=np.float64)
        live = np.flatnonzero(counts > 0)
        if self.p < 1.0 and live.size:
            values[live] = nbinom.ppf(u[live], counts[live].astype(np.float64), self.p)
        return float_counts(values, stream)
