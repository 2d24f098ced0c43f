"""
Two-Point Distribution

Value b with probability p, value a otherwise.
"""

from fractions import Fraction
from typing import Literal

import numpy as np
from pydantic import Field
from scipy.stats import binom

from ..services.random_stream import RandomStream
from .base import BaseDistribution, as_counts, checked_add, checked_multiply, decimal_fraction, float_counts


class TwoPoint(BaseDistribution):
    type: Literal["two_point"] = "two_point"
    a: int = Field(ge=0)
    b: int = Field(ge=0)
    p: float = Field(ge=0, le=1)

    def mean(self) -> float:
        return self.a * (1.0 - self.p) + self.b * self.p

    def variance(self) -> float:
        gap = float(self.b - self.a)
        return gap * gap * self.p * (1.0 - self.p)

    def mean_exact(self) -> Fraction:
        p = decimal_fraction(self.p)
        return self.a * (1 - p) + self.b * p

    def sample_array(self, stream: RandomStream) -> np.ndarray:
        u = stream.next_draw().uniform()
        return np.where(u < self.p, np.uint64(self.b), np.uint64(self.a)).astype(np.uint64)

    def sample_sum_array(self, counts, stream: RandomStream) -> np.ndarray:
        # binomial thinning: hits ~ Binomial(count, p) summands take value b
        counts = as_counts(counts)
        u = stream.next_draw().uniform()

        if self.p == 0.0:
            hits = np.zeros(counts.shape, dtype=np.uint64)
        elif self.p == 1.0:
            hits = counts.copy()
        else:
            values = np.zeros(counts.shape, dtype=np.float64)
            live = np.flatnonzero(counts > 0)
            if live.size:
                values[live] = binom.ppf(u[live], counts[live].astype(np.float64), self.p)
            hits = float_counts(values, stream)

        low, high = min(self.a, self.b), max(self.a, self.b)
        above = hits if self.b >= self.a else counts - hits
        return checked_add(
            checked_multiply(counts, low, stream),
            checked_multiply(above, high - low, stream),
            stream,
        )
