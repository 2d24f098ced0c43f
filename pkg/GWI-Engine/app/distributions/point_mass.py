"""
Point Mass Distribution
"""

from fractions import Fraction
from typing import Literal

import numpy as np
from pydantic import Field

from ..services.random_stream import RandomStream
from .base import BaseDistribution, as_counts, checked_multiply


class PointMass(BaseDistribution):
    """Degenerate law at c"""

    type: Literal["point_mass"] = "point_mass"
    c: int = Field(ge=0)

    def mean(self) -> float:
        return float(self.c)

    def variance(self) -> float:
        return 0.0

    def mean_exact(self) -> Fraction:
        return Fraction(self.c)

    def sample_array(self, stream: RandomStream) -> np.ndarray:
        stream.next_draw()
        return np.full(stream.size, self.c, dtype=np.uint64)

    def sample_sum_array(self, counts, stream: RandomStream) -> np.ndarray:
        counts = as_counts(counts)
        stream.next_draw()
        return checked_multiply(counts, self.c, stream)
