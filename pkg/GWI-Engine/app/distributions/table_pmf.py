"""
Tabulated Probability Mass Function

A finite list of (value, probability) atoms. Single draws use Vose's alias
table, built once at construction; sums draw the atom multiplicities as a
multinomial by sequential conditional binomials.
"""

import logging
from typing import List, Literal, Tuple

import numpy as np
from pydantic import PrivateAttr, field_validator
from scipy.stats import binom

from ..services.random_stream import RandomStream
from .base import BaseDistribution, as_counts, checked_add, checked_multiply, float_counts

logger = logging.getLogger(__name__)

NORMALIZATION_TOLERANCE = 1e-12


def build_alias_table(probs: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Vose's alias method.

    Args:
        probs: Atom probabilities summing to 1

    Returns:
        tuple: (acceptance probability per column, alias column per column)
    """
    m = probs.size
    scaled = probs * m
    accept = np.ones(m, dtype=np.float64)
    alias = np.arange(m, dtype=np.int64)

    small = [i for i in range(m) if scaled[i] < 1.0]
    large = [i for i in range(m) if scaled[i] >= 1.0]
    while small and large:
        s = small.pop()
        g = large.pop()
        accept[s] = scaled[s]
        alias[s] = g
        scaled[g] = scaled[g] + scaled[s] - 1.0
        (small if scaled[g] < 1.0 else large).append(g)
    # leftovers are 1 up to rounding
    return accept, alias


class TablePMF(BaseDistribution):
    type: Literal["table_pmf"] = "table_pmf"
    probabilities: List[Tuple[int, float]]

    _values: np.ndarray = PrivateAttr()
    _probs: np.ndarray = PrivateAttr()
    _accept: np.ndarray = PrivateAttr()
    _alias: np.ndarray = PrivateAttr()

    @field_validator("probabilities")
    @classmethod
    def _validate_atoms(cls, atoms):
        if not atoms:
            raise ValueError("table_pmf needs at least one atom")
        for value, prob in atoms:
            if value < 0:
                raise ValueError(f"atom value must be nonnegative, got {value}")
            if not 0.0 <= prob <= 1.0:
                raise ValueError(f"atom probability must lie in [0, 1], got {prob}")
        total = sum(prob for _, prob in atoms)
        if abs(total - 1.0) > NORMALIZATION_TOLERANCE:
            raise ValueError(f"probabilities sum to {total!r}, not 1 within {NORMALIZATION_TOLERANCE}")
        return atoms

    def model_post_init(self, __context) -> None:
        self._values = np.array([v for v, _ in self.probabilities], dtype=np.uint64)
        self._probs = np.array([p for _, p in self.probabilities], dtype=np.float64)
        self._accept, self._alias = build_alias_table(self._probs)
        logger.debug(f"Alias table built for {len(self.probabilities)} atoms")

    def mean(self) -> float:
        return float(np.dot(self._values.astype(np.float64), self._probs))

    def variance(self) -> float:
        values = self._values.astype(np.float64)
        mu = float(np.dot(values, self._probs))
        return max(float(np.dot((values - mu) ** 2, self._probs)), 0.0)

    def sample_array(self, stream: RandomStream) -> np.ndarray:
        u = stream.next_draw().uniform()
        scaled = u * self._values.size
        column = np.minimum(scaled.astype(np.int64), self._values.size - 1)
        keep = (scaled - column) < self._accept[column]
        return np.where(keep, self._values[column], self._values[self._alias[column]])

    def sample_sum_array(self, counts, stream: RandomStream) -> np.ndarray:
        counts = as_counts(counts)
        draw = stream.next_draw()
        remaining = counts.copy()
        total = np.zeros(counts.shape, dtype=np.uint64)
        mass_left = 1.0
        last = self._values.size - 1

        for j in range(self._values.size):
            pj = float(self._probs[j])
            if j == last or mass_left <= pj:
                taken = remaining.copy()
            else:
                q = pj / mass_left
                values = np.zeros(counts.shape, dtype=np.float64)
                live = np.flatnonzero(remaining > 0)
                if live.size and q > 0.0:
                    u = draw.uniform(j, live)
                    values[live] = binom.ppf(u, remaining[live].astype(np.float64), q)
                taken = np.minimum(float_counts(values, stream), remaining)
            total = checked_add(total, checked_multiply(taken, int(self._values[j]), stream), stream)
            remaining = remaining - taken
            mass_left -= pj
            if not remaining.any():
                break
        return total
