"""
Base Distribution Interface

Defines the abstract interface that all nonnegative-integer laws (offspring,
immigration, initial value) must implement. Laws are immutable pydantic
models so scenario files validate into them directly and they can be shared
across worker threads.
"""

from abc import ABC, abstractmethod
from fractions import Fraction
from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict

from ..exceptions import PopulationOverflowError
from ..services.random_stream import RandomStream

UINT64_MAX = np.iinfo(np.uint64).max

# float counts at or above this no longer convert to uint64 safely
FLOAT_COUNT_LIMIT = 2.0 ** 63


def as_counts(counts) -> np.ndarray:
    """Validate and convert population counts to uint64"""
    counts = np.atleast_1d(np.asarray(counts))
    if counts.dtype.kind == "i" and counts.size and counts.min() < 0:
        raise ValueError("count must be nonnegative")
    if counts.dtype.kind not in "iu":
        raise ValueError(f"count must be an integer, got dtype {counts.dtype}")
    return counts.astype(np.uint64, copy=False)


def decimal_fraction(value) -> Fraction:
    """Rational read from the shortest decimal form of value (0.1 -> 1/10)"""
    return Fraction(str(value))


def raise_overflow(stream: RandomStream, bad: np.ndarray, detail: str):
    """Raise PopulationOverflowError for the first offending lane"""
    first = int(np.flatnonzero(bad)[0])
    path_index = int(stream.lanes[first]) if first < stream.size else None
    raise PopulationOverflowError(stream.step, path_index, detail)


def checked_multiply(counts: np.ndarray, value: int, stream: RandomStream) -> np.ndarray:
    """counts * value in uint64, never wrapping"""
    value = int(value)
    if value == 0:
        return np.zeros(counts.shape, dtype=np.uint64)
    bad = counts > np.uint64(int(UINT64_MAX) // value)
    if bad.any():
        raise_overflow(stream, bad, f"count x {value} exceeds 64 bits")
    return counts * np.uint64(value)


def checked_add(a: np.ndarray, b: np.ndarray, stream: RandomStream) -> np.ndarray:
    total = a + b
    bad = total < a
    if bad.any():
        raise_overflow(stream, bad, "sum exceeds 64 bits")
    return total


def float_counts(values: np.ndarray, stream: RandomStream) -> np.ndarray:
    """Convert float-valued quantiles to uint64 counts"""
    bad = ~(values < FLOAT_COUNT_LIMIT)
    if bad.any():
        raise_overflow(stream, bad, "sampled count exceeds 64 bits")
    return values.astype(np.uint64)


class BaseDistribution(BaseModel, ABC):
    """
    Abstract base class for all DistributionSpec variants.

    Every sampling call consumes exactly one draw of the stream it is given,
    whatever the variant and whatever the value of count, so that streams
    stay aligned across paths and across fast and naive summation.
    """

    model_config = ConfigDict(frozen=True, populate_by_name=True, extra="forbid")

    type: str

    @abstractmethod
    def mean(self) -> float:
        """Exact analytic mean"""

    @abstractmethod
    def variance(self) -> float:
        """Exact analytic variance"""

    def mean_exact(self) -> Optional[Fraction]:
        """Rational mean of the parameters as written (see decimal_fraction), else None"""
        return None

    @abstractmethod
    def sample_array(self, stream: RandomStream) -> np.ndarray:
        """
        One draw per lane of the stream.

        Args:
            stream: Multi-lane random stream

        Returns:
            np.ndarray: uint64 values, one per lane
        """

    def sample_sum_array(self, counts, stream: RandomStream) -> np.ndarray:
        """
        Per lane, the sum of counts[i] independent draws.

        Variants override this with a closed-form convolution; the default
        is the naive summation.

        Args:
            counts: Nonnegative summand counts, one per lane
            stream: Multi-lane random stream

        Returns:
            np.ndarray: uint64 sums

        Raises:
            PopulationOverflowError: If a sum leaves the 64-bit range
        """
        return self.sample_sum_naive_array(counts, stream)

    def sample_sum_naive_array(self, counts, stream: RandomStream) -> np.ndarray:
        """Sum of counts[i] separate draws, each on its own summand sub-lane"""
        counts = as_counts(counts)
        child, owner = stream.expand(counts)
        totals = np.zeros(counts.shape, dtype=np.uint64)
        if child.size == 0:
            return totals
        draws = self.sample_array(child)
        sums = np.zeros(counts.shape, dtype=np.float64)
        np.add.at(sums, owner, draws.astype(np.float64))
        if (sums >= FLOAT_COUNT_LIMIT).any():
            raise_overflow(stream, sums >= FLOAT_COUNT_LIMIT, "naive sum exceeds 64 bits")
        np.add.at(totals, owner, draws)
        return totals

    def sample(self, stream: RandomStream) -> int:
        return int(self.sample_array(stream)[0])

    def sample_sum(self, count: int, stream: RandomStream) -> int:
        return int(self.sample_sum_array([count], stream)[0])

    def sample_sum_naive(self, count: int, stream: RandomStream) -> int:
        return int(self.sample_sum_naive_array([count], stream)[0])

    def describe(self) -> dict:
        return self.model_dump(by_alias=True)
