"""
Counter-Based Random Streams

Every random number in the engine is a pure function of its address:

    (master_seed; lane, summand, domain, step, draw, attempt)

where a lane is a path index, step a generation (or time step), draw the
ordinal of the sampling call within that step, and attempt the rejection
round inside one call. Values are produced by Philox-4x32-10 evaluated with
numpy over whole arrays of lanes, so a block of paths is simulated at once
while any single path can still be regenerated on its own, bit for bit,
whatever the block layout or worker count.
"""

import logging
from enum import IntEnum
from typing import Optional, Tuple

import numpy as np

logger = logging.getLogger(__name__)

# Philox-4x32 multipliers and Weyl key increments
_PHILOX_M0 = np.uint64(0xD2511F53)
_PHILOX_M1 = np.uint64(0xCD9E8D57)
_PHILOX_W0 = np.uint64(0x9E3779B9)
_PHILOX_W1 = np.uint64(0xBB67AE85)
_PHILOX_ROUNDS = 10

_MASK32 = np.uint64(0xFFFFFFFF)
_MASK8 = np.uint64(0xFF)
_SHIFT8 = np.uint64(8)
_SHIFT11 = np.uint64(11)
_SHIFT16 = np.uint64(16)
_SHIFT24 = np.uint64(24)
_SHIFT32 = np.uint64(32)

_TWO_POW_M53 = 2.0 ** -53

MAX_LANE = 2 ** 40 - 1
MAX_FIELD16 = 2 ** 16 - 1
MAX_STEP = 2 ** 32 - 1
MAX_SEED = 2 ** 64 - 1


class StreamDomain(IntEnum):
    """Separates counter spaces of independent consumers"""
    SCALAR = 0
    GALTON_WATSON = 1
    EULER_DIFFUSION = 2
    EXACT_DIFFUSION = 3


def philox4x32(c0, c1, c2, c3, k0, k1):
    """
    Philox-4x32-10 block function over uint64 arrays holding 32-bit words.

    Args:
        c0, c1, c2, c3: Counter words (arrays or scalars, values < 2**32)
        k0, k1: Key words (np.uint64 scalars, values < 2**32)

    Returns:
        tuple: Four output words, each < 2**32
    """
    for _ in range(_PHILOX_ROUNDS):
        p0 = _PHILOX_M0 * c0
        p1 = _PHILOX_M1 * c2
        hi0, lo0 = p0 >> _SHIFT32, p0 & _MASK32
        hi1, lo1 = p1 >> _SHIFT32, p1 & _MASK32
        c0, c1, c2, c3 = hi1 ^ c1 ^ k0, lo1, hi0 ^ c3 ^ k1, lo0
        k0 = (k0 + _PHILOX_W0) & _MASK32
        k1 = (k1 + _PHILOX_W1) & _MASK32
    return c0, c1, c2, c3


def _words_to_unit(hi: np.ndarray, lo: np.ndarray) -> np.ndarray:
    """53 random bits mapped to the open interval (0, 1)"""
    bits = ((hi << _SHIFT32) | lo) >> _SHIFT11
    return (bits.astype(np.float64) + 0.5) * _TWO_POW_M53


class UniformDraw:
    """
    One sampling call's slice of a stream.

    A sampler receives a draw, asks for as many rejection attempts as it
    needs and never touches another call's numbers.
    """

    __slots__ = ("stream", "index")

    def __init__(self, stream: "RandomStream", index: int):
        self.stream = stream
        self.index = index

    def pair(self, attempt: int = 0, where=None) -> Tuple[np.ndarray, np.ndarray]:
        """
        Two independent uniforms per selected lane.

        Args:
            attempt: Rejection round (0..65535)
            where: Optional index array or boolean mask over the stream's lanes

        Returns:
            tuple: (u, v) arrays in (0, 1)
        """
        if not 0 <= attempt <= MAX_FIELD16:
            raise RuntimeError(f"Rejection sampler exhausted {MAX_FIELD16 + 1} attempts")
        w0, w1, w2, w3 = self.stream._block(self.index, attempt, where)
        return _words_to_unit(w0, w1), _words_to_unit(w2, w3)

    def uniform(self, attempt: int = 0, where=None) -> np.ndarray:
        return self.pair(attempt, where)[0]

    def normal(self, attempt: int = 0, where=None) -> np.ndarray:
        """Standard normals by the Box-Muller transform (cosine branch)"""
        u, v = self.pair(attempt, where)
        return np.sqrt(-2.0 * np.log(u)) * np.cos(2.0 * np.pi * v)


class RandomStream:
    """
    A set of lanes positioned at one step of a counter-addressed stream.

    Each call to next_draw() hands out the next draw ordinal, so repeated
    sampling calls on one stream give fresh numbers while consuming a fixed
    amount of counter space per call. A scalar stream is the one-lane case.
    """

    def __init__(
        self,
        master_seed: int,
        lanes=None,
        domain: StreamDomain = StreamDomain.SCALAR,
        step: int = 0,
        summands: Optional[np.ndarray] = None,
        cursor: int = 0,
    ):
        if not 0 <= int(master_seed) <= MAX_SEED:
            raise ValueError(f"master_seed must be a 64-bit unsigned integer, got {master_seed}")
        if not 0 <= step <= MAX_STEP:
            raise ValueError(f"step out of range: {step}")

        lanes = np.zeros(1, dtype=np.uint64) if lanes is None else np.atleast_1d(np.asarray(lanes))
        if lanes.dtype.kind == "i" and lanes.size and lanes.min() < 0:
            raise ValueError("lane indices must be non-negative")
        lanes = lanes.astype(np.uint64, copy=False).ravel()
        if lanes.size and int(lanes.max()) > MAX_LANE:
            raise ValueError(f"lane index exceeds {MAX_LANE}")

        self.master_seed = int(master_seed)
        self.lanes = lanes
        self.summands = (
            np.zeros(lanes.shape, dtype=np.uint64) if summands is None
            else np.asarray(summands, dtype=np.uint64)
        )
        self.domain = StreamDomain(domain)
        self.step = int(step)
        self._cursor = int(cursor)
        self._key = (
            np.uint64(self.master_seed & 0xFFFFFFFF),
            np.uint64(self.master_seed >> 32),
        )

    @classmethod
    def scalar(cls, master_seed: int, stream_id: int = 0,
               domain: StreamDomain = StreamDomain.SCALAR) -> "RandomStream":
        """One-lane stream for scalar sampling"""
        return cls(master_seed, [stream_id], domain=domain)

    @property
    def size(self) -> int:
        return int(self.lanes.size)

    @property
    def cursor(self) -> int:
        return self._cursor

    def at_step(self, step: int) -> "RandomStream":
        """Same lanes, positioned at the first draw of another step"""
        return RandomStream(self.master_seed, self.lanes, self.domain, step, self.summands)

    def next_draw(self) -> UniformDraw:
        if self._cursor > MAX_FIELD16:
            raise RuntimeError(f"More than {MAX_FIELD16 + 1} draws requested in one step")
        draw = UniformDraw(self, self._cursor)
        self._cursor += 1
        return draw

    def expand(self, counts: np.ndarray) -> Tuple["RandomStream", np.ndarray]:
        """
        Give every lane count[i] independent sub-lanes (summands).

        Consumes one draw of this stream; the child stream starts at that
        draw ordinal, so one sampling call on the child stays inside the
        consumed slot.

        Args:
            counts: Number of summands per lane

        Returns:
            tuple: (child stream, owner index of every child lane)
        """
        if np.any(self.summands != 0):
            raise ValueError("Cannot expand a stream that is already expanded")
        counts = np.asarray(counts, dtype=np.int64)
        if counts.size and counts.max() > MAX_FIELD16:
            raise ValueError(
                f"Naive summation supports at most {MAX_FIELD16} summands per lane, got {counts.max()}"
            )
        parent_draw = self.next_draw()
        owner = np.repeat(np.arange(self.size), counts)
        starts = np.cumsum(counts) - counts
        summands = (np.arange(owner.size) - np.repeat(starts, counts) + 1).astype(np.uint64)
        child = RandomStream(
            self.master_seed,
            self.lanes[owner],
            self.domain,
            self.step,
            summands=summands,
            cursor=parent_draw.index,
        )
        return child, owner

    def _block(self, draw: int, attempt: int, where=None):
        lanes = self.lanes if where is None else self.lanes[where]
        summands = self.summands if where is None else self.summands[where]

        c0 = lanes & _MASK32
        c1 = ((lanes >> _SHIFT32) & _MASK8) | (summands << _SHIFT8) | (np.uint64(int(self.domain)) << _SHIFT24)
        c2 = np.full(lanes.shape, self.step, dtype=np.uint64)
        c3 = np.full(lanes.shape, (draw << 16) | attempt, dtype=np.uint64)
        return philox4x32(c0, c1, c2, c3, *self._key)

    def __repr__(self) -> str:
        return (
            f"RandomStream(seed={self.master_seed}, lanes={self.size}, "
            f"domain={self.domain.name}, step={self.step}, cursor={self._cursor})"
        )
