"""
Galton-Watson Engine

Exact simulation of the Galton-Watson process with immigration

    X_k = xi_{k,1} + ... + xi_{k,X_{k-1}} + eps_k,

its martingale differences M_k = X_k - X_{k-1} - m_eps, and seeded path
ensembles.

Paths are simulated in blocks: every generation is one vectorized step over
all lanes of the block. Random numbers are addressed by
(master_seed, path, generation, draw), with the offspring sum on draw 0 and
the immigrant count on draw 1 of each generation and X_0 on generation 0,
so path i is the same whichever block, worker or thread count produced it.
"""

import hashlib
import logging
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Any, Callable, Iterator, List, Optional, Tuple

import numpy as np
from joblib import Parallel, delayed
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator
from tqdm import tqdm

from ..config import BLOCK_SIZE, SHOW_PROGRESS
from ..distributions import DistributionSpec, PointMass, distribution_factory
from ..distributions.base import checked_add
from ..exceptions import PopulationOverflowError, PreconditionError
from .cache_service import cache_service
from .random_stream import RandomStream, StreamDomain

logger = logging.getLogger(__name__)

CRITICALITY_TOLERANCE = 1e-12


class Regime(str, Enum):
    SUBCRITICAL = "subcritical"
    CRITICAL = "critical"
    SUPERCRITICAL = "supercritical"


class GWConfig(BaseModel):
    """Offspring, immigration and initial laws plus the horizon"""

    model_config = ConfigDict(frozen=True)

    offspring: DistributionSpec
    immigration: DistributionSpec
    initial: DistributionSpec = Field(default_factory=lambda: PointMass(c=0))
    horizon_K: int = Field(ge=1)
    record_immigration: bool = True

    @field_validator("offspring", "immigration", "initial", mode="before")
    @classmethod
    def _build_law(cls, value):
        try:
            return distribution_factory.create(value)
        except ValidationError as e:
            raise ValueError("; ".join(
                f"{'.'.join(str(part) for part in err['loc'])}: {err['msg']}" for err in e.errors()
            )) from None

    def offspring_mean_offset(self) -> Optional[Fraction]:
        """m_xi - 1 as an exact rational, None when the law has no exact mean"""
        exact = self.offspring.mean_exact()
        return None if exact is None else exact - 1

    def is_critical(self) -> bool:
        offset = self.offspring_mean_offset()
        if offset is not None:
            return offset == 0
        return abs(self.offspring.mean() - 1.0) < CRITICALITY_TOLERANCE

    def regime(self) -> Regime:
        if self.is_critical():
            return Regime.CRITICAL
        return Regime.SUBCRITICAL if self.offspring.mean() < 1.0 else Regime.SUPERCRITICAL

    def config_hash(self) -> str:
        payload = self.model_dump_json(by_alias=True).encode()
        return hashlib.sha256(payload).hexdigest()[:16]


def classify_regime(config: GWConfig) -> Regime:
    return config.regime()


@dataclass(frozen=True)
class GWPath:
    """One realized trajectory X_0..X_K (and eps_1..eps_K when recorded)"""
    x: np.ndarray
    eps: Optional[np.ndarray]
    seed_id: int
    master_seed: int = 0

    @property
    def horizon(self) -> int:
        return int(self.x.size - 1)


@dataclass(frozen=True)
class PathBlock:
    """Consecutive paths [start, start + n) stored as arrays"""
    start: int
    x: np.ndarray
    eps: Optional[np.ndarray]
    master_seed: int

    @property
    def n_paths(self) -> int:
        return int(self.x.shape[0])

    @property
    def nbytes(self) -> int:
        return int(self.x.nbytes + (0 if self.eps is None else self.eps.nbytes))

    @property
    def path_ids(self) -> np.ndarray:
        return np.arange(self.start, self.start + self.n_paths)

    def path(self, row: int) -> GWPath:
        eps = None if self.eps is None else self.eps[row]
        return GWPath(self.x[row], eps, self.start + row, self.master_seed)


def simulate_lanes(config: GWConfig, master_seed: int, lanes) -> PathBlock:
    """
    Simulate the paths whose indices are given by lanes.

    Args:
        config: Process configuration
        master_seed: 64-bit master seed
        lanes: Path indices

    Returns:
        PathBlock: x of shape (n, K+1), eps of shape (n, K) when recorded

    Raises:
        PopulationOverflowError: With the generation and path index
    """
    lanes = np.atleast_1d(np.asarray(lanes, dtype=np.uint64))
    K = config.horizon_K
    base = RandomStream(master_seed, lanes, StreamDomain.GALTON_WATSON, step=0)

    x = np.empty((lanes.size, K + 1), dtype=np.uint64)
    eps = np.empty((lanes.size, K), dtype=np.uint64) if config.record_immigration else None

    x[:, 0] = config.initial.sample_array(base)
    for k in range(1, K + 1):
        stream = base.at_step(k)
        offspring = config.offspring.sample_sum_array(x[:, k - 1], stream)
        immigrants = config.immigration.sample_array(stream)
        x[:, k] = checked_add(offspring, immigrants, stream)
        if eps is not None:
            eps[:, k - 1] = immigrants

    start = int(lanes[0]) if lanes.size else 0
    return PathBlock(start=start, x=x, eps=eps, master_seed=int(master_seed))


def path_stream(master_seed: int, path_index: int) -> RandomStream:
    """The single-lane stream that addresses path path_index"""
    return RandomStream(master_seed, [path_index], StreamDomain.GALTON_WATSON)


def simulate_path(config: GWConfig, stream: RandomStream) -> GWPath:
    """Simulate one path on the first lane of stream"""
    block = simulate_lanes(config, stream.master_seed, stream.lanes[:1])
    return block.path(0)


def _x_values(path) -> np.ndarray:
    x = path.x if isinstance(path, (GWPath, PathBlock)) else path
    return np.asarray(x, dtype=np.float64)


def martingale_differences(path, m_eps: float) -> np.ndarray:
    """
    M_k = X_k - X_{k-1} - m_eps for k = 1..K.

    Accepts a GWPath, a PathBlock or raw arrays; 2-D input is treated row-wise.
    """
    x = _x_values(path)
    if x.shape[-1] < 2:
        raise PreconditionError("path needs at least two points")
    return np.diff(x, axis=-1) - m_eps


def reconstruction_residual(path, m_eps: float) -> float:
    """max_k |X_0 + sum_{j<=k} M_j + k m_eps - X_k|"""
    x = _x_values(path)
    m = martingale_differences(path, m_eps)
    k = np.arange(1, x.shape[-1])
    rebuilt = x[..., :1] + np.cumsum(m, axis=-1) + k * m_eps
    return float(np.max(np.abs(rebuilt - x[..., 1:])))


def decompose_mk(path, m_eps: float) -> Tuple[np.ndarray, np.ndarray]:
    """
    Split M_k into the offspring part N_k and the centered immigration.

    Args:
        path: GWPath or PathBlock with recorded immigration
        m_eps: Immigration mean

    Returns:
        tuple: (N, eps_centered) with N + eps_centered == M

    Raises:
        PreconditionError: If immigration was not recorded
    """
    eps = getattr(path, "eps", None)
    if eps is None:
        raise PreconditionError("decompose_mk needs recorded immigration (record_immigration=true)")
    x = _x_values(path)
    eps = np.asarray(eps, dtype=np.float64)
    n = (x[..., 1:] - eps) - x[..., :-1]
    return n, eps - m_eps


class PathEnsemble:
    """
    Seeded collection of n_paths paths, simulated lazily per block.

    Path i is a pure function of (master_seed, i, config); blocks only group
    lanes for speed and never change a value.
    """

    def __init__(
        self,
        config: GWConfig,
        master_seed: int,
        n_paths: int,
        workers: int = 1,
        block_size: int = BLOCK_SIZE,
        cache=cache_service,
    ):
        if n_paths < 1:
            raise ValueError(f"n_paths must be at least 1, got {n_paths}")
        if block_size < 1:
            raise ValueError(f"block_size must be positive, got {block_size}")
        self.config = config
        self.master_seed = int(master_seed)
        self.n_paths = int(n_paths)
        self.workers = max(int(workers), 1)
        self.block_size = int(block_size)
        self.cache = cache
        self._config_hash = config.config_hash()

    @property
    def horizon(self) -> int:
        return self.config.horizon_K

    def path(self, i: int) -> GWPath:
        if not 0 <= i < self.n_paths:
            raise IndexError(f"path index {i} out of range for {self.n_paths} paths")
        return simulate_path(self.config, path_stream(self.master_seed, i))

    def block_ranges(self) -> List[Tuple[int, int]]:
        return [
            (start, min(start + self.block_size, self.n_paths))
            for start in range(0, self.n_paths, self.block_size)
        ]

    def block(self, start: int, stop: int, use_cache: bool = True) -> PathBlock:
        def compute():
            logger.debug(f"Simulating paths [{start}, {stop})")
            return simulate_lanes(self.config, self.master_seed, np.arange(start, stop))

        if self.cache is None or not use_cache:
            return compute()
        key = f"{self._config_hash}:{self.master_seed}:{start}:{stop}"
        return self.cache.get_or_compute("gw_block", key, compute)

    def iter_blocks(self) -> Iterator[PathBlock]:
        for start, stop in self.block_ranges():
            yield self.block(start, stop)

    def map_blocks(self, func: Callable[[PathBlock], Any], desc: str = "paths",
                   use_cache: bool = True) -> List[Any]:
        """
        Apply func to every block on the worker pool.

        Results come back in block order whatever the pool size. Single-pass
        sweeps over long horizons pass use_cache=False to keep memory flat.
        """
        ranges = self.block_ranges()
        try:
            return Parallel(n_jobs=self.workers, prefer="threads")(
                delayed(lambda r: func(self.block(*r, use_cache=use_cache)))(r)
                for r in tqdm(ranges, desc=desc, unit="block", disable=not SHOW_PROGRESS, leave=False)
            )
        except PopulationOverflowError as e:
            logger.error(f"Ensemble simulation failed: {e}")
            raise

    def materialize(self) -> PathBlock:
        blocks = self.map_blocks(lambda b: b, desc="materialize")
        eps = None
        if self.config.record_immigration:
            eps = np.concatenate([b.eps for b in blocks])
        return PathBlock(0, np.concatenate([b.x for b in blocks]), eps, self.master_seed)

    def column(self, k: int) -> np.ndarray:
        """X_k across all paths, in path order"""
        if not 0 <= k <= self.horizon:
            raise PreconditionError(f"generation {k} beyond horizon K={self.horizon}")
        return np.concatenate(self.map_blocks(lambda b: b.x[:, k].copy(), desc=f"X_{k}"))

    def release(self):
        """Drop this ensemble's blocks from the cache"""
        if self.cache is None:
            return
        self.cache.invalidate_pattern(f"{self._config_hash}:{self.master_seed}:")
        logger.debug(f"Block cache after release: {self.cache.get_stats()}")


def generate_ensemble(config: GWConfig, master_seed: int, n_paths: int, workers: int = 1,
                      block_size: int = BLOCK_SIZE) -> PathEnsemble:
    """Seeded ensemble of n_paths independent paths"""
    logger.info(
        f"Ensemble: {n_paths} paths, K={config.horizon_K}, seed={master_seed}, "
        f"regime={config.regime().value}, workers={workers}"
    )
    return PathEnsemble(config, master_seed, n_paths, workers=workers, block_size=block_size)
