"""
Squared Bessel Diffusion

Simulation of the limit equation

    dX_t = m_eps dt + sqrt(sigma2_xi X_t^+) dW_t

by full-truncation Euler and by exact transitions, the closed-form limit
marginal (a Gamma law when X_0 = 0), and the shift X_t -> X_t - m_eps t
onto the martingale part.

Exact transitions use the Poisson mixture of Gamma laws: with c = sigma2 h/4,
d = 4 m_eps/sigma2 and noncentrality x/c,

    N ~ Poisson(x / (2c)),   X_{t+h} = 2c * Gamma(d/2 + N, 1).
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Tuple

import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from pydantic import BaseModel, ConfigDict, Field, field_validator
from scipy.special import gammainc
from tqdm import tqdm

from ..config import BLOCK_SIZE, SHOW_PROGRESS
from ..distributions import poisson_variates
from ..exceptions import DomainError
from .random_stream import MAX_FIELD16, RandomStream, StreamDomain, UniformDraw

logger = logging.getLogger(__name__)

# rejection rounds use attempts 2r and 2r + 1; the last attempt feeds the shape < 1 boost
_GAMMA_BOOST_ATTEMPT = MAX_FIELD16


class Scheme(str, Enum):
    EULER_FULL_TRUNCATION = "euler_full_truncation"
    EXACT_TRANSITION = "exact_transition"


class Output(str, Enum):
    PATH = "path"
    ENDPOINT = "endpoint"
    SUP = "sup"


_DOMAINS = {
    Scheme.EULER_FULL_TRUNCATION: StreamDomain.EULER_DIFFUSION,
    Scheme.EXACT_TRANSITION: StreamDomain.EXACT_DIFFUSION,
}


class SDEParams(BaseModel):
    model_config = ConfigDict(frozen=True)

    m_eps: float = Field(ge=0)
    sigma2_xi: float = Field(ge=0)
    x0: float = 0.0

    @field_validator("m_eps", "sigma2_xi", "x0")
    @classmethod
    def _finite(cls, v: float) -> float:
        if not math.isfinite(v):
            raise ValueError("SDE parameters must be finite")
        return v


@dataclass(frozen=True)
class DiffusionPath:
    times: np.ndarray
    values: np.ndarray
    scheme: Scheme

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"t": self.times, "value": self.values})


def gamma_variates(shape: np.ndarray, draw: UniformDraw) -> np.ndarray:
    """
    Unit-scale Gamma variates by Marsaglia-Tsang, one per lane of the draw.

    Shapes below 1 are boosted through Gamma(a + 1) U^(1/a); shape 0 gives 0.
    """
    shape = np.asarray(shape, dtype=np.float64)
    out = np.zeros(shape.shape, dtype=np.float64)
    live = np.flatnonzero(shape > 0)
    if live.size == 0:
        return out

    alpha = np.where(shape < 1.0, shape + 1.0, shape)
    d = alpha - 1.0 / 3.0
    c = 1.0 / np.sqrt(9.0 * d)

    pending = live
    rounds = 0
    while pending.size:
        u1, v1 = draw.pair(2 * rounds, pending)
        z = np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * v1)
        u = draw.uniform(2 * rounds + 1, pending)

        dp, cp = d[pending], c[pending]
        v = (1.0 + cp * z) ** 3
        with np.errstate(invalid="ignore", divide="ignore"):
            accept = (v > 0) & (np.log(u) < 0.5 * z * z + dp - dp * v + dp * np.log(v))
        out[pending[accept]] = dp[accept] * v[accept]
        pending = pending[~accept]
        rounds += 1

    small = np.flatnonzero((shape > 0) & (shape < 1.0))
    if small.size:
        u = draw.uniform(_GAMMA_BOOST_ATTEMPT, small)
        out[small] *= u ** (1.0 / shape[small])
    return out


def _exact_step(x: np.ndarray, h: float, params: SDEParams, stream: RandomStream) -> np.ndarray:
    c = params.sigma2_xi * h / 4.0
    d = 4.0 * params.m_eps / params.sigma2_xi
    mixing = poisson_variates(np.maximum(x, 0.0) / (2.0 * c), stream.next_draw())
    return 2.0 * c * gamma_variates(d / 2.0 + mixing.astype(np.float64), stream.next_draw())


def _simulate_block(params: SDEParams, T: float, steps: int, scheme: Scheme,
                    master_seed: int, lanes: np.ndarray, output: Output) -> np.ndarray:
    h = T / steps
    sqrt_h = math.sqrt(h)
    base = RandomStream(master_seed, lanes, _DOMAINS[scheme])
    x = np.full(lanes.size, float(params.x0))

    path = np.empty((lanes.size, steps + 1)) if output == Output.PATH else None
    running_max = x.copy() if output == Output.SUP else None
    if path is not None:
        path[:, 0] = x

    for i in range(1, steps + 1):
        stream = base.at_step(i)
        if scheme == Scheme.EXACT_TRANSITION:
            x = _exact_step(x, h, params, stream)
        elif params.sigma2_xi == 0.0:
            stream.next_draw()
            x = np.full(lanes.size, params.x0 + params.m_eps * T * i / steps)
        else:
            # only the diffusion coefficient sees the positive part
            z = stream.next_draw().normal()
            x = x + params.m_eps * h + np.sqrt(params.sigma2_xi * np.maximum(x, 0.0)) * sqrt_h * z
        if path is not None:
            path[:, i] = x
        if running_max is not None:
            np.maximum(running_max, x, out=running_max)

    if output == Output.PATH:
        return path
    if output == Output.SUP:
        return running_max
    return x


def _check_grid(T: float, steps: int):
    if T <= 0:
        raise DomainError(f"T must be positive, got {T}")
    if steps < 1:
        raise DomainError(f"steps must be at least 1, got {steps}")


def _check_exact(params: SDEParams):
    if params.sigma2_xi == 0.0:
        raise DomainError("exact transitions need sigma2_xi > 0; use euler_path for the deterministic line")
    if params.x0 < 0:
        raise DomainError(f"exact transitions need x0 >= 0, got {params.x0}")


def _single_path(params, T, steps, stream, scheme) -> DiffusionPath:
    _check_grid(T, steps)
    values = _simulate_block(params, T, steps, scheme, stream.master_seed, stream.lanes[:1], Output.PATH)[0]
    return DiffusionPath(np.linspace(0.0, T, steps + 1), values, scheme)


def euler_path(params: SDEParams, T: float, steps: int, stream: RandomStream) -> DiffusionPath:
    """
    Full-truncation Euler: X_{i+1} = X_i + m_eps h + sqrt(sigma2_xi X_i^+) sqrt(h) Z_i.

    Negative iterates are kept in the stored path.
    """
    return _single_path(params, T, steps, stream, Scheme.EULER_FULL_TRUNCATION)


def exact_transition_path(params: SDEParams, T: float, steps: int, stream: RandomStream) -> DiffusionPath:
    """Exact squared Bessel transitions on a uniform grid"""
    _check_exact(params)
    return _single_path(params, T, steps, stream, Scheme.EXACT_TRANSITION)


def simulate_paths(
    params: SDEParams,
    T: float,
    steps: int,
    master_seed: int,
    n_paths: int,
    scheme: Scheme = Scheme.EXACT_TRANSITION,
    workers: int = 1,
    output: Output = Output.PATH,
    lane_offset: int = 0,
    block_size: int = BLOCK_SIZE,
) -> np.ndarray:
    """
    Ensemble of diffusion paths, lane i using the same counters as the
    single-path operations on stream lane i.

    Args:
        params: SDE coefficients
        T: Horizon
        steps: Grid steps
        master_seed: 64-bit seed
        n_paths: Number of paths
        scheme: Euler or exact transitions
        workers: Thread pool size (never changes values)
        output: Full paths (n, steps+1), endpoints (n,) or running maxima (n,)
        lane_offset: First lane index, for drawing an independent second sample

    Returns:
        np.ndarray: Simulated values in lane order
    """
    scheme, output = Scheme(scheme), Output(output)
    _check_grid(T, steps)
    if scheme == Scheme.EXACT_TRANSITION:
        _check_exact(params)
    if n_paths < 1:
        raise ValueError(f"n_paths must be at least 1, got {n_paths}")

    logger.info(f"SDE ensemble: {n_paths} paths, {steps} steps, scheme={scheme.value}, T={T}")
    ranges = [(s, min(s + block_size, n_paths)) for s in range(0, n_paths, block_size)]
    blocks = Parallel(n_jobs=max(int(workers), 1), prefer="threads")(
        delayed(_simulate_block)(
            params, T, steps, scheme, master_seed,
            np.arange(lane_offset + start, lane_offset + stop, dtype=np.uint64), output,
        )
        for start, stop in tqdm(ranges, desc=scheme.value, unit="block", disable=not SHOW_PROGRESS, leave=False)
    )
    return np.concatenate(blocks)


def _require_origin(params: SDEParams):
    if params.x0 != 0.0:
        raise DomainError(f"the limit marginal is available for x0 = 0 only, got x0={params.x0}")


def limit_marginal_cdf(params: SDEParams, t: float, x):
    """
    CDF of X_t from X_0 = 0: Gamma(shape 2 m_eps/sigma2_xi, scale sigma2_xi t/2).

    sigma2_xi = 0 gives the step at m_eps t; m_eps = 0 the point mass at 0.
    """
    _require_origin(params)
    if t <= 0:
        raise DomainError(f"t must be positive, got {t}")
    x = np.asarray(x, dtype=np.float64)

    if params.sigma2_xi == 0.0:
        cdf = (x >= params.m_eps * t).astype(np.float64)
    elif params.m_eps == 0.0:
        cdf = (x >= 0.0).astype(np.float64)
    else:
        shape = 2.0 * params.m_eps / params.sigma2_xi
        scale = params.sigma2_xi * t / 2.0
        cdf = np.where(x > 0.0, gammainc(shape, np.maximum(x, 0.0) / scale), 0.0)
    return float(cdf) if cdf.ndim == 0 else cdf


def limit_cdf(params: SDEParams, t: float, shift: float = 0.0):
    """x -> P(X_t - shift <= x), for KS tests"""
    return lambda x: limit_marginal_cdf(params, t, np.asarray(x, dtype=np.float64) + shift)


def limit_marginal_moments(params: SDEParams, t: float) -> Tuple[float, float]:
    """
    Mean and variance of X_t from X_0 = x0.

    E X_t = x0 + m_eps t and d/dt Var X_t = sigma2_xi E X_t, so
    Var X_t = sigma2_xi (x0 t + m_eps t^2 / 2).
    """
    if t < 0:
        raise DomainError(f"t must be nonnegative, got {t}")
    mean = params.x0 + params.m_eps * t
    var = params.sigma2_xi * (params.x0 * t + params.m_eps * t * t / 2.0)
    return mean, var


def m_path_from_x(xpath: DiffusionPath, m_eps: float) -> DiffusionPath:
    """M_t = X_t - m_eps t"""
    return DiffusionPath(xpath.times, xpath.values - m_eps * xpath.times, xpath.scheme)
