"""
Scaled Step Processes

Builds the cadlag step functions of a path on the 1/n grid:

- M^(n)_t = (X_0 + M_1 + ... + M_floor(nt)) / n
- n^-1 X_floor(nt)
- the shifted integral of (M^(n)_s + m_eps s)^+ over [0, t] in closed form
- Psi^(n)(f)(t) = f(floor(nt)/n) + floor(nt) m_eps / n and its limit
  Psi(f)(t) = f(t) + m_eps t

plus the conditional-variance residual whose supremum is the first
martingale condition statistic.
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np
import pandas as pd

from ..exceptions import DomainError, PreconditionError
from .gw_engine import GWPath, PathBlock
from .moments import MomentParams

logger = logging.getLogger(__name__)

IDENTITY_TOLERANCE = 1e-9


def floor_index(n: int, t: float) -> int:
    """
    floor(n t), robust to t given as a decimal fraction (0.3 * 10 -> 3).

    Snaps only within a few ulps of an integer, so t just below k/n still
    lands in cell k - 1.
    """
    nt = n * t
    nearest = round(nt)
    if abs(nt - nearest) <= 8 * np.finfo(float).eps * max(1.0, abs(nt)):
        return int(nearest)
    return int(math.floor(nt))


def _x(path) -> np.ndarray:
    x = path.x if isinstance(path, (GWPath, PathBlock)) else path
    return np.asarray(x, dtype=np.float64)


def _last_index(x: np.ndarray, n: int, T: float) -> int:
    if n < 1:
        raise DomainError(f"n must be positive, got {n}")
    if T < 0:
        raise DomainError(f"horizon must be nonnegative, got {T}")
    j = floor_index(n, T)
    K = x.shape[-1] - 1
    if j > K:
        raise PreconditionError(f"path horizon K={K} is shorter than floor(n T)={j} (n={n}, T={T})")
    return j


@dataclass(frozen=True)
class StepFunction:
    """values[k] is the value on [k/n, (k+1)/n)"""
    n: int
    values: np.ndarray
    horizon_T: float

    def __post_init__(self):
        if self.n < 1:
            raise DomainError(f"n must be positive, got {self.n}")
        if self.horizon_T <= 0:
            raise DomainError(f"horizon_T must be positive, got {self.horizon_T}")
        needed = floor_index(self.n, self.horizon_T) + 1
        if len(self.values) < needed:
            raise PreconditionError(f"step function needs {needed} values on [0, {self.horizon_T}], got {len(self.values)}")

    def index(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=np.float64)
        if np.any(t < 0):
            raise DomainError("step functions are defined for t >= 0")
        idx = np.vectorize(lambda s: floor_index(self.n, float(s)), otypes=[np.int64])(t)
        if np.any(idx >= len(self.values)):
            raise PreconditionError(f"t beyond the stored grid (horizon {self.horizon_T})")
        return idx

    def __call__(self, t):
        """Value at t (scalar or array)"""
        idx = self.index(t)
        out = np.asarray(self.values)[idx]
        return float(out) if np.ndim(out) == 0 else out

    def to_frame(self) -> pd.DataFrame:
        k = np.arange(len(self.values))
        return pd.DataFrame({"k": k, "t_left": k / self.n, "value": np.asarray(self.values, dtype=np.float64)})


def build_mn(path, n: int, m_eps: float, T: float) -> StepFunction:
    """
    M^(n) on [0, T], from X_k/n - k m_eps/n.

    The partial-sum form (X_0 + sum M_j)/n is computed alongside and must
    agree within 1e-9 relative to the path scale.
    """
    x = _x(path)
    j = _last_index(x, n, T)
    x = x[: j + 1]
    k = np.arange(j + 1)

    direct = x / n - k * m_eps / n
    increments = np.diff(x) - m_eps
    partial = (x[0] + np.concatenate(([0.0], np.cumsum(increments)))) / n

    scale = max(1.0, float(np.max(np.abs(x))) / n)
    gap = float(np.max(np.abs(direct - partial)))
    if gap > IDENTITY_TOLERANCE * scale:
        logger.error(f"M^(n) forms disagree by {gap:.3e} (n={n})")
        raise ArithmeticError(f"M^(n) partial-sum and direct forms disagree by {gap:.3e}")
    return StepFunction(n, direct, T)


def build_xn(path, n: int, T: float) -> StepFunction:
    x = _x(path)
    j = _last_index(x, n, T)
    return StepFunction(n, x[: j + 1] / n, T)


def scaled_values(x: np.ndarray, n: int, t: float) -> np.ndarray:
    """n^-1 X_floor(nt) for every row of a block"""
    x = _x(x)
    j = _last_index(x, n, t)
    return x[..., j] / n


def shifted_integral(path, n: int, m_eps: float, t: float):
    """
    Integral of (M^(n)_s + m_eps s)^+ over [0, t] in closed form:

        n^-2 sum_{k<j} X_k + f X_j / n^2 + (j + f^2) m_eps / (2 n^2)

    with j = floor(nt) and f = nt - j. Works row-wise on blocks.
    """
    if t < 0:
        raise DomainError(f"t must be nonnegative, got {t}")
    x = _x(path)
    j = _last_index(x, n, t)
    f = max(n * t - j, 0.0)
    n2 = float(n) * n
    head = x[..., :j].sum(axis=-1)
    return head / n2 + f * x[..., j] / n2 + (j + f * f) * m_eps / (2.0 * n2)


def psi_n(f: Union[StepFunction, Callable], n: int, m_eps: float, T: float = None) -> StepFunction:
    """
    Psi^(n)(f)(t) = f(floor(nt)/n) + floor(nt) m_eps / n on the n-grid.

    A StepFunction on the same grid is shifted in place of re-evaluation;
    a callable needs the horizon T.
    """
    if isinstance(f, StepFunction) and f.n == n:
        k = np.arange(len(f.values))
        return StepFunction(n, np.asarray(f.values) + k * m_eps / n, f.horizon_T)

    horizon = f.horizon_T if isinstance(f, StepFunction) else T
    if horizon is None:
        raise PreconditionError("psi_n of a callable needs the horizon T")
    k = np.arange(floor_index(n, horizon) + 1)
    grid = k / n
    values = np.array([f(float(s)) for s in grid], dtype=np.float64)
    return StepFunction(n, values + k * m_eps / n, horizon)


def psi_limit(f: Callable, m_eps: float) -> Callable:
    """Psi(f)(t) = f(t) + m_eps t"""
    return lambda t: f(t) + m_eps * (np.asarray(t, dtype=np.float64) if np.ndim(t) else t)


def cond1_residual(path, n: int, params: MomentParams, t: float):
    """
    n^-2 sum_{k<=floor(nt)} Var(M_k | X_{k-1}) - sigma2_xi * shifted integral, evaluated directly.
    """
    x = _x(path)
    j = _last_index(x, n, t)
    n2 = float(n) * n
    conditional = (params.sigma2_xi * x[..., :j].sum(axis=-1) + j * params.sigma2_eps) / n2
    return conditional - params.sigma2_xi * shifted_integral(x, n, params.m_eps, t)


def cond1_residual_closed(path, n: int, params: MomentParams, t: float):
    """
    The same residual in closed form:

        j sigma2_eps / n^2 - sigma2_xi f X_j / n^2 - sigma2_xi m_eps (j + f^2) / (2 n^2)
    """
    x = _x(path)
    j = _last_index(x, n, t)
    f = max(n * t - j, 0.0)
    n2 = float(n) * n
    return (
        j * params.sigma2_eps / n2
        - params.sigma2_xi * f * x[..., j] / n2
        - params.sigma2_xi * params.m_eps * (j + f * f) / (2.0 * n2)
    )


def cond1_sup(x: np.ndarray, n: int, params: MomentParams, T: float) -> np.ndarray:
    """
    sup over t in [0, T] of |cond1 residual|, exactly, row-wise.

    In cell j the residual is a quadratic in f = nt - j; its supremum in
    absolute value is reached at a cell end (f = 0, the left limit f -> 1,
    or f = nT - floor(nT) in the last cell) or at the vertex of the
    quadratic when that falls inside the cell.
    """
    x = _x(x)
    J = _last_index(x, n, T)
    f_last = max(n * T - J, 0.0)
    n2 = float(n) * n
    s2, s2e, m = params.sigma2_xi, params.sigma2_eps, params.m_eps

    xj = x[..., : J + 1]
    jj = np.arange(J + 1, dtype=np.float64)
    f_end = np.ones(J + 1)
    f_end[J] = f_last

    def residual(f):
        return jj * s2e / n2 - s2 * f * xj / n2 - s2 * m * (jj + f * f) / (2.0 * n2)

    candidates = [np.abs(residual(np.zeros(J + 1))), np.abs(residual(f_end))]
    # vertex at f = -X_j / m_eps, clipped into the cell
    if s2 > 0 and m > 0:
        vertex = np.clip(-xj / m, 0.0, f_end)
        candidates.append(np.abs(residual(vertex)))
    return np.max(np.maximum.reduce(candidates), axis=-1)


def cond11_supx(x: np.ndarray, n: int, T: float) -> np.ndarray:
    """n^-2 max_{k <= floor(nT)} X_k, row-wise"""
    x = _x(x)
    J = _last_index(x, n, T)
    return np.max(x[..., : J + 1], axis=-1) / (float(n) * n)


def psi_identity_residual(x: np.ndarray, n: int, m_eps: float, T: float) -> float:
    """
    max |Psi^(n)(M^(n)) - n^-1 X_floor(n.)| over the grid and all rows,
    with M^(n) taken in its partial-sum form.
    """
    x = _x(x)
    J = _last_index(x, n, T)
    x = x[..., : J + 1]
    k = np.arange(J + 1)
    increments = np.diff(x, axis=-1) - m_eps
    zero = np.zeros(x.shape[:-1] + (1,))
    mn = (x[..., :1] + np.concatenate((zero, np.cumsum(increments, axis=-1)), axis=-1)) / n
    return float(np.max(np.abs(mn + k * m_eps / n - x / n)))


def line_gap_sup(x: np.ndarray, n: int, m_eps: float, T: float) -> np.ndarray:
    """
    sup over t in [0, T] of |n^-1 X_floor(nt) - m_eps t|, exactly, row-wise.

    On each cell the gap is linear in t, so its supremum is attained at the
    left end or approached at the right end of the cell (cut at T).
    """
    x = _x(x)
    J = _last_index(x, n, T)
    level = x[..., : J + 1] / n
    left = np.arange(J + 1) / n
    right = np.minimum(np.arange(1, J + 2) / n, T)
    gap = np.maximum(np.abs(level - m_eps * left), np.abs(level - m_eps * right))
    return np.max(gap, axis=-1)
