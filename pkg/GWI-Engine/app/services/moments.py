"""
Moment Oracles

Closed-form first and second moments of X_k and M_k, the general mean
formula, and bounded-ratio certificates for the critical case. These are
the exact references the Monte Carlo checks are compared against.
"""

import logging
import math
from typing import Iterable, List

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from ..exceptions import DomainError

logger = logging.getLogger(__name__)

BRANCH_TOLERANCE = 1e-12


class MomentParams(BaseModel):
    model_config = ConfigDict(frozen=True)

    m_xi: float = Field(ge=0)
    m_eps: float = Field(ge=0)
    sigma2_xi: float = Field(ge=0)
    sigma2_eps: float = Field(ge=0)
    mean_x0: float = Field(default=0.0, ge=0)
    var_x0: float = Field(default=0.0, ge=0)
    # set when criticality was decided exactly from the offspring law
    critical_exact: bool = False

    @field_validator("m_xi", "m_eps", "sigma2_xi", "sigma2_eps", "mean_x0", "var_x0")
    @classmethod
    def _finite(cls, v: float) -> float:
        if not math.isfinite(v):
            raise ValueError("moment parameters must be finite")
        return v

    @property
    def is_critical(self) -> bool:
        return self.critical_exact or abs(self.m_xi - 1.0) < BRANCH_TOLERANCE


class MomentTable(BaseModel):
    k_values: List[int]
    mean_x: List[float]
    var_x: List[float] = []
    mean_m2: List[float] = []

    @model_validator(mode="after")
    def _aligned(self):
        n = len(self.k_values)
        if len(self.mean_x) != n:
            raise ValueError("mean_x must align with k_values")
        for name in ("var_x", "mean_m2"):
            column = getattr(self, name)
            if column and len(column) != n:
                raise ValueError(f"{name} must align with k_values")
        if any(v < 0 for v in self.var_x):
            raise ValueError("variances must be nonnegative")
        return self

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame({"k": self.k_values, "mean_x": self.mean_x})
        if self.var_x:
            frame["var_x"] = self.var_x
        if self.mean_m2:
            frame["mean_m2"] = self.mean_m2
        return frame


def moment_params(config) -> MomentParams:
    """MomentParams of a GWConfig"""
    return MomentParams(
        m_xi=config.offspring.mean(),
        m_eps=config.immigration.mean(),
        sigma2_xi=config.offspring.variance(),
        sigma2_eps=config.immigration.variance(),
        mean_x0=config.initial.mean(),
        var_x0=config.initial.variance(),
        critical_exact=config.is_critical(),
    )


def _require_critical(params: MomentParams, op: str):
    if not params.is_critical:
        raise DomainError(f"{op} holds only in the critical case m_xi = 1, got m_xi={params.m_xi}")


def _require_k(k: int, minimum: int = 0):
    if k < minimum:
        raise DomainError(f"k must be at least {minimum}, got {k}")


def mean_xk(params: MomentParams, k: int) -> float:
    """
    E X_k = E X_0 m^k + m_eps (m^k - 1)/(m - 1), or E X_0 + m_eps k when m = 1.

    The linear branch is used within 1e-12 of m = 1, where the geometric
    branch has lost its precision.
    """
    _require_k(k)
    m = params.m_xi
    if params.is_critical:
        return params.mean_x0 + params.m_eps * k
    mk = m ** k
    return params.mean_x0 * mk + params.m_eps * (mk - 1.0) / (m - 1.0)


def var_xk_critical(params: MomentParams, k: int) -> float:
    """Var X_k = m_eps s2 (k-1)k/2 + (s2 E X_0 + s2_eps) k + Var X_0 for m_xi = 1"""
    _require_critical(params, "var_xk_critical")
    _require_k(k)
    return (
        params.m_eps * params.sigma2_xi * (k - 1) * k / 2.0
        + (params.sigma2_xi * params.mean_x0 + params.sigma2_eps) * k
        + params.var_x0
    )


def cond_var_given_prev(params: MomentParams, x_prev) -> float:
    """Var(M_k | X_{k-1} = x_prev) = sigma2_xi x_prev + sigma2_eps"""
    if np.ndim(x_prev):
        return params.sigma2_xi * np.asarray(x_prev, dtype=np.float64) + params.sigma2_eps
    return params.sigma2_xi * float(x_prev) + params.sigma2_eps


def second_moment_mk(params: MomentParams, k: int) -> float:
    """E M_k^2 = sigma2_xi m_eps (k-1) + sigma2_xi E X_0 + sigma2_eps for m_xi = 1, k >= 1"""
    _require_critical(params, "second_moment_mk")
    _require_k(k, 1)
    return params.sigma2_xi * params.m_eps * (k - 1) + params.sigma2_xi * params.mean_x0 + params.sigma2_eps


def order_certificates(params: MomentParams, k_max: int) -> pd.DataFrame:
    """
    Ratio sequences that stay bounded in the critical case.

    Columns: k, mean_x_over_k (E X_k / k), second_x_over_k2 (E X_k^2 / k^2),
    abs_m_bound_over_sqrt_k (sqrt(E M_k^2) / sqrt(k), the Lyapunov bound on
    E|M_k|), m2_over_k (E M_k^2 / k).
    """
    _require_critical(params, "order_certificates")
    if k_max < 2:
        raise DomainError(f"k_max must be at least 2, got {k_max}")

    k = np.arange(1, k_max + 1, dtype=np.float64)
    mean = params.mean_x0 + params.m_eps * k
    var = (
        params.m_eps * params.sigma2_xi * (k - 1) * k / 2.0
        + (params.sigma2_xi * params.mean_x0 + params.sigma2_eps) * k
        + params.var_x0
    )
    m2 = params.sigma2_xi * params.m_eps * (k - 1) + params.sigma2_xi * params.mean_x0 + params.sigma2_eps

    return pd.DataFrame({
        "k": k.astype(np.int64),
        "mean_x_over_k": mean / k,
        "second_x_over_k2": (var + mean ** 2) / k ** 2,
        "abs_m_bound_over_sqrt_k": np.sqrt(m2) / np.sqrt(k),
        "m2_over_k": m2 / k,
    })


def moment_table(params: MomentParams, k_values: Iterable[int]) -> MomentTable:
    """Mean of X_k for every k; variance and E M_k^2 too when critical"""
    k_values = [int(k) for k in k_values]
    table = {"k_values": k_values, "mean_x": [mean_xk(params, k) for k in k_values]}
    if params.is_critical:
        table["var_x"] = [var_xk_critical(params, k) for k in k_values]
        table["mean_m2"] = [second_moment_mk(params, k) if k >= 1 else float("nan") for k in k_values]
    return MomentTable(**table)


def ensemble_moment_check(columns: dict, params: MomentParams) -> pd.DataFrame:
    """
    Compare ensemble mean/variance of X_k with the closed forms.

    The variance standard error uses the fourth central moment,
    se^2 = (mu4 - s^4 (N-3)/(N-1)) / N.

    Args:
        columns: {k: samples of X_k}
        params: Critical moment parameters

    Returns:
        pd.DataFrame: k, sample/exact mean and variance, z-scores
    """
    _require_critical(params, "ensemble_moment_check")
    rows = []
    for k, samples in sorted(columns.items()):
        x = np.asarray(samples, dtype=np.float64)
        n = x.size
        if n < 4:
            raise DomainError("ensemble_moment_check needs at least 4 samples")
        mean = float(np.mean(x))
        var = float(np.var(x, ddof=1))
        mu4 = float(np.mean((x - mean) ** 4))
        se_mean = math.sqrt(var / n)
        se_var = math.sqrt(max(mu4 - var ** 2 * (n - 3) / (n - 1), 0.0) / n)
        exact_mean = mean_xk(params, k)
        exact_var = var_xk_critical(params, k)
        rows.append({
            "k": k,
            "mean": mean,
            "exact_mean": exact_mean,
            "z_mean": _z(mean - exact_mean, se_mean),
            "var": var,
            "exact_var": exact_var,
            "z_var": _z(var - exact_var, se_var),
        })
    return pd.DataFrame(rows)


def _z(diff: float, se: float) -> float:
    if se == 0.0:
        return 0.0 if abs(diff) < 1e-12 else math.inf
    return abs(diff) / se
