# Distributions package: offspring, immigration and initial-value laws

from .base import BaseDistribution
from .distribution_factory import DistributionFactory, DistributionSpec, DistributionType, distribution_factory
from .geometric import Geometric
from .point_mass import PointMass
from .poisson import Poisson, poisson_variates
from .table_pmf import TablePMF
from .two_point import TwoPoint


def mean(spec: BaseDistribution) -> float:
    return spec.mean()


def variance(spec: BaseDistribution) -> float:
    return spec.variance()


def sample(spec: BaseDistribution, stream) -> int:
    return spec.sample(stream)


def sample_sum(spec: BaseDistribution, count: int, stream) -> int:
    return spec.sample_sum(count, stream)


__all__ = [
    "BaseDistribution",
    "DistributionFactory",
    "DistributionSpec",
    "DistributionType",
    "distribution_factory",
    "Geometric",
    "PointMass",
    "Poisson",
    "TablePMF",
    "TwoPoint",
    "poisson_variates",
    "mean",
    "variance",
    "sample",
    "sample_sum",
]
