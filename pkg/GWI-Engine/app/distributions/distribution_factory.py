"""
Distribution Factory

Builds DistributionSpec variants from tagged scenario objects such as
{"type": "poisson", "lambda": 1.0}.
"""

import logging
from enum import Enum
from typing import Annotated, Any, Dict, Union

from pydantic import Field, TypeAdapter

from .base import BaseDistribution
from .geometric import Geometric
from .point_mass import PointMass
from .poisson import Poisson
from .table_pmf import TablePMF
from .two_point import TwoPoint

logger = logging.getLogger(__name__)


class DistributionType(Enum):
    """Tags accepted in the "type" field"""
    POISSON = "poisson"
    GEOMETRIC = "geometric"
    TWO_POINT = "two_point"
    POINT_MASS = "point_mass"
    TABLE_PMF = "table_pmf"


DistributionSpec = Annotated[
    Union[Poisson, Geometric, TwoPoint, PointMass, TablePMF],
    Field(discriminator="type"),
]


class DistributionFactory:
    """Validates tagged dicts into distribution objects"""

    def __init__(self):
        self._adapter = TypeAdapter(DistributionSpec)

    def create(self, spec: Union[Dict[str, Any], BaseDistribution]) -> BaseDistribution:
        """
        Build a distribution from its tagged form.

        Args:
            spec: Tagged dict or an existing distribution

        Returns:
            BaseDistribution: The validated law

        Raises:
            pydantic.ValidationError: Unknown tag or invalid parameters
        """
        if isinstance(spec, BaseDistribution):
            return spec
        law = self._adapter.validate_python(spec)
        logger.debug(f"Built {law.type} distribution: {law.describe()}")
        return law

    @staticmethod
    def supported_types() -> list[str]:
        return [t.value for t in DistributionType]


distribution_factory = DistributionFactory()
