"""
Scenario Service

Loads versioned JSON scenario files, applies dotted-path overrides
(gw.horizon_K=2000, last wins) and the GWI_SEED environment override, and
validates the result into a Scenario.
"""

import json
import logging
import math
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from pydantic import BaseModel, ConfigDict, Field, NonNegativeInt, PositiveFloat, PositiveInt, ValidationError, model_validator

from ..config import SCENARIO_SCHEMA_VERSION, seed_override
from ..exceptions import ScenarioError
from .diffusion import SDEParams
from .gw_engine import GWConfig
from .step_process import floor_index

logger = logging.getLogger(__name__)

SDE_CROSS_CHECK_TOLERANCE = 1e-12

KNOWN_TOLERANCES = {
    "reconstruction",
    "moment_match_se",
    "fdd_ks",
    "fdd_monotone_se",
    "centered_ks",
    "degenerate_sup",
    "degenerate_fraction",
    "cond1_decay_ratio",
    "cond2_final",
    "cond11_decay_ratio",
    "condition_monotone_se",
    "sde_ks_two_sample",
    "sde_moment_se",
    "sde_markov_pvalue",
}


class Scenario(BaseModel):
    """A complete, validated experiment description"""

    model_config = ConfigDict(frozen=True, populate_by_name=True, extra="forbid")

    schema_version: int = Field(SCENARIO_SCHEMA_VERSION, alias="schema")
    name: str
    gw: GWConfig
    sde: Optional[SDEParams] = None
    n_ladder: List[PositiveInt] = [10, 50, 100, 500, 1000]
    t_values: List[PositiveFloat] = [1.0]
    T: PositiveFloat = 1.0
    theta_values: List[PositiveFloat] = [0.5]
    n_paths: PositiveInt = 100_000
    master_seed: int = Field(0, ge=0, le=2 ** 64 - 1)
    tolerances: Dict[str, float] = {}
    output_dir: Optional[str] = None
    moment_k_values: List[NonNegativeInt] = [1, 10, 50]
    sde_steps: PositiveInt = 2048
    sde_paths: Optional[PositiveInt] = None
    diagnostic_paths: NonNegativeInt = 10_000

    @model_validator(mode="after")
    def _consistent(self):
        if self.schema_version != SCENARIO_SCHEMA_VERSION:
            raise ValueError(f"unsupported scenario schema {self.schema_version}, expected {SCENARIO_SCHEMA_VERSION}")
        if not self.n_ladder:
            raise ValueError("n_ladder must not be empty")
        if not self.t_values:
            raise ValueError("t_values must not be empty")
        unknown = sorted(set(self.tolerances) - KNOWN_TOLERANCES)
        if unknown:
            raise ValueError(f"unknown tolerance keys {unknown}; known: {sorted(KNOWN_TOLERANCES)}")
        if any(not math.isfinite(v) for v in self.tolerances.values()):
            raise ValueError("tolerances must be finite")

        K = self.gw.horizon_K
        reach = max(self.T, max(self.t_values))
        needed = floor_index(max(self.n_ladder), reach)
        if K < needed:
            raise ValueError(
                f"gw.horizon_K={K} is shorter than floor(n_max * max(T, t))={needed} "
                f"(n_max={max(self.n_ladder)}, horizon {reach})"
            )
        if self.moment_k_values and max(self.moment_k_values) > K:
            raise ValueError(f"moment_k_values exceed gw.horizon_K={K}")

        if self.sde is not None:
            derived = self.derived_sde()
            for name in ("m_eps", "sigma2_xi"):
                given, implied = getattr(self.sde, name), getattr(derived, name)
                if abs(given - implied) > SDE_CROSS_CHECK_TOLERANCE * max(1.0, abs(implied)):
                    raise ValueError(f"sde.{name}={given} contradicts the value {implied} implied by gw")
        return self

    def derived_sde(self) -> SDEParams:
        return SDEParams(
            m_eps=self.gw.immigration.mean(),
            sigma2_xi=self.gw.offspring.variance(),
            x0=0.0,
        )

    def sde_params(self) -> SDEParams:
        return self.sde if self.sde is not None else self.derived_sde()


def _parse_value(raw: str) -> Any:
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        return raw


class ScenarioService:
    """Reads, overrides and validates scenario documents"""

    def apply_overrides(self, document: Dict[str, Any], overrides: Sequence[str]) -> Dict[str, Any]:
        """
        Apply key=value overrides in order.

        Args:
            document: Raw scenario document (modified in place)
            overrides: Items like "gw.horizon_K=2000" or "tolerances.fdd_ks=0.03"

        Returns:
            dict: The document

        Raises:
            ScenarioError: Malformed override or path through a non-container
        """
        for item in overrides:
            key, sep, raw = item.partition("=")
            if not sep or not key.strip():
                raise ScenarioError(f"Override '{item}' is not of the form key=value")
            parts = key.strip().split(".")
            target = document
            for depth, part in enumerate(parts[:-1]):
                target = self._step_into(target, part, ".".join(parts[: depth + 1]))
            self._assign(target, parts[-1], _parse_value(raw), key)
            logger.debug(f"Override {key} = {raw}")
        return document

    @staticmethod
    def _step_into(container, part: str, where: str):
        if isinstance(container, list):
            try:
                return container[int(part)]
            except (ValueError, IndexError):
                raise ScenarioError(f"Override path '{where}': no list element {part}")
        if not isinstance(container, dict):
            raise ScenarioError(f"Override path '{where}' goes through a non-object value")
        return container.setdefault(part, {})

    @staticmethod
    def _assign(container, part: str, value: Any, key: str):
        if isinstance(container, list):
            try:
                container[int(part)] = value
            except (ValueError, IndexError):
                raise ScenarioError(f"Override '{key}': no list element {part}")
        elif isinstance(container, dict):
            container[part] = value
        else:
            raise ScenarioError(f"Override '{key}' targets a non-object value")

    def parse(self, document: Dict[str, Any], source: str = "<scenario>") -> Scenario:
        try:
            return Scenario.model_validate(document)
        except ValidationError as e:
            diagnostics = [
                f"{'.'.join(str(p) for p in err['loc']) or '<root>'}: {err['msg']}"
                for err in e.errors()
            ]
            raise ScenarioError(f"Invalid scenario {source}", diagnostics) from e

    def load(self, path, overrides: Sequence[str] = (), seed: Optional[int] = None) -> Scenario:
        """
        Load a scenario file.

        Args:
            path: JSON scenario file
            overrides: key=value items, applied in order
            seed: Master seed override; GWI_SEED is used when None

        Returns:
            Scenario: Validated scenario

        Raises:
            ScenarioError: Unreadable file, invalid JSON (with line and column) or invalid fields
        """
        path = Path(path)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as e:
            raise ScenarioError(f"Cannot read scenario {path}: {e}") from e
        try:
            document = json.loads(text)
        except json.JSONDecodeError as e:
            raise ScenarioError(f"Invalid JSON in {path}", [f"line {e.lineno}, column {e.colno}: {e.msg}"]) from e
        if not isinstance(document, dict):
            raise ScenarioError(f"Scenario {path} must be a JSON object")

        self.apply_overrides(document, overrides)
        seed = seed if seed is not None else seed_override()
        if seed is not None:
            logger.info(f"🎲 master_seed overridden: {seed}")
            document["master_seed"] = seed

        scenario = self.parse(document, str(path))
        logger.info(
            f"📄 Scenario '{scenario.name}': K={scenario.gw.horizon_K}, n_paths={scenario.n_paths}, "
            f"regime={scenario.gw.regime().value}"
        )
        return scenario


# Global scenario service instance
scenario_service = ScenarioService()
