"""
GWI Engine Errors

Error types raised by the simulation and verification services.
Commands translate them into exit codes (see app/commands/).
"""

from typing import Optional


class GWIError(Exception):
    """Base class for all engine errors"""


class DomainError(GWIError, ValueError):
    """A parameter lies outside the domain of the requested operation"""


class PreconditionError(GWIError, ValueError):
    """Inputs violate an operation's pre-condition (short horizon, missing data)"""


class PopulationOverflowError(GWIError, OverflowError):
    """
    A population count left the 64-bit unsigned range.

    Counts are never wrapped; the generation (and the path when known)
    that overflowed travel with the error.
    """

    def __init__(self, generation: int, path_index: Optional[int] = None, detail: str = ""):
        self.generation = generation
        self.path_index = path_index
        self.detail = detail
        where = f"generation {generation}"
        if path_index is not None:
            where = f"path {path_index}, {where}"
        message = f"Population overflow at {where}"
        if detail:
            message = f"{message}: {detail}"
        super().__init__(message)

    def with_path(self, path_index: int) -> "PopulationOverflowError":
        return PopulationOverflowError(self.generation, path_index, self.detail)


class ScenarioError(GWIError, ValueError):
    """Scenario file could not be parsed or validated"""

    def __init__(self, message: str, diagnostics: Optional[list[str]] = None):
        self.diagnostics = diagnostics or []
        if self.diagnostics:
            message = message + "\n" + "\n".join(f"  - {d}" for d in self.diagnostics)
        super().__init__(message)
