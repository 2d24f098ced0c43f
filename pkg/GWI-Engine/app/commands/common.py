"""
Shared command options and error translation
"""

import functools
import logging
from pathlib import Path

import click

from ..config import DEFAULT_THREADS, OUTPUT_DIR, validate_and_log_configuration
from ..exceptions import GWIError, ScenarioError
from ..services.scenario_service import Scenario, scenario_service

logger = logging.getLogger(__name__)


def scenario_options(func):
    """--scenario, --set, --threads and --out, shared by the job commands"""
    func = click.option("--out", "out_dir", type=click.Path(file_okay=False), default=None,
                        help="Output directory (default: scenario output_dir, then GWI_OUTPUT_DIR)")(func)
    func = click.option("--threads", type=click.IntRange(min=1), default=DEFAULT_THREADS, show_default=True,
                        help="Worker threads; never changes results")(func)
    func = click.option("--set", "overrides", multiple=True, metavar="KEY=VALUE",
                        help="Override a scenario field by dotted path (repeatable, last wins)")(func)
    func = click.option("--scenario", "scenario_file", required=True,
                        type=click.Path(exists=True, dir_okay=False), help="Scenario JSON file")(func)
    return func


def format_option(*choices: str, default: str = "csv"):
    return click.option("--format", "fmt", type=click.Choice(list(choices)), default=default,
                        show_default=True, help="Artifact format")


def handle_errors(func):
    """
    Translate engine errors into click errors.

    Scenario problems are usage errors (exit 2); anything the engine rejects
    at run time is a ClickException (exit 1).
    """
    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except ScenarioError as e:
            raise click.UsageError(str(e))
        except (GWIError, ValueError, OverflowError) as e:
            logger.error(f"❌ {type(e).__name__}: {e}")
            raise click.ClickException(str(e))
    return wrapper


def load(scenario_file: str, overrides, threads: int) -> Scenario:
    validate_and_log_configuration(threads)
    return scenario_service.load(scenario_file, overrides)


def output_dir(scenario: Scenario, out_dir) -> Path:
    return Path(out_dir or scenario.output_dir or OUTPUT_DIR)
