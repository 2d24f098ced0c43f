"""
GWI Engine - Command-Line Application

This is the root click group that:
1. Configures logging (stderr, so stdout carries only tables and paths)
2. Registers all commands
3. Exposes the version

Commands:
- simulate: path ensemble as CSV or binary
- moments:  exact moment table and order certificates
- sde:      limit diffusion endpoints and paths
- converge: gated test suite, JSON report, exit status
- report:   render a prior report

To run this application:
    python run.py converge --scenario scenarios/poisson-critical.json
"""

import logging

import click

from app.config import APP_DESCRIPTION, APP_NAME, APP_VERSION, setup_logging

# Import commands
from app.commands import converge
from app.commands import moments
from app.commands import report
from app.commands import sde
from app.commands import simulate

logger = logging.getLogger(__name__)

# =============================================================================
# Root Command Group
# =============================================================================


@click.group(help=APP_DESCRIPTION)
@click.version_option(APP_VERSION, prog_name=APP_NAME)
@click.option("--verbose", is_flag=True, help="Debug logging")
def cli(verbose: bool):
    setup_logging("DEBUG" if verbose else None)


# =============================================================================
# Register Commands
# =============================================================================

cli.add_command(simulate.command)
cli.add_command(moments.command)
cli.add_command(sde.command)
cli.add_command(converge.command)
cli.add_command(report.command)


if __name__ == "__main__":
    cli()
