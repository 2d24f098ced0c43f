"""
converge: run the scenario's test suite and write the JSON report
"""

import logging

import click

from ..services.convergence import run_suite
from ..services.report_service import report_service
from .common import format_option, handle_errors, load, output_dir, scenario_options

logger = logging.getLogger(__name__)


@click.command("converge")
@scenario_options
@format_option("json", default="json")
@click.pass_context
@handle_errors
def command(ctx, scenario_file, overrides, threads, out_dir, fmt):
    """Run the gated tests; exit status 0 iff all pass"""
    scenario = load(scenario_file, overrides, threads)
    report = run_suite(scenario, workers=threads)
    report_service.write(report, output_dir(scenario, out_dir) / "report.json")
    click.echo(report_service.render(report))
    ctx.exit(0 if report.all_passed else 1)
