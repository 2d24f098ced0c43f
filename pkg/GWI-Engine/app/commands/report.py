"""
report: render a previously written report
"""

import click

from ..services.report_service import report_service
from .common import handle_errors


@click.command("report")
@click.argument("report_file", type=click.Path(exists=True, dir_okay=False))
@click.pass_context
@handle_errors
def command(ctx, report_file):
    """Print REPORT_FILE as a table; exit status 0 iff all gated tests passed"""
    report = report_service.load(report_file)
    click.echo(report_service.render(report))
    ctx.exit(0 if report.all_passed else 1)
