"""
moments: exact moment table (and order certificates in the critical case)
"""

import logging

import click

from ..services.export_service import export_service
from ..services.moments import moment_params, moment_table, order_certificates
from .common import format_option, handle_errors, load, output_dir, scenario_options

logger = logging.getLogger(__name__)


@click.command("moments")
@scenario_options
@format_option("csv", "json")
@handle_errors
def command(scenario_file, overrides, threads, out_dir, fmt):
    """Tabulate E X_k, Var X_k and E M_k^2 for k = 1..K"""
    scenario = load(scenario_file, overrides, threads)
    params = moment_params(scenario.gw)
    K = scenario.gw.horizon_K
    table = moment_table(params, range(1, K + 1))
    out = output_dir(scenario, out_dir)

    if fmt == "json":
        path = out / "moments.json"
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes((table.model_dump_json(indent=2) + "\n").encode("utf-8"))
    else:
        path = export_service.write_csv(table.to_frame(), out / "moments.csv")
    click.echo(str(path))

    if params.is_critical and K >= 2:
        certificates = export_service.write_csv(order_certificates(params, K), out / "certificates.csv")
        click.echo(str(certificates))
    else:
        logger.info(f"Order certificates skipped ({scenario.gw.regime().value}, K={K})")
