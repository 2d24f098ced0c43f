"""
simulate: write a seeded path ensemble as CSV or binary
"""

import logging

import click

from ..services.export_service import export_service
from ..services.gw_engine import generate_ensemble
from .common import format_option, handle_errors, load, output_dir, scenario_options

logger = logging.getLogger(__name__)


@click.command("simulate")
@scenario_options
@format_option("csv", "binary")
@handle_errors
def command(scenario_file, overrides, threads, out_dir, fmt):
    """Simulate n_paths paths of the scenario's process"""
    scenario = load(scenario_file, overrides, threads)
    ensemble = generate_ensemble(scenario.gw, scenario.master_seed, scenario.n_paths, threads)
    out = output_dir(scenario, out_dir)

    try:
        if fmt == "binary":
            path = export_service.write_ensemble_binary(ensemble, out / "ensemble.gwie")
        else:
            path = export_service.write_ensemble_csv(ensemble, out / "ensemble.csv", scenario.gw.immigration.mean())
    finally:
        ensemble.release()
    click.echo(str(path))
