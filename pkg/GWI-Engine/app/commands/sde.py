"""
sde: simulate the limit diffusion and write endpoint and path CSVs
"""

import logging

import click

from ..exceptions import DomainError
from ..services.diffusion import Output, Scheme, simulate_paths
from ..services.export_service import export_service
from .common import handle_errors, load, output_dir, scenario_options

logger = logging.getLogger(__name__)


@click.command("sde")
@scenario_options
@click.option("--scheme", type=click.Choice([s.value for s in Scheme]), default=None,
              help="Default: exact_transition, or Euler when sigma2_xi = 0")
@click.option("--steps", type=click.IntRange(min=1), default=None, help="Grid steps (default: scenario sde_steps)")
@click.option("--paths", "n_paths", type=click.IntRange(min=1), default=None,
              help="Endpoints to simulate (default: sde_paths, then n_paths)")
@click.option("--keep-paths", type=click.IntRange(min=0), default=10, show_default=True,
              help="Full paths written to sde_paths.csv")
@handle_errors
def command(scenario_file, overrides, threads, out_dir, scheme, steps, n_paths, keep_paths):
    """Simulate dX = m_eps dt + sqrt(sigma2_xi X+) dW on [0, T]"""
    scenario = load(scenario_file, overrides, threads)
    params = scenario.sde_params()
    if scheme is None:
        scheme = Scheme.EXACT_TRANSITION if params.sigma2_xi > 0 else Scheme.EULER_FULL_TRUNCATION
    scheme = Scheme(scheme)
    if scheme == Scheme.EXACT_TRANSITION and params.sigma2_xi == 0:
        raise DomainError("exact transitions need sigma2_xi > 0; use --scheme euler_full_truncation")

    steps = steps or scenario.sde_steps
    n_paths = n_paths or scenario.sde_paths or scenario.n_paths
    T = scenario.T
    out = output_dir(scenario, out_dir)

    endpoints = simulate_paths(params, T, steps, scenario.master_seed, n_paths, scheme, threads, Output.ENDPOINT)
    click.echo(str(export_service.write_endpoints_csv(endpoints, out / "sde_endpoints.csv")))

    if keep_paths:
        # same lanes as the first endpoints, so the files agree
        paths = simulate_paths(params, T, steps, scenario.master_seed, min(keep_paths, n_paths), scheme,
                               threads, Output.PATH)
        click.echo(str(export_service.write_paths_csv(paths, T, out / "sde_paths.csv")))
