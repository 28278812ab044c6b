"""
dpmixsgd - Main Entry Point
Experiment runner for differentially private decentralized min-max optimization
"""

import os
import sys
from pathlib import Path
from typing import Optional, Tuple

# Add project root to Python path
sys.path.insert(0, str(Path(__file__).parent))

import click
from loguru import logger
from pydantic import ValidationError as PydanticValidationError
from rich.console import Console

from core.config import LOG_LEVEL_ENV, ConfigManager
from core.engine import ExperimentEngine
from core.error_handler import ErrorHandler
from core.exceptions import ValidationError
from core.models import PrivacyBudget
from core.privacy import calibrate_sigma
from core.topology import build_topology
from reporters.summary import render_summary, summarize

console = Console()


def _fail(e: BaseException, verbose: bool) -> None:
    ErrorHandler.handle_exception(e, verbose=verbose)
    sys.exit(130 if isinstance(e, KeyboardInterrupt) else 1)


@click.group()
@click.version_option(package_name="dpmixsgd", message="%(prog)s %(version)s")
def cli():
    """
    dpmixsgd - private decentralized min-max experiments

    Examples:
        # Synthetic quick run
        dpmixsgd run config/templates/quick.yaml

        # Table-style summary of one or more result files
        dpmixsgd summarize results/sweep_theta.csv

        # Noise level for a budget
        dpmixsgd calibrate --theta 0.05 --gamma 3.3e-5 --T 5700 --m 10 --Lg 12.3

        # Inspect a communication graph
        dpmixsgd topology --m 10 --p 0.5 --seed 0
    """
    logger.remove()
    logger.add(sys.stderr, level=os.environ.get(LOG_LEVEL_ENV, "WARNING").upper())


@cli.command()
@click.argument('config_path', type=click.Path(exists=True, dir_okay=False))
@click.option('--output', default=None, help='Override output.path')
@click.option('--workers', type=int, default=None, help='Override advanced.max_workers')
@click.option('--progress/--no-progress', default=True, help='Live progress bar')
@click.option('--verbose', '-v', is_flag=True, help='Show original errors and tracebacks')
def run(config_path: str, output: Optional[str], workers: Optional[int], progress: bool, verbose: bool):
    """Run the experiment described by CONFIG_PATH (YAML or run manifest)."""
    try:
        config_manager = ConfigManager(config_path)
        if output:
            config_manager.set('output.path', output)
            config_manager.set('output.manifest', None)
        if workers:
            config_manager.set('advanced.max_workers', workers)

        result = ExperimentEngine(config_manager, enable_progress_display=progress).run()

        console.print(f"[green]✓[/green] {result.runs} runs, {result.rows} rows")
        console.print(f"  results:  {result.csv_path}")
        console.print(f"  manifest: {result.manifest_path}")
    except (Exception, KeyboardInterrupt) as e:
        _fail(e, verbose)


@cli.command(name='summarize')
@click.argument('files', nargs=-1, required=True, type=click.Path(exists=True, dir_okay=False))
@click.option('--output', default=None, help='Write the summary CSV here')
@click.option('--verbose', '-v', is_flag=True)
def summarize_cmd(files: Tuple[str, ...], output: Optional[str], verbose: bool):
    """Final-epoch AUROC per method and sweep point, over seeds."""
    try:
        summary = summarize(files, output)
        render_summary(summary, console)
        if output:
            console.print(f"[green]✓[/green] Summary written to {output}")
    except Exception as e:
        _fail(e, verbose)


@cli.command()
@click.option('--theta', type=float, required=True, help='Privacy parameter theta')
@click.option('--gamma', type=float, required=True, help='Failure probability gamma')
@click.option('--T', 'T', type=int, required=True, help='Number of iterations')
@click.option('--m', type=int, required=True, help='Number of agents')
@click.option('--Lg', 'L_g', type=float, required=True, help='Gradient-norm bound')
@click.option('--c', type=float, default=1.0, show_default=True, help='Calibration constant')
def calibrate(theta: float, gamma: float, T: int, m: int, L_g: float, c: float):
    """Print the Gaussian noise level sigma for a (theta, gamma) budget."""
    try:
        try:
            budget = PrivacyBudget(theta=theta, gamma=gamma, c=c, L_g=L_g)
        except PydanticValidationError as e:
            reasons = "; ".join(err['msg'].replace("Value error, ", "") for err in e.errors())
            raise ValidationError(reasons, original_error=e)
        sigma, _ = calibrate_sigma(budget, T, m)
        click.echo(repr(sigma))
    except Exception as e:
        _fail(e, False)


@cli.command()
@click.option('--m', type=int, required=True, help='Number of agents')
@click.option('--p', type=float, required=True, help='Edge probability')
@click.option('--seed', type=int, default=0, show_default=True)
def topology(m: int, p: float, seed: int):
    """Print the Erdos-Renyi edge list and the spectral gap lambda."""
    try:
        mixing = build_topology(m, p, seed)
        click.echo(mixing.graph.to_edge_list(), nl=False)
        click.echo(f"# lambda {mixing.lam!r}")
        if mixing.graph.repaired:
            click.echo(f"# repaired with {len(mixing.graph.repair_edges)} ring edges")
    except Exception as e:
        _fail(e, False)


if __name__ == '__main__':
    cli()
