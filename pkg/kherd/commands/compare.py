import logging
from pathlib import Path

import click
import numpy as np
from flask import Blueprint

from kherd.cli import experiment_command
from kherd.commands.gm_herd import build_target, target_options
from kherd.constants import ArtifactName, RngStream
from kherd.models.herding import HerdingConfig
from kherd.models.kernel import GaussianKernel
from kherd.models.manifest import RunManifest
from kherd.models.target import EmpiricalDistribution
from kherd.services.evaluation_service import EvaluationService, default_t_grid
from kherd.services.target_service import TargetService
from kherd.utils.artifacts import write_json, write_rates, write_traces
from kherd.utils.numerics import derive_rng
from kherd.utils.validators import parse_int_list, parse_name_list

logger = logging.getLogger(__name__)
bp = Blueprint('compare', __name__, cli_group=None)


@experiment_command(bp.cli, 'compare')
@target_options
@click.option('--functions', help='Comma-separated test functions')
@click.option('--T', 'T', type=int, help='Largest T when no grid is given')
@click.option('--t-grid', '--T-grid', 't_grid', help='Comma-separated sample counts')
@click.option('--iid-repeats', 'iid_repeats', type=int)
@click.option('--ground-truth-draws', 'ground_truth_draws', type=int)
@click.option('--empirical', type=int, help='Herd over N draws from the mixture instead of the mixture')
@click.option('--n-seeds', 'n_seeds', type=int)
@click.option('--max-iter', 'max_iter', type=int)
def compare(settings: dict, out_dir: Path, manifest: RunManifest) -> None:
    """Herding against iid sampling on test-function error traces."""
    seed = settings['seed']
    gm = build_target(settings)
    t_grid = parse_int_list(settings.get('t_grid'))
    t_grid = np.asarray(t_grid, dtype=int) if t_grid else default_t_grid(settings['T'])
    kernel = GaussianKernel(settings['sigma']) if settings.get('sigma') else None

    empirical = None
    if settings['empirical']:
        points = TargetService.gm_sample(derive_rng(seed, RngStream.REFERENCE), gm, settings['empirical'])
        empirical = EmpiricalDistribution(points)

    table = EvaluationService.compare_estimators(
        gm, parse_name_list(settings['functions']), t_grid, settings['iid_repeats'], seed,
        config=HerdingConfig(n_seeds=settings['n_seeds'], max_iter=settings['max_iter']),
        kernel=kernel, ground_truth_draws=settings['ground_truth_draws'], empirical=empirical,
        target_id=settings.get('target') or settings.get('preset') or 'random')

    manifest.add(write_traces(out_dir / ArtifactName.TRACES, table.traces))
    manifest.add(write_rates(out_dir / ArtifactName.RATES, table.rates))
    manifest.add(write_json(out_dir / ArtifactName.TARGET, TargetService.gm_to_dict(gm)))
    manifest.results = {'dataset_errors': table.dataset_errors, 'n_traces': len(table.traces)}
