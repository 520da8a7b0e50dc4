import logging
from pathlib import Path

import click
from flask import Blueprint

from kherd.cli import experiment_command
from kherd.constants import Mode, RngStream
from kherd.models.herding import HerdingConfig
from kherd.models.kernel import GaussianKernel
from kherd.models.manifest import RunManifest
from kherd.models.target import EmpiricalDistribution
from kherd.services.herding_service import HerdingService
from kherd.utils.artifacts import save_super_samples
from kherd.utils.import_dataset import load_matrix_csv
from kherd.utils.numerics import derive_rng

logger = logging.getLogger(__name__)
bp = Blueprint('empirical_herd', __name__, cli_group=None)


@experiment_command(bp.cli, 'empirical-herd')
@click.option('--input', 'input', help='CSV sample matrix, one point per row')
@click.option('--sigma', type=float, help='Kernel bandwidth (median heuristic when omitted)')
@click.option('--T', 'T', type=int, help='Number of super-samples')
@click.option('--unique', is_flag=True, default=None, help='Select each row at most once')
def empirical_herd(settings: dict, out_dir: Path, manifest: RunManifest) -> None:
    """Discrete herding over the rows of a CSV sample matrix."""
    seed = settings['seed']
    points = load_matrix_csv(settings['input'])
    distribution = EmpiricalDistribution(points)
    logger.info(f"Herding over {distribution.size} rows of {settings['input']}")

    kernel = GaussianKernel(settings['sigma']) if settings.get('sigma') else None
    config = HerdingConfig(mode=Mode.DISCRETE, t_max=settings['T'], seed=seed, unique=bool(settings['unique']))
    result = HerdingService.run_herding(config, distribution, derive_rng(seed, RngStream.HERDING), kernel=kernel)

    manifest.add(*save_super_samples(result, out_dir))
    manifest.results = {
        'sigma': result.sigma,
        'n_rows': distribution.size,
        'final_error': float(result.errors[-1]) if result.T else None,
    }
