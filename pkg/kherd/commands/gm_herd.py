import logging
from pathlib import Path

import click
from flask import Blueprint

from kherd.cli import experiment_command
from kherd.constants import ArtifactName, Mode, RngStream
from kherd.models.herding import HerdingConfig
from kherd.models.kernel import GaussianKernel
from kherd.models.manifest import RunManifest
from kherd.models.target import GaussianMixture
from kherd.services.herding_service import HerdingService
from kherd.services.target_service import TargetService
from kherd.utils.artifacts import save_super_samples, write_json, write_matrix
from kherd.utils.numerics import derive_rng

logger = logging.getLogger(__name__)
bp = Blueprint('gm_herd', __name__, cli_group=None)


def target_options(func):
    """Mixture flags shared with compare."""
    options = [
        click.option('--preset', help="Named configuration ('scatter-2d', 'moments-5d')"),
        click.option('--target', help='Mixture JSON (dim, weights, means, covariances)'),
        click.option('--dim', type=int, help='Dimension of a random mixture'),
        click.option('--components', type=int, help='Components of a random mixture'),
        click.option('--mean-low', 'mean_low', type=float),
        click.option('--mean-high', 'mean_high', type=float),
        click.option('--cov-scale', 'cov_scale', type=float),
        click.option('--sigma', type=float, help='Kernel bandwidth (median heuristic when omitted)'),
    ]
    for option in reversed(options):
        func = option(func)
    return func


def build_target(settings: dict) -> GaussianMixture:
    """Mixture from --target, else a random one from the TARGET stream of the seed."""
    if settings.get('target'):
        return TargetService.load_gm(settings['target'])
    return TargetService.gm_random(
        derive_rng(settings['seed'], RngStream.TARGET), settings['dim'], settings['components'],
        settings['mean_low'], settings['mean_high'], settings['cov_scale'])


@experiment_command(bp.cli, 'gm-herd')
@target_options
@click.option('--T', 'T', type=int, help='Number of super-samples')
@click.option('--n-seeds', 'n_seeds', type=int)
@click.option('--max-iter', 'max_iter', type=int)
def gm_herd(settings: dict, out_dir: Path, manifest: RunManifest) -> None:
    """Herd T super-samples from a Gaussian mixture and write them next to T iid draws."""
    seed = settings['seed']
    gm = build_target(settings)
    kernel = GaussianKernel(settings['sigma']) if settings.get('sigma') else None
    config = HerdingConfig(mode=Mode.CONTINUOUS, t_max=settings['T'], n_seeds=settings['n_seeds'],
                           max_iter=settings['max_iter'], seed=seed)

    result = HerdingService.run_herding(config, gm, derive_rng(seed, RngStream.HERDING), kernel=kernel)

    manifest.add(*save_super_samples(result, out_dir))
    manifest.add(write_json(out_dir / ArtifactName.TARGET, TargetService.gm_to_dict(gm)))
    iid = TargetService.gm_sample(derive_rng(seed, RngStream.IID), gm, settings['T'])
    manifest.add(write_matrix(out_dir / ArtifactName.IID_SAMPLES, iid))

    manifest.results = {
        'sigma': result.sigma,
        'final_error': float(result.errors[-1]) if result.T else None,
    }
