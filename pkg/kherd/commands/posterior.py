import logging
from pathlib import Path

import click
import numpy as np
from flask import Blueprint

from kherd.cli import experiment_command
from kherd.constants import ArtifactName, ErrorMessage, PosteriorDefaults, RngStream
from kherd.exceptions import ConfigError, DegenerateTrace
from kherd.models.manifest import RunManifest
from kherd.models.posterior import Dataset
from kherd.services.evaluation_service import EvaluationService, default_t_grid
from kherd.services.posterior_service import PosteriorService
from kherd.utils.artifacts import save_chain, save_super_samples, write_json, write_traces
from kherd.utils.numerics import derive_rng
from kherd.utils.validators import parse_int_list

logger = logging.getLogger(__name__)
bp = Blueprint('posterior', __name__, cli_group=None)


def uses_dataset(settings: dict) -> bool:
    if settings.get('dataset') and settings.get('synthetic'):
        raise ConfigError(ErrorMessage.INVALID_VALUE.format(
            field='dataset', reason='--dataset and --synthetic are mutually exclusive'), field='dataset')
    return bool(settings.get('dataset'))


def load_data(settings: dict) -> Dataset:
    """The CSV named by --dataset, else the synthetic logistic dataset."""
    if uses_dataset(settings):
        return PosteriorService.load_dataset(settings['dataset'], seed=settings['seed'], n_train=settings['n_train'])
    logger.info("No dataset given; using the synthetic logistic dataset")
    return PosteriorService.synthetic_dataset(derive_rng(settings['seed'], RngStream.SPLIT))


def kernel_sigma(settings: dict):
    """--sigma, else the fixed dataset bandwidth for CSV data, else None (median heuristic)."""
    if settings.get('sigma'):
        return settings['sigma']
    return PosteriorDefaults.DATASET_SIGMA if uses_dataset(settings) else None


def _slope(trace):
    try:
        return EvaluationService.fit_rate(trace).slope
    except DegenerateTrace:
        return None


@experiment_command(bp.cli, 'posterior')
@click.option('--dataset', help='CSV with the 0/1 label in the last column')
@click.option('--synthetic', is_flag=True, default=None, help='Use the seeded synthetic logistic dataset')
@click.option('--n-train', 'n_train', type=int, help='Training rows after the shuffle')
@click.option('--keep', type=int, help='Kept MH draws')
@click.option('--thin', type=int)
@click.option('--burn-in', 'burn_in', type=int)
@click.option('--prior-var', 'prior_var', type=float)
@click.option('--proposal-scale', 'proposal_scale', type=float,
              help='Random-walk scale (tuned on pilot chains when omitted)')
@click.option('--no-bias', 'bias', flag_value=False, default=None, help='Fit without an intercept')
@click.option('--sigma', type=float, help='Kernel bandwidth in whitened units')
@click.option('--T', 'T', type=int, help='Largest T when no grid is given')
@click.option('--t-grid', '--T-grid', 't_grid', help='Comma-separated sample counts')
@click.option('--subset-repeats', 'subset_repeats', type=int)
@click.option('--reference-keep', 'reference_keep', type=int,
              help='Draws of an independent reference chain (0 = none)')
def posterior(settings: dict, out_dir: Path, manifest: RunManifest) -> None:
    """Sample a logistic-regression posterior and compress it by herding."""
    # ingest -> whiten -> MH -> compress -> evaluate against bootstrap subsets
    seed = settings['seed']
    bias = bool(settings['bias'])
    data = load_data(settings)
    sigma = kernel_sigma(settings)
    train, test = data.train, data.test

    transform, train_features = PosteriorService.pca_whiten(train.features)
    train_w = Dataset(train_features, train.labels)
    test_w = Dataset(transform.apply(test.features), test.labels)

    chain = PosteriorService.mh_sample(
        train_w, settings['prior_var'], settings['proposal_scale'], settings['keep'], settings['thin'],
        settings['burn_in'], rng=derive_rng(seed, RngStream.MCMC), seed=seed, bias=bias)
    chain.whiten = transform

    reference = None
    if settings['reference_keep']:
        reference = PosteriorService.mh_sample(
            train_w, settings['prior_var'], chain.proposal_scale, settings['reference_keep'], settings['thin'],
            settings['burn_in'], rng=derive_rng(seed, RngStream.REFERENCE), seed=seed, bias=bias)

    t_grid = parse_int_list(settings.get('t_grid'))
    t_grid = np.asarray(t_grid, dtype=int) if t_grid else default_t_grid(settings['T'])
    report = PosteriorService.evaluate_compression(
        chain, test_w, t_grid, settings['subset_repeats'], seed, sigma=sigma, reference=reference)

    traces = report['traces']
    manifest.add(*save_chain(chain, out_dir))
    manifest.add(*save_super_samples(report['herding'], out_dir))
    manifest.add(write_traces(out_dir / ArtifactName.RMSE_TRACES,
                              [t for t in traces if t.function.startswith('predictive_rmse')]))
    manifest.add(write_traces(out_dir / ArtifactName.ACCURACY_TRACES,
                              [t for t in traces if t.function == 'accuracy']))

    rmse = {t.estimator: t for t in traces if t.function == 'predictive_rmse'}
    summary = {
        'n_train': train.n,
        'n_test': test.n,
        'retained_dim': transform.retained_dim,
        'acceptance_rate': chain.acceptance_rate,
        'proposal_scale': chain.proposal_scale,
        'sigma': report['herding'].sigma,
        'noise_floor': report['noise_floor'],
        'full_accuracy': report['full_accuracy'],
        'samples_to_floor': report['samples_to_floor'],
        'samples_to_accuracy': report['samples_to_accuracy'],
        'dataset_vs_reference': report.get('dataset_vs_reference'),
        'slopes': {name: _slope(trace) for name, trace in sorted(rmse.items())},
    }
    manifest.add(write_json(out_dir / ArtifactName.POSTERIOR_SUMMARY, summary))
    manifest.results = summary
