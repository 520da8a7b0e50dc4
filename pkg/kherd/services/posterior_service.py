# kherd/services/posterior_service.py
"""
Bayesian logistic-regression posterior pipeline: ingestion, PCA whitening,
Metropolis-Hastings sampling, predictive evaluation and compression of the
posterior sample set by discrete herding.
"""

import logging
from typing import Callable, Dict, Optional, Sequence, Tuple

import numpy as np
from scipy.special import expit, log_expit

from kherd.constants import (
    Estimator, Mode, PosteriorDefaults, RngStream, LogMessage, ErrorMessage)
from kherd.exceptions import (
    DegenerateData, DimensionMismatch, EmptySet, EmptyThetaSet, ConfigError)
from kherd.models.evaluation import ErrorTrace
from kherd.models.herding import HerdingConfig, SuperSampleSet
from kherd.models.kernel import GaussianKernel
from kherd.models.posterior import Dataset, PosteriorChain, WhitenTransform
from kherd.models.target import EmpiricalDistribution
from kherd.services.herding_service import HerdingService
from kherd.services.kernel_service import KernelService
from kherd.utils.import_dataset import DatasetSchema, load_labelled_csv
from kherd.utils.numerics import as_points, as_vec, derive_rng

logger = logging.getLogger(__name__)


def design_matrix(features, bias: bool = True) -> np.ndarray:
    """Features with a constant-1 column appended when bias is set."""
    features = as_points(features)
    if not bias:
        return features
    return np.hstack([features, np.ones((features.shape[0], 1))])


def _check_thetas(thetas, name: Optional[str] = None) -> np.ndarray:
    thetas = np.asarray(thetas, dtype=float)
    if thetas.ndim == 1:
        thetas = thetas.reshape(1, -1) if thetas.size else thetas.reshape(0, 0)
    if thetas.shape[0] == 0:
        if name is None:
            raise EmptyThetaSet(ErrorMessage.EMPTY_THETA_SET)
        raise EmptySet(ErrorMessage.EMPTY_SET.format(name=name))
    return thetas


class PosteriorService:
    """Service class for the posterior sampling and compression pipeline."""

    # ============================================
    # DATA
    # ============================================

    @staticmethod
    def split(n: int, n_train: int, seed: int) -> Tuple[np.ndarray, np.ndarray]:
        """Seeded shuffle; the first n_train rows train, the rest test."""
        order = derive_rng(seed, RngStream.SPLIT).permutation(n)
        n_train = min(n_train, n)
        return np.sort(order[:n_train]), np.sort(order[n_train:])

    @staticmethod
    def load_dataset(path, schema: DatasetSchema = DatasetSchema(), seed: int = 0,
                     n_train: int = PosteriorDefaults.N_TRAIN) -> Dataset:
        """
        Read a CSV (last column = 0/1 label) and split it train/test.

        Raises:
            EmptyFile, ParseError, NonBinaryLabel: see load_labelled_csv
        """
        features, labels = load_labelled_csv(path, schema)
        train_idx, test_idx = PosteriorService.split(features.shape[0], n_train, seed)
        logger.info(LogMessage.DATASET_LOADED.format(path=path, rows=features.shape[0], features=features.shape[1]))
        return Dataset(features, labels, train_idx, test_idx)

    @staticmethod
    def synthetic_dataset(rng: np.random.Generator,
                          dim: int = PosteriorDefaults.SYNTHETIC_DIM,
                          n_train: int = PosteriorDefaults.SYNTHETIC_TRAIN,
                          n_test: int = PosteriorDefaults.SYNTHETIC_TEST) -> Dataset:
        """Logistic data: features N(0, I), random true weights and bias, Bernoulli labels."""
        n = n_train + n_test
        theta = rng.standard_normal(dim)
        bias = rng.standard_normal()
        features = rng.standard_normal((n, dim))
        labels = (rng.random(n) < expit(features @ theta + bias)).astype(int)
        return Dataset(features, labels, np.arange(n_train), np.arange(n_train, n))

    @staticmethod
    def pca_whiten(features, eigen_floor: float = PosteriorDefaults.EIGEN_FLOOR
                   ) -> Tuple[WhitenTransform, np.ndarray]:
        """
        Center, rotate onto principal directions and scale to unit variance.

        Directions with eigenvalue below eigen_floor·(max eigenvalue) are dropped.

        Raises:
            DegenerateData: fewer than 2 rows, or no eigenvalue above the floor
        """
        X = as_points(features)
        if X.shape[0] < 2:
            raise DegenerateData(ErrorMessage.DEGENERATE_DATA)
        mean = X.mean(axis=0)
        covariance = np.atleast_2d(np.cov(X - mean, rowvar=False))
        eigvals, eigvecs = np.linalg.eigh(covariance)
        order = np.argsort(eigvals)[::-1]
        eigvals, eigvecs = eigvals[order], eigvecs[:, order]

        if not eigvals[0] > 0:
            raise DegenerateData(ErrorMessage.DEGENERATE_DATA)
        keep = eigvals >= eigen_floor * eigvals[0]
        projection = eigvecs[:, keep] / np.sqrt(eigvals[keep])
        transform = WhitenTransform(mean=mean, projection=projection,
                                    eigenvalues=eigvals, eigen_floor=eigen_floor)
        logger.info(LogMessage.WHITENED.format(n=X.shape[0], retained=transform.retained_dim, dim=X.shape[1]))
        return transform, transform.apply(X)

    # ============================================
    # MODEL
    # ============================================

    @staticmethod
    def log_posterior(theta, train: Dataset, prior_var: float, bias: bool = True) -> float:
        """
        Σ_n [y_n log s(θᵀx̃_n) + (1-y_n) log(1-s(θᵀx̃_n))] - ‖θ‖²/(2·prior_var)

        Raises:
            DimensionMismatch: theta does not match the feature dimension (+1 with bias)
        """
        return PosteriorService.log_posterior_fn(train, prior_var, bias)(theta)

    @staticmethod
    def log_posterior_fn(train: Dataset, prior_var: float, bias: bool = True) -> Callable[[np.ndarray], float]:
        """Closure over a fixed design matrix, used by the sampler."""
        X = design_matrix(train.features, bias)
        y = train.labels.astype(float)
        dim = X.shape[1]
        prior_weight = 0.0 if np.isinf(prior_var) else 1.0 / (2.0 * prior_var)

        def log_target(theta) -> float:
            theta = np.asarray(theta, dtype=float).reshape(-1)
            if theta.shape[0] != dim:
                raise DimensionMismatch(ErrorMessage.DIMENSION_MISMATCH.format(expected=dim, got=theta.shape[0]))
            z = X @ theta
            log_lik = y @ log_expit(z) + (1.0 - y) @ log_expit(-z)
            return float(log_lik - prior_weight * (theta @ theta))

        return log_target

    # ============================================
    # SAMPLING
    # ============================================

    @staticmethod
    def run_metropolis(log_target: Callable[[np.ndarray], float], init, proposal_scale: float,
                       n_keep: int, thin: int, burn_in: int, rng: np.random.Generator
                       ) -> Tuple[np.ndarray, float, np.ndarray]:
        """
        Random-walk Metropolis-Hastings with isotropic Gaussian proposals.

        Keeps every thin-th state after burn_in until n_keep are kept.

        Returns:
            Tuple of (kept draws (n_keep, d), acceptance rate, kept log-target values)
        """
        if proposal_scale < 0:
            raise ConfigError(ErrorMessage.INVALID_VALUE.format(field='proposal_scale', reason='must be >= 0'),
                              field='proposal_scale')
        if thin < 1:
            raise ConfigError(ErrorMessage.INVALID_VALUE.format(field='thin', reason='must be >= 1'), field='thin')

        current = as_vec(init).copy()
        current_value = log_target(current)
        if not np.isfinite(current_value):
            raise ConfigError(f"Starting point gives log target {current_value}", field='init')

        total = burn_in + n_keep * thin
        kept = np.empty((n_keep, current.shape[0]))
        kept_values = np.empty(n_keep)
        accepted = 0
        n_kept = 0
        for step in range(1, total + 1):
            proposal = current + proposal_scale * rng.standard_normal(current.shape[0])
            proposal_value = log_target(proposal)
            log_u = np.log(rng.uniform())
            delta = proposal_value - current_value
            if np.isfinite(proposal_value) and (delta >= 0 or log_u < delta):
                current, current_value = proposal, proposal_value
                accepted += 1
            if step > burn_in and (step - burn_in) % thin == 0:
                kept[n_kept] = current
                kept_values[n_kept] = current_value
                n_kept += 1

        rate = accepted / total if total else 1.0
        return kept, rate, kept_values

    @staticmethod
    def tune_proposal_scale(log_target: Callable[[np.ndarray], float], init, rng: np.random.Generator,
                            initial_scale: float = PosteriorDefaults.INITIAL_PROPOSAL_SCALE,
                            pilot_steps: int = PosteriorDefaults.PILOT_STEPS,
                            max_rounds: int = PosteriorDefaults.MAX_TUNING_ROUNDS
                            ) -> Tuple[float, float, np.ndarray]:
        """
        Halve or double the proposal scale on short pilot chains until the
        acceptance rate lands in [0.2, 0.4].

        Returns:
            Tuple of (scale, last pilot acceptance rate, last pilot state)
        """
        scale = initial_scale
        state = as_vec(init)
        rate = 0.0
        for _ in range(max_rounds):
            draws, rate, _ = PosteriorService.run_metropolis(log_target, state, scale, pilot_steps, 1, 0, rng)
            state = draws[-1]
            if rate < PosteriorDefaults.ACCEPT_LOW:
                scale /= 2.0
            elif rate > PosteriorDefaults.ACCEPT_HIGH:
                scale *= 2.0
            else:
                break
        logger.info(LogMessage.PROPOSAL_TUNED.format(scale=scale, rate=rate))
        return scale, rate, state

    @staticmethod
    def mh_sample(train: Dataset, prior_var: float = PosteriorDefaults.PRIOR_VAR,
                  proposal_scale: Optional[float] = None,
                  n_keep: int = PosteriorDefaults.N_KEEP, thin: int = PosteriorDefaults.THIN,
                  burn_in: int = PosteriorDefaults.BURN_IN, rng: Optional[np.random.Generator] = None,
                  seed: int = 0, bias: bool = True, init=None) -> PosteriorChain:
        """
        Sample logistic-regression weights with random-walk MH.

        When proposal_scale is None it is tuned on pilot chains first.
        """
        rng = rng if rng is not None else derive_rng(seed, RngStream.MCMC)
        log_target = PosteriorService.log_posterior_fn(train, prior_var, bias)
        dim = train.dim + (1 if bias else 0)
        start = np.zeros(dim) if init is None else as_vec(init, dim)
        if proposal_scale is None:
            proposal_scale, _, start = PosteriorService.tune_proposal_scale(log_target, start, rng)

        thetas, rate, values = PosteriorService.run_metropolis(
            log_target, start, proposal_scale, n_keep, thin, burn_in, rng)
        logger.info(LogMessage.CHAIN_DONE.format(kept=n_keep, rate=rate))
        return PosteriorChain(thetas=thetas, acceptance_rate=rate, proposal_scale=proposal_scale,
                              prior_var=prior_var, thin=thin, burn_in=burn_in, seed=seed,
                              bias=bias, log_posterior=values)

    # ============================================
    # PREDICTION
    # ============================================

    @staticmethod
    def predictive_matrix(thetas, features, bias: bool = True) -> np.ndarray:
        """s(θ_iᵀx̃_n) for every parameter row i and feature row n."""
        thetas = _check_thetas(thetas)
        X = design_matrix(features, bias)
        if X.shape[1] != thetas.shape[1]:
            raise DimensionMismatch(ErrorMessage.DIMENSION_MISMATCH.format(expected=thetas.shape[1], got=X.shape[1]))
        return expit(thetas @ X.T)

    @staticmethod
    def predictive_prob(thetas, x, bias: bool = True) -> float:
        """(1/m) Σ_i s(θ_iᵀx̃)."""
        return float(PosteriorService.predictive_matrix(thetas, as_vec(x).reshape(1, -1), bias).mean())

    @staticmethod
    def predictive_rmse(subset, full, test: Dataset, bias: bool = True) -> float:
        """RMSE over test points between the average predictions of two parameter sets."""
        subset = _check_thetas(subset, 'Subset')
        full = _check_thetas(full, 'Full')
        if test.n == 0:
            raise EmptySet(ErrorMessage.EMPTY_SET.format(name='Test'))
        p_subset = PosteriorService.predictive_matrix(subset, test.features, bias).mean(axis=0)
        p_full = PosteriorService.predictive_matrix(full, test.features, bias).mean(axis=0)
        return float(np.sqrt(np.mean((p_subset - p_full) ** 2)))

    @staticmethod
    def accuracy(thetas, test: Dataset, bias: bool = True) -> float:
        """Fraction of test labels matched; an average probability of exactly 0.5 predicts class 1."""
        thetas = _check_thetas(thetas, 'Parameter')
        if test.n == 0:
            raise EmptySet(ErrorMessage.EMPTY_SET.format(name='Test'))
        p = PosteriorService.predictive_matrix(thetas, test.features, bias).mean(axis=0)
        predictions = (p >= PosteriorDefaults.DECISION_THRESHOLD).astype(int)
        return float(np.mean(predictions == test.labels))

    @staticmethod
    def noise_floor(full, test: Dataset, bias: bool = True) -> float:
        """Mean over test points of std_i(s(θ_iᵀx̃_n)) / sqrt(|D|) (population std)."""
        full = _check_thetas(full, 'Full')
        if test.n == 0:
            raise EmptySet(ErrorMessage.EMPTY_SET.format(name='Test'))
        P = PosteriorService.predictive_matrix(full, test.features, bias)
        return float(np.mean(P.std(axis=0)) / np.sqrt(full.shape[0]))

    # ============================================
    # COMPRESSION
    # ============================================

    @staticmethod
    def compress_posterior(chain: PosteriorChain, sigma: Optional[float] = None, t_max: int = 100,
                           seed: int = 0, unique: bool = False) -> SuperSampleSet:
        """
        Whiten the chain and herd over it in discrete mode (selection by index),
        then map the selections back to the original θ rows.

        Args:
            chain: Posterior draws to compress
            sigma: Kernel bandwidth in whitened units; median heuristic when None
            t_max: Number of super-samples
        """
        thetas = _check_thetas(chain.thetas)
        try:
            _, whitened = PosteriorService.pca_whiten(thetas)
        except DegenerateData:
            logger.warning("Chain cannot be whitened; herding on centered parameters")
            whitened = thetas - thetas.mean(axis=0)

        distribution = EmpiricalDistribution(whitened)
        if sigma is None:
            kernel = KernelService.default_kernel(distribution, derive_rng(seed, RngStream.KERNEL))
        else:
            kernel = GaussianKernel(sigma)
        config = HerdingConfig(mode=Mode.DISCRETE, t_max=t_max, seed=seed, unique=unique)
        result = HerdingService.run_herding(config, distribution, derive_rng(seed, RngStream.HERDING), kernel=kernel)
        result.samples = thetas[result.indices]
        return result

    @staticmethod
    def prefix_traces(P_full: np.ndarray, rows: np.ndarray, t_grid: Sequence[int], labels: np.ndarray,
                      reference: Optional[np.ndarray] = None) -> Dict[str, np.ndarray]:
        """
        RMSE and accuracy of the prefixes rows[:T] of a parameter ordering.

        Args:
            P_full: Predictive matrix of the full set (|D|, N)
            rows: Ordering of row indices into P_full (herding selections or a bootstrap draw)
            t_grid: Prefix lengths
            labels: Test labels
            reference: Average predictions of a reference set; defaults to the mean of P_full
        """
        t_grid = np.asarray(t_grid, dtype=int)
        target = P_full.mean(axis=0) if reference is None else reference
        cumulative = np.cumsum(P_full[rows], axis=0)[t_grid - 1] / t_grid[:, None]
        rmse = np.sqrt(np.mean((cumulative - target) ** 2, axis=1))
        accuracy = np.mean((cumulative >= PosteriorDefaults.DECISION_THRESHOLD).astype(int) == labels, axis=1)
        return {'rmse': rmse, 'accuracy': accuracy}

    @staticmethod
    def random_subset_traces(full, test: Dataset, t_grid: Sequence[int], n_repeats: int, seed: int,
                             bias: bool = True) -> Tuple[np.ndarray, np.ndarray]:
        """
        Bootstrap baselines: for each repeat, prefixes of one with-replacement
        draw of max(t_grid) rows.

        Returns:
            Tuple of (rmse (n_repeats, len(t_grid)), accuracy (n_repeats, len(t_grid)))
        """
        full = _check_thetas(full, 'Full')
        t_grid = np.asarray(t_grid, dtype=int)
        P_full = PosteriorService.predictive_matrix(full, test.features, bias)
        rmse = np.empty((n_repeats, t_grid.size))
        accuracy = np.empty((n_repeats, t_grid.size))
        for r in range(n_repeats):
            rows = derive_rng(seed, RngStream.BOOTSTRAP, r).integers(0, full.shape[0], int(t_grid.max()))
            traces = PosteriorService.prefix_traces(P_full, rows, t_grid, test.labels)
            rmse[r] = traces['rmse']
            accuracy[r] = traces['accuracy']
        return rmse, accuracy

    @staticmethod
    def samples_to_floor(trace: ErrorTrace, floor: float) -> Optional[int]:
        """Smallest T whose error is below the noise floor, or None."""
        below = np.nonzero(trace.errors < floor)[0]
        return int(trace.t_values[below[0]]) if below.size else None

    @staticmethod
    def samples_to_accuracy(trace: ErrorTrace, full_accuracy: float,
                            tol: float = PosteriorDefaults.ACCURACY_TOL) -> Optional[int]:
        """Smallest T whose test accuracy is within tol of the full set's, or None."""
        within = np.nonzero(np.abs(trace.errors - full_accuracy) <= tol)[0]
        return int(trace.t_values[within[0]]) if within.size else None

    @staticmethod
    def evaluate_compression(chain: PosteriorChain, test: Dataset, t_grid: Sequence[int],
                             subset_repeats: int, seed: int, sigma: Optional[float] = None,
                             reference: Optional[PosteriorChain] = None) -> Dict:
        """
        Herding against random bootstrap subsets on predictive RMSE and accuracy.

        Returns:
            dict with 'herding' (SuperSampleSet), 'traces' (list of ErrorTrace),
            'noise_floor', 'full_accuracy', 'samples_to_floor', 'samples_to_accuracy'
            (per estimator) and, with a reference chain, 'dataset_vs_reference'
        """
        t_grid = np.asarray(t_grid, dtype=int)
        t_max = int(t_grid.max())
        herding = PosteriorService.compress_posterior(chain, sigma=sigma, t_max=t_max, seed=seed)

        P_full = PosteriorService.predictive_matrix(chain.thetas, test.features, chain.bias)
        herd = PosteriorService.prefix_traces(P_full, herding.indices, t_grid, test.labels)
        random_rmse, random_accuracy = PosteriorService.random_subset_traces(
            chain.thetas, test, t_grid, subset_repeats, seed, chain.bias)

        traces = [
            ErrorTrace(t_grid, herd['rmse'], Estimator.HERDING, 'predictive_rmse', seed),
            ErrorTrace(t_grid, random_rmse.mean(axis=0), Estimator.RANDOM, 'predictive_rmse', seed,
                       std=random_rmse.std(axis=0)),
            ErrorTrace(t_grid, herd['accuracy'], Estimator.HERDING, 'accuracy', seed),
            ErrorTrace(t_grid, random_accuracy.mean(axis=0), Estimator.RANDOM, 'accuracy', seed,
                       std=random_accuracy.std(axis=0)),
        ]
        floor = PosteriorService.noise_floor(chain.thetas, test, chain.bias)
        full_accuracy = PosteriorService.accuracy(chain.thetas, test, chain.bias)
        report = {
            'herding': herding,
            'traces': traces,
            'random_rmse': random_rmse,
            'random_accuracy': random_accuracy,
            'noise_floor': floor,
            'full_accuracy': full_accuracy,
            'samples_to_floor': PosteriorService.samples_to_floor(traces[0], floor),
            'samples_to_accuracy': {
                trace.estimator: PosteriorService.samples_to_accuracy(trace, full_accuracy)
                for trace in traces[2:4]
            },
        }

        if reference is not None:
            reference_mean = PosteriorService.predictive_matrix(reference.thetas, test.features, chain.bias).mean(axis=0)
            vs_reference = PosteriorService.prefix_traces(P_full, herding.indices, t_grid, test.labels,
                                                          reference=reference_mean)
            traces.append(ErrorTrace(t_grid, vs_reference['rmse'], Estimator.HERDING, 'predictive_rmse@reference', seed))
            report['dataset_vs_reference'] = PosteriorService.predictive_rmse(
                chain.thetas, reference.thetas, test, chain.bias)
        return report
