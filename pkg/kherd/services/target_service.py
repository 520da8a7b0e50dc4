# kherd/services/target_service.py
import json
import logging
from typing import Any, Dict, Sequence

import numpy as np
from scipy.special import logsumexp

from kherd.constants import TargetDefaults, ErrorMessage
from kherd.exceptions import (
    ConfigError, EmptyInput, RaggedRows, UnsupportedOrder, EmptySamples, InvalidMixture)
from kherd.models.target import EmpiricalDistribution, GaussianMixture
from kherd.utils.numerics import as_points, mvn_logpdf

logger = logging.getLogger(__name__)


def _raw_gaussian_moment(mean: np.ndarray, var: np.ndarray, order: int) -> np.ndarray:
    """Raw moment E[x^m] of N(mean, var), elementwise."""
    if order == 1:
        return mean
    if order == 2:
        return mean ** 2 + var
    if order == 3:
        return mean ** 3 + 3.0 * mean * var
    raise UnsupportedOrder(ErrorMessage.UNSUPPORTED_ORDER.format(order=order))


def _check_order(order: int) -> None:
    if not 1 <= order <= TargetDefaults.MAX_MOMENT_ORDER:
        raise UnsupportedOrder(ErrorMessage.UNSUPPORTED_ORDER.format(order=order))


class TargetService:
    """Service class for target distributions: Gaussian mixtures and empirical sets."""

    @staticmethod
    def gm_sample(rng: np.random.Generator, gm: GaussianMixture, n: int) -> np.ndarray:
        """
        Draw n iid points: a component by weight, then a normal draw from it.

        Returns:
            np.ndarray: shape (n, d)
        """
        if n < 0:
            raise ValueError(f"Sample count must be non-negative, got {n}")
        if n == 0:
            return np.empty((0, gm.dim))
        components = rng.choice(gm.n_components, size=n, p=gm.weights)
        z = rng.standard_normal((n, gm.dim))
        draws = np.empty((n, gm.dim))
        for j in range(gm.n_components):
            chosen = components == j
            draws[chosen] = gm.means[j] + z[chosen] @ gm.factors[j].T
        return draws

    @staticmethod
    def gm_random(
        rng: np.random.Generator,
        dim: int,
        n_components: int,
        mean_low: float = TargetDefaults.MEAN_LOW,
        mean_high: float = TargetDefaults.MEAN_HIGH,
        cov_scale: float = TargetDefaults.COVARIANCE_SCALE,
    ) -> GaussianMixture:
        """
        Random mixture: means uniform in [mean_low, mean_high]^d, covariances
        L·Lᵀ·scale/d plus jitter, Dirichlet(1) weights.
        """
        if dim < 1 or n_components < 1:
            raise InvalidMixture(f"Need dim >= 1 and components >= 1, got {dim}, {n_components}")
        means = rng.uniform(mean_low, mean_high, size=(n_components, dim))
        factors = rng.standard_normal((n_components, dim, dim))
        covariances = np.einsum('mij,mkj->mik', factors, factors) * (cov_scale / dim)
        covariances += TargetDefaults.COVARIANCE_JITTER * cov_scale * np.eye(dim)
        # exact symmetry
        covariances = 0.5 * (covariances + np.transpose(covariances, (0, 2, 1)))
        if n_components == 1:
            weights = np.ones(1)
        else:
            weights = rng.dirichlet(np.ones(n_components))
            weights = weights / weights.sum()
        return GaussianMixture(weights=weights, means=means, covariances=covariances)

    @staticmethod
    def gm_raw_moment(gm: GaussianMixture, order: int) -> np.ndarray:
        """Per-dimension raw moment ⟨x_i^m⟩_p for m in {1, 2, 3}."""
        _check_order(order)
        moments = _raw_gaussian_moment(gm.means, gm.marginal_variances, order)
        return gm.weights @ moments

    @staticmethod
    def empirical_raw_moment(points, order: int) -> np.ndarray:
        """Per-dimension raw moment of a sample set."""
        _check_order(order)
        points = as_points(points)
        if points.shape[0] == 0:
            raise EmptySamples(ErrorMessage.EMPTY_SAMPLES)
        return np.mean(points ** order, axis=0)

    @staticmethod
    def gm_logpdf(gm: GaussianMixture, X) -> np.ndarray:
        """Log mixture density at the rows of X (components with Σ_j = 0 are skipped)."""
        X = as_points(X, gm.dim)
        terms = []
        for j in range(gm.n_components):
            if gm.weights[j] == 0 or not np.any(gm.covariances[j]):
                continue
            logp = np.array([mvn_logpdf(x, gm.means[j], gm.covariances[j]) for x in X])
            terms.append(np.log(gm.weights[j]) + logp)
        if not terms:
            return np.full(X.shape[0], -np.inf)
        return logsumexp(np.stack(terms), axis=0)

    @staticmethod
    def empirical_from_matrix(rows: Sequence[Sequence[float]]) -> EmpiricalDistribution:
        """
        Wrap a row matrix as an empirical distribution, preserving row order.

        Raises:
            EmptyInput: no rows
            RaggedRows: rows of different widths
        """
        if isinstance(rows, np.ndarray):
            if rows.ndim != 2 or rows.shape[0] == 0:
                raise EmptyInput(ErrorMessage.EMPTY_INPUT)
            return EmpiricalDistribution(rows)

        rows = list(rows)
        if not rows:
            raise EmptyInput(ErrorMessage.EMPTY_INPUT)
        width = len(rows[0])
        for i, row in enumerate(rows):
            if len(row) != width:
                raise RaggedRows(ErrorMessage.RAGGED_ROWS.format(row=i + 1, got=len(row), expected=width))
        if width == 0:
            raise EmptyInput(ErrorMessage.EMPTY_INPUT)
        return EmpiricalDistribution(np.asarray(rows, dtype=float))

    @staticmethod
    def gm_to_dict(gm: GaussianMixture) -> Dict[str, Any]:
        """JSON-ready mixture: weights, means, row-major covariances, dim."""
        return {
            'dim': gm.dim,
            'weights': gm.weights.tolist(),
            'means': gm.means.tolist(),
            'covariances': [c.reshape(-1).tolist() for c in gm.covariances],
        }

    @staticmethod
    def gm_from_dict(data: Dict[str, Any]) -> GaussianMixture:
        """Inverse of gm_to_dict; covariances may be flat row-major or nested."""
        try:
            dim = int(data['dim'])
            weights = np.asarray(data['weights'], dtype=float)
            means = np.asarray(data['means'], dtype=float).reshape(-1, dim)
            covariances = np.asarray(data['covariances'], dtype=float).reshape(-1, dim, dim)
        except (KeyError, TypeError, ValueError) as e:
            raise InvalidMixture(f"Invalid mixture description: {e}")
        return GaussianMixture(weights=weights, means=means, covariances=covariances)

    @staticmethod
    def load_gm(path: str) -> GaussianMixture:
        """Read a mixture from its JSON serialization."""
        try:
            with open(path, encoding='utf-8') as handle:
                data = json.load(handle)
        except FileNotFoundError:
            raise ConfigError(ErrorMessage.MISSING_FILE.format(path=path), field='target')
        except json.JSONDecodeError as e:
            raise ConfigError(ErrorMessage.INVALID_VALUE.format(field='target', reason=str(e)), field='target')
        return TargetService.gm_from_dict(data)
