# kherd/services/kernel_service.py
import logging
from typing import Optional, Union

import numpy as np
from scipy import linalg
from scipy.spatial.distance import pdist

from kherd.constants import KernelDefaults, Provenance, LogMessage, ErrorMessage
from kherd.exceptions import DimensionMismatch, EmptyDistribution
from kherd.models.kernel import GaussianKernel, Kernel, MeanMap
from kherd.models.target import EmpiricalDistribution, GaussianMixture
from kherd.utils.numerics import as_points, as_vec, cholesky, log_det_from_cholesky

logger = logging.getLogger(__name__)

Target = Union[GaussianMixture, EmpiricalDistribution]


class GaussianMixtureMeanMap(MeanMap):
    """
    Closed-form mean map of a Gaussian kernel against a Gaussian mixture:

        Σ_j π_j σ^d |Σ_j + σ²I|^(-1/2) exp(-½ (x-μ_j)ᵀ(Σ_j + σ²I)⁻¹(x-μ_j))

    Per-component precisions and log coefficients are precomputed once.
    """

    provenance = Provenance.ANALYTIC_GM

    def __init__(self, kernel: GaussianKernel, gm: GaussianMixture):
        super().__init__(kernel, gm.dim)
        self.gm = gm
        d = gm.dim
        eye = np.eye(d)
        precisions = np.empty((gm.n_components, d, d))
        log_coef = np.empty(gm.n_components)
        with np.errstate(divide='ignore'):
            log_weights = np.log(gm.weights)
        for j in range(gm.n_components):
            lower = cholesky(gm.covariances[j] + kernel.variance * eye)
            precisions[j] = linalg.cho_solve((lower, True), eye)
            log_coef[j] = log_weights[j] + d * np.log(kernel.sigma) - 0.5 * log_det_from_cholesky(lower)
        self.precisions = precisions
        self.log_coef = log_coef

    def _terms(self, X):
        X = as_points(X, self.dim)
        diff = X[:, None, :] - self.gm.means[None, :, :]
        solved = np.einsum('mde,nme->nmd', self.precisions, diff)
        q = np.einsum('nmd,nmd->nm', diff, solved)
        return np.exp(self.log_coef[None, :] - 0.5 * q), solved

    def __call__(self, X) -> np.ndarray:
        weights, _ = self._terms(X)
        return weights.sum(axis=1)

    @property
    def has_gradient(self) -> bool:
        return True

    def gradient(self, X) -> np.ndarray:
        weights, solved = self._terms(X)
        return -np.einsum('nm,nmd->nd', weights, solved)

    def double_expectation(self) -> float:
        gm = self.gm
        d = gm.dim
        sums = gm.covariances[:, None, :, :] + gm.covariances[None, :, :, :] + self.kernel.variance * np.eye(d)
        diff = gm.means[:, None, :] - gm.means[None, :, :]
        _, log_det = np.linalg.slogdet(sums)
        solved = np.linalg.solve(sums, diff[..., None])[..., 0]
        q = np.einsum('ijd,ijd->ij', diff, solved)
        pair_weights = np.outer(gm.weights, gm.weights)
        terms = pair_weights * np.exp(d * np.log(self.kernel.sigma) - 0.5 * log_det - 0.5 * q)
        return float(terms.sum())


class EmpiricalMeanMap(MeanMap):
    """Mean map of a finite sample set: (1/|D|) Σ_i k(x, d_i), summed in row chunks."""

    provenance = Provenance.EMPIRICAL

    def __init__(self, kernel: Kernel, distribution: EmpiricalDistribution,
                 chunk_bytes: int = KernelDefaults.CHUNK_BYTES):
        super().__init__(kernel, distribution.dim)
        self.distribution = distribution
        self.chunk_bytes = chunk_bytes
        self._double_expectation = None

    def __call__(self, X) -> np.ndarray:
        X = as_points(X, self.dim)
        points = self.distribution.points
        out = np.empty(X.shape[0])
        rows = self.chunk_rows
        for start in range(0, X.shape[0], rows):
            block = self.kernel.cross(X[start:start + rows], points)
            out[start:start + rows] = block.sum(axis=1) / points.shape[0]
        return out

    @property
    def chunk_rows(self) -> int:
        """Query rows per block so one float64 block fits the byte budget."""
        return max(1, self.chunk_bytes // (8 * self.distribution.size))

    def cache_double_expectation(self, self_means: np.ndarray) -> None:
        """Reuse the map already evaluated at every sample point."""
        self._double_expectation = float(np.mean(self_means))

    def double_expectation(self) -> float:
        if self._double_expectation is None:
            self._double_expectation = float(np.sum(self(self.distribution.points)) / self.distribution.size)
        return self._double_expectation


class KernelService:
    """Service class for kernel evaluations and RKHS mean quantities."""

    @staticmethod
    def kernel_eval(kernel: Kernel, x, y) -> float:
        """k(x, y); raises DimensionMismatch for vectors of different length."""
        return kernel.evaluate(x, y)

    @staticmethod
    def gram(kernel: Kernel, X) -> np.ndarray:
        """Gram matrix of the rows of X."""
        return kernel.cross(X, X)

    @staticmethod
    def mean_map(kernel: Kernel, target: Target) -> MeanMap:
        """
        Build the mean-map evaluator for a target.

        Args:
            kernel: Kernel to embed with
            target: GaussianMixture (closed form) or EmpiricalDistribution (summation)

        Returns:
            MeanMap: vectorised evaluator tagged with its provenance
        """
        if isinstance(target, GaussianMixture):
            if not kernel.has_gm_mean_map:
                raise NotImplementedError(f"{type(kernel).__name__} has no closed-form mixture mean map")
            return GaussianMixtureMeanMap(kernel, target)
        if isinstance(target, EmpiricalDistribution):
            return EmpiricalMeanMap(kernel, target)
        raise TypeError(f"Unsupported target type: {type(target).__name__}")

    @staticmethod
    def mean_map_gm(kernel: GaussianKernel, gm: GaussianMixture, x) -> float:
        """E_{x'~gm}[k(x, x')] at a single point."""
        x = as_vec(x)
        if x.shape[0] != gm.dim:
            raise DimensionMismatch(ErrorMessage.DIMENSION_MISMATCH.format(expected=gm.dim, got=x.shape[0]))
        return float(GaussianMixtureMeanMap(kernel, gm)(x)[0])

    @staticmethod
    def mean_map_empirical(kernel: Kernel, distribution: EmpiricalDistribution, x) -> float:
        """(1/|D|) Σ_i k(x, d_i) at a single point."""
        if distribution is None or distribution.size == 0:
            raise EmptyDistribution(ErrorMessage.EMPTY_DISTRIBUTION)
        x = as_vec(x)
        if x.shape[0] != distribution.dim:
            raise DimensionMismatch(ErrorMessage.DIMENSION_MISMATCH.format(expected=distribution.dim, got=x.shape[0]))
        return float(EmpiricalMeanMap(kernel, distribution)(x)[0])

    @staticmethod
    def double_expectation_gm(kernel: GaussianKernel, gm: GaussianMixture) -> float:
        """E_{x,x'~gm}[k(x, x')] in closed form."""
        return GaussianMixtureMeanMap(kernel, gm).double_expectation()

    @staticmethod
    def double_expectation_empirical(kernel: Kernel, distribution: EmpiricalDistribution) -> float:
        """(1/|D|²) Σ_{i,j} k(d_i, d_j)."""
        if distribution is None or distribution.size == 0:
            raise EmptyDistribution(ErrorMessage.EMPTY_DISTRIBUTION)
        return EmpiricalMeanMap(kernel, distribution).double_expectation()

    @staticmethod
    def median_heuristic(points) -> float:
        """Median pairwise Euclidean distance; 1.0 when it is undefined or zero."""
        points = as_points(points)
        if points.shape[0] < 2:
            return 1.0
        median = float(np.median(pdist(points)))
        if not median > 0:
            logger.warning("Median pairwise distance is zero; falling back to sigma=1")
            return 1.0
        logger.info(LogMessage.MEDIAN_SIGMA.format(sigma=median, n=points.shape[0]))
        return median

    @staticmethod
    def default_kernel(target: Target, rng: np.random.Generator,
                       sigma: Optional[float] = None) -> GaussianKernel:
        """
        Gaussian kernel with the given bandwidth, or the median heuristic over
        1000 draws from the target when sigma is None.
        """
        if sigma is not None:
            return GaussianKernel(sigma)
        n = KernelDefaults.MEDIAN_HEURISTIC_DRAWS
        if isinstance(target, GaussianMixture):
            from kherd.services.target_service import TargetService
            points = TargetService.gm_sample(rng, target, n)
        else:
            if target.size > n:
                points = target.points[np.sort(rng.choice(target.size, size=n, replace=False))]
            else:
                points = target.points
        return GaussianKernel(KernelService.median_heuristic(points))

    @staticmethod
    def mmd(mean_map: MeanMap, samples) -> float:
        """
        RKHS distance between the target behind `mean_map` and the empirical
        measure of `samples`, computed from scratch.
        """
        samples = as_points(samples, mean_map.dim)
        T = samples.shape[0]
        if T == 0:
            raise EmptyDistribution(ErrorMessage.EMPTY_DISTRIBUTION)
        s1 = float(np.sum(mean_map(samples)))
        s2 = float(np.sum(mean_map.kernel.cross(samples, samples)))
        squared = mean_map.double_expectation() - 2.0 * s1 / T + s2 / T ** 2
        return float(np.sqrt(max(0.0, squared)))
