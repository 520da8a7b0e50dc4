# kherd/models/kernel.py
from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from kherd.constants import ErrorMessage
from kherd.exceptions import DimensionMismatch, ConfigurationError
from kherd.utils.numerics import as_vec, as_points


class Kernel(ABC):
    """
    Positive definite kernel k(x, x') = <φ(x), φ(x')>.

    Subclasses say whether the mean map against a Gaussian mixture has a
    closed form; herding in continuous mode needs it.
    """

    has_gm_mean_map = False

    @abstractmethod
    def evaluate(self, x, y) -> float:
        """k(x, y) for two vectors."""

    @abstractmethod
    def cross(self, X, Y) -> np.ndarray:
        """Kernel block with entries k(X[i], Y[j])."""

    @abstractmethod
    def gradient(self, x, Y) -> np.ndarray:
        """Rows ∂k(x, Y[t])/∂x."""


@dataclass(frozen=True)
class GaussianKernel(Kernel):
    """k(x, y) = exp(-|x - y|² / (2σ²)); k(x, x) = 1 everywhere."""

    sigma: float

    has_gm_mean_map = True

    def __post_init__(self):
        if not (np.isfinite(self.sigma) and self.sigma > 0):
            raise ConfigurationError(
                ErrorMessage.INVALID_VALUE.format(field='sigma', reason='must be a positive number'))
        object.__setattr__(self, 'sigma', float(self.sigma))

    @property
    def variance(self) -> float:
        return self.sigma ** 2

    def evaluate(self, x, y) -> float:
        x = as_vec(x)
        y = as_vec(y)
        if x.shape != y.shape:
            raise DimensionMismatch(ErrorMessage.DIMENSION_MISMATCH.format(expected=x.shape[0], got=y.shape[0]))
        diff = x - y
        return float(np.exp(-np.dot(diff, diff) / (2.0 * self.variance)))

    def cross(self, X, Y) -> np.ndarray:
        X = as_points(X)
        Y = as_points(Y)
        if X.shape[1] != Y.shape[1]:
            raise DimensionMismatch(ErrorMessage.DIMENSION_MISMATCH.format(expected=X.shape[1], got=Y.shape[1]))
        if X.shape[0] == 0 or Y.shape[0] == 0:
            return np.zeros((X.shape[0], Y.shape[0]))
        return np.exp(-cdist(X, Y, 'sqeuclidean') / (2.0 * self.variance))

    def gradient(self, x, Y) -> np.ndarray:
        x = as_vec(x)
        Y = as_points(Y, x.shape[0])
        values = self.cross(x.reshape(1, -1), Y)[0]
        return -(x - Y) / self.variance * values[:, None]


class MeanMap(ABC):
    """
    Evaluator of x -> E_{x'~p}[k(x, x')] for one kernel and one target p.

    Built once per target; values lie in (0, 1] for the Gaussian kernel.
    """

    provenance: str = ''

    def __init__(self, kernel: Kernel, dim: int):
        self.kernel = kernel
        self.dim = dim

    @abstractmethod
    def __call__(self, X) -> np.ndarray:
        """Mean-map values at the rows of X."""

    @abstractmethod
    def double_expectation(self) -> float:
        """E_{x,x'~p}[k(x, x')]."""

    @property
    def has_gradient(self) -> bool:
        return False

    def gradient(self, X) -> np.ndarray:
        raise NotImplementedError(f"{self.provenance} mean map has no analytic gradient")
