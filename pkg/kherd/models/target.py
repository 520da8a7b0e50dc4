from dataclasses import dataclass

import numpy as np

from kherd.constants import TargetDefaults, ErrorMessage
from kherd.exceptions import InvalidMixture, EmptyDistribution, DimensionMismatch
from kherd.utils.numerics import as_points, as_sym_matrix, psd_factor


@dataclass(frozen=True, eq=False)
class GaussianMixture:
    """Analytic target p = Σ_j π_j N(μ_j, Σ_j). Point-mass components (Σ_j = 0) are allowed."""

    weights: np.ndarray
    means: np.ndarray
    covariances: np.ndarray

    def __post_init__(self):
        weights = np.asarray(self.weights, dtype=float).reshape(-1)
        means = as_points(self.means)
        covariances = np.asarray(self.covariances, dtype=float)
        m, d = means.shape

        if weights.shape[0] != m or covariances.shape != (m, d, d):
            raise DimensionMismatch(ErrorMessage.DIMENSION_MISMATCH.format(
                expected=f"{m} weights and {m}x{d}x{d} covariances",
                got=f"{weights.shape[0]} weights and covariances {covariances.shape}"))
        if np.any(weights < 0) or abs(weights.sum() - 1.0) > TargetDefaults.WEIGHT_SUM_TOL:
            raise InvalidMixture(ErrorMessage.INVALID_WEIGHTS)

        factors = np.stack([psd_factor(as_sym_matrix(c)) for c in covariances])

        for name, value in (('weights', weights), ('means', means),
                            ('covariances', covariances), ('factors', factors)):
            value.setflags(write=False)
            object.__setattr__(self, name, value)

    @property
    def dim(self) -> int:
        return self.means.shape[1]

    @property
    def n_components(self) -> int:
        return self.means.shape[0]

    @property
    def marginal_variances(self) -> np.ndarray:
        """Per-component, per-dimension variances, shape (m, d)."""
        return np.diagonal(self.covariances, axis1=1, axis2=2)

    @classmethod
    def point_masses(cls, points, weights=None) -> 'GaussianMixture':
        """Mixture of Dirac components at the given points (uniform weights by default)."""
        points = as_points(points)
        n, d = points.shape
        if weights is None:
            weights = np.full(n, 1.0 / n)
        return cls(weights=weights, means=points, covariances=np.zeros((n, d, d)))


@dataclass(frozen=True, eq=False)
class EmpiricalDistribution:
    """Finite ordered sample set used as a target with uniform weights."""

    points: np.ndarray

    def __post_init__(self):
        points = as_points(self.points)
        if points.shape[0] == 0:
            raise EmptyDistribution(ErrorMessage.EMPTY_DISTRIBUTION)
        points.setflags(write=False)
        object.__setattr__(self, 'points', points)

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def size(self) -> int:
        return self.points.shape[0]

    def __len__(self):
        return self.size
