from dataclasses import dataclass, field
from typing import Any, Dict, Optional

import numpy as np

from kherd.exceptions import NonBinaryLabel, DimensionMismatch
from kherd.utils.numerics import as_points


@dataclass(eq=False)
class Dataset:
    """Binary classification data with a train/test split given as row indices."""

    features: np.ndarray
    labels: np.ndarray
    train_idx: Optional[np.ndarray] = None
    test_idx: Optional[np.ndarray] = None

    def __post_init__(self):
        self.features = as_points(self.features)
        self.labels = np.asarray(self.labels).reshape(-1)
        if self.labels.shape[0] != self.features.shape[0]:
            raise DimensionMismatch(f"{self.features.shape[0]} feature rows but {self.labels.shape[0]} labels")
        if not np.all(np.isin(self.labels, (0, 1))):
            raise NonBinaryLabel("labels must be 0 or 1")
        self.labels = self.labels.astype(int)
        n = self.features.shape[0]
        if self.train_idx is None:
            self.train_idx = np.arange(n)
        if self.test_idx is None:
            self.test_idx = np.empty(0, dtype=int)
        self.train_idx = np.asarray(self.train_idx, dtype=int)
        self.test_idx = np.asarray(self.test_idx, dtype=int)

    @property
    def n(self) -> int:
        return int(self.features.shape[0])

    @property
    def dim(self) -> int:
        return int(self.features.shape[1])

    def subset(self, idx) -> 'Dataset':
        idx = np.asarray(idx, dtype=int)
        return Dataset(self.features[idx], self.labels[idx])

    @property
    def train(self) -> 'Dataset':
        return self.subset(self.train_idx)

    @property
    def test(self) -> 'Dataset':
        return self.subset(self.test_idx)


@dataclass(eq=False)
class WhitenTransform:
    """x -> (x - mean) @ projection; projection columns are principal directions / sqrt(eigenvalue)."""

    mean: np.ndarray
    projection: np.ndarray
    eigenvalues: np.ndarray
    eigen_floor: float

    @property
    def retained_dim(self) -> int:
        return int(self.projection.shape[1])

    def apply(self, X) -> np.ndarray:
        return (as_points(X, self.mean.shape[0]) - self.mean) @ self.projection


@dataclass(eq=False)
class PosteriorChain:
    """Thinned Metropolis-Hastings draws of logistic-regression weights (bias last)."""

    thetas: np.ndarray
    acceptance_rate: float
    proposal_scale: float
    prior_var: float
    thin: int
    burn_in: int
    seed: int
    whiten: Optional[WhitenTransform] = None
    bias: bool = True
    log_posterior: Optional[np.ndarray] = field(default=None, repr=False)

    def __len__(self):
        return int(self.thetas.shape[0])

    def to_manifest(self) -> Dict[str, Any]:
        return {
            'prior_var': self.prior_var,
            'proposal_scale': self.proposal_scale,
            'thin': self.thin,
            'burn_in': self.burn_in,
            'acceptance_rate': self.acceptance_rate,
            'seed': self.seed,
            'n_keep': len(self),
            'bias': self.bias,
        }
