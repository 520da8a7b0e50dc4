# kherd/models/herding.py
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Union

import numpy as np

from kherd.constants import Mode, HerdingDefaults, ErrorMessage, Provenance
from kherd.exceptions import ConfigError
from kherd.models.kernel import Kernel, MeanMap
from kherd.models.target import EmpiricalDistribution, GaussianMixture


@dataclass
class HerdingConfig:
    """Settings of one herding run. Ties in the discrete argmax always go to the lowest index."""

    mode: str = Mode.CONTINUOUS
    t_max: int = 200
    n_seeds: int = HerdingDefaults.N_SEEDS
    step_size: Optional[float] = None
    max_iter: int = HerdingDefaults.MAX_ITER
    grad_tol: Optional[float] = None
    max_halvings: int = HerdingDefaults.MAX_HALVINGS
    seed: int = 0
    unique: bool = False
    verify_every: int = 0
    tie_break: str = field(default=HerdingDefaults.TIE_BREAK, init=False)

    def __post_init__(self):
        if self.mode not in Mode.SUPPORTED:
            raise ConfigError(ErrorMessage.INVALID_VALUE.format(
                field='mode', reason=f"expected one of {Mode.SUPPORTED}"), field='mode')
        if self.t_max < 0:
            raise ConfigError(ErrorMessage.INVALID_VALUE.format(field='T', reason='must be >= 0'), field='T')
        if self.n_seeds < 1:
            raise ConfigError(ErrorMessage.INVALID_VALUE.format(field='n_seeds', reason='must be >= 1'), field='n_seeds')
        if self.max_iter < 0:
            raise ConfigError(ErrorMessage.INVALID_VALUE.format(field='max_iter', reason='must be >= 0'), field='max_iter')
        if self.max_halvings < 1:
            raise ConfigError(ErrorMessage.INVALID_VALUE.format(field='max_halvings', reason='must be >= 1'), field='max_halvings')
        if self.grad_tol is not None and not self.grad_tol > 0:
            raise ConfigError(ErrorMessage.INVALID_VALUE.format(field='grad_tol', reason='must be > 0'), field='grad_tol')
        if self.step_size is not None and not self.step_size > 0:
            raise ConfigError(ErrorMessage.INVALID_VALUE.format(field='step_size', reason='must be > 0'), field='step_size')

    def initial_step(self, sigma: float) -> float:
        return self.step_size if self.step_size is not None else HerdingDefaults.STEP_FACTOR * sigma ** 2

    def tolerance(self, sigma: float) -> float:
        return self.grad_tol if self.grad_tol is not None else HerdingDefaults.GRAD_TOL_FACTOR * sigma


def _same_points(candidates: np.ndarray, target) -> bool:
    if not isinstance(target, EmpiricalDistribution):
        return False
    points = target.points
    return candidates is points or (candidates.shape == points.shape and np.array_equal(candidates, points))


class HerdingState:
    """
    Sample-history view of the herding weights: w_T = μ_p + T·μ_p - Σ_t φ(x_t).

    Holds the samples x_1..x_T and the cached sums behind the error:
        s1 = Σ_t μ_p(x_t),   s2 = Σ_{t,t'} k(x_t, x_t'),   const = E_{x,x'~p}[k]
    In discrete mode it also caches Σ_t k(c_i, x_t) for every candidate c_i.
    Single writer: only HerdingService mutates it.
    """

    def __init__(self, kernel: Kernel, target: Union[GaussianMixture, EmpiricalDistribution],
                 mean_map: MeanMap, candidates: Optional[np.ndarray] = None):
        self.kernel = kernel
        self.target = target
        self.mean_map = mean_map
        self.dim = mean_map.dim
        self.s1 = 0.0
        self.s2 = 0.0
        self._buffer = np.empty((16, self.dim))
        self._count = 0
        self.indices: List[int] = []
        self.objective_trace: List[float] = []
        self.error_trace: List[float] = []

        self.candidates = candidates
        self.candidate_mean = None
        self.candidate_sums = None
        self.selected = None
        if candidates is not None:
            self.candidate_mean = mean_map(candidates) if len(candidates) else np.empty(0)
            self.candidate_sums = np.zeros(len(candidates))
            self.selected = np.zeros(len(candidates), dtype=bool)
            if mean_map.provenance == Provenance.EMPIRICAL and _same_points(candidates, target):
                mean_map.cache_double_expectation(self.candidate_mean)
        self.const = mean_map.double_expectation()

    @property
    def T(self) -> int:
        return self._count

    @property
    def samples(self) -> np.ndarray:
        return self._buffer[:self._count]

    @property
    def is_discrete(self) -> bool:
        return self.candidates is not None

    def push(self, x: np.ndarray) -> None:
        if self._count == self._buffer.shape[0]:
            grown = np.empty((2 * self._buffer.shape[0], self.dim))
            grown[:self._count] = self._buffer[:self._count]
            self._buffer = grown
        self._buffer[self._count] = x
        self._count += 1


@dataclass
class SuperSampleSet:
    """Ordered herding output with the error E_T after every step."""

    samples: np.ndarray
    errors: np.ndarray
    mode: str
    sigma: float
    seed: int
    indices: Optional[np.ndarray] = None
    objective_trace: Optional[np.ndarray] = None

    @property
    def T(self) -> int:
        return int(self.samples.shape[0])

    def __len__(self):
        return self.T

    def to_manifest(self) -> Dict[str, Any]:
        return {
            'mode': self.mode,
            'sigma': self.sigma,
            'seed': self.seed,
            'T': self.T,
            'error_trace': [float(e) for e in self.errors],
        }
