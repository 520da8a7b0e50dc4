from dataclasses import dataclass, field
from typing import Dict, List, Optional, Union

import numpy as np

from kherd.constants import TruthKind
from kherd.exceptions import DegenerateTrace
from kherd.models.kernel import Kernel
from kherd.utils.numerics import as_points


@dataclass
class ErrorTrace:
    """Error of one estimator for one function on a grid of sample counts T."""

    t_values: np.ndarray
    errors: np.ndarray
    estimator: str
    function: str
    seed: int = 0
    target_id: str = ''
    std: Optional[np.ndarray] = None

    def __post_init__(self):
        self.t_values = np.asarray(self.t_values, dtype=int)
        self.errors = np.asarray(self.errors, dtype=float)
        if self.t_values.shape[0] == 0 or self.t_values.shape != self.errors.shape:
            raise DegenerateTrace(f"trace needs matching non-empty T and error arrays, "
                                  f"got {self.t_values.shape} and {self.errors.shape}")
        if np.any(self.errors < 0):
            raise DegenerateTrace("errors must be non-negative")
        if self.std is not None:
            self.std = np.asarray(self.std, dtype=float)

    def __len__(self):
        return int(self.t_values.shape[0])


@dataclass
class GroundTruth:
    """Reference expectation: exact, Monte Carlo with its standard error, or over a sample set."""

    value: Union[float, np.ndarray]
    std_error: Union[float, np.ndarray] = 0.0
    n_draws: int = 0
    kind: str = TruthKind.ANALYTIC


@dataclass
class RateFit:
    slope: float
    intercept: float
    r2: float
    n_points: int


@dataclass
class KoksmaHlawkaResult:
    lhs: float
    rhs: float
    holds: bool


@dataclass(eq=False)
class RkhsFunction:
    """f(x) = Σ_i α_i k(x, z_i)."""

    centers: np.ndarray
    coefficients: np.ndarray
    kernel: Kernel

    def __post_init__(self):
        self.centers = as_points(self.centers)
        self.coefficients = np.asarray(self.coefficients, dtype=float).reshape(-1)
        if self.coefficients.shape[0] != self.centers.shape[0]:
            raise ValueError("one coefficient per center is required")

    def __call__(self, X) -> np.ndarray:
        return self.kernel.cross(X, self.centers) @ self.coefficients

    @property
    def norm_squared(self) -> float:
        """‖f‖²_H = Σ_ij α_i α_j k(z_i, z_j)."""
        gram = self.kernel.cross(self.centers, self.centers)
        return float(self.coefficients @ gram @ self.coefficients)

    @property
    def norm(self) -> float:
        return float(np.sqrt(max(0.0, self.norm_squared)))


@dataclass
class ComparisonTable:
    """All traces of one comparison run, with fitted rates and reference levels."""

    traces: List[ErrorTrace] = field(default_factory=list)
    rates: List[Dict] = field(default_factory=list)
    dataset_errors: Dict[str, float] = field(default_factory=dict)

    def get(self, estimator: str, function: str) -> ErrorTrace:
        for trace in self.traces:
            if trace.estimator == estimator and trace.function == function:
                return trace
        raise KeyError(f"No trace for {estimator}/{function}")
