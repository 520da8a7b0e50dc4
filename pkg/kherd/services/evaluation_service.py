# kherd/services/evaluation_service.py
import logging
from typing import Callable, Dict, Iterable, List, Optional, Sequence

import numpy as np
from scipy import stats

from kherd.constants import (
    Estimator, EvaluationDefaults, Mode, RngStream, TruthKind, LogMessage, ErrorMessage)
from kherd.exceptions import (
    EmptySamples, DegenerateTrace, KernelMismatch, ConfigError)
from kherd.models.evaluation import (
    ComparisonTable, ErrorTrace, GroundTruth, KoksmaHlawkaResult, RateFit, RkhsFunction)
from kherd.models.herding import HerdingConfig, HerdingState
from kherd.models.kernel import Kernel, MeanMap
from kherd.models.target import EmpiricalDistribution, GaussianMixture
from kherd.services.herding_service import HerdingService
from kherd.services.target_service import TargetService
from kherd.utils.numerics import as_points, derive_rng

logger = logging.getLogger(__name__)


def _moment(order: int) -> Callable[[np.ndarray], np.ndarray]:
    def f(X):
        return X ** order
    f.__name__ = f'moment{order}'
    return f


def sin_norm(X: np.ndarray) -> np.ndarray:
    """f(x) = sin |x|."""
    return np.sin(np.linalg.norm(X, axis=1))


# Test functions: per-point values, shape (n,) or (n, d)
FUNCTIONS: Dict[str, Callable[[np.ndarray], np.ndarray]] = {
    'moment1': _moment(1),
    'moment2': _moment(2),
    'moment3': _moment(3),
    'sin_norm': sin_norm,
}

MOMENT_ORDERS = {'moment1': 1, 'moment2': 2, 'moment3': 3}


def default_t_grid(t_max: int, n_points: int = 50) -> np.ndarray:
    """Roughly log-spaced sample counts from 1 to t_max."""
    if t_max < 1:
        return np.empty(0, dtype=int)
    return np.unique(np.geomspace(1, t_max, n_points).round().astype(int))


def parse_functions(names: Iterable[str]) -> List[str]:
    names = [n.strip() for n in names if n.strip()]
    unknown = [n for n in names if n not in FUNCTIONS]
    if unknown or not names:
        raise ConfigError(ErrorMessage.INVALID_VALUE.format(
            field='functions', reason=f"unknown functions {unknown}; choose from {list(FUNCTIONS)}"), field='functions')
    return names


class EvaluationService:
    """Service class for metrics, rate fits and estimator comparisons."""

    # ============================================
    # METRICS
    # ============================================

    @staticmethod
    def moment_rmse(samples, gm: GaussianMixture, order: int) -> float:
        """
        RMSE over dimensions between sample raw moments and the mixture's.

        Raises:
            EmptySamples: no samples
            UnsupportedOrder: order outside {1, 2, 3}
        """
        samples = as_points(samples, gm.dim)
        if samples.shape[0] == 0:
            raise EmptySamples(ErrorMessage.EMPTY_SAMPLES)
        truth = TargetService.gm_raw_moment(gm, order)
        estimate = TargetService.empirical_raw_moment(samples, order)
        return float(np.sqrt(np.mean((estimate - truth) ** 2)))

    @staticmethod
    def expectation_error(samples, f: Callable, truth: GroundTruth) -> float:
        """
        |mean of f over samples − ground truth|; for vector-valued f, the RMSE
        over components.
        """
        samples = as_points(samples)
        if samples.shape[0] == 0:
            raise EmptySamples(ErrorMessage.EMPTY_SAMPLES)
        estimate = np.mean(f(samples), axis=0)
        return float(np.sqrt(np.mean((np.asarray(estimate) - truth.value) ** 2)))

    @staticmethod
    def ground_truth(name: str, gm: GaussianMixture, rng: np.random.Generator,
                     n_draws: int = EvaluationDefaults.GROUND_TRUTH_DRAWS,
                     chunk: int = EvaluationDefaults.GROUND_TRUTH_CHUNK) -> GroundTruth:
        """Exact moments, or a chunked Monte Carlo estimate with its standard error."""
        if name in MOMENT_ORDERS:
            return GroundTruth(value=TargetService.gm_raw_moment(gm, MOMENT_ORDERS[name]), kind=TruthKind.ANALYTIC)

        f = FUNCTIONS[name]
        total = 0.0
        total_sq = 0.0
        drawn = 0
        while drawn < n_draws:
            size = min(chunk, n_draws - drawn)
            values = f(TargetService.gm_sample(rng, gm, size))
            total += float(np.sum(values))
            total_sq += float(np.sum(values ** 2))
            drawn += size
        mean = total / drawn
        variance = max(0.0, total_sq / drawn - mean ** 2)
        std_error = float(np.sqrt(variance / drawn))
        logger.info(LogMessage.GROUND_TRUTH.format(function=name, value=mean, stderr=std_error, n=drawn))
        return GroundTruth(value=mean, std_error=std_error, n_draws=drawn, kind=TruthKind.MONTE_CARLO)

    @staticmethod
    def empirical_truth(name: str, points) -> GroundTruth:
        """Expectation of a registered function over a sample set."""
        points = as_points(points)
        value = np.mean(FUNCTIONS[name](points), axis=0)
        return GroundTruth(value=value, n_draws=points.shape[0], kind=TruthKind.EMPIRICAL)

    @staticmethod
    def error_trace(samples, name: str, truth: GroundTruth, t_grid: Sequence[int],
                    estimator: str, seed: int = 0, target_id: str = '') -> ErrorTrace:
        """Errors of the running means of samples[:T] for every T in the grid, via cumulative sums."""
        samples = as_points(samples)
        t_grid = np.asarray(t_grid, dtype=int)
        if samples.shape[0] == 0 or t_grid.size == 0:
            raise EmptySamples(ErrorMessage.EMPTY_SAMPLES)
        if t_grid.max() > samples.shape[0] or t_grid.min() < 1:
            raise ConfigError(ErrorMessage.INVALID_VALUE.format(
                field='t_grid', reason=f"values must lie in [1, {samples.shape[0]}]"), field='t_grid')
        values = FUNCTIONS[name](samples)
        cumulative = np.cumsum(values, axis=0)[t_grid - 1]
        if cumulative.ndim == 1:
            means = cumulative / t_grid
            errors = np.abs(means - truth.value)
        else:
            means = cumulative / t_grid[:, None]
            errors = np.sqrt(np.mean((means - truth.value) ** 2, axis=1))
        return ErrorTrace(t_values=t_grid, errors=errors, estimator=estimator,
                          function=name, seed=seed, target_id=target_id)

    # ============================================
    # RATES
    # ============================================

    @staticmethod
    def upper_envelope(errors) -> np.ndarray:
        """Non-increasing upper bound: envelope_T = max over T' >= T of error_T'."""
        errors = np.asarray(errors, dtype=float)
        return np.maximum.accumulate(errors[::-1])[::-1]

    @staticmethod
    def fit_rate(trace: ErrorTrace, t_min: int = 1) -> RateFit:
        """
        Least-squares slope of log error against log T over the upper envelope.

        Raises:
            DegenerateTrace: all-zero errors or fewer than 10 usable points
        """
        if not np.any(trace.errors > 0):
            raise DegenerateTrace(ErrorMessage.DEGENERATE_TRACE.format(reason='all errors are zero'))
        envelope = EvaluationService.upper_envelope(trace.errors)
        keep = (trace.t_values >= t_min) & (envelope > 0)
        if keep.sum() < EvaluationDefaults.MIN_FIT_POINTS:
            raise DegenerateTrace(ErrorMessage.DEGENERATE_TRACE.format(
                reason=f"{int(keep.sum())} usable points, need {EvaluationDefaults.MIN_FIT_POINTS}"))
        log_t = np.log(trace.t_values[keep].astype(float))
        log_e = np.log(envelope[keep])
        fit = stats.linregress(log_t, log_e)
        residual = log_e - (fit.intercept + fit.slope * log_t)
        ss_res = float(residual @ residual)
        ss_tot = float(np.sum((log_e - log_e.mean()) ** 2))
        r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
        return RateFit(slope=float(fit.slope), intercept=float(fit.intercept), r2=r2, n_points=int(keep.sum()))

    @staticmethod
    def inverse_error_linearity(errors, t_min: int = 1) -> RateFit:
        """OLS of 1/E_T against T, for T >= t_min (the 1/E_T-grows-linearly check)."""
        errors = np.asarray(errors, dtype=float)
        t_values = np.arange(1, errors.shape[0] + 1)
        keep = (t_values >= t_min) & (errors > 0)
        if keep.sum() < 2:
            raise DegenerateTrace(ErrorMessage.DEGENERATE_TRACE.format(reason='too few positive errors'))
        y = 1.0 / errors[keep]
        fit = stats.linregress(t_values[keep], y)
        return RateFit(slope=float(fit.slope), intercept=float(fit.intercept),
                       r2=float(fit.rvalue ** 2), n_points=int(keep.sum()))

    # ============================================
    # KOKSMA-HLAWKA
    # ============================================

    @staticmethod
    def random_rkhs_function(rng: np.random.Generator, kernel: Kernel, low, high,
                             n_centers: int = 5) -> RkhsFunction:
        """Random centers uniform in the box [low, high] and standard normal coefficients."""
        low = np.asarray(low, dtype=float)
        high = np.asarray(high, dtype=float)
        centers = rng.uniform(low, high, size=(n_centers, low.shape[0]))
        return RkhsFunction(centers=centers, coefficients=rng.standard_normal(n_centers), kernel=kernel)

    @staticmethod
    def koksma_hlawka_check(state: HerdingState, f: RkhsFunction,
                            mean_map: Optional[MeanMap] = None) -> KoksmaHlawkaResult:
        """
        |E_p[f] - (1/T) Σ_t f(x_t)| <= ‖f‖_H · E_T, with E_p[f] = Σ_i α_i μ_p(z_i).

        Raises:
            KernelMismatch: f is built on a different kernel
        """
        if f.kernel != state.kernel:
            raise KernelMismatch(ErrorMessage.KERNEL_MISMATCH.format(
                got=getattr(f.kernel, 'sigma', '?'), expected=getattr(state.kernel, 'sigma', '?')))
        mean_map = mean_map or state.mean_map
        expected = float(f.coefficients @ mean_map(f.centers))
        estimate = float(np.mean(f(state.samples)))
        lhs = abs(expected - estimate)
        rhs = f.norm * HerdingService.herding_error(state)
        return KoksmaHlawkaResult(lhs=lhs, rhs=rhs, holds=lhs <= rhs + EvaluationDefaults.KH_SLACK)

    # ============================================
    # COMPARISON HARNESS
    # ============================================

    @staticmethod
    def _iid_summary(traces: List[ErrorTrace], estimator: str) -> ErrorTrace:
        stacked = np.stack([t.errors for t in traces])
        first = traces[0]
        return ErrorTrace(t_values=first.t_values, errors=stacked.mean(axis=0), estimator=estimator,
                          function=first.function, seed=first.seed, target_id=first.target_id,
                          std=stacked.std(axis=0))

    @staticmethod
    def _fit_rates(table: ComparisonTable, t_min: int) -> None:
        for trace in table.traces:
            try:
                fit = EvaluationService.fit_rate(trace, t_min)
            except DegenerateTrace as e:
                logger.warning(f"Skipping rate fit for {trace.estimator}/{trace.function}: {e}")
                continue
            logger.info(LogMessage.RATE_FIT.format(estimator=trace.estimator, function=trace.function,
                                                   slope=fit.slope, r2=fit.r2))
            table.rates.append({'estimator': trace.estimator, 'function': trace.function,
                                'slope': fit.slope, 'r2': fit.r2})

    @staticmethod
    def compare_estimators(
        gm: GaussianMixture,
        functions: Sequence[str],
        t_grid: Sequence[int],
        n_iid_repeats: int,
        seed: int,
        config: Optional[HerdingConfig] = None,
        kernel: Optional[Kernel] = None,
        ground_truth_draws: int = EvaluationDefaults.GROUND_TRUTH_DRAWS,
        empirical: Optional[EmpiricalDistribution] = None,
        target_id: str = '',
        t_min_fit: int = 1,
    ) -> ComparisonTable:
        """
        Herding against iid sampling on the same functions and T grid.

        With `empirical`, herding runs in discrete mode over that sample set and
        is scored both against p and against the set; random subsamples of the
        set and the set's own error against p are reported alongside.

        Each iid repeat uses its own derived sub-seed.
        """
        t_grid = np.asarray(t_grid, dtype=int)
        t_max = int(t_grid.max())
        functions = parse_functions(functions)
        truths = {name: EvaluationService.ground_truth(
            name, gm, derive_rng(seed, RngStream.GROUND_TRUTH, i), ground_truth_draws)
            for i, name in enumerate(functions)}

        mode = Mode.DISCRETE if empirical is not None else Mode.CONTINUOUS
        base = config or HerdingConfig()
        herding_config = HerdingConfig(
            mode=mode, t_max=t_max, n_seeds=base.n_seeds, step_size=base.step_size,
            max_iter=base.max_iter, grad_tol=base.grad_tol, max_halvings=base.max_halvings,
            seed=seed, unique=base.unique, verify_every=base.verify_every)
        herding_target = empirical if empirical is not None else gm
        result = HerdingService.run_herding(herding_config, herding_target,
                                            derive_rng(seed, RngStream.HERDING), kernel=kernel)

        table = ComparisonTable()
        for name in functions:
            table.traces.append(EvaluationService.error_trace(
                result.samples, name, truths[name], t_grid, Estimator.HERDING, seed, target_id))

            iid = [EvaluationService.error_trace(
                TargetService.gm_sample(derive_rng(seed, RngStream.IID, r), gm, t_max),
                name, truths[name], t_grid, Estimator.IID, seed, target_id)
                for r in range(n_iid_repeats)]
            if iid:
                table.traces.append(EvaluationService._iid_summary(iid, Estimator.IID))

            if empirical is not None:
                set_truth = EvaluationService.empirical_truth(name, empirical.points)
                herding_vs_set = EvaluationService.error_trace(
                    result.samples, name, set_truth, t_grid, Estimator.HERDING, seed, target_id)
                herding_vs_set.function = f'{name}@dataset'
                table.traces.append(herding_vs_set)

                subsample = [EvaluationService.error_trace(
                    empirical.points[derive_rng(seed, RngStream.BOOTSTRAP, r).integers(0, empirical.size, t_max)],
                    name, set_truth, t_grid, Estimator.SUBSAMPLE, seed, target_id)
                    for r in range(n_iid_repeats)]
                if subsample:
                    summary = EvaluationService._iid_summary(subsample, Estimator.SUBSAMPLE)
                    summary.function = f'{name}@dataset'
                    table.traces.append(summary)

                table.dataset_errors[name] = EvaluationService.expectation_error(
                    empirical.points, FUNCTIONS[name], truths[name])

        EvaluationService._fit_rates(table, t_min_fit)
        return table
