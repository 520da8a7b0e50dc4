# kherd/services/herding_service.py
"""
The kernel herding engine.

Each step maximizes

    J_T(x) = E_{x'~p}[k(x, x')] - 1/(T+1) · Σ_{t=1..T} k(x, x_t)

(attraction to the target minus repulsion from past samples), which greedily
minimizes the squared RKHS error

    E_T² = E_{x,x'~p}[k] - (2/T) Σ_t E_{x~p}[k(x, x_t)] + (1/T²) Σ_{t,t'} k(x_t, x_t').

Continuous mode ascends J_T from the best of a few target draws; discrete
mode takes the argmax over a fixed candidate set with cached kernel sums.
"""

import logging
from typing import Optional, Union

import numpy as np

from kherd.constants import Mode, HerdingDefaults, RngStream, LogMessage, ErrorMessage
from kherd.exceptions import (
    AscentDiverged, EmptyCandidates, EmptyHistory, CacheInconsistency,
    ConfigError, DimensionMismatch)
from kherd.models.herding import HerdingConfig, HerdingState, SuperSampleSet
from kherd.models.kernel import Kernel
from kherd.models.target import EmpiricalDistribution, GaussianMixture
from kherd.services.kernel_service import KernelService
from kherd.services.target_service import TargetService
from kherd.utils.numerics import as_points, as_vec, derive_rng

logger = logging.getLogger(__name__)

Target = Union[GaussianMixture, EmpiricalDistribution]

ROUNDOFF = 1e-12


class HerdingService:
    """Service class for the herding state machine and run loop."""

    @staticmethod
    def new_state(kernel: Kernel, target: Target, mode: str = Mode.CONTINUOUS,
                  candidates=None) -> HerdingState:
        """
        Fresh state with an empty history.

        Args:
            kernel: Kernel shared by objective and error
            target: Distribution to herd
            mode: continuous or discrete
            candidates: Discrete candidate points; defaults to the points of an
                empirical target

        Raises:
            EmptyCandidates: discrete mode without candidates
        """
        mean_map = KernelService.mean_map(kernel, target)
        if mode == Mode.DISCRETE:
            if candidates is None:
                if not isinstance(target, EmpiricalDistribution):
                    raise EmptyCandidates(ErrorMessage.EMPTY_CANDIDATES)
                candidates = target.points
            candidates = as_points(candidates)
            if candidates.shape[0] == 0:
                raise EmptyCandidates(ErrorMessage.EMPTY_CANDIDATES)
            if candidates.shape[1] != target.dim:
                raise DimensionMismatch(ErrorMessage.DIMENSION_MISMATCH.format(
                    expected=target.dim, got=candidates.shape[1]))
            return HerdingState(kernel, target, mean_map, candidates=candidates)
        if not mean_map.has_gradient:
            raise ConfigError(ErrorMessage.INVALID_VALUE.format(
                field='mode', reason='continuous herding needs an analytic mean map (Gaussian mixture target)'),
                field='mode')
        return HerdingState(kernel, target, mean_map)

    # ============================================
    # OBJECTIVE
    # ============================================

    @staticmethod
    def objective_values(state: HerdingState, X) -> np.ndarray:
        """Objective at every row of X."""
        X = as_points(X, state.dim)
        attraction = state.mean_map(X)
        if state.T == 0:
            return attraction
        repulsion = state.kernel.cross(X, state.samples).sum(axis=1)
        return attraction - repulsion / (state.T + 1)

    @staticmethod
    def objective(state: HerdingState, x) -> float:
        """Attraction to the target minus repulsion from the history, at x."""
        x = as_vec(x)
        if x.shape[0] != state.dim:
            raise DimensionMismatch(ErrorMessage.DIMENSION_MISMATCH.format(expected=state.dim, got=x.shape[0]))
        return float(HerdingService.objective_values(state, x)[0])

    @staticmethod
    def objective_gradient(state: HerdingState, x) -> np.ndarray:
        """Exact gradient of the objective at x (needs an analytic mean map)."""
        x = as_vec(x)
        if x.shape[0] != state.dim:
            raise DimensionMismatch(ErrorMessage.DIMENSION_MISMATCH.format(expected=state.dim, got=x.shape[0]))
        grad = state.mean_map.gradient(x)[0]
        if state.T == 0:
            return grad
        return grad - state.kernel.gradient(x, state.samples).sum(axis=0) / (state.T + 1)

    # ============================================
    # STEPS
    # ============================================

    @staticmethod
    def _record(state: HerdingState, x: np.ndarray, mean_value: float,
                history_sum: float, objective_value: float) -> None:
        """Append x and update s1, s2; history_sum is Σ_t k(x, x_t) over the old history."""
        state.s1 += mean_value
        state.s2 += 2.0 * history_sum + state.kernel.evaluate(x, x)
        state.push(x)
        state.objective_trace.append(objective_value)

    @staticmethod
    def _ascend(state: HerdingState, x: np.ndarray, value: float, config: HerdingConfig):
        """Gradient ascent with halving backtracking from x."""
        sigma = state.kernel.sigma
        initial_step = config.initial_step(sigma)
        tol = config.tolerance(sigma)

        for iteration in range(config.max_iter):
            grad = HerdingService.objective_gradient(state, x)
            grad_norm = float(np.linalg.norm(grad))
            if grad_norm < tol:
                break

            step = initial_step
            for _ in range(config.max_halvings):
                trial = x + step * grad
                trial_value = HerdingService.objective(state, trial)
                if trial_value >= value:
                    x, value = trial, trial_value
                    break
                step *= 0.5
            else:
                drop = value - trial_value
                if drop > ROUNDOFF * (1.0 + abs(value)):
                    raise AscentDiverged(ErrorMessage.ASCENT_DIVERGED.format(drop=drop))
                logger.debug(LogMessage.ASCENT_STALLED.format(iters=iteration, grad=grad_norm))
                break
        return x, value

    @staticmethod
    def herd_step_continuous(state: HerdingState, rng: np.random.Generator,
                             config: Optional[HerdingConfig] = None) -> np.ndarray:
        """
        Take one continuous-mode step and append the new sample.

        Seeds are N_seed fresh target draws plus the previous sample; gradient
        ascent starts from the seed with the highest objective.

        Returns:
            np.ndarray: the new sample x_{T+1}
        """
        config = config or HerdingConfig()
        if state.is_discrete or not isinstance(state.target, GaussianMixture):
            raise ConfigError(ErrorMessage.INVALID_VALUE.format(
                field='mode', reason='continuous step needs a Gaussian mixture target'), field='mode')

        seeds = TargetService.gm_sample(rng, state.target, config.n_seeds)
        if state.T > 0:
            seeds = np.vstack([seeds, state.samples[-1]])
        values = HerdingService.objective_values(state, seeds)
        best = int(np.argmax(values))
        x, value = HerdingService._ascend(state, seeds[best].copy(), float(values[best]), config)

        mean_value = float(state.mean_map(x)[0])
        history_sum = float(state.kernel.cross(x, state.samples).sum()) if state.T else 0.0
        HerdingService._record(state, x, mean_value, history_sum, value)
        logger.debug(LogMessage.HERDING_STEP.format(t=state.T, objective=value,
                                                    error=HerdingService.herding_error(state)))
        return x

    @staticmethod
    def herd_step_discrete(state: HerdingState, config: Optional[HerdingConfig] = None) -> int:
        """
        Take one discrete-mode step: argmax of the objective over the candidates.

        Ties go to the lowest index. Repeats are allowed unless config.unique.
        Costs one kernel row against the chosen point.

        Returns:
            int: index of the chosen candidate
        """
        config = config or HerdingConfig(mode=Mode.DISCRETE)
        if not state.is_discrete or state.candidates.shape[0] == 0:
            raise EmptyCandidates(ErrorMessage.EMPTY_CANDIDATES)

        values = state.candidate_mean - state.candidate_sums / (state.T + 1)
        if config.unique:
            if state.selected.all():
                raise EmptyCandidates(ErrorMessage.EMPTY_CANDIDATES)
            values = np.where(state.selected, -np.inf, values)
        index = int(np.argmax(values))

        x = state.candidates[index]
        history_sum = float(state.candidate_sums[index])
        HerdingService._record(state, x, float(state.candidate_mean[index]), history_sum, float(values[index]))
        state.candidate_sums += state.kernel.cross(x, state.candidates)[0]
        state.selected[index] = True
        state.indices.append(index)
        return index

    # ============================================
    # ERROR
    # ============================================

    @staticmethod
    def squared_error(state: HerdingState) -> float:
        if state.T == 0:
            raise EmptyHistory(ErrorMessage.EMPTY_HISTORY)
        T = state.T
        return state.const - 2.0 * state.s1 / T + state.s2 / T ** 2

    @staticmethod
    def herding_error(state: HerdingState) -> float:
        """E_T from the cached sums, clamped at zero against round-off."""
        return float(np.sqrt(max(0.0, HerdingService.squared_error(state))))

    @staticmethod
    def brute_error(state: HerdingState) -> float:
        """E_T recomputed from scratch over the whole history."""
        if state.T == 0:
            raise EmptyHistory(ErrorMessage.EMPTY_HISTORY)
        return KernelService.mmd(state.mean_map, state.samples)

    @staticmethod
    def verify_cache(state: HerdingState) -> None:
        """
        Compare cached E_T² with a from-scratch evaluation.

        The gap is measured relative to the magnitude of the three terms that
        make up E_T².

        Raises:
            CacheInconsistency: gap above 1e-9 relative
        """
        T = state.T
        incremental = HerdingService.squared_error(state)
        samples = state.samples
        s1 = float(np.sum(state.mean_map(samples)))
        s2 = float(np.sum(state.kernel.cross(samples, samples)))
        brute = state.const - 2.0 * s1 / T + s2 / T ** 2
        scale = abs(state.const) + 2.0 * abs(s1) / T + abs(s2) / T ** 2
        logger.debug(LogMessage.CACHE_VERIFIED.format(t=T, incremental=incremental, brute=brute))
        if abs(incremental - brute) > HerdingDefaults.VERIFY_RTOL * scale:
            raise CacheInconsistency(ErrorMessage.CACHE_INCONSISTENCY.format(
                incremental=incremental, brute=brute, t=T))

    # ============================================
    # RUN LOOP
    # ============================================

    @staticmethod
    def run_herding(config: HerdingConfig, target: Target, rng: np.random.Generator,
                    kernel: Optional[Kernel] = None, candidates=None,
                    state: Optional[HerdingState] = None) -> SuperSampleSet:
        """
        Run config.t_max herding steps and record E_T after each.

        Args:
            config: Run settings
            target: Distribution to herd
            rng: Generator for continuous-mode seeds
            kernel: Kernel to use; median heuristic over target draws when None
            candidates: Discrete candidate points (default: empirical target points)
            state: Existing state to continue from (kernel/target are then ignored)

        Returns:
            SuperSampleSet: fully determined by the seed and config
        """
        if state is None:
            if kernel is None:
                kernel = KernelService.default_kernel(target, derive_rng(config.seed, RngStream.KERNEL))
            state = HerdingService.new_state(kernel, target, config.mode, candidates)

        logger.info(LogMessage.HERDING_START.format(mode=config.mode, t_max=config.t_max, sigma=state.kernel.sigma))

        for step in range(config.t_max):
            if config.mode == Mode.DISCRETE:
                HerdingService.herd_step_discrete(state, config)
            else:
                HerdingService.herd_step_continuous(state, rng, config)
            error = HerdingService.herding_error(state)
            state.error_trace.append(error)

            if config.verify_every and state.T % config.verify_every == 0:
                HerdingService.verify_cache(state)
            if state.T % HerdingDefaults.LOG_EVERY == 0:
                logger.info(LogMessage.HERDING_PROGRESS.format(t=state.T, t_max=config.t_max, error=error))

        if state.T:
            logger.info(LogMessage.HERDING_DONE.format(t=state.T, error=state.error_trace[-1]))

        return SuperSampleSet(
            samples=state.samples.copy(),
            errors=np.asarray(state.error_trace, dtype=float),
            mode=config.mode,
            sigma=state.kernel.sigma,
            seed=config.seed,
            indices=np.asarray(state.indices, dtype=int) if state.is_discrete else None,
            objective_trace=np.asarray(state.objective_trace, dtype=float),
        )
