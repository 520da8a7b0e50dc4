"""
Long-running experiment reproductions at desk scale.

Slow: run with `pytest -m slow`.
"""

import numpy as np
import pytest

from kherd.constants import Mode, RngStream
from kherd.models.herding import HerdingConfig
from kherd.models.posterior import Dataset
from kherd.models.target import EmpiricalDistribution
from kherd.services.evaluation_service import EvaluationService, default_t_grid
from kherd.services.herding_service import HerdingService
from kherd.services.kernel_service import KernelService
from kherd.services.posterior_service import PosteriorService
from kherd.services.target_service import TargetService
from kherd.utils.numerics import derive_rng

pytestmark = pytest.mark.slow

SEED = 2010


@pytest.fixture(scope='module')
def linearity_run():
    """200 continuous steps on a 2-D, 5-component mixture with the median-heuristic kernel."""
    gm = TargetService.gm_random(derive_rng(SEED, RngStream.TARGET), 2, 5)
    config = HerdingConfig(t_max=200, seed=SEED, verify_every=50)
    return HerdingService.run_herding(config, gm, derive_rng(SEED, RngStream.HERDING))


class TestContinuousHerding:
    """Error decay of continuous herding on mixtures."""

    def test_inverse_error_grows_linearly(self, linearity_run):
        fit = EvaluationService.inverse_error_linearity(linearity_run.errors, t_min=20)
        assert fit.r2 >= 0.99
        assert fit.slope > 0

    def test_scaled_error_stays_bounded(self, linearity_run):
        t = np.arange(1, 201)
        scaled = t * linearity_run.errors
        assert scaled[19:].max() <= 2.0 * scaled[19]

    def test_rate_separation_from_iid(self):
        gm = TargetService.gm_random(derive_rng(SEED, RngStream.TARGET), 5, 20)
        table = EvaluationService.compare_estimators(gm, ['moment1'], default_t_grid(2000), 10, SEED)
        slopes = {rate['estimator']: rate['slope'] for rate in table.rates}
        assert slopes['herding'] <= -0.85
        assert -0.65 <= slopes['iid'] <= -0.35

    def test_empirical_target_plateaus_at_the_dataset_error(self):
        gm = TargetService.gm_random(derive_rng(SEED, RngStream.TARGET), 5, 20)
        points = TargetService.gm_sample(derive_rng(SEED, RngStream.REFERENCE), gm, 10_000)
        table = EvaluationService.compare_estimators(
            gm, ['moment1'], default_t_grid(1000, 20), 2, SEED, empirical=EmpiricalDistribution(points))
        against_p = table.get('herding', 'moment1')
        against_set = table.get('herding', 'moment1@dataset')
        assert against_p.errors[-1] <= 2.0 * table.dataset_errors['moment1']
        assert against_set.errors[-1] < 0.1 * against_set.errors[0]


class TestTheory:
    """Exact identities and bounds on full-size runs."""

    def test_koksma_hlawka_for_random_functions(self):
        gm = TargetService.gm_random(derive_rng(SEED, RngStream.TARGET), 2, 5)
        kernel = KernelService.default_kernel(gm, derive_rng(SEED, RngStream.KERNEL))
        state = HerdingService.new_state(kernel, gm)
        rng = derive_rng(SEED, RngStream.HERDING)
        for _ in range(50):
            HerdingService.herd_step_continuous(state, rng)
        functions_rng = derive_rng(SEED, RngStream.FUNCTIONS)
        low, high = gm.means.min(axis=0) - 2.0, gm.means.max(axis=0) + 2.0
        results = [EvaluationService.koksma_hlawka_check(
            state, EvaluationService.random_rkhs_function(functions_rng, kernel, low, high))
            for _ in range(100)]
        assert all(result.lhs <= result.rhs + 1e-9 for result in results)

    def test_mean_maps_match_monte_carlo_oracles(self):
        rng = derive_rng(SEED, RngStream.REFERENCE)
        for i in range(20):
            gm = TargetService.gm_random(derive_rng(SEED, RngStream.TARGET, i), 2, 4, 0.0, 3.0)
            kernel = KernelService.default_kernel(gm, derive_rng(SEED, RngStream.KERNEL, i))
            a = TargetService.gm_sample(rng, gm, 1_000_000)
            b = TargetService.gm_sample(rng, gm, 1_000_000)
            x = a[0]

            values = kernel.cross(x, a)[0]
            stderr = values.std() / np.sqrt(values.size)
            assert abs(KernelService.mean_map_gm(kernel, gm, x) - values.mean()) <= 4 * stderr

            pairs = np.exp(-np.sum((a - b) ** 2, axis=1) / (2 * kernel.sigma ** 2))
            stderr = pairs.std() / np.sqrt(pairs.size)
            assert abs(KernelService.double_expectation_gm(kernel, gm) - pairs.mean()) <= 4 * stderr

    def test_discrete_argmax_on_a_thousand_points(self):
        points = derive_rng(SEED, RngStream.REFERENCE).standard_normal((1000, 3))
        state = HerdingService.new_state(KernelService.default_kernel(
            EmpiricalDistribution(points), derive_rng(SEED)), EmpiricalDistribution(points), Mode.DISCRETE)
        for step in range(1, 101):
            naive = int(np.argmax(HerdingService.objective_values(state, points)))
            assert HerdingService.herd_step_discrete(state) == naive
            if step % 50 == 0:
                HerdingService.verify_cache(state)

    def test_gradient_at_random_states(self):
        gm = TargetService.gm_random(derive_rng(SEED, RngStream.TARGET), 3, 6)
        kernel = KernelService.default_kernel(gm, derive_rng(SEED, RngStream.KERNEL))
        state = HerdingService.new_state(kernel, gm)
        rng = derive_rng(SEED, RngStream.HERDING)
        point_rng = derive_rng(SEED, RngStream.FUNCTIONS)
        h = 1e-6
        for _ in range(100):
            HerdingService.herd_step_continuous(state, rng, HerdingConfig(n_seeds=5, max_iter=20))
            x = gm.means[point_rng.integers(gm.n_components)] + point_rng.standard_normal(3)
            numeric = np.array([
                (HerdingService.objective(state, x + h * e) - HerdingService.objective(state, x - h * e)) / (2 * h)
                for e in np.eye(3)])
            np.testing.assert_allclose(HerdingService.objective_gradient(state, x), numeric, rtol=1e-5, atol=1e-9)


class TestPosteriorCompression:
    """Herding against random subsets on a synthetic logistic posterior."""

    def test_herding_beats_random_subsets(self):
        data = PosteriorService.synthetic_dataset(derive_rng(SEED, RngStream.SPLIT), 10, 2000, 1000)
        transform, train_features = PosteriorService.pca_whiten(data.train.features)
        train = Dataset(train_features, data.train.labels)
        test = Dataset(transform.apply(data.test.features), data.test.labels)
        chain = PosteriorService.mh_sample(train, n_keep=5000, rng=derive_rng(SEED, RngStream.MCMC), seed=SEED)

        checkpoints = [50, 100, 200, 500, 1000]
        t_grid = np.union1d(default_t_grid(1000, 20), checkpoints)
        report = PosteriorService.evaluate_compression(chain, test, t_grid, 10, SEED)
        herding, random = report['traces'][0], report['traces'][1]

        at = np.isin(t_grid, checkpoints)
        assert np.all(herding.errors[at] < random.errors[at])
        assert EvaluationService.fit_rate(herding, t_min=10).slope <= -0.6
        assert EvaluationService.fit_rate(random, t_min=10).slope >= -0.6
