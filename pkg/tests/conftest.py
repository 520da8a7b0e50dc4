import numpy as np
import pytest

from kherd import create_app
from kherd.config import TestConfig
from kherd.models.kernel import GaussianKernel
from kherd.models.target import EmpiricalDistribution, GaussianMixture
from kherd.services.posterior_service import PosteriorService
from kherd.services.target_service import TargetService
from kherd.utils.numerics import derive_rng


@pytest.fixture
def rng():
    """Fresh seeded generator for each test."""
    return derive_rng(12345)


@pytest.fixture
def small_gm():
    """2-D mixture with three well-separated components."""
    return GaussianMixture(
        weights=np.array([0.5, 0.3, 0.2]),
        means=np.array([[0.0, 0.0], [3.0, 1.0], [-2.0, 2.5]]),
        covariances=np.array([
            [[1.0, 0.3], [0.3, 0.5]],
            [[0.4, 0.0], [0.0, 0.4]],
            [[0.8, -0.2], [-0.2, 0.6]],
        ]),
    )


@pytest.fixture
def point_mass_gm():
    """Three Dirac components: the mixture is a finite point set."""
    return GaussianMixture.point_masses(np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 2.0]]))


@pytest.fixture
def kernel():
    return GaussianKernel(1.0)


@pytest.fixture
def empirical(small_gm):
    """300 draws from small_gm as an empirical target."""
    return EmpiricalDistribution(TargetService.gm_sample(derive_rng(7), small_gm, 300))


@pytest.fixture
def synthetic_dataset():
    """Small synthetic logistic dataset: 3 features, 200 train, 100 test rows."""
    return PosteriorService.synthetic_dataset(derive_rng(99), dim=3, n_train=200, n_test=100)


@pytest.fixture
def app():
    """Create a Flask app with the test configuration."""
    return create_app(TestConfig)


@pytest.fixture
def runner(app):
    """CLI runner for the app's commands."""
    return app.test_cli_runner()


@pytest.fixture
def run_cli(runner, tmp_path):
    """Run a command into a fresh output directory; returns (exit code, output dir)."""
    counter = {'n': 0}

    def _run(command, *args, seed=0, out=None):
        counter['n'] += 1
        out_dir = out or tmp_path / f"run{counter['n']}"
        result = runner.invoke(args=[command, '--out', str(out_dir), '--seed', str(seed), *args])
        return result.exit_code, out_dir

    return _run
