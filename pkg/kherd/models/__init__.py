# kherd/models/__init__.py
from kherd.models.kernel import GaussianKernel, Kernel, MeanMap
from kherd.models.target import EmpiricalDistribution, GaussianMixture
from kherd.models.herding import HerdingConfig, HerdingState, SuperSampleSet
from kherd.models.evaluation import ComparisonTable, ErrorTrace, GroundTruth, RateFit, RkhsFunction
from kherd.models.posterior import Dataset, PosteriorChain, WhitenTransform
from kherd.models.manifest import RunManifest
