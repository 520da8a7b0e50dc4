# kherd/services/__init__.py
from kherd.services.kernel_service import KernelService
from kherd.services.target_service import TargetService
from kherd.services.herding_service import HerdingService
from kherd.services.evaluation_service import EvaluationService
from kherd.services.posterior_service import PosteriorService

__all__ = ['KernelService', 'TargetService', 'HerdingService', 'EvaluationService', 'PosteriorService']
