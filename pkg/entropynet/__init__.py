__version__ = "0.1.0"

from .structs import (
  EntropyNetError, ConfigError, FieldEvaluation, LossBreakdown, PerturbationConfig, TrainConfig, TrainResult, ErrorReport,
)
from .flux import make_flux
from .mesh import build_grid, integrate
from .dpwp import DpwpFunction, sample_perturbations
from .network import ClippedTanhNet, init_network, load_checkpoint, save_checkpoint
from .loss import assemble_loss, total_loss
from .reference import make_benchmark, reference_solution
from .cpwl import build_shock_competitor, compile_cpwl_to_net
from .config import resolve_config
from .train import train as run_training
from .metrics import convergence_study, relative_errors
__all__ = [
  'EntropyNetError', 'ConfigError', 'FieldEvaluation', 'LossBreakdown', 'PerturbationConfig', 'TrainConfig',
  'TrainResult', 'ErrorReport', 'make_flux', 'build_grid', 'integrate', 'DpwpFunction', 'sample_perturbations',
  'ClippedTanhNet', 'init_network', 'load_checkpoint', 'save_checkpoint', 'assemble_loss', 'total_loss',
  'make_benchmark', 'reference_solution', 'build_shock_competitor', 'compile_cpwl_to_net', 'resolve_config',
  'run_training', 'convergence_study', 'relative_errors',
]
