from dataclasses import dataclass, field
from typing import Optional

import numpy as np

# Error hierarchy. Every failure raised by the package derives from
# EntropyNetError so callers (and the cli) can tell package errors apart.

class EntropyNetError(Exception):
  exit_code = 2

class ConfigError(EntropyNetError):
  exit_code = 1

  def __init__(self, message, path=None):
    self.path = path
    if path is not None:
      message = "{}: {}".format(path, message)
    super().__init__(message)

class CatalogError(ConfigError):
  pass

class GridError(EntropyNetError):
  pass

class ShapeError(EntropyNetError):
  pass

class DomainError(EntropyNetError):
  pass

class ParameterError(EntropyNetError):
  pass

class ContractViolation(EntropyNetError):
  pass

class UnsupportedError(EntropyNetError):
  pass

class SolverError(EntropyNetError):
  pass

class InstabilityError(SolverError):
  pass

class MeshError(EntropyNetError):
  pass

class CompilationError(EntropyNetError):
  def __init__(self, message, trace=None):
    self.trace = trace
    super().__init__(message)

class NonFiniteLossError(EntropyNetError):
  def __init__(self, message, diagnostics=None):
    self.diagnostics = diagnostics or {}
    super().__init__(message)

class MetricError(EntropyNetError):
  pass


@dataclass
class CellIndex:
  ix: tuple
  it: int


@dataclass
class FieldEvaluation:
  """
  Values of a space-time field at a batch of points.

  points has shape (N, d+1) ordered (x_1, ..., x_d, t), value (N,),
  grad (N, d+1) and active (N,) flags the points where grad is meaningful
  (clipped network outputs report active=False and a zero gradient).
  """
  points: np.ndarray
  value: np.ndarray
  grad: np.ndarray
  active: np.ndarray


class AnalyticField():
  # Wraps closed-form value and gradient callables of (N, d+1) points
  def __init__(self, value_fn, grad_fn):
    self.value_fn = value_fn
    self.grad_fn = grad_fn

  def evaluate(self, points):
    points = np.atleast_2d(np.asarray(points, dtype=float))
    value = np.asarray(self.value_fn(points), dtype=float)
    grad = np.asarray(self.grad_fn(points), dtype=float)
    return FieldEvaluation(points, value, grad, np.ones(len(points), dtype=bool))


@dataclass
class LossBreakdown:
  j_ent_star: float
  l_reg: float
  l_ibc_initial: float
  l_ibc_boundary: float
  total: float
  argmax_index: int
  argmax_norm: float

  def as_row(self):
    return {
      "total": self.total,
      "j_ent_star": self.j_ent_star,
      "l_reg": self.l_reg,
      "l_ibc_initial": self.l_ibc_initial,
      "l_ibc_boundary": self.l_ibc_boundary,
      "argmax_index": self.argmax_index,
      "argmax_norm": self.argmax_norm,
    }


@dataclass
class PerturbationConfig:
  b: float = 5.0
  n_pert: int = 1000
  augment_constants: bool = True
  shared_across_cells: bool = False
  seed: int = 0
  clip: Optional[float] = None


@dataclass
class TrainConfig:
  benchmark: str
  widths: list
  clip: float
  n_strips: int
  n_cells_t: int
  n_cells_x: tuple
  n_train: int
  n_pert: int
  b: float = 5.0
  learning_rate: float = 1e-3
  init_seed: int = 0
  pert_seed: int = 0
  augment_constants: bool = True
  shared_across_cells: bool = False
  oversample: int = 1
  log_every: int = 100
  threads: Optional[int] = None

  def perturbation(self, clip=None):
    return PerturbationConfig(
      b=self.b,
      n_pert=self.n_pert,
      augment_constants=self.augment_constants,
      shared_across_cells=self.shared_across_cells,
      seed=self.pert_seed,
      clip=self.clip if clip is None else clip,
    )


@dataclass
class TrainResult:
  nets: list
  history: object
  best_iterations: list
  best_losses: list
  wall_time: float
  config: TrainConfig
  solution: object = None
  report: object = None


@dataclass
class ErrorReport:
  e_r_final: float
  e_r_spacetime: float
  grid_shape: tuple
  reference_kind: str
  extra: dict = field(default_factory=dict)

  def as_dict(self):
    return {
      "e_r_final": self.e_r_final,
      "e_r_spacetime": self.e_r_spacetime,
      "grid_shape": list(self.grid_shape),
      "reference_kind": self.reference_kind,
    }
