from dataclasses import dataclass

import numpy as np

from . import mesh, structs, util


@dataclass
class DpwpFunction:
  """
  Discontinuous piecewise multilinear function on the cells of a QuadGrid.

  coeffs has shape (n_cells, 2^(d+1)); row K holds the Q1 Lagrange
  coefficients of cell K in the corner order of mesh.corner_bits.
  """
  grid: mesh.QuadGrid
  coeffs: np.ndarray

  def __post_init__(self):
    self.coeffs = np.asarray(self.coeffs, dtype=float)
    expected = (self.grid.n_cells, 2 ** self.grid.st_dim)
    if self.coeffs.shape != expected:
      raise structs.ShapeError("DpwpFunction coeffs should have shape {}, received {}".format(
        expected, self.coeffs.shape
      ))

  @classmethod
  def constant(cls, grid, value):
    return cls(grid, np.full((grid.n_cells, 2 ** grid.st_dim), float(value)))

  # Values at the grid's own quadrature nodes, using the face tie-break
  def at_nodes(self):
    return eval_at_nodes(self.coeffs, self.grid)

  def evaluate(self, points):
    cell, local = mesh.locate(self.grid, points)
    flat = np.ravel_multi_index(cell.T, self.grid.cell_shape)
    c = self.coeffs[flat]
    value = np.sum(c * mesh.corner_basis(local), axis=1)
    grad_local = np.einsum("na,nad->nd", c, mesh.corner_basis_grad(local))
    grad = grad_local / self.grid.spacing
    points = np.atleast_2d(np.asarray(points, dtype=float))
    return structs.FieldEvaluation(points, value, grad, np.ones(len(points), dtype=bool))


# Per-axis matrices mapping node samples to cell means of the trapezoid
# interpolant restricted to each cell
def _axis_average_matrix(n_cells, m):
  A = np.zeros((n_cells, n_cells * m + 1))
  row = np.full(m + 1, 1.0 / m)
  row[0] = row[-1] = 0.5 / m
  for c in range(n_cells):
    A[c, c * m:c * m + m + 1] = row
  return A

def cell_average(field, grid):
  field = np.asarray(field, dtype=float)
  if field.size != grid.n_nodes:
    raise structs.ShapeError("cell_average expects {} node samples, received {}".format(grid.n_nodes, field.size))
  arr = field.reshape(grid.node_shape)
  for axis, n in enumerate(grid.cell_shape):
    A = _axis_average_matrix(n, grid.oversample)
    arr = np.moveaxis(np.tensordot(A, arr, axes=(1, axis)), 0, axis)
  return arr.ravel()

# Node values of a batch of coefficient arrays (..., n_cells, 2^D) -> (..., n_nodes)
def eval_at_nodes(coeffs, grid):
  gathered = coeffs[..., grid.node_cell, :]
  return np.sum(gathered * grid.node_basis, axis=-1)

def perturbation_coeffs(avgs, grid, b, seed, iteration, j, shared_across_cells=False, strip=0):
  """Coefficients of the j-th perturbed candidate, drawn from its own stream."""
  rng = util.stream(seed, j, iteration, strip)
  n_corner = 2 ** grid.st_dim
  if shared_across_cells:
    eps = np.broadcast_to(rng.uniform(-b, b, size=n_corner), (grid.n_cells, n_corner))
  else:
    eps = rng.uniform(-b, b, size=(grid.n_cells, n_corner))
  return np.asarray(avgs, dtype=float)[:, None] + eps

def candidate_count(n_pert, augment_constants=True):
  return n_pert + (2 if augment_constants else 0)

# Coefficients of candidate j in the sampled pool: perturbations first,
# then the constants +c and -c when augmented
def candidate_coeffs(avgs, grid, pert, iteration, j, strip=0):
  if j < pert.n_pert:
    return perturbation_coeffs(avgs, grid, pert.b, pert.seed, iteration, j, pert.shared_across_cells, strip)
  if not pert.augment_constants or j >= pert.n_pert + 2:
    raise structs.ParameterError("candidate index {} out of range for a pool of {}".format(
      j, candidate_count(pert.n_pert, pert.augment_constants)
    ))
  sign = 1.0 if j == pert.n_pert else -1.0
  return np.full((grid.n_cells, 2 ** grid.st_dim), sign * pert.clip)

def _check_pert(b, n_pert, augment_constants, clip):
  if b < 0:
    raise structs.ParameterError("perturbation bound b must be nonnegative, received {}".format(b))
  if n_pert < 1:
    raise structs.ParameterError("n_pert must be at least one, received {}".format(n_pert))
  if augment_constants and (clip is None or clip <= 0):
    raise structs.ParameterError("constant augmentation needs a positive clip level, received {}".format(clip))

def sample_perturbations(
  avgs,
  grid,
  b,
  n_pert,
  seed,
  iteration=0,
  clip=None,
  augment_constants=True,
  shared_across_cells=False,
  strip=0,
):
  _check_pert(b, n_pert, augment_constants, clip)
  avgs = np.asarray(avgs, dtype=float)
  if avgs.shape != (grid.n_cells,):
    raise structs.ShapeError("expected {} cell averages, received shape {}".format(grid.n_cells, avgs.shape))

  pert = structs.PerturbationConfig(
    b=b, n_pert=n_pert, augment_constants=augment_constants,
    shared_across_cells=shared_across_cells, seed=seed, clip=clip,
  )
  return [
    DpwpFunction(grid, candidate_coeffs(avgs, grid, pert, iteration, j, strip))
    for j in range(candidate_count(n_pert, augment_constants))
  ]

def eval_dpwp(k, z):
  ev = k.evaluate(z)
  if np.ndim(z) == 1:
    return float(ev.value[0])
  return ev.value

# Mesh-dependent W^{1,inf} norm: max over cells of
# max|corner| + h * |(max edge difference / spacing per axis)|
def dpwp_norm(k):
  grid = k.grid
  dim = grid.st_dim
  c = k.coeffs.reshape((grid.n_cells,) + (2,) * dim)
  bound = np.max(np.abs(k.coeffs), axis=1)
  slopes = []
  for axis in range(dim):
    diff = np.abs(np.diff(c, axis=axis + 1)) / grid.spacing[axis]
    slopes.append(np.max(diff.reshape(grid.n_cells, -1), axis=1))
  grad = np.sqrt(np.sum(np.stack(slopes, axis=1) ** 2, axis=1))
  return float(np.max(bound + grid.h * grad))
