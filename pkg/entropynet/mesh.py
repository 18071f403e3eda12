import itertools
from dataclasses import dataclass
from functools import cached_property, reduce

import numpy as np

from . import structs

# Relative slack when testing whether a point lies in the closed domain
DOMAIN_TOL = 1e-12

@dataclass(frozen=True)
class QuadGrid:
  """
  Uniform space-time tensor grid over Omega x [t_lo, t_hi].

  Axes are ordered (x_1, ..., x_d, t). The grid doubles as the background
  mesh of congruent cells; every mesh cell carries `oversample` trapezoid
  intervals per axis, so quadrature nodes include all cell corners.
  Node arrays are flattened in C order over that axis ordering.
  """
  lo: tuple
  hi: tuple
  t_lo: float
  t_hi: float
  n_cells_x: tuple
  n_cells_t: int
  oversample: int = 1

  @property
  def dim(self):
    return len(self.lo)

  @property
  def st_dim(self):
    return len(self.lo) + 1

  @property
  def cell_shape(self):
    return tuple(self.n_cells_x) + (self.n_cells_t,)

  @property
  def n_cells(self):
    return int(np.prod(self.cell_shape))

  @property
  def node_shape(self):
    return tuple(n * self.oversample + 1 for n in self.cell_shape)

  @property
  def n_nodes(self):
    return int(np.prod(self.node_shape))

  @property
  def st_lo(self):
    return np.array(tuple(self.lo) + (self.t_lo,), dtype=float)

  @property
  def st_hi(self):
    return np.array(tuple(self.hi) + (self.t_hi,), dtype=float)

  @property
  def spacing(self):
    return (self.st_hi - self.st_lo) / np.array(self.cell_shape, dtype=float)

  @property
  def h(self):
    return float(np.sqrt(np.sum(self.spacing ** 2)))

  @property
  def cell_volume(self):
    return float(np.prod(self.spacing))

  @property
  def volume(self):
    return float(np.prod(self.st_hi - self.st_lo))

  def axis_nodes(self, axis):
    return np.linspace(self.st_lo[axis], self.st_hi[axis], self.node_shape[axis])

  def axis_weights(self, axis):
    step = self.spacing[axis] / self.oversample
    w = np.full(self.node_shape[axis], step)
    w[0] = w[-1] = 0.5 * step
    return w

  @cached_property
  def nodes(self):
    axes = [self.axis_nodes(a) for a in range(self.st_dim)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=-1)

  @cached_property
  def weights(self):
    axes = [self.axis_weights(a) for a in range(self.st_dim)]
    return reduce(np.multiply.outer, axes).ravel()

  # Cell of every node along one axis: higher cell on shared faces, clamped
  def _axis_cell_local(self, axis):
    m = self.oversample
    i = np.arange(self.node_shape[axis])
    cell = np.minimum(i // m, self.cell_shape[axis] - 1)
    local = (i - cell * m) / m
    return cell, local

  @cached_property
  def node_cell(self):
    cells = [self._axis_cell_local(a)[0] for a in range(self.st_dim)]
    mesh = np.meshgrid(*cells, indexing="ij")
    return np.ravel_multi_index([m.ravel() for m in mesh], self.cell_shape)

  @cached_property
  def node_local(self):
    local = [self._axis_cell_local(a)[1] for a in range(self.st_dim)]
    mesh = np.meshgrid(*local, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=-1)

  @cached_property
  def node_basis(self):
    return corner_basis(self.node_local)

  def face(self, axis, side):
    """Flat node indices and surface weights of the face {z_axis = lo or hi}."""
    index = [np.arange(n) for n in self.node_shape]
    index[axis] = np.array([0 if side == 0 else self.node_shape[axis] - 1])
    mesh = np.meshgrid(*index, indexing="ij")
    idx = np.ravel_multi_index([m.ravel() for m in mesh], self.node_shape)
    others = [self.axis_weights(a) for a in range(self.st_dim) if a != axis]
    if others:
      w = reduce(np.multiply.outer, others).ravel()
    else:
      w = np.ones(1)
    return idx, w


# Corner ordering of a cell: bit tuples in C order, x_1 most significant
def corner_bits(st_dim):
  return np.array(list(itertools.product([0, 1], repeat=st_dim)), dtype=int)

# Tensor-product Q1 Lagrange basis at local coordinates in [0,1]^D, shape (N, 2^D)
def corner_basis(local):
  local = np.atleast_2d(local)
  bits = corner_bits(local.shape[1])
  factors = np.where(bits[None, :, :] == 1, local[:, None, :], 1.0 - local[:, None, :])
  return np.prod(factors, axis=2)

# Gradient of the Q1 basis in local coordinates, shape (N, 2^D, D)
def corner_basis_grad(local):
  local = np.atleast_2d(local)
  n, dim = local.shape
  bits = corner_bits(dim)
  factors = np.where(bits[None, :, :] == 1, local[:, None, :], 1.0 - local[:, None, :])
  signs = np.where(bits == 1, 1.0, -1.0)
  grad = np.empty((n, len(bits), dim))
  for a in range(dim):
    rest = np.delete(factors, a, axis=2)
    grad[:, :, a] = signs[None, :, a] * np.prod(rest, axis=2)
  return grad


def build_grid(lo, hi, t_final, n_cells_x, n_cells_t, t_start=0.0, oversample=1):
  lo = tuple(float(v) for v in np.atleast_1d(lo))
  hi = tuple(float(v) for v in np.atleast_1d(hi))
  n_cells_x = tuple(int(v) for v in np.atleast_1d(n_cells_x))
  if len(n_cells_x) == 1 and len(lo) > 1:
    n_cells_x = n_cells_x * len(lo)

  if len(lo) != len(hi) or len(lo) != len(n_cells_x):
    raise structs.GridError("domain bounds and cell counts disagree in dimension: lo={}, hi={}, n_cells_x={}".format(
      lo, hi, n_cells_x
    ))
  for a, b in zip(lo, hi):
    if not b > a:
      raise structs.GridError("spatial extent must be positive, received lo={} hi={}".format(lo, hi))
  if not float(t_final) > float(t_start):
    raise structs.GridError("time extent must be positive, received t_start={} t_final={}".format(t_start, t_final))
  if min(n_cells_x) < 1 or int(n_cells_t) < 1:
    raise structs.GridError("cell counts must be at least one, received n_cells_x={} n_cells_t={}".format(
      n_cells_x, n_cells_t
    ))
  if int(oversample) < 1:
    raise structs.GridError("oversample must be at least one, received {}".format(oversample))

  return QuadGrid(
    lo=lo,
    hi=hi,
    t_lo=float(t_start),
    t_hi=float(t_final),
    n_cells_x=n_cells_x,
    n_cells_t=int(n_cells_t),
    oversample=int(oversample),
  )

# Composite trapezoid: sum of weight * sample. The last axis of samples
# indexes nodes; leading axes are batched (one integral per leading index).
def integrate(grid, samples):
  samples = np.asarray(samples, dtype=float)
  if samples.shape[-1:] != (grid.n_nodes,):
    if samples.shape == grid.node_shape:
      samples = samples.ravel()
    else:
      raise structs.ShapeError("expected {} node samples, received array of shape {}".format(
        grid.n_nodes, samples.shape
      ))
  return np.sum(samples * grid.weights, axis=-1)


def _check_inside(grid, z):
  lo = grid.st_lo
  hi = grid.st_hi
  tol = DOMAIN_TOL * np.maximum(1.0, np.abs(hi - lo))
  outside = np.any((z < lo - tol) | (z > hi + tol), axis=-1)
  if np.any(outside):
    raise structs.DomainError("point {} lies outside the space-time domain [{}, {}]".format(
      z[np.argmax(outside)] if z.ndim > 1 else z, lo, hi
    ))

# Cell multi-index and local coordinates of points, shape (N, D) each
def locate(grid, z):
  z = np.atleast_2d(np.asarray(z, dtype=float))
  if z.shape[1] != grid.st_dim:
    raise structs.ShapeError("expected points of dimension {}, received {}".format(grid.st_dim, z.shape[1]))
  _check_inside(grid, z)
  spacing = grid.spacing
  rel = (z - grid.st_lo) / spacing
  cell = np.clip(np.floor(rel).astype(int), 0, np.array(grid.cell_shape) - 1)
  local = np.clip(rel - cell, 0.0, 1.0)
  return cell, local

def cells_of(grid, z):
  cell, _ = locate(grid, z)
  return np.ravel_multi_index(cell.T, grid.cell_shape)

def cell_of(grid, z):
  cell, _ = locate(grid, z)
  return structs.CellIndex(ix=tuple(int(c) for c in cell[0, :-1]), it=int(cell[0, -1]))

# Quadrature on the boundary of the space-time box, one entry per face
def boundary_faces(grid):
  faces = []
  for axis in range(grid.st_dim):
    for side in (0, 1):
      idx, w = grid.face(axis, side)
      normal = np.zeros(grid.st_dim)
      normal[axis] = -1.0 if side == 0 else 1.0
      faces.append({"axis": axis, "side": side, "index": idx, "weights": w, "normal": normal})
  return faces

# Nodes on the initial face t = t_lo
def initial_nodes(grid):
  return grid.face(grid.st_dim - 1, 0)

# Nodes on the lateral boundary dOmega x [t_lo, t_hi]; corner lines appear
# once per adjacent face, each with that face's trapezoid weight
def lateral_nodes(grid):
  idx = []
  w = []
  for axis in range(grid.dim):
    for side in (0, 1):
      i, wi = grid.face(axis, side)
      idx.append(i)
      w.append(wi)
  return np.concatenate(idx), np.concatenate(w)

# Nodes on the final face t = t_hi
def final_nodes(grid):
  return grid.face(grid.st_dim - 1, 1)
