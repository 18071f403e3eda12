import itertools
import logging
import math
from collections import Counter
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import pandas as pd

from . import loss, mesh, structs, util

logger = logging.getLogger(__name__)

LOCATE_TOL = 1e-10
LATTICE_TOL = 1e-9
TAU_START = 16.0
TAU_MAX = 2.0 ** 20
CHECK_SAMPLES = 10000
# Entries of the widest (points x dim x units) gradient block per evaluation chunk
EVAL_BUDGET = 2 ** 21


class SimplicialMesh():
  """
  Conforming simplicial mesh of a box in R^D.

  vertices has shape (V, D), simplices (S, D+1). Point location returns
  the lowest-index simplex containing a point.
  """
  def __init__(self, vertices, simplices, check=True):
    vertices = np.asarray(vertices, dtype=float)
    if vertices.ndim == 1:
      vertices = vertices[:, None]
    self.vertices = vertices
    self.simplices = np.asarray(simplices, dtype=int)
    self.dim = vertices.shape[1]

    if self.simplices.ndim != 2 or self.simplices.shape[1] != self.dim + 1:
      raise structs.MeshError("simplices of a {}-dimensional mesh need {} vertices, received shape {}".format(
        self.dim, self.dim + 1, self.simplices.shape
      ))

    v0 = vertices[self.simplices[:, 0]]
    edges = vertices[self.simplices[:, 1:]] - v0[:, None, :]
    det = np.linalg.det(edges)
    scale = np.max(np.abs(edges)) ** self.dim if len(edges) else 1.0
    if np.any(np.abs(det) <= 1e-14 * scale):
      raise structs.MeshError("mesh has degenerate simplices: {}".format(
        np.flatnonzero(np.abs(det) <= 1e-14 * scale)[:10].tolist()
      ))
    self.volumes = np.abs(det) / math.factorial(self.dim)
    self._v0 = v0
    self._inv = np.linalg.inv(edges)
    self.lo = vertices.min(axis=0)
    self.hi = vertices.max(axis=0)

    if check:
      self.check_conforming()
    self._build_bins()

  @property
  def n_vertices(self):
    return len(self.vertices)

  @cached_property
  def patches(self):
    patches = [[] for _ in range(self.n_vertices)]
    for s, simplex in enumerate(self.simplices):
      for v in simplex:
        patches[v].append(s)
    return [np.array(p, dtype=int) for p in patches]

  def check_conforming(self):
    faces = Counter()
    for simplex in self.simplices:
      for omit in range(self.dim + 1):
        faces[tuple(sorted(np.delete(simplex, omit)))] += 1

    extent = self.hi - self.lo
    for face, count in faces.items():
      if count > 2:
        raise structs.MeshError("face {} is shared by {} simplices".format(face, count))
      if count == 1:
        pts = self.vertices[list(face)]
        on_box = np.any(
          np.all(np.abs(pts - self.lo) <= 1e-12 * extent, axis=0) |
          np.all(np.abs(pts - self.hi) <= 1e-12 * extent, axis=0)
        )
        if not on_box:
          raise structs.MeshError("mesh is not conforming: face {} has no neighbour and is not on the boundary".format(
            face
          ))

  def _build_bins(self):
    n = len(self.simplices)
    self._n_bins = max(1, int(math.ceil(n ** (1.0 / self.dim))))
    self._bin_size = np.where(self.hi > self.lo, (self.hi - self.lo) / self._n_bins, 1.0)
    bins = {}
    pts = self.vertices[self.simplices]
    lo_bin = self._axis_bins(pts.min(axis=1) - LOCATE_TOL)
    hi_bin = self._axis_bins(pts.max(axis=1) + LOCATE_TOL)
    shape = (self._n_bins,) * self.dim
    for s in range(n):
      ranges = [range(lo_bin[s, a], hi_bin[s, a] + 1) for a in range(self.dim)]
      for cell in itertools.product(*ranges):
        bins.setdefault(np.ravel_multi_index(cell, shape), []).append(s)
    self._bins = {k: np.array(v, dtype=int) for k, v in bins.items()}

  def _axis_bins(self, pts):
    b = np.floor((pts - self.lo) / self._bin_size).astype(int)
    return np.clip(b, 0, self._n_bins - 1)

  def locate(self, points):
    """Simplex index and barycentric coordinates of each point."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
      pts = pts[:, None] if self.dim == 1 else pts[None, :]
    if pts.shape[1] != self.dim:
      raise structs.ShapeError("expected points of dimension {}, received {}".format(self.dim, pts.shape[1]))

    n = len(pts)
    simplex = np.full(n, -1, dtype=int)
    bary = np.zeros((n, self.dim + 1))
    flat = np.ravel_multi_index(self._axis_bins(pts).T, (self._n_bins,) * self.dim)
    order = np.argsort(flat, kind="stable")
    keys, starts = np.unique(flat[order], return_index=True)
    bounds = list(starts) + [n]

    for i, key in enumerate(keys):
      sel = order[bounds[i]:bounds[i + 1]]
      cand = self._bins.get(int(key))
      if cand is None:
        continue
      rel = pts[sel][:, None, :] - self._v0[cand][None, :, :]
      lam = np.einsum("ncd,cde->nce", rel, self._inv[cand])
      full = np.concatenate([1.0 - lam.sum(axis=2, keepdims=True), lam], axis=2)
      inside = np.all(full >= -LOCATE_TOL, axis=2)
      found = inside.any(axis=1)
      first = np.argmax(inside, axis=1)
      rows = sel[found]
      simplex[rows] = cand[first[found]]
      bary[rows] = full[found, first[found]]

    if np.any(simplex < 0):
      bad = pts[simplex < 0][0]
      raise structs.DomainError("point {} is outside the mesh".format(bad))
    return simplex, bary

  # Affine coefficients (grad, offset) per simplex of the function with given nodal values
  def affine_coefficients(self, values):
    values = np.asarray(values, dtype=float)
    local = values[self.simplices]
    diffs = local[:, 1:] - local[:, :1]
    grad = np.einsum("sed,se->sd", self._inv, diffs)
    offset = local[:, 0] - np.sum(grad * self._v0, axis=1)
    return grad, offset


class CpwlFunction():
  """Continuous piecewise linear function given by nodal values on a SimplicialMesh."""
  def __init__(self, mesh, values):
    values = np.asarray(values, dtype=float)
    if values.shape != (mesh.n_vertices,):
      raise structs.ShapeError("expected {} nodal values, received shape {}".format(mesh.n_vertices, values.shape))
    self.mesh = mesh
    self.values = values
    self.grad, self.offset = mesh.affine_coefficients(values)

  @property
  def norm_inf(self):
    return float(np.max(np.abs(self.values)))

  def evaluate(self, points):
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if self.mesh.dim == 1 and pts.shape[1] != 1:
      pts = pts.reshape(-1, 1)
    simplex, bary = self.mesh.locate(pts)
    value = np.sum(bary * self.values[self.mesh.simplices[simplex]], axis=1)
    return structs.FieldEvaluation(pts, value, self.grad[simplex], np.ones(len(pts), dtype=bool))

  def is_affine(self, tol=1e-12):
    scale = max(1.0, float(np.max(np.abs(self.grad))), float(np.max(np.abs(self.offset))))
    return bool(
      np.all(np.abs(self.grad - self.grad[0]) <= tol * scale) and
      np.all(np.abs(self.offset - self.offset[0]) <= tol * scale)
    )


def cpwl_from_function(mesh, fn):
  return CpwlFunction(mesh, np.asarray(fn(mesh.vertices), dtype=float))

def interval_mesh(points):
  points = np.sort(np.asarray(points, dtype=float))
  simplices = np.column_stack([np.arange(len(points) - 1), np.arange(1, len(points))])
  return SimplicialMesh(points[:, None], simplices)

# Each rectangle of an nx x ny grid split by both diagonals through an added centre node
def criss_cross_mesh(lo, hi, nx, ny):
  xs = np.linspace(lo[0], hi[0], nx + 1)
  ys = np.linspace(lo[1], hi[1], ny + 1)
  corner = lambda i, j: i * (ny + 1) + j
  vertices = [(x, y) for x in xs for y in ys]
  simplices = []
  for i in range(nx):
    for j in range(ny):
      c = len(vertices)
      vertices.append((0.5 * (xs[i] + xs[i + 1]), 0.5 * (ys[j] + ys[j + 1])))
      a, b, d, e = corner(i, j), corner(i + 1, j), corner(i + 1, j + 1), corner(i, j + 1)
      simplices.extend([(a, b, c), (b, d, c), (d, e, c), (e, a, c)])
  return SimplicialMesh(np.array(vertices), np.array(simplices))


@dataclass
class MinMaxExpr:
  """
  Binary min/max tree over affine leaves.

  leaf k is z -> A[k] . z + b[k]; nodes are ("leaf", k, None),
  ("min", left, right) or ("max", left, right), children given by node id.
  """
  A: np.ndarray
  b: np.ndarray
  nodes: list
  root: int

  @property
  def leaf_count(self):
    return len(self.b)

  @property
  def depth(self):
    return _heights(self.nodes)[self.root]

  def evaluate(self, points):
    pts = _as_points(points, self.A.shape[1])
    leaves = pts @ self.A.T + self.b
    return _eval_tree(self.nodes, self.root, leaves)


def _as_points(points, dim):
  pts = np.asarray(points, dtype=float)
  if pts.ndim == 1:
    pts = pts[:, None] if dim == 1 else pts[None, :]
  return pts

def _heights(nodes):
  heights = []
  for op, a, b in nodes:
    heights.append(0 if op == "leaf" else 1 + max(heights[a], heights[b]))
  return heights

def _eval_tree(nodes, root, leaves):
  values = [None] * len(nodes)
  for i, (op, a, b) in enumerate(nodes):
    if op == "leaf":
      values[i] = leaves[:, a]
    elif op == "min":
      values[i] = np.minimum(values[a], values[b])
    else:
      values[i] = np.maximum(values[a], values[b])
  return values[root]

# Balanced reduction of node ids under op; returns the root id
def _balanced(nodes, ids, op):
  ids = list(ids)
  while len(ids) > 1:
    paired = []
    for i in range(0, len(ids) - 1, 2):
      nodes.append((op, ids[i], ids[i + 1]))
      paired.append(len(nodes) - 1)
    if len(ids) % 2:
      paired.append(ids[-1])
    ids = paired
  return ids[0]

def _dedupe_rows(A, b):
  scale = max(1.0, float(np.max(np.abs(A))) if A.size else 1.0, float(np.max(np.abs(b))) if b.size else 1.0)
  keep = []
  index = []
  for k in range(len(b)):
    match = None
    for pos, j in enumerate(keep):
      if np.all(np.abs(A[k] - A[j]) <= 1e-12 * scale) and abs(b[k] - b[j]) <= 1e-12 * scale:
        match = pos
        break
    if match is None:
      keep.append(k)
      match = len(keep) - 1
    index.append(match)
  return A[keep], b[keep], index

def hat_minmax_expr(mesh, node_id):
  """
  Lattice representation of the hat function of a vertex,
  phi = max_i min_{k in S_i} l_k, with S_i = {k : l_k >= l_i on region i}.

  The affine pieces are the hat restricted to each simplex of the patch,
  plus the zero piece when the patch does not cover the whole mesh.
  """
  if not 0 <= node_id < mesh.n_vertices:
    raise structs.ParameterError("node id {} out of range for {} vertices".format(node_id, mesh.n_vertices))
  patch = mesh.patches[node_id]
  indicator = np.zeros(mesh.n_vertices)
  indicator[node_id] = 1.0
  grad, offset = mesh.affine_coefficients(indicator)

  outside = np.setdiff1d(np.arange(len(mesh.simplices)), patch)
  A = grad[patch]
  b = offset[patch]
  if len(outside):
    A = np.vstack([A, np.zeros((1, mesh.dim))])
    b = np.append(b, 0.0)
  A, b, piece_leaf = _dedupe_rows(A, b)

  scale = max(1.0, float(np.max(np.abs(b))))
  regions = [mesh.vertices[mesh.simplices[s]] for s in patch]
  region_leaf = [piece_leaf[i] for i in range(len(patch))]
  if len(outside):
    regions.append(mesh.vertices[np.unique(mesh.simplices[outside])])
    region_leaf.append(piece_leaf[-1])

  sets = []
  for pts, own in zip(regions, region_leaf):
    vals = pts @ A.T + b
    ok = np.all(vals >= vals[:, [own]] - LATTICE_TOL * scale, axis=0)
    sets.append(frozenset(np.flatnonzero(ok).tolist()))

  # Supersets give smaller minima and never win the max
  unique = sorted(set(sets), key=lambda s: (len(s), sorted(s)))
  terms = [s for s in unique if not any(t < s for t in unique)]

  nodes = [("leaf", k, None) for k in range(len(b))]
  mins = [_balanced(nodes, sorted(s), "min") for s in terms]
  root = _balanced(nodes, mins, "max")
  return MinMaxExpr(A=A, b=b, nodes=nodes, root=root)


def psi_tau(tau, r):
  x = tau * np.asarray(r, dtype=float)
  th = np.tanh(x)
  return th + x * (1.0 - th ** 2)

def smooth_min(r, s, tau):
  d = r - s
  return 0.5 * (r + s) - 0.5 * d * np.tanh(tau * d)

def smooth_max(r, s, tau):
  d = r - s
  return 0.5 * (r + s) + 0.5 * d * np.tanh(tau * d)

def _check_tau(tau):
  if not tau > 0:
    raise structs.ParameterError("smoothing parameter tau must be positive, received {}".format(tau))


class SmoothExpr():
  """MinMaxExpr with every min/max replaced by its tanh smoothing at tau."""
  def __init__(self, expr, tau):
    _check_tau(tau)
    self.expr = expr
    self.tau = float(tau)

  def evaluate(self, points):
    pts = _as_points(points, self.expr.A.shape[1])
    n = len(pts)
    leaves = pts @ self.expr.A.T + self.expr.b
    values = [None] * len(self.expr.nodes)
    grads = [None] * len(self.expr.nodes)
    for i, (op, a, b) in enumerate(self.expr.nodes):
      if op == "leaf":
        values[i] = leaves[:, a]
        grads[i] = np.broadcast_to(self.expr.A[a], (n, pts.shape[1]))
        continue
      sign = -1.0 if op == "min" else 1.0
      d = values[a] - values[b]
      values[i] = 0.5 * (values[a] + values[b]) + sign * 0.5 * d * np.tanh(self.tau * d)
      psi = psi_tau(self.tau, d)
      grads[i] = 0.5 * (grads[a] + grads[b]) + sign * 0.5 * psi[:, None] * (grads[a] - grads[b])
    r = self.expr.root
    return structs.FieldEvaluation(pts, values[r], np.array(grads[r]), np.ones(n, dtype=bool))

def smooth_expr(expr, tau):
  return SmoothExpr(expr, tau)


class CompiledTanhNet():
  """
  Layered tanh network compiled from a CPwL function.

  Layer 0 evaluates the affine leaves. Each following sublayer combines
  pairs of units (left, right, sign) into
  (r+s)/2 + sign * (r-s)/2 * tanh(tau (r-s)); a unit with left == right
  passes its input through. The read-out is a linear combination followed
  by the clipping head.
  """
  def __init__(self, A, b, sublayers, out_weights, tau, clip):
    if clip is None or not clip > 0:
      raise structs.ParameterError("clip level c must be positive, received {}".format(clip))
    self.A = np.asarray(A, dtype=float)
    self.b = np.asarray(b, dtype=float)
    self.sublayers = sublayers
    self.out_weights = np.asarray(out_weights, dtype=float)
    self.tau = float(tau)
    self.clip = float(clip)

  @property
  def input_dim(self):
    return self.A.shape[1]

  @property
  def depth(self):
    return len(self.sublayers)

  def neuron_counts(self):
    return [len(self.b)] + [len(left) for left, _, _ in self.sublayers]

  def with_tau(self, tau):
    _check_tau(tau)
    return CompiledTanhNet(self.A, self.b, self.sublayers, self.out_weights, tau, self.clip)

  def _evaluate_chunk(self, pts):
    n, dim = pts.shape
    V = pts @ self.A.T + self.b
    G = np.broadcast_to(self.A.T, (n, dim, len(self.b)))
    for left, right, sign in self.sublayers:
      L, R = V[:, left], V[:, right]
      GL, GR = G[:, :, left], G[:, :, right]
      d = L - R
      V = 0.5 * (L + R) + sign * 0.5 * d * np.tanh(self.tau * d)
      psi = psi_tau(self.tau, d)
      G = 0.5 * (GL + GR) + (sign * 0.5 * psi)[:, None, :] * (GL - GR)
    return V @ self.out_weights, G @ self.out_weights

  def evaluate(self, points):
    pts = _as_points(points, self.input_dim)
    if pts.shape[1] != self.input_dim:
      raise structs.ShapeError("network expects inputs of dimension {}, received {}".format(
        self.input_dim, pts.shape[1]
      ))
    width = max([len(self.b)] + self.neuron_counts())
    chunk = max(1, EVAL_BUDGET // (self.input_dim * width))
    raws = []
    grads = []
    for start in range(0, len(pts), chunk):
      r, g = self._evaluate_chunk(pts[start:start + chunk])
      raws.append(r)
      grads.append(g)
    raw = np.concatenate(raws) if raws else np.zeros(0)
    raw_grad = np.concatenate(grads) if grads else np.zeros((0, self.input_dim))

    half = 0.5 * self.clip
    active = (raw > -half) & (raw < half)
    return structs.FieldEvaluation(pts, np.clip(raw, -half, half), raw_grad * active[:, None], active)

  def backward(self, evaluation, value_bar, grad_bar):
    raise structs.ContractViolation("compiled networks are fixed; parameter gradients are not available")


def _layerize(nodes, roots):
  """
  Arrange the union of expression trees into sublayers.

  A node of height k is computed in sublayer k and copied forward until
  its parent's sublayer (roots until the last one).
  """
  heights = _heights(nodes)
  top = max(heights[r] for r in roots)
  last = [top] * len(nodes)
  for i, (op, a, b) in enumerate(nodes):
    if op != "leaf":
      last[a] = heights[i] - 1
      last[b] = heights[i] - 1
  for r in roots:
    last[r] = top

  position = {}
  for i, (op, a, _) in enumerate(nodes):
    if op == "leaf":
      position[(0, i)] = a

  sublayers = []
  for level in range(1, top + 1):
    left, right, sign = [], [], []
    for i, (op, a, b) in enumerate(nodes):
      if heights[i] == level:
        left.append(position[(level - 1, a)])
        right.append(position[(level - 1, b)])
        sign.append(-1.0 if op == "min" else 1.0)
      elif heights[i] < level <= last[i]:
        p = position[(level - 1, i)]
        left.append(p)
        right.append(p)
        sign.append(1.0)
      else:
        continue
      position[(level, i)] = len(left) - 1
    sublayers.append((np.array(left, dtype=int), np.array(right, dtype=int), np.array(sign)))

  out_index = [position[(top, r)] for r in roots]
  return sublayers, out_index

def _assemble(u_hat, clip):
  mesh = u_hat.mesh
  if u_hat.is_affine():
    return CompiledTanhNet(u_hat.grad[:1], u_hat.offset[:1], [], np.ones(1), TAU_START, clip)

  A_parts, b_parts, nodes, roots, coeffs = [], [], [], [], []
  n_leaves = 0
  for j in range(mesh.n_vertices):
    if u_hat.values[j] == 0.0:
      continue
    expr = hat_minmax_expr(mesh, j)
    offset = len(nodes)
    for op, a, b in expr.nodes:
      if op == "leaf":
        nodes.append(("leaf", a + n_leaves, None))
      else:
        nodes.append((op, a + offset, b + offset))
    roots.append(expr.root + offset)
    coeffs.append(u_hat.values[j])
    A_parts.append(expr.A)
    b_parts.append(expr.b)
    n_leaves += expr.leaf_count

  if not roots:
    return CompiledTanhNet(np.zeros((1, mesh.dim)), np.zeros(1), [], np.zeros(1), TAU_START, clip)

  sublayers, out_index = _layerize(nodes, roots)
  width = len(sublayers[-1][0]) if sublayers else n_leaves
  out = np.zeros(width)
  np.add.at(out, out_index, coeffs)
  return CompiledTanhNet(np.vstack(A_parts), np.concatenate(b_parts), sublayers, out, TAU_START, clip)

def approximation_errors(net, u_hat, points, volume):
  """(sup |net - u_hat|, |Omega| * mean |grad net - grad u_hat|) on sample points."""
  ev_net = net.evaluate(points)
  ev_hat = u_hat.evaluate(points)
  sup = float(np.max(np.abs(ev_net.value - ev_hat.value)))
  w11 = float(volume * np.mean(np.linalg.norm(ev_net.grad - ev_hat.grad, axis=1)))
  return sup, w11

def compile_cpwl_to_net(u_hat, tol, clip=None, margin=0.1, samples=CHECK_SAMPLES, tau_start=TAU_START, tau_max=TAU_MAX):
  """
  Tanh network approximating sum_j u_hat(N_j) * smooth(hat_j, tau).

  tau doubles from tau_start until the sup error on a fixed quasi-random
  sample is at most tol. The doubling trace is kept on the returned net
  as a DataFrame with columns tau, sup_error, w11_error.
  """
  if not tol > 0:
    raise structs.ParameterError("tolerance must be positive, received {}".format(tol))
  clip = 2.0 * (u_hat.norm_inf + 1.0) if clip is None else float(clip)
  if u_hat.norm_inf > 0.5 * clip - margin:
    raise structs.ParameterError("nodal values up to {} violate the clip margin: need |u| <= c/2 - {} = {}".format(
      u_hat.norm_inf, margin, 0.5 * clip - margin
    ))

  mesh = u_hat.mesh
  net = _assemble(u_hat, clip)
  points = util.kronecker_points(samples, mesh.lo, mesh.hi)
  volume = float(np.sum(mesh.volumes))
  logger.debug("compiled network: neurons per layer %s", net.neuron_counts())

  rows = []
  tau = float(tau_start)
  while tau <= tau_max:
    net = net.with_tau(tau)
    sup, w11 = approximation_errors(net, u_hat, points, volume)
    rows.append({"tau": tau, "sup_error": sup, "w11_error": w11})
    logger.debug("tau %.0f sup error %.3e w11 error %.3e", tau, sup, w11)
    if sup <= tol:
      net.trace = pd.DataFrame(rows)
      return net
    tau *= 2.0

  trace = pd.DataFrame(rows)
  raise structs.CompilationError(
    "no tau up to {:.0f} reached sup error {:.3e} (last {:.3e})".format(tau_max, tol, rows[-1]["sup_error"]),
    trace=trace,
  )


@dataclass
class ShockCompetitor:
  function: CpwlFunction
  h: float
  strip_width: float
  n_levels: int
  extra: dict = field(default_factory=dict)

  def evaluate(self, points):
    return self.function.evaluate(points)

def _zipper(bottom, top, coords):
  """Triangulate the band between two x-sorted rows of vertex ids."""
  tris = []
  i = j = 0
  while i < len(bottom) - 1 or j < len(top) - 1:
    advance_bottom = j == len(top) - 1 or (
      i < len(bottom) - 1 and coords[bottom[i + 1]][0] <= coords[top[j + 1]][0]
    )
    if advance_bottom:
      tris.append((bottom[i], top[j], bottom[i + 1]))
      i += 1
    else:
      tris.append((bottom[i], top[j], top[j + 1]))
      j += 1
  return tris

def build_shock_competitor(problem, h, shift=0.0):
  """
  Continuous piecewise linear competitor for a single-shock Riemann problem.

  Space-time mesh with time levels spaced about h and regular spatial
  nodes spaced about h, plus a strip of width eps = h^2 centred on the
  shock line. Outside the strip the nodal values are the one-sided exact
  states; across the strip the function ramps linearly between them.

  With 0 < shift < 1 the mesh covers a box displaced by shift*h below and
  to the left of the domain, one extra cell per axis, so nodes of the
  h-spaced quadrature grid fall strictly inside triangles.
  """
  if problem.dim != 1 or problem.shock is None or problem.states is None:
    raise structs.UnsupportedError("benchmark '{}' is not a one-dimensional single-shock problem".format(problem.name))
  if not h > 0:
    raise structs.ParameterError("mesh size must be positive, received {}".format(h))
  if not 0.0 <= shift < 1.0:
    raise structs.ParameterError("mesh shift must lie in [0, 1), received {}".format(shift))

  lo, hi = problem.lo[0], problem.hi[0]
  T = problem.t_final
  eps = h * h
  n_t = max(1, int(round(T / h)))
  n_x = max(1, int(round((hi - lo) / h)))
  h_t, h_x = T / n_t, (hi - lo) / n_x
  if shift > 0:
    n_t, n_x = n_t + 1, n_x + 1
  times = -shift * h_t + h_t * np.arange(n_t + 1)
  xs = lo - shift * h_x + h_x * np.arange(n_x + 1)
  if shift == 0:
    times[-1], xs[-1] = T, hi
  u_left, u_right = problem.states
  gap = 0.25 * h_x

  coords = []
  values = []
  def add(x, t, u):
    coords.append((x, t))
    values.append(u)
    return len(coords) - 1

  rows = []
  for t in times:
    gamma = float(problem.shock(t))
    a, b = gamma - 0.5 * eps, gamma + 0.5 * eps
    if not (a - gap > xs[0] and b + gap < xs[-1]):
      raise structs.ParameterError("shock strip [{}, {}] at t={} does not fit in ({}, {}) for h={}".format(
        a, b, t, xs[0], xs[-1], h
      ))
    left = [add(x, t, u_left) for x in xs if x <= a - gap] + [add(a, t, u_left)]
    right = [add(b, t, u_right)] + [add(x, t, u_right) for x in xs if x >= b + gap]
    rows.append((left, right))

  tris = []
  for n in range(n_t):
    (l0, r0), (l1, r1) = rows[n], rows[n + 1]
    tris.extend(_zipper(l0, l1, coords))
    tris.append((l0[-1], r0[0], r1[0]))
    tris.append((l0[-1], r1[0], l1[-1]))
    tris.extend(_zipper(r0, r1, coords))

  mesh = SimplicialMesh(np.array(coords), np.array(tris))
  return ShockCompetitor(
    function=CpwlFunction(mesh, np.array(values)),
    h=float(h),
    strip_width=eps,
    n_levels=n_t,
    extra={"shift": float(shift)},
  )


def competitor_grid(problem, h):
  """Quadrature grid with cells of size h over the benchmark's space-time box."""
  n_x = max(1, int(round((problem.hi[0] - problem.lo[0]) / h)))
  n_t = max(1, int(round(problem.t_final / h)))
  return mesh.build_grid(problem.lo, problem.hi, problem.t_final, n_x, n_t)

def competitor_loss(competitor, problem, h, n_pert=256, seed=0, clip=None, threads=None):
  """
  Sampled loss of a competitor field (CPwL function or compiled net) on
  competitor_grid(problem, h).

  Compiled networks should come from a competitor built with shift > 0:
  smoothed hats are only accurate off the mesh edges, and with shift = 0
  every grid node sits on one.
  """
  grid = competitor_grid(problem, h)
  if clip is None:
    clip = getattr(competitor, "clip", None) or 2.0 * (problem.data_bound + 1.0)
  pert = structs.PerturbationConfig(n_pert=n_pert, seed=seed, clip=clip)
  return loss.total_loss(competitor, problem.flux, problem, pert, grid, threads=threads)
