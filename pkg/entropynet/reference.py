import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
import pandas as pd

from . import structs
from .flux import FluxModel, make_flux, max_speed

logger = logging.getLogger(__name__)

WENO_EPS = 1e-6
WENO_GAMMA = (0.1, 0.6, 0.3)
DEFAULT_REFERENCE_CELLS = 4096
DEFAULT_CFL = 0.4
DEFAULT_SNAPSHOTS = 100

@dataclass
class BenchmarkProblem:
  """
  A scalar conservation law on a finite box with its initial and boundary data.

  u0 maps spatial points (M, d) to values; boundary and exact map
  space-time points (M, d+1). shock gives the shock position x = gamma(t)
  of single-shock Riemann problems and states their (left, right) values.
  """
  name: str
  flux: FluxModel
  lo: tuple
  hi: tuple
  t_final: float
  u0: Callable
  boundary: Callable
  exact: Optional[Callable] = None
  shock: Optional[Callable] = None
  states: Optional[tuple] = None
  reference_cells: int = DEFAULT_REFERENCE_CELLS
  cfl: float = DEFAULT_CFL
  notes: str = ""

  @property
  def dim(self):
    return self.flux.dim

  @property
  def data_bound(self):
    # sup |u0| sampled densely; exact for the piecewise constant data in the catalog
    count = 2001 if self.dim == 1 else 201
    axes = [np.linspace(a, b, count) for a, b in zip(self.lo, self.hi)]
    pts = np.stack([m.ravel() for m in np.meshgrid(*axes, indexing="ij")], axis=-1)
    return float(np.max(np.abs(self.u0(pts))))


def _x(points):
  return np.asarray(points, dtype=float)[:, 0]

def _t(points):
  return np.asarray(points, dtype=float)[:, -1]

# Boundary trace taken from an exact solution
def _trace_of(exact):
  return lambda points: exact(points)

# Riemann far-field trace: the initial state next to each boundary
def _far_field(u0):
  return lambda points: u0(np.asarray(points, dtype=float)[:, :-1])

def _standing_shock():
  u0 = lambda x: np.where(_x(x) <= 0.0, 1.0, -1.0)
  exact = lambda z: np.where(_x(z) <= 0.0, 1.0, -1.0)
  return BenchmarkProblem(
    name="standing_shock", flux=make_flux("burgers1d"), lo=(-1.0,), hi=(1.0,), t_final=0.5,
    u0=u0, boundary=_trace_of(exact), exact=exact,
    shock=lambda t: np.zeros_like(np.asarray(t, dtype=float)), states=(1.0, -1.0),
  )

def _moving_shock():
  u0 = lambda x: np.where(_x(x) <= 0.0, 2.0, 0.0)
  exact = lambda z: np.where(_x(z) <= _t(z), 2.0, 0.0)
  return BenchmarkProblem(
    name="moving_shock", flux=make_flux("burgers1d"), lo=(-1.0,), hi=(1.0,), t_final=0.5,
    u0=u0, boundary=_trace_of(exact), exact=exact,
    shock=lambda t: np.asarray(t, dtype=float), states=(2.0, 0.0),
  )

def _rarefaction_exact(z):
  x, t = _x(z), _t(z)
  fan = np.divide(x, t, out=np.zeros_like(x), where=t > 0)
  return np.where(x <= -t, -1.0, np.where(x <= t, fan, 1.0))

def _rarefaction():
  u0 = lambda x: np.where(_x(x) <= 0.0, -1.0, 1.0)
  return BenchmarkProblem(
    name="rarefaction", flux=make_flux("burgers1d"), lo=(-1.0,), hi=(1.0,), t_final=0.5,
    u0=u0, boundary=_trace_of(_rarefaction_exact), exact=_rarefaction_exact,
  )

def _two_shocks_exact(z):
  x, t = _x(z), _t(z)
  early = np.where(x <= 0.3 + 0.3 * t, 0.8, np.where(x <= 0.7 - 0.9 * t, -0.2, -1.6))
  late = np.where(x <= 0.4 - 0.4 * (t - 1.0 / 3.0), 0.8, -1.6)
  return np.where(t <= 1.0 / 3.0, early, late)

def _two_shocks():
  u0 = lambda x: _two_shocks_exact(np.column_stack([_x(x), np.zeros(len(x))]))
  return BenchmarkProblem(
    name="two_shocks", flux=make_flux("burgers1d"), lo=(0.0,), hi=(1.0,), t_final=0.5,
    u0=u0, boundary=_trace_of(_two_shocks_exact), exact=_two_shocks_exact,
  )

def _sine_wave():
  return BenchmarkProblem(
    name="sine_wave", flux=make_flux("burgers1d"), lo=(-1.0,), hi=(1.0,), t_final=1.0,
    u0=lambda x: -np.sin(np.pi * _x(x)),
    boundary=lambda z: np.zeros(len(z)),
  )

def _cubic():
  u0 = lambda x: np.where(_x(x) < 0.0, 1.0, -1.0)
  return BenchmarkProblem(
    name="cubic", flux=make_flux("cubic"), lo=(-1.0,), hi=(1.0,), t_final=0.5,
    u0=u0, boundary=_far_field(u0), states=(1.0, -1.0),
  )

def _buckley_leverett():
  u0 = lambda x: np.where(_x(x) < 0.0, 1.0, 0.0)
  return BenchmarkProblem(
    name="buckley_leverett", flux=make_flux("buckley_leverett"), lo=(-1.0,), hi=(1.0,), t_final=0.5,
    u0=u0, boundary=_far_field(u0), states=(1.0, 0.0),
  )

def _sine_flux():
  u0 = lambda x: np.where(_x(x) < 0.0, 0.5, 2.5)
  return BenchmarkProblem(
    name="sine_flux", flux=make_flux("sine_flux"), lo=(-1.5,), hi=(1.5,), t_final=0.5,
    u0=u0, boundary=_far_field(u0), states=(0.5, 2.5),
  )

def _burgers2d_exact(z):
  z = np.asarray(z, dtype=float)
  x, y, t = z[:, 0], z[:, 1], z[:, 2]
  upper = np.where(y >= 0.5 + t, 0.0, 2.0)
  oblique = np.where(y >= 1.0 - x, -2.0, 2.0)
  return np.where(x <= 0.5 - t, upper, oblique)

def _burgers2d():
  u0 = lambda x: _burgers2d_exact(np.column_stack([np.asarray(x, dtype=float), np.zeros(len(x))]))
  return BenchmarkProblem(
    name="burgers2d", flux=make_flux("burgers2d"), lo=(0.0, 0.0), hi=(1.0, 1.0), t_final=0.3,
    u0=u0, boundary=_trace_of(_burgers2d_exact), exact=_burgers2d_exact,
  )

BENCHMARKS = {
  "standing_shock": _standing_shock,
  "moving_shock": _moving_shock,
  "rarefaction": _rarefaction,
  "two_shocks": _two_shocks,
  "sine_wave": _sine_wave,
  "cubic": _cubic,
  "buckley_leverett": _buckley_leverett,
  "sine_flux": _sine_flux,
  "burgers2d": _burgers2d,
}

def make_benchmark(name):
  if name not in BENCHMARKS:
    raise structs.CatalogError(
      "unknown benchmark '{}', expected one of {}".format(name, sorted(BENCHMARKS)), path="benchmark"
    )
  return BENCHMARKS[name]()

def exact_solution(problem, z):
  if problem.exact is None:
    raise structs.UnsupportedError("benchmark '{}' has no closed-form solution".format(problem.name))
  pts = np.atleast_2d(np.asarray(z, dtype=float))
  values = np.asarray(problem.exact(pts), dtype=float)
  if np.ndim(z) == 1:
    return float(values[0])
  return values


# WENO5-JS: left-biased value at the right face of the middle cell of
# (v_{i-2}, v_{i-1}, v_i, v_{i+1}, v_{i+2}). Works elementwise on arrays.
def weno5_left(vmm, vm, v0, vp, vpp):
  q0 = (2.0 * vmm - 7.0 * vm + 11.0 * v0) / 6.0
  q1 = (-vm + 5.0 * v0 + 2.0 * vp) / 6.0
  q2 = (2.0 * v0 + 5.0 * vp - vpp) / 6.0

  b0 = 13.0 / 12.0 * (vmm - 2.0 * vm + v0) ** 2 + 0.25 * (vmm - 4.0 * vm + 3.0 * v0) ** 2
  b1 = 13.0 / 12.0 * (vm - 2.0 * v0 + vp) ** 2 + 0.25 * (vm - vp) ** 2
  b2 = 13.0 / 12.0 * (v0 - 2.0 * vp + vpp) ** 2 + 0.25 * (3.0 * v0 - 4.0 * vp + vpp) ** 2

  a0 = WENO_GAMMA[0] / (WENO_EPS + b0) ** 2
  a1 = WENO_GAMMA[1] / (WENO_EPS + b1) ** 2
  a2 = WENO_GAMMA[2] / (WENO_EPS + b2) ** 2
  return (a0 * q0 + a1 * q1 + a2 * q2) / (a0 + a1 + a2)

def weno5_reconstruct(stencil):
  v = np.asarray(stencil, dtype=float)
  if v.shape[-1] != 5:
    raise structs.ShapeError("WENO5 stencil needs 5 cell averages, received {}".format(v.shape[-1]))
  out = weno5_left(v[..., 0], v[..., 1], v[..., 2], v[..., 3], v[..., 4])
  return float(out) if np.ndim(out) == 0 else out


@dataclass
class FvState:
  x: np.ndarray
  u: np.ndarray
  t: float
  dx: float
  net_inflow: float = 0.0
  ghost_policy: str = "dirichlet"

  @property
  def mass(self):
    return float(np.sum(self.u) * self.dx)


class ReferenceSolution():
  """Piecewise constant in x over the cells, nearest snapshot in t."""
  def __init__(self, snapshots, lo, hi):
    self.snapshots = list(snapshots)
    self.times = np.array([s.t for s in self.snapshots])
    self.lo = float(lo)
    self.hi = float(hi)
    self.n_cells = len(self.snapshots[0].u)
    self.dx = (self.hi - self.lo) / self.n_cells

  def __call__(self, points):
    points = np.atleast_2d(np.asarray(points, dtype=float))
    x, t = points[:, 0], points[:, -1]
    snap = np.argmin(np.abs(t[:, None] - self.times[None, :]), axis=1)
    cell = np.clip(np.floor((x - self.lo) / self.dx).astype(int), 0, self.n_cells - 1)
    table = np.stack([s.u for s in self.snapshots])
    return table[snap, cell]

  def to_frame(self):
    rows = []
    for s in self.snapshots:
      rows.append(pd.DataFrame({"t": s.t, "x": s.x, "u": s.u}))
    return pd.concat(rows, ignore_index=True)


def _gauss_cell_averages(u0, x_lo, dx, n):
  nodes, weights = np.polynomial.legendre.leggauss(5)
  left = x_lo + dx * np.arange(n)
  pts = left[:, None] + 0.5 * dx * (nodes[None, :] + 1.0)
  vals = np.asarray(u0(pts.reshape(-1, 1)), dtype=float).reshape(n, 5)
  return 0.5 * vals @ weights

def solve_reference(problem, n_cells=None, cfl=None, times=None, n_snapshots=DEFAULT_SNAPSHOTS):
  """
  WENO5 finite volumes with global Lax-Friedrichs splitting and SSP-RK3.

  Returns FvState snapshots at `times` (default: every T/n_snapshots).
  """
  if problem.dim != 1:
    raise structs.UnsupportedError("the finite volume reference is one-dimensional, '{}' has d={}".format(
      problem.name, problem.dim
    ))
  n = int(n_cells or problem.reference_cells)
  cfl = float(cfl if cfl is not None else problem.cfl)
  if n < 16:
    raise structs.ParameterError("reference solver needs at least 16 cells, received {}".format(n))
  if not 0.0 < cfl <= 0.5:
    raise structs.ParameterError("cfl must lie in (0, 0.5], received {}".format(cfl))

  T = problem.t_final
  if times is None:
    times = np.linspace(0.0, T, n_snapshots + 1)
  times = np.unique(np.asarray(times, dtype=float))
  if times[0] < 0 or times[-1] > T * (1 + 1e-12):
    raise structs.ParameterError("output times must lie in [0, {}], received {}".format(T, times))

  lo, hi = problem.lo[0], problem.hi[0]
  dx = (hi - lo) / n
  x = lo + dx * (np.arange(n) + 0.5)
  u = _gauss_cell_averages(problem.u0, lo, dx, n)

  def ghosts(t):
    vals = np.asarray(problem.boundary(np.array([[lo, t], [hi, t]])), dtype=float)
    return vals[0], vals[1]

  gl, gr = ghosts(0.0)
  u_min = min(float(np.min(u)), gl, gr)
  u_max = max(float(np.max(u)), gl, gr)
  alpha = max_speed(problem.flux, u_min, u_max)
  if alpha == 0.0:
    raise structs.SolverError("flux '{}' has zero wave speed on [{}, {}]".format(problem.flux.name, u_min, u_max))
  blowup = 10.0 * max(abs(u_min), abs(u_max), u_max - u_min)
  dt_max = cfl * dx / alpha
  logger.info("reference %s: cells %d dx %.6e dt %.6e alpha %.6e", problem.name, n, dx, dt_max, alpha)

  f = lambda v: problem.flux.f(v)[..., 0]

  # Interface fluxes F_{j-1/2}, j = 0..n
  def interface_flux(v, t):
    left, right = ghosts(t)
    pad = np.concatenate([np.full(3, left), v, np.full(3, right)])
    fv = f(pad)
    fp = 0.5 * (fv + alpha * pad)
    fm = 0.5 * (fv - alpha * pad)
    m = n + 1
    plus = weno5_left(fp[0:m], fp[1:m + 1], fp[2:m + 2], fp[3:m + 3], fp[4:m + 4])
    minus = weno5_left(fm[5:m + 5], fm[4:m + 4], fm[3:m + 3], fm[2:m + 2], fm[1:m + 1])
    return plus + minus

  def rhs(v, t):
    F = interface_flux(v, t)
    return -(F[1:] - F[:-1]) / dx, F[0] - F[-1]

  snapshots = []
  t = 0.0
  inflow = 0.0
  for t_out in times:
    span = t_out - t
    steps = int(math.ceil(span / dt_max - 1e-12)) if span > 0 else 0
    for _ in range(steps):
      dt = span / steps
      L0, B0 = rhs(u, t)
      u1 = u + dt * L0
      L1, B1 = rhs(u1, t + dt)
      u2 = 0.75 * u + 0.25 * (u1 + dt * L1)
      L2, B2 = rhs(u2, t + 0.5 * dt)
      u = u / 3.0 + 2.0 / 3.0 * (u2 + dt * L2)
      inflow += dt * (B0 / 6.0 + B1 / 6.0 + 2.0 * B2 / 3.0)
      t = t + dt

      if not np.all(np.isfinite(u)) or np.max(np.abs(u)) > blowup:
        raise structs.InstabilityError("reference solution for '{}' blew up at t={:.6e} (max |u| = {})".format(
          problem.name, t, np.max(np.abs(u))
        ))
    t = float(t_out)
    snapshots.append(FvState(x=x.copy(), u=u.copy(), t=t, dx=dx, net_inflow=inflow))

  return snapshots

def reference_solution(problem, n_cells=None, cfl=None, n_snapshots=DEFAULT_SNAPSHOTS):
  snaps = solve_reference(problem, n_cells=n_cells, cfl=cfl, n_snapshots=n_snapshots)
  return ReferenceSolution(snaps, problem.lo[0], problem.hi[0])
