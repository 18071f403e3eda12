import logging
import time

import numpy as np
import pandas as pd

from . import loss, mesh, network, structs
from .reference import make_benchmark

logger = logging.getLogger(__name__)

# Share of the run after which iterates become eligible as the returned snapshot
BEST_WINDOW = 0.9

def strip_edges(problem, n_strips):
  return np.linspace(0.0, problem.t_final, n_strips + 1)

def strip_grids(cfg, problem):
  """One QuadGrid per time slab; each slab gets max(1, N_t // N_T) time cells."""
  edges = strip_edges(problem, cfg.n_strips)
  n_t = max(1, cfg.n_cells_t // cfg.n_strips)
  return [
    mesh.build_grid(
      problem.lo, problem.hi, edges[s + 1], cfg.n_cells_x, n_t,
      t_start=edges[s], oversample=cfg.oversample,
    )
    for s in range(cfg.n_strips)
  ]

# Spatial initial data for the next slab: the network frozen at time t
def handoff(net, t):
  def initial_data(x):
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
      x = x[:, None]
    z = np.concatenate([x, np.full((len(x), 1), float(t))], axis=1)
    return net.evaluate(z).value
  return initial_data

def _diagnostics(breakdown, net, iteration, strip):
  finite = [bool(np.all(np.isfinite(p))) for p in net.parameters()]
  return {
    "strip": strip,
    "iteration": iteration,
    "breakdown": breakdown.as_row() if breakdown is not None else None,
    "finite_parameters": finite,
  }

def train_strip(cfg, problem, strip_index=0, initial_data=None, grid=None):
  """
  Train one network on one time slab.

  Each iteration draws the candidate pool for (pert seed, strip,
  iteration), picks k*, assembles the sampled loss at the current
  parameters and takes one Adam step. The returned network is the
  pre-update parameter set with the lowest sampled loss among iterations
  i > 0.9 N_train; the history holds one LossBreakdown row per iteration.
  """
  grid = grid or strip_grids(cfg, problem)[strip_index]
  initial_data = initial_data or problem.u0
  pert = cfg.perturbation()

  net = network.init_network(cfg.widths, cfg.clip, [cfg.init_seed, strip_index])
  state = network.adam_init(net, cfg.learning_rate)

  best_net = None
  best_loss = np.inf
  best_iteration = -1
  rows = []

  for i in range(1, cfg.n_train + 1):
    breakdown, objective = loss.assemble_loss(
      net, problem.flux, grid, pert, initial_data, problem.boundary,
      iteration=i, strip=strip_index, threads=cfg.threads, with_objective=True,
    )
    if not np.isfinite(breakdown.total):
      raise structs.NonFiniteLossError(
        "loss became non-finite at strip {} iteration {}".format(strip_index, i),
        diagnostics=_diagnostics(breakdown, net, i, strip_index),
      )

    row = {"strip": strip_index, "iteration": i}
    row.update(breakdown.as_row())
    rows.append(row)

    if i > BEST_WINDOW * cfg.n_train and breakdown.total < best_loss:
      best_net = net
      best_loss = breakdown.total
      best_iteration = i

    grads = network.grad_loss_params(net, objective)
    if not all(np.all(np.isfinite(g)) for g in grads):
      raise structs.NonFiniteLossError(
        "parameter gradient became non-finite at strip {} iteration {}".format(strip_index, i),
        diagnostics=_diagnostics(breakdown, net, i, strip_index),
      )
    net, state = network.adam_step(state, net, grads)

    if cfg.log_every and i % cfg.log_every == 0:
      logger.info(
        "strip %d iteration %d: total %.6e j_ent %.6e reg %.6e ibc %.6e / %.6e",
        strip_index, i, breakdown.total, breakdown.j_ent_star, breakdown.l_reg,
        breakdown.l_ibc_initial, breakdown.l_ibc_boundary,
      )

  history = pd.DataFrame(rows)
  history.attrs["best_iteration"] = best_iteration
  history.attrs["best_loss"] = best_loss
  return best_net, history


class StitchedSolution():
  """
  Piecewise-in-time field over the strip networks.

  A point with t in [t_k, t_{k+1}) belongs to strip k; the final time
  belongs to the last strip, so at an interface the later strip wins.
  """
  def __init__(self, nets, edges, grids=None):
    if len(nets) != len(edges) - 1:
      raise structs.ParameterError("expected {} networks for {} strip edges, received {}".format(
        len(edges) - 1, len(edges), len(nets)
      ))
    self.nets = list(nets)
    self.edges = np.asarray(edges, dtype=float)
    self.grids = grids

  @property
  def clip(self):
    return max(net.clip for net in self.nets)

  def strip_of(self, t):
    idx = np.searchsorted(self.edges, np.asarray(t, dtype=float), side="right") - 1
    return np.clip(idx, 0, len(self.nets) - 1)

  def evaluate(self, points):
    points = np.atleast_2d(np.asarray(points, dtype=float))
    strip = self.strip_of(points[:, -1])
    value = np.zeros(len(points))
    grad = np.zeros(points.shape)
    active = np.zeros(len(points), dtype=bool)
    for s, net in enumerate(self.nets):
      sel = strip == s
      if not np.any(sel):
        continue
      ev = net.evaluate(points[sel])
      value[sel] = ev.value
      grad[sel] = ev.grad
      active[sel] = ev.active
    return structs.FieldEvaluation(points, value, grad, active)

  def __call__(self, points):
    return self.evaluate(points).value


def train(cfg, problem=None):
  """
  Strip-by-strip training over N_T equal time slabs.

  Strip 0 starts from u0; strip k > 0 takes the previous strip's best
  network at the slab interface as initial data.
  """
  problem = problem or make_benchmark(cfg.benchmark)
  grids = strip_grids(cfg, problem)
  edges = strip_edges(problem, cfg.n_strips)

  start = time.perf_counter()
  nets = []
  histories = []
  best_iterations = []
  best_losses = []
  initial_data = problem.u0
  for s, grid in enumerate(grids):
    logger.info("training strip %d of %d on t in [%.4g, %.4g]", s + 1, len(grids), grid.t_lo, grid.t_hi)
    net, history = train_strip(cfg, problem, s, initial_data, grid)
    nets.append(net)
    histories.append(history)
    best_iterations.append(history.attrs["best_iteration"])
    best_losses.append(history.attrs["best_loss"])
    initial_data = handoff(net, grid.t_hi)
  wall_time = time.perf_counter() - start

  return structs.TrainResult(
    nets=nets,
    history=pd.concat(histories, ignore_index=True),
    best_iterations=best_iterations,
    best_losses=best_losses,
    wall_time=wall_time,
    config=cfg,
    solution=StitchedSolution(nets, edges, grids),
  )

def replay_loss(result, problem, strip=0):
  """Re-evaluate the sampled loss of a strip's best network at its recorded iteration."""
  cfg = result.config
  grids = result.solution.grids if result.solution is not None else strip_grids(cfg, problem)
  initial_data = problem.u0 if strip == 0 else handoff(result.nets[strip - 1], grids[strip].t_lo)
  return loss.total_loss(
    result.nets[strip], problem.flux, problem, cfg.perturbation(), grids[strip],
    iteration=result.best_iterations[strip], strip=strip, u0=initial_data, threads=cfg.threads,
  )
