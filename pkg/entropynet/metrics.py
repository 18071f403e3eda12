import dataclasses
import logging

import numpy as np
import pandas as pd

from . import mesh, structs, util
from .config import BENCHMARK_PRESETS
from .reference import make_benchmark, reference_solution
from .train import strip_grids, train

logger = logging.getLogger(__name__)

DEFAULT_REFINE = 4

def field_values(field, points):
  """Values of anything with evaluate(points) or a plain callable."""
  if hasattr(field, "evaluate"):
    return np.asarray(field.evaluate(points).value, dtype=float)
  return np.asarray(field(points), dtype=float)

def refined_grid(grid, refine=DEFAULT_REFINE):
  return mesh.build_grid(
    grid.lo, grid.hi, grid.t_hi,
    [n * refine for n in grid.n_cells_x], grid.n_cells_t * refine,
    t_start=grid.t_lo,
  )

def default_eval_grid(problem, train_grids=None, refine=DEFAULT_REFINE):
  """
  Evaluation grid over the whole space-time box, `refine` times finer per
  axis than the training grid (or than the benchmark's preset grid).
  """
  if train_grids:
    n_x = train_grids[0].n_cells_x
    n_t = sum(g.n_cells_t for g in train_grids)
  else:
    preset = BENCHMARK_PRESETS.get(problem.name, {"n_x": 64, "n_t": 32})
    n_x = (preset["n_x"],) * problem.dim
    n_t = preset["n_t"]
  return mesh.build_grid(problem.lo, problem.hi, problem.t_final, [n * refine for n in n_x], n_t * refine)

def reference_for(problem, reference=None, cells=None, cfl=None):
  """(callable of space-time points, kind) for the benchmark."""
  if problem.exact is not None:
    return problem.exact, "exact"
  if reference is None:
    if problem.dim != 1:
      raise structs.UnsupportedError("benchmark '{}' has neither an exact nor a finite volume reference".format(
        problem.name
      ))
    reference = reference_solution(problem, n_cells=cells, cfl=cfl)
  return reference, "weno"

def relative_errors(field, problem, eval_grid=None, reference=None, refine=DEFAULT_REFINE):
  """
  Relative L1 errors at the final time and over space-time, both by
  trapezoid quadrature on eval_grid.
  """
  if eval_grid is None:
    eval_grid = default_eval_grid(problem, getattr(field, "grids", None), refine)
  ref_fn, kind = reference_for(problem, reference)

  nodes = eval_grid.nodes
  u = field_values(field, nodes)
  ref = np.asarray(ref_fn(nodes), dtype=float)
  diff = np.abs(u - ref)

  idx, w = mesh.final_nodes(eval_grid)
  den_final = float(np.sum(w * np.abs(ref[idx])))
  den_total = float(mesh.integrate(eval_grid, np.abs(ref)))
  if den_final == 0.0 or den_total == 0.0:
    raise structs.MetricError("reference solution of '{}' vanishes, relative error undefined".format(problem.name))

  report = structs.ErrorReport(
    e_r_final=float(np.sum(w * diff[idx])) / den_final,
    e_r_spacetime=float(mesh.integrate(eval_grid, diff)) / den_total,
    grid_shape=eval_grid.node_shape,
    reference_kind=kind,
  )
  logger.info("%s: relative L1 error %.4e at T, %.4e in space-time (%s)", problem.name, report.e_r_final, report.e_r_spacetime, kind)
  return report

def fit_slope(table, column="e_r_spacetime"):
  ok = table[np.isfinite(table[column]) & (table[column] > 0)]
  if len(ok) < 2:
    return float("nan")
  return util.fit_loglog_slope(ok["h"], ok[column])

def _level_config(base_cfg, level):
  if isinstance(level, int):
    ratio = level / base_cfg.n_cells_x[0]
    return dataclasses.replace(
      base_cfg,
      n_cells_x=tuple(level for _ in base_cfg.n_cells_x),
      n_cells_t=max(base_cfg.n_strips, int(round(base_cfg.n_cells_t * ratio))),
    )
  changes = {}
  if "n_cells_x" in level:
    n_x = level["n_cells_x"]
    n_x = [n_x] if isinstance(n_x, int) else list(n_x)
    if len(n_x) == 1:
      n_x = n_x * len(base_cfg.n_cells_x)
    changes["n_cells_x"] = tuple(n_x)
  for key in ("n_cells_t", "widths", "n_train"):
    if key in level:
      changes[key] = level[key]
  return dataclasses.replace(base_cfg, **changes)

def convergence_study(base_cfg, levels, problem=None, train_fn=None, eval_refine=DEFAULT_REFINE):
  """
  Train at each mesh level and tabulate (h, e_r_final, e_r_spacetime).

  A level is either a spatial cell count (time cells scaled with it) or a
  dict of overrides. Failed levels are recorded with their error message
  and NaN errors. Returns (table, slope of e_r_spacetime against h).
  """
  if len(levels) < 2:
    raise structs.ParameterError("a convergence study needs at least two levels, received {}".format(len(levels)))
  problem = problem or make_benchmark(base_cfg.benchmark)
  train_fn = train_fn or train

  rows = []
  for i, level in enumerate(levels):
    cfg = _level_config(base_cfg, level)
    grid = strip_grids(cfg, problem)[0]
    row = {
      "level": i,
      "h": grid.h,
      "n_cells_x": cfg.n_cells_x[0],
      "n_cells_t": cfg.n_cells_t,
      "e_r_final": np.nan,
      "e_r_spacetime": np.nan,
      "status": "ok",
    }
    try:
      result = train_fn(cfg, problem)
      report = relative_errors(result.solution, problem, refine=eval_refine)
      row["e_r_final"] = report.e_r_final
      row["e_r_spacetime"] = report.e_r_spacetime
    except structs.EntropyNetError as e:
      logger.warning("convergence level %d failed: %s", i, e)
      row["status"] = str(e)
    rows.append(row)

  table = pd.DataFrame(rows)
  return table, fit_slope(table)
