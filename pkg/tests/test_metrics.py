from types import SimpleNamespace

import numpy as np
import pandas as pd
import pytest

from entropynet import config, mesh, metrics, structs
from entropynet.reference import make_benchmark
from entropynet.train import strip_grids
from fixtures import testcases


def test_relative_errors():
  problem = make_benchmark("standing_shock")
  grid = mesh.build_grid(problem.lo, problem.hi, problem.t_final, 64, 32)
  tests = [
    {"name": "exact field", "field": problem.exact, "expected": 0.0, "tol": 0.0},
    {"name": "zero field", "field": lambda z: np.zeros(len(z)), "expected": 1.0, "tol": 1e-15},
    {"name": "shifted by 0.01", "field": lambda z: problem.exact(z) + 0.01, "expected": 0.01, "tol": 1e-12},
    {"name": "field with evaluate", "field": testcases.constant_field(0.0), "expected": 1.0, "tol": 1e-15},
  ]

  for test in tests:
    print("Running test '" + test['name'] + "'")
    report = metrics.relative_errors(test["field"], problem, eval_grid=grid)
    for value in (report.e_r_final, report.e_r_spacetime):
      assert abs(value - test["expected"]) <= test["tol"], "Expected {}, received {}".format(test["expected"], value)
    assert report.reference_kind == "exact"
    assert report.grid_shape == (65, 33)

  report = metrics.relative_errors(problem.exact, problem, eval_grid=grid)
  assert report.as_dict() == {"e_r_final": 0.0, "e_r_spacetime": 0.0, "grid_shape": [65, 33], "reference_kind": "exact"}


def test_relative_errors_against_a_reference():
  problem = make_benchmark("cubic")
  grid = mesh.build_grid(problem.lo, problem.hi, problem.t_final, 16, 8)
  reference = lambda z: np.ones(len(z))
  report = metrics.relative_errors(lambda z: np.full(len(z), 1.5), problem, eval_grid=grid, reference=reference)
  assert report.reference_kind == "weno"
  assert abs(report.e_r_spacetime - 0.5) < 1e-14

  with pytest.raises(structs.MetricError):
    metrics.relative_errors(reference, problem, eval_grid=grid, reference=lambda z: np.zeros(len(z)))


def test_default_eval_grid():
  problem = make_benchmark("standing_shock")
  grid = metrics.default_eval_grid(problem)
  assert grid.n_cells_x == (512,) and grid.n_cells_t == 256

  cfg = config.resolve_config(testcases.tiny_config(mesh={"n_cells_t": 4}, train={"n_strips": 2}))
  grid = metrics.default_eval_grid(problem, strip_grids(cfg, problem), refine=2)
  assert grid.n_cells_x == (16,) and grid.n_cells_t == 8
  assert grid.t_lo == 0.0 and grid.t_hi == 0.5


def test_fit_slope():
  h = np.array([0.4, 0.2, 0.1, 0.05])
  tests = [
    {"name": "first order", "errors": 0.3 * h, "expected": 1.0},
    {"name": "second order", "errors": 2.0 * h ** 2, "expected": 2.0},
    {"name": "failed level skipped", "errors": np.array([np.nan, 0.02, 0.01, 0.005]), "expected": 1.0},
  ]
  for test in tests:
    print("Running test '" + test['name'] + "'")
    slope = metrics.fit_slope(pd.DataFrame({"h": h, "e_r_spacetime": test["errors"]}))
    assert abs(slope - test["expected"]) < 1e-12, "Expected slope {}, received {}".format(test["expected"], slope)

  assert np.isnan(metrics.fit_slope(pd.DataFrame({"h": [0.1, 0.05], "e_r_spacetime": [np.nan, 0.01]})))


def test_convergence_study():
  problem = make_benchmark("standing_shock")
  base = config.resolve_config(testcases.tiny_config())
  seen = []

  # Error proportional to the spatial mesh size, and a failing third level
  def fake_train(cfg, problem):
    seen.append(cfg)
    if cfg.n_cells_x[0] == 64:
      raise structs.NonFiniteLossError("diverged")
    offset = 0.2 / cfg.n_cells_x[0]
    return SimpleNamespace(solution=lambda z: problem.exact(z) + offset)

  table, slope = metrics.convergence_study(base, [8, 16, 64, {"n_cells_x": 32, "n_train": 3}], problem, fake_train, eval_refine=1)

  assert list(table["status"][:2]) == ["ok", "ok"] and table["status"][3] == "ok"
  assert table["status"][2] == "diverged"
  assert np.isnan(table["e_r_spacetime"][2])
  assert list(table["n_cells_x"]) == [8, 16, 64, 32]
  assert list(table["n_cells_t"]) == [4, 8, 32, 4]
  assert seen[3].n_train == 3 and seen[3].n_cells_t == 4
  assert abs(table["e_r_spacetime"][1] - 0.2 / 16) < 1e-12
  # Dict levels keep the base time cells, so h is not proportional to 1/n there
  assert slope > 0.5

  with pytest.raises(structs.ParameterError):
    metrics.convergence_study(base, [8], problem, fake_train)
