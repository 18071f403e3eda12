import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from entropynet import dpwp, mesh, structs
from fixtures import testcases


def test_cell_average():
  tests = [
    {"name": "constant", "fn": lambda z: np.full(len(z), 2.5), "m": 1},
    {"name": "bilinear, one interval per cell", "fn": lambda z: 1.0 + z[:, 0] * z[:, 1], "m": 1},
    {"name": "bilinear, oversampled", "fn": lambda z: 3.0 * z[:, 0] - z[:, 1], "m": 4},
  ]

  for test in tests:
    print("Running test '" + test['name'] + "'")
    grid = testcases.small_grid(n_x=4, n_t=2, oversample=test["m"])
    avgs = dpwp.cell_average(test["fn"](grid.nodes), grid)

    # Bilinear fields: the cell mean equals the value at the cell centre
    centres = []
    for ix in range(4):
      for it in range(2):
        centres.append(grid.st_lo + (np.array([ix, it]) + 0.5) * grid.spacing)
    expected = test["fn"](np.array(centres))
    assert avgs.shape == (grid.n_cells,)
    assert np.max(np.abs(avgs - expected)) < 1e-12, "Expected {}, received {}".format(expected, avgs)


def test_dpwp_evaluate_interpolates_corners():
  grid = testcases.small_grid(n_x=2, n_t=1)
  coeffs = np.array([[0.0, 1.0, 2.0, 3.0], [10.0, 11.0, 12.0, 13.0]])
  k = dpwp.DpwpFunction(grid, coeffs)

  # corner order (x bit, t bit): (0,0), (0,1), (1,0), (1,1)
  assert dpwp.eval_dpwp(k, [-1.0, 0.0]) == 0.0
  assert dpwp.eval_dpwp(k, [-1.0, 0.5]) == 1.0
  assert abs(dpwp.eval_dpwp(k, [-0.5, 0.25]) - 1.5) < 1e-14
  # Shared face at x = 0 belongs to the higher cell
  assert dpwp.eval_dpwp(k, [0.0, 0.0]) == 10.0

  ev = k.evaluate(np.array([[-0.5, 0.25]]))
  assert np.allclose(ev.grad, [[2.0 / 1.0, 1.0 / 0.5]]), "Expected gradient (2, 2), received {}".format(ev.grad)

  with pytest.raises(structs.ShapeError):
    dpwp.DpwpFunction(grid, np.zeros((3, 4)))


def test_at_nodes_matches_evaluate():
  grid = testcases.small_grid(n_x=3, n_t=2, oversample=2)
  coeffs = np.random.default_rng(1).normal(size=(grid.n_cells, 4))
  k = dpwp.DpwpFunction(grid, coeffs)
  assert np.max(np.abs(k.at_nodes() - k.evaluate(grid.nodes).value)) < 1e-13


def test_sample_perturbations():
  grid = testcases.small_grid(n_x=4, n_t=2)
  avgs = np.linspace(-1.0, 1.0, grid.n_cells)
  pool = dpwp.sample_perturbations(avgs, grid, b=5.0, n_pert=10, seed=7, iteration=3, clip=4.0)

  assert len(pool) == 12, "Expected 10 perturbations plus 2 constants, received {}".format(len(pool))
  for k in pool[:10]:
    offsets = k.coeffs - avgs[:, None]
    assert np.all(np.abs(offsets) <= 5.0)
  assert np.all(pool[10].coeffs == 4.0) and np.all(pool[11].coeffs == -4.0)

  again = dpwp.sample_perturbations(avgs, grid, b=5.0, n_pert=10, seed=7, iteration=3, clip=4.0)
  assert all(np.array_equal(a.coeffs, b.coeffs) for a, b in zip(pool, again)), "Expected identical pools for identical seeds"

  later = dpwp.sample_perturbations(avgs, grid, b=5.0, n_pert=10, seed=7, iteration=4, clip=4.0)
  assert not np.array_equal(pool[0].coeffs, later[0].coeffs)

  shared = dpwp.sample_perturbations(avgs, grid, 5.0, 3, 7, clip=4.0, shared_across_cells=True, augment_constants=False)
  offsets = shared[0].coeffs - avgs[:, None]
  assert len(shared) == 3
  assert np.allclose(offsets, offsets[0]), "Expected one offset vector shared by every cell"


def test_sample_perturbations_zero_bound_and_errors():
  grid = testcases.small_grid(n_x=4, n_t=2)
  avgs = np.zeros(grid.n_cells)
  pool = dpwp.sample_perturbations(avgs, grid, b=0.0, n_pert=4, seed=0, augment_constants=False)
  assert all(np.all(k.coeffs == 0.0) for k in pool)

  tests = [
    {"name": "negative b", "kwargs": {"b": -1.0, "n_pert": 4, "seed": 0, "clip": 4.0}},
    {"name": "no candidates", "kwargs": {"b": 1.0, "n_pert": 0, "seed": 0, "clip": 4.0}},
    {"name": "constants without clip", "kwargs": {"b": 1.0, "n_pert": 4, "seed": 0}},
  ]
  for test in tests:
    print("Running test '" + test['name'] + "'")
    with pytest.raises(structs.ParameterError):
      dpwp.sample_perturbations(avgs, grid, **test["kwargs"])


def test_dpwp_norm():
  # Corners are ordered (x, t) with t fastest: [0, 0, 1, 1] rises by one along x
  tests = [
    {"name": "constant", "n_x": 2, "n_t": 1, "corners": [-3.0] * 4, "every_cell": True, "expected": lambda grid: 3.0},
    {"name": "zero function", "n_x": 4, "n_t": 2, "corners": [0.0] * 4, "expected": lambda grid: 0.0},
    {
      "name": "unit rise along x on wide cells",
      "n_x": 2, "n_t": 1, "corners": [0.0, 0.0, 1.0, 1.0],
      "expected": lambda grid: 1.0 + grid.h / grid.spacing[0],
    },
    {
      "name": "unit rise along x on narrow cells",
      "n_x": 16, "n_t": 2, "corners": [0.0, 0.0, 1.0, 1.0],
      "expected": lambda grid: 1.0 + grid.h / grid.spacing[0],
    },
    {
      "name": "unit rise along t",
      "n_x": 4, "n_t": 8, "corners": [0.0, 1.0, 0.0, 1.0],
      "expected": lambda grid: 1.0 + grid.h / grid.spacing[1],
    },
  ]

  for test in tests:
    print("Running test '" + test['name'] + "'")
    grid = testcases.small_grid(n_x=test["n_x"], n_t=test["n_t"])
    coeffs = np.zeros((grid.n_cells, 4))
    if test.get("every_cell"):
      coeffs[:] = test["corners"]
    else:
      coeffs[0] = test["corners"]
    norm = dpwp.dpwp_norm(dpwp.DpwpFunction(grid, coeffs))
    expected = test["expected"](grid)
    assert abs(norm - expected) < 1e-12, "Expected {}, received {}".format(expected, norm)


@settings(max_examples=25, deadline=None)
@given(st.integers(min_value=0, max_value=1000), st.integers(min_value=0, max_value=50))
def test_candidate_draws_independent_of_order(seed, iteration):
  grid = testcases.small_grid(n_x=2, n_t=2)
  avgs = np.zeros(grid.n_cells)
  pert = structs.PerturbationConfig(b=1.0, n_pert=5, seed=seed, clip=2.0)
  forward = [dpwp.candidate_coeffs(avgs, grid, pert, iteration, j) for j in range(5)]
  backward = [dpwp.candidate_coeffs(avgs, grid, pert, iteration, j) for j in reversed(range(5))][::-1]
  assert all(np.array_equal(a, b) for a, b in zip(forward, backward))
