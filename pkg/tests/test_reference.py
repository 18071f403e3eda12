import numpy as np
import pytest

from entropynet import reference, structs, util
from fixtures import testcases


def test_catalog():
  tests = [
    {"name": "standing shock", "benchmark": "standing_shock", "dim": 1, "bound": 1.0, "exact": True},
    {"name": "moving shock", "benchmark": "moving_shock", "dim": 1, "bound": 2.0, "exact": True},
    {"name": "rarefaction", "benchmark": "rarefaction", "dim": 1, "bound": 1.0, "exact": True},
    {"name": "two shocks", "benchmark": "two_shocks", "dim": 1, "bound": 1.6, "exact": True},
    {"name": "sine wave", "benchmark": "sine_wave", "dim": 1, "bound": 1.0, "exact": False},
    {"name": "cubic", "benchmark": "cubic", "dim": 1, "bound": 1.0, "exact": False},
    {"name": "Buckley-Leverett", "benchmark": "buckley_leverett", "dim": 1, "bound": 1.0, "exact": False},
    {"name": "sine flux", "benchmark": "sine_flux", "dim": 1, "bound": 2.5, "exact": False},
    {"name": "Burgers 2D", "benchmark": "burgers2d", "dim": 2, "bound": 2.0, "exact": True},
  ]

  for test in tests:
    print("Running test '" + test['name'] + "'")
    problem = reference.make_benchmark(test["benchmark"])
    assert problem.name == test["benchmark"]
    assert problem.dim == test["dim"], "Expected d={}, received {}".format(test["dim"], problem.dim)
    assert abs(problem.data_bound - test["bound"]) < 1e-3, "Expected data bound {}, received {}".format(
      test["bound"], problem.data_bound
    )
    assert (problem.exact is not None) == test["exact"]

    if test["exact"]:
      # Exact solutions agree with the initial data at t = 0
      axes = [np.linspace(a, b, 37) for a, b in zip(problem.lo, problem.hi)]
      x = np.stack([m.ravel() for m in np.meshgrid(*axes, indexing="ij")], axis=-1)
      z = np.concatenate([x, np.zeros((len(x), 1))], axis=1)
      assert np.array_equal(reference.exact_solution(problem, z), problem.u0(x))

  with pytest.raises(structs.CatalogError):
    reference.make_benchmark("nope")
  with pytest.raises(structs.UnsupportedError):
    reference.exact_solution(reference.make_benchmark("cubic"), [0.0, 0.1])


def test_exact_values():
  tests = [
    {"name": "standing shock left", "benchmark": "standing_shock", "z": [-0.1, 0.4], "u": 1.0},
    {"name": "moving shock behind", "benchmark": "moving_shock", "z": [0.2, 0.3], "u": 2.0},
    {"name": "moving shock ahead", "benchmark": "moving_shock", "z": [0.4, 0.3], "u": 0.0},
    {"name": "rarefaction fan", "benchmark": "rarefaction", "z": [0.1, 0.4], "u": 0.25},
    {"name": "two shocks middle state", "benchmark": "two_shocks", "z": [0.5, 0.1], "u": -0.2},
    {"name": "two shocks after merge", "benchmark": "two_shocks", "z": [0.3, 0.5], "u": 0.8},
    {"name": "Burgers 2D upper state", "benchmark": "burgers2d", "z": [0.1, 0.9, 0.1], "u": 0.0},
  ]
  for test in tests:
    print("Running test '" + test['name'] + "'")
    got = reference.exact_solution(reference.make_benchmark(test["benchmark"]), test["z"])
    assert got == test["u"], "Expected {}, received {}".format(test["u"], got)


def test_weno5_reconstruct():
  tests = [
    {"name": "constant", "stencil": [2.0] * 5, "expected": 2.0, "tol": 1e-14},
    {"name": "linear", "stencil": [1.0, 2.0, 3.0, 4.0, 5.0], "expected": 3.5, "tol": 1e-12},
    # Left-biased face value of cell averages of x^2 on unit cells centred at -2..2
    {"name": "smooth quadratic", "stencil": [4 + 1 / 12, 1 + 1 / 12, 1 / 12, 1 + 1 / 12, 4 + 1 / 12], "expected": 0.25, "tol": 1e-2},
  ]
  for test in tests:
    print("Running test '" + test['name'] + "'")
    got = reference.weno5_reconstruct(test["stencil"])
    assert abs(got - test["expected"]) < test["tol"], "Expected {}, received {}".format(test["expected"], got)

  # A jump in the stencil: the reconstruction stays within the data range
  got = reference.weno5_reconstruct([1.0, 1.0, 1.0, -1.0, -1.0])
  assert -1.0 - 1e-12 <= got <= 1.0 + 1e-12
  assert abs(got - 1.0) < 1e-3, "Expected the smooth left stencil to dominate, received {}".format(got)

  with pytest.raises(structs.ShapeError):
    reference.weno5_reconstruct([1.0, 2.0, 3.0])


def test_solve_reference_standing_shock():
  problem = reference.make_benchmark("standing_shock")
  snaps = reference.solve_reference(problem, n_cells=200, times=[0.0, 0.25, 0.5])

  assert [s.t for s in snaps] == [0.0, 0.25, 0.5]
  final = snaps[-1]
  # Steady shock: outflow balances, mass conserved, profile stays a step
  assert abs(final.mass - snaps[0].mass) < 1e-10, "Expected mass {} to stay {}".format(final.mass, snaps[0].mass)
  far = np.abs(final.x) > 0.2
  assert np.max(np.abs(final.u[far] - np.where(final.x[far] < 0, 1.0, -1.0))) < 1e-4


# Interpolated x where a decreasing profile first falls through `level`
def _crossing(x, u, level):
  i = int(np.argmax(u < level))
  return x[i - 1] + (u[i - 1] - level) / (u[i - 1] - u[i]) * (x[i] - x[i - 1])


def test_solve_reference_moving_shock_speed():
  problem = reference.make_benchmark("moving_shock")
  final = reference.solve_reference(problem, n_cells=1024, times=[0.5])[-1]

  position = _crossing(final.x, final.u, 1.0)
  assert abs(position - 0.5) <= 0.01 * 0.5, "Expected the shock within 1% of x=0.5, received {}".format(position)
  assert final.u[np.argmin(np.abs(final.x + 0.5))] == pytest.approx(2.0, abs=1e-6)
  # Inflow f(2) = 2 at the left, nothing leaves at the right
  assert abs(final.mass - (2.0 + 2.0 * 0.5)) < 1e-8, "Expected mass 3, received {}".format(final.mass)


def test_solve_reference_rarefaction():
  problem = reference.make_benchmark("rarefaction")
  final = reference.solve_reference(problem, n_cells=512, times=[0.5])[-1]
  exact = reference.exact_solution(problem, np.column_stack([final.x, np.full(len(final.x), 0.5)]))
  error = np.sum(np.abs(final.u - exact)) * final.dx
  assert error <= 2e-2, "Expected an L1 error below 2e-2, received {}".format(error)


def test_cubic_shock_speed():
  # f = u^3/3 with data 1 | -1: a shock from 1 to -1/2 moving at f'(-1/2) = 1/4,
  # followed by a rarefaction u = -sqrt(x/t) down to -1
  problem = reference.make_benchmark("cubic")
  snaps = reference.solve_reference(problem, n_cells=4096, times=[0.25, 0.5])

  positions = [_crossing(s.x, s.u, 0.25) for s in snaps]
  speed = (positions[1] - positions[0]) / 0.25
  assert abs(speed - 0.25) <= 0.02 * 0.25, "Expected shock speed 1/4 within 2%, received {}".format(speed)
  assert abs(positions[1] - 0.125) < 0.02, "Expected shock at x=0.125, received {}".format(positions[1])

  final = snaps[-1]
  fan = final.u[np.argmin(np.abs(final.x - 0.3))]
  assert abs(fan + np.sqrt(0.3 / 0.5)) < 0.02, "Expected rarefaction value {}, received {}".format(-np.sqrt(0.6), fan)

  # The state behind the shock: the fan (u^2 linear in x) traced back to the front
  region = (final.x > 0.18) & (final.x < 0.45)
  slope, offset = np.polyfit(final.x[region], final.u[region] ** 2, 1)
  behind = -np.sqrt(slope * positions[1] + offset)
  assert abs(behind + 0.5) <= 0.02, "Expected the intermediate state -1/2, received {}".format(behind)

  # Inflow f(1) at the left and outflow f(-1) at the right add 2/3 per unit time
  assert abs(final.mass - 1.0 / 3.0) < 1e-8, "Expected mass 1/3, received {}".format(final.mass)


def test_riemann_data_stays_in_range():
  tests = [
    {"name": "standing shock", "benchmark": "standing_shock"},
    {"name": "moving shock", "benchmark": "moving_shock"},
    {"name": "rarefaction", "benchmark": "rarefaction"},
    {"name": "cubic", "benchmark": "cubic"},
    {"name": "Buckley-Leverett", "benchmark": "buckley_leverett"},
    {"name": "sine flux", "benchmark": "sine_flux"},
  ]

  for test in tests:
    print("Running test '" + test['name'] + "'")
    problem = reference.make_benchmark(test["benchmark"])
    snaps = reference.solve_reference(problem, n_cells=256, n_snapshots=5)
    low = min(float(np.min(snaps[0].u)), *problem.boundary(np.array([[problem.lo[0], 0.0], [problem.hi[0], 0.0]])))
    high = max(float(np.max(snaps[0].u)), *problem.boundary(np.array([[problem.lo[0], 0.0], [problem.hi[0], 0.0]])))
    margin = 0.05 * (high - low)
    for s in snaps:
      assert low - margin <= np.min(s.u) and np.max(s.u) <= high + margin, "Expected t={} within [{}, {}], received [{}, {}]".format(
        s.t, low - margin, high + margin, np.min(s.u), np.max(s.u)
      )


def test_weno5_order_on_smooth_data():
  errors = []
  hs = []
  for n in (40, 80, 160, 320):
    dx = 2.0 / n
    left = -1.0 + dx * np.arange(n)
    # Exact cell averages of sin(pi x), periodic on [-1, 1]
    averages = (np.cos(np.pi * left) - np.cos(np.pi * (left + dx))) / (np.pi * dx)
    stencils = np.stack([np.roll(averages, k) for k in (2, 1, 0, -1, -2)], axis=-1)
    faces = reference.weno5_reconstruct(stencils)
    errors.append(np.sum(np.abs(faces - np.sin(np.pi * (left + dx)))) * dx)
    hs.append(dx)
  order = util.fit_loglog_slope(hs, errors)
  assert order >= 4.5, "Expected fifth order on smooth data, received {} from errors {}".format(order, errors)


def test_reference_solution_lookup():
  problem = reference.make_benchmark("standing_shock")
  ref = reference.reference_solution(problem, n_cells=64, n_snapshots=4)
  values = ref(np.array([[-0.9, 0.0], [0.9, 0.5], [-0.9, 0.26]]))
  assert np.allclose(values, [1.0, -1.0, 1.0], atol=1e-6)

  frame = ref.to_frame()
  assert list(frame.columns) == ["t", "x", "u"]
  assert len(frame) == 5 * 64


def test_parameter_errors():
  problem = reference.make_benchmark("standing_shock")
  tests = [
    {"name": "too few cells", "kwargs": {"n_cells": 8}},
    {"name": "cfl too large", "kwargs": {"n_cells": 64, "cfl": 0.9}},
    {"name": "time past T", "kwargs": {"n_cells": 64, "times": [1.0]}},
  ]
  for test in tests:
    print("Running test '" + test['name'] + "'")
    with pytest.raises(structs.ParameterError):
      reference.solve_reference(problem, **test["kwargs"])

  with pytest.raises(structs.UnsupportedError):
    reference.solve_reference(reference.make_benchmark("burgers2d"))


@testcases.slow
def test_references_agree_under_refinement():
  tests = [
    {"name": "Buckley-Leverett", "benchmark": "buckley_leverett"},
    {"name": "sine flux", "benchmark": "sine_flux"},
  ]

  for test in tests:
    print("Running test '" + test['name'] + "'")
    problem = reference.make_benchmark(test["benchmark"])
    coarse = reference.solve_reference(problem, n_cells=512, times=[0.5])[-1]
    fine = reference.solve_reference(problem, n_cells=1024, times=[0.5])[-1]
    fine_on_coarse = fine.u.reshape(512, 2).mean(axis=1)
    diff = np.sum(np.abs(coarse.u - fine_on_coarse)) * coarse.dx
    assert diff <= 5e-3, "Expected refinement to change the profile by at most 5e-3, received L1 difference {}".format(diff)
