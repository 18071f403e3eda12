import os

import numpy as np
import pytest

from entropynet import mesh, network, structs

# Long-running checks (CPwL compilation at fine h, full reference runs) are
# opt-in: ENTROPY_NET_SLOW=1 pytest -m slow
SLOW = os.environ.get("ENTROPY_NET_SLOW") == "1"
slow = pytest.mark.skipif(not SLOW, reason="set ENTROPY_NET_SLOW=1 to run slow checks")


def smooth_field(amplitude=0.2):
  """v(x, t) = a sin(pi x) exp(-t) on space-time points (N, 2)."""
  def value(z):
    return amplitude * np.sin(np.pi * z[:, 0]) * np.exp(-z[:, 1])
  def grad(z):
    e = np.exp(-z[:, 1])
    return np.column_stack([
      amplitude * np.pi * np.cos(np.pi * z[:, 0]) * e,
      -amplitude * np.sin(np.pi * z[:, 0]) * e,
    ])
  return structs.AnalyticField(value, grad)

# Symmetric in x, so only the time faces carry flux through the box boundary
def decaying_bump(amplitude=0.2):
  def value(z):
    return amplitude * np.cos(0.25 * np.pi * z[:, 0]) * np.exp(-z[:, 1])
  def grad(z):
    e = np.exp(-z[:, 1])
    return np.column_stack([
      -0.25 * amplitude * np.pi * np.sin(0.25 * np.pi * z[:, 0]) * e,
      -amplitude * np.cos(0.25 * np.pi * z[:, 0]) * e,
    ])
  return structs.AnalyticField(value, grad)

def linear_field(coeffs, offset=0.0):
  coeffs = np.asarray(coeffs, dtype=float)
  return structs.AnalyticField(
    lambda z: z @ coeffs + offset,
    lambda z: np.broadcast_to(coeffs, z.shape).copy(),
  )

def constant_field(value):
  return structs.AnalyticField(
    lambda z: np.full(len(z), float(value)),
    lambda z: np.zeros(z.shape),
  )

def small_grid(n_x=8, n_t=4, oversample=1):
  return mesh.build_grid((-1.0,), (1.0,), 0.5, n_x, n_t, oversample=oversample)

def small_net(widths=(2, 8, 8, 1), clip=4.0, seed=0):
  return network.init_network(list(widths), clip, seed)

# Kink-free sample points for finite differences: interior, away from the clip head
def sample_points(n=16, seed=3):
  rng = np.random.default_rng(seed)
  return np.column_stack([rng.uniform(-0.8, 0.8, n), rng.uniform(0.05, 0.45, n)])

def tiny_config(benchmark="standing_shock", **sections):
  """Raw config small enough to train in seconds."""
  raw = {
    "benchmark": benchmark,
    "net": {"widths": [2, 6, 6, 1]},
    "mesh": {"n_cells_x": [8], "n_cells_t": 4},
    "train": {"n_strips": 1, "n_train": 5, "log_every": 0, "threads": 1},
    "pert": {"n_pert": 8},
  }
  for key, values in sections.items():
    raw.setdefault(key, {}).update(values)
  return raw
