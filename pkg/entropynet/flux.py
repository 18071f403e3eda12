from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import structs

@dataclass(frozen=True)
class FluxModel:
  """
  Scalar flux f: R -> R^d with its first and second derivatives.

  The callables accept an array u of any shape and return an array of
  shape u.shape + (dim,).
  """
  name: str
  dim: int
  f: Callable
  f_prime: Callable
  f_second: Callable


def _stack(*parts):
  return np.stack(parts, axis=-1)

def _burgers1d():
  return FluxModel(
    name="burgers1d",
    dim=1,
    f=lambda u: _stack(0.5 * np.asarray(u, dtype=float) ** 2),
    f_prime=lambda u: _stack(np.asarray(u, dtype=float)),
    f_second=lambda u: _stack(np.ones_like(np.asarray(u, dtype=float))),
  )

def _cubic():
  return FluxModel(
    name="cubic",
    dim=1,
    f=lambda u: _stack(np.asarray(u, dtype=float) ** 3 / 3.0),
    f_prime=lambda u: _stack(np.asarray(u, dtype=float) ** 2),
    f_second=lambda u: _stack(2.0 * np.asarray(u, dtype=float)),
  )

# Buckley-Leverett: f = u^2 / D with D = u^2 + (1-u)^2 / 2 = 1.5u^2 - u + 0.5 >= 1/3
def _bl_f(u):
  u = np.asarray(u, dtype=float)
  return u ** 2 / (1.5 * u ** 2 - u + 0.5)

def _bl_f_prime(u):
  u = np.asarray(u, dtype=float)
  d = 1.5 * u ** 2 - u + 0.5
  dd = 3.0 * u - 1.0
  return (2.0 * u * d - u ** 2 * dd) / d ** 2

def _bl_f_second(u):
  u = np.asarray(u, dtype=float)
  d = 1.5 * u ** 2 - u + 0.5
  dd = 3.0 * u - 1.0
  return (2.0 * d - 3.0 * u ** 2) / d ** 2 - 2.0 * dd * (2.0 * u * d - u ** 2 * dd) / d ** 3

def _buckley_leverett():
  return FluxModel(
    name="buckley_leverett",
    dim=1,
    f=lambda u: _stack(_bl_f(u)),
    f_prime=lambda u: _stack(_bl_f_prime(u)),
    f_second=lambda u: _stack(_bl_f_second(u)),
  )

def _sine_flux():
  return FluxModel(
    name="sine_flux",
    dim=1,
    f=lambda u: _stack(np.sin(np.pi * np.asarray(u, dtype=float))),
    f_prime=lambda u: _stack(np.pi * np.cos(np.pi * np.asarray(u, dtype=float))),
    f_second=lambda u: _stack(-np.pi ** 2 * np.sin(np.pi * np.asarray(u, dtype=float))),
  )

def _burgers2d():
  def f(u):
    half = 0.5 * np.asarray(u, dtype=float) ** 2
    return _stack(half, half)
  def f_prime(u):
    u = np.asarray(u, dtype=float)
    return _stack(u, u)
  def f_second(u):
    one = np.ones_like(np.asarray(u, dtype=float))
    return _stack(one, one)
  return FluxModel(name="burgers2d", dim=2, f=f, f_prime=f_prime, f_second=f_second)

CATALOG = {
  "burgers1d": _burgers1d,
  "cubic": _cubic,
  "buckley_leverett": _buckley_leverett,
  "sine_flux": _sine_flux,
  "burgers2d": _burgers2d,
}

# User-defined fluxes go through the same catalog as the built-in ones
def register_flux(name, factory):
  if name in CATALOG:
    raise structs.CatalogError("flux '{}' is already registered".format(name), path="flux")
  CATALOG[name] = factory

def make_flux(name):
  if name not in CATALOG:
    raise structs.CatalogError(
      "unknown flux '{}', expected one of {}".format(name, sorted(CATALOG)), path="flux"
    )
  return CATALOG[name]()

# Space-time flux F(u) = (f(u), u)
def eval_spacetime_flux(model, u):
  u = np.asarray(u, dtype=float)
  return np.concatenate([model.f(u), u[..., None]], axis=-1)

# Largest |f'| over an interval, sampled densely
def max_speed(model, lo, hi, samples=2001):
  u = np.linspace(lo, hi, samples)
  return float(np.max(np.abs(model.f_prime(u))))
