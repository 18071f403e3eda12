import copy
import json
import logging

import numpy as np

from . import structs
from .reference import BENCHMARKS, make_benchmark

logger = logging.getLogger(__name__)

DOMAIN_ATOL = 1e-12

# Hyperparameters per benchmark: hidden width, hidden depth, time strips,
# time cells, spatial cells per axis, iterations, candidates, and the
# relative L1 errors reached at that scale (final time, space-time)
BENCHMARK_PRESETS = {
  "standing_shock":   {"l_theta": 64, "n_theta": 4, "n_strips": 1, "n_t": 64, "n_x": 128, "n_train": 10000, "n_pert": 50000, "e_r_final": 0.00513, "e_r": 0.00434},
  "moving_shock":     {"l_theta": 64, "n_theta": 4, "n_strips": 2, "n_t": 64, "n_x": 128, "n_train": 10000, "n_pert": 50000, "e_r_final": 0.00272, "e_r": 0.00431},
  "rarefaction":      {"l_theta": 64, "n_theta": 4, "n_strips": 1, "n_t": 32, "n_x": 64,  "n_train": 10000, "n_pert": 20000, "e_r_final": 0.00294, "e_r": 0.00272},
  "two_shocks":       {"l_theta": 64, "n_theta": 4, "n_strips": 2, "n_t": 64, "n_x": 128, "n_train": 20000, "n_pert": 50000, "e_r_final": 0.00252, "e_r": 0.00217},
  "sine_wave":        {"l_theta": 64, "n_theta": 4, "n_strips": 2, "n_t": 64, "n_x": 128, "n_train": 50000, "n_pert": 50000, "e_r_final": 0.00248, "e_r": 0.00205},
  "cubic":            {"l_theta": 64, "n_theta": 4, "n_strips": 2, "n_t": 32, "n_x": 128, "n_train": 20000, "n_pert": 20000, "e_r_final": 0.00270, "e_r": 0.00199},
  "buckley_leverett": {"l_theta": 64, "n_theta": 4, "n_strips": 2, "n_t": 32, "n_x": 128, "n_train": 50000, "n_pert": 50000, "e_r_final": 0.00372, "e_r": 0.00358},
  "sine_flux":        {"l_theta": 64, "n_theta": 4, "n_strips": 2, "n_t": 32, "n_x": 128, "n_train": 50000, "n_pert": 50000, "e_r_final": 0.00541, "e_r": 0.00318},
  "burgers2d":        {"l_theta": 64, "n_theta": 4, "n_strips": 3, "n_t": 20, "n_x": 40,  "n_train": 20000, "n_pert": 50000, "e_r_final": 0.00519, "e_r": 0.00493},
}

def _preset(problem):
  return BENCHMARK_PRESETS[problem.name]

# Defaults keyed by config path. Each entry is a callable of the benchmark
# problem being configured; overrides use config.get(key, DEFAULT_CONFIG[key])(problem)
DEFAULT_CONFIG = {
  # Input width d+1, then n_theta hidden layers of width l_theta, scalar output
  "net.widths": lambda problem: [problem.dim + 1] + [_preset(problem)["l_theta"]] * _preset(problem)["n_theta"] + [1],

  # Clip level: twice the data bound plus one, so the exact solution sits inside (-c/2, c/2)
  "net.clip": lambda problem: 2.0 * (problem.data_bound + 1.0),
  "net.init_seed": lambda problem: 0,

  "mesh.n_cells_x": lambda problem: [_preset(problem)["n_x"]] * problem.dim,
  "mesh.n_cells_t": lambda problem: _preset(problem)["n_t"],
  "mesh.oversample": lambda problem: 1,

  "train.n_strips": lambda problem: _preset(problem)["n_strips"],
  "train.n_train": lambda problem: _preset(problem)["n_train"],
  "train.learning_rate": lambda problem: 1e-3,
  "train.log_every": lambda problem: 100,
  "train.threads": lambda problem: None,

  "pert.b": lambda problem: 5.0,
  "pert.n_pert": lambda problem: _preset(problem)["n_pert"],
  "pert.augment_constants": lambda problem: True,
  "pert.shared_across_cells": lambda problem: False,
  "pert.seed": lambda problem: 0,

  "reference.cells": lambda problem: problem.reference_cells,
  "reference.cfl": lambda problem: problem.cfl,

  # Evaluation grid refinement factor relative to the training grid
  "eval.refine": lambda problem: 4,
}

# Leaf rules: type is one of int, number, bool, str, int_list, number_list, levels;
# optional min / gt bounds, choices and nullable
CONFIG_SCHEMA = {
  "benchmark": {"type": "str", "choices": sorted(BENCHMARKS)},
  "domain": {
    "lo": {"type": "number_list"},
    "hi": {"type": "number_list"},
    "t_final": {"type": "number", "gt": 0},
  },
  "net": {
    "widths": {"type": "int_list", "min": 1},
    "clip": {"type": "number", "gt": 0},
    "init_seed": {"type": "int", "min": 0},
  },
  "mesh": {
    "n_cells_x": {"type": "int_list", "min": 1},
    "n_cells_t": {"type": "int", "min": 1},
    "oversample": {"type": "int", "min": 1},
  },
  "train": {
    "n_strips": {"type": "int", "min": 1},
    "n_train": {"type": "int", "min": 1},
    "learning_rate": {"type": "number", "gt": 0},
    "log_every": {"type": "int", "min": 0},
    "threads": {"type": "int", "min": 1, "nullable": True},
  },
  "pert": {
    "b": {"type": "number", "min": 0},
    "n_pert": {"type": "int", "min": 1},
    "augment_constants": {"type": "bool"},
    "shared_across_cells": {"type": "bool"},
    "seed": {"type": "int", "min": 0},
  },
  "reference": {
    "cells": {"type": "int", "min": 16},
    "cfl": {"type": "number", "gt": 0},
  },
  "eval": {
    "refine": {"type": "int", "min": 1},
  },
  "convergence": {
    "levels": {"type": "levels"},
  },
}

LEVEL_KEYS = {
  "n_cells_x": {"type": "int_list", "min": 1},
  "n_cells_t": {"type": "int", "min": 1},
  "widths": {"type": "int_list", "min": 1},
  "n_train": {"type": "int", "min": 1},
}

def _is_int(v):
  return isinstance(v, int) and not isinstance(v, bool)

def _is_number(v):
  return (isinstance(v, (int, float))) and not isinstance(v, bool)

def _check_bounds(value, rule, path):
  if "min" in rule and value < rule["min"]:
    raise structs.ConfigError("must be at least {}, received {}".format(rule["min"], value), path=path)
  if "gt" in rule and not value > rule["gt"]:
    raise structs.ConfigError("must be greater than {}, received {}".format(rule["gt"], value), path=path)

def _check_leaf(value, rule, path):
  kind = rule["type"]
  if value is None:
    if rule.get("nullable"):
      return
    raise structs.ConfigError("must not be null", path=path)

  if kind == "int":
    if not _is_int(value):
      raise structs.ConfigError("expected an integer, received {!r}".format(value), path=path)
    _check_bounds(value, rule, path)
  elif kind == "number":
    if not _is_number(value):
      raise structs.ConfigError("expected a number, received {!r}".format(value), path=path)
    _check_bounds(value, rule, path)
  elif kind == "bool":
    if not isinstance(value, bool):
      raise structs.ConfigError("expected true or false, received {!r}".format(value), path=path)
  elif kind == "str":
    if not isinstance(value, str):
      raise structs.ConfigError("expected a string, received {!r}".format(value), path=path)
    if "choices" in rule and value not in rule["choices"]:
      raise structs.ConfigError("unknown value '{}', expected one of {}".format(value, rule["choices"]), path=path)
  elif kind == "int_list":
    if _is_int(value):
      value = [value]
    if not isinstance(value, list) or len(value) == 0:
      raise structs.ConfigError("expected a nonempty list of integers, received {!r}".format(value), path=path)
    for i, item in enumerate(value):
      item_path = "{}[{}]".format(path, i)
      if not _is_int(item):
        raise structs.ConfigError("expected an integer, received {!r}".format(item), path=item_path)
      _check_bounds(item, rule, item_path)
  elif kind == "number_list":
    if _is_number(value):
      value = [value]
    if not isinstance(value, list) or len(value) == 0:
      raise structs.ConfigError("expected a nonempty list of numbers, received {!r}".format(value), path=path)
    for i, item in enumerate(value):
      if not _is_number(item):
        raise structs.ConfigError("expected a number, received {!r}".format(item), path="{}[{}]".format(path, i))
  elif kind == "levels":
    if not isinstance(value, list) or len(value) < 2:
      raise structs.ConfigError("expected a list of at least two levels, received {!r}".format(value), path=path)
    for i, level in enumerate(value):
      level_path = "{}[{}]".format(path, i)
      if _is_int(level):
        _check_bounds(level, {"min": 1}, level_path)
        continue
      if not isinstance(level, dict):
        raise structs.ConfigError("expected an integer or an object, received {!r}".format(level), path=level_path)
      _check_node(level, LEVEL_KEYS, level_path)
  else:
    raise structs.ConfigError("schema has unknown type '{}'".format(kind), path=path)

def _check_node(raw, schema, prefix):
  if not isinstance(raw, dict):
    raise structs.ConfigError("expected an object, received {!r}".format(raw), path=prefix or None)
  for key, value in raw.items():
    path = "{}.{}".format(prefix, key) if prefix else key
    if key not in schema:
      raise structs.ConfigError("unknown key, expected one of {}".format(sorted(schema)), path=path)
    rule = schema[key]
    if "type" in rule:
      _check_leaf(value, rule, path)
    else:
      _check_node(value, rule, path)

def validate_config(raw):
  """Reject unknown keys and type or range violations. Returns raw unchanged."""
  _check_node(raw, CONFIG_SCHEMA, "")
  if "benchmark" not in raw:
    raise structs.ConfigError("is required", path="benchmark")
  return raw

def load_config(path):
  try:
    with open(path, "r") as f:
      raw = json.load(f)
  except OSError as e:
    raise structs.ConfigError("cannot read {}: {}".format(path, e.strerror or e))
  except json.JSONDecodeError as e:
    raise structs.ConfigError("{} is not valid JSON: {}".format(path, e))
  return validate_config(raw)

def _lookup(raw, key):
  node = raw
  for part in key.split("."):
    if not isinstance(node, dict) or part not in node:
      return None
    node = node[part]
  return node

# The domain section restates the benchmark box; it may not move it
def _check_domain(raw, problem):
  domain = raw.get("domain") or {}
  expected = {"lo": list(problem.lo), "hi": list(problem.hi), "t_final": problem.t_final}
  for key in ("lo", "hi", "t_final"):
    if key not in domain:
      continue
    got = np.atleast_1d(np.asarray(domain[key], dtype=float))
    want = np.atleast_1d(np.asarray(expected[key], dtype=float))
    if got.shape != want.shape or not np.allclose(got, want, rtol=0.0, atol=DOMAIN_ATOL):
      raise structs.ConfigError("expected {} for '{}', received {}".format(
        expected[key], problem.name, domain[key]
      ), path="domain.{}".format(key))

def resolve_values(raw, problem=None):
  """Flat {path: value} with every DEFAULT_CONFIG key filled in."""
  validate_config(raw)
  problem = problem or make_benchmark(raw["benchmark"])
  _check_domain(raw, problem)
  resolved = {"benchmark": problem.name}
  for key, default in DEFAULT_CONFIG.items():
    value = _lookup(raw, key)
    resolved[key] = default(problem) if value is None else copy.deepcopy(value)
  if _is_int(resolved["mesh.n_cells_x"]):
    resolved["mesh.n_cells_x"] = [resolved["mesh.n_cells_x"]]
  if len(resolved["mesh.n_cells_x"]) == 1 and problem.dim > 1:
    resolved["mesh.n_cells_x"] = resolved["mesh.n_cells_x"] * problem.dim
  resolved["convergence.levels"] = _lookup(raw, "convergence.levels")

  widths = resolved["net.widths"]
  if widths[0] != problem.dim + 1:
    raise structs.ConfigError("input width must be d+1 = {} for '{}', received {}".format(
      problem.dim + 1, problem.name, widths[0]
    ), path="net.widths[0]")
  if widths[-1] != 1:
    raise structs.ConfigError("output width must be 1, received {}".format(widths[-1]), path="net.widths[{}]".format(
      len(widths) - 1
    ))
  if len(resolved["mesh.n_cells_x"]) != problem.dim:
    raise structs.ConfigError("expected {} spatial cell counts, received {}".format(
      problem.dim, resolved["mesh.n_cells_x"]
    ), path="mesh.n_cells_x")
  if resolved["train.n_strips"] > resolved["mesh.n_cells_t"]:
    raise structs.ConfigError("{} strips need at least as many time cells, received {}".format(
      resolved["train.n_strips"], resolved["mesh.n_cells_t"]
    ), path="train.n_strips")
  if resolved["net.clip"] <= 2.0 * problem.data_bound:
    logger.warning("clip level %.6g does not exceed twice the data bound %.6g", resolved["net.clip"], problem.data_bound)
  return resolved

def resolve_config(raw, problem=None):
  values = resolve_values(raw, problem)
  cfg = structs.TrainConfig(
    benchmark=values["benchmark"],
    widths=list(values["net.widths"]),
    clip=float(values["net.clip"]),
    n_strips=int(values["train.n_strips"]),
    n_cells_t=int(values["mesh.n_cells_t"]),
    n_cells_x=tuple(values["mesh.n_cells_x"]),
    n_train=int(values["train.n_train"]),
    n_pert=int(values["pert.n_pert"]),
    b=float(values["pert.b"]),
    learning_rate=float(values["train.learning_rate"]),
    init_seed=int(values["net.init_seed"]),
    pert_seed=int(values["pert.seed"]),
    augment_constants=bool(values["pert.augment_constants"]),
    shared_across_cells=bool(values["pert.shared_across_cells"]),
    oversample=int(values["mesh.oversample"]),
    log_every=int(values["train.log_every"]),
    threads=values["train.threads"],
  )
  logger.debug("resolved configuration: %s", cfg)
  return cfg

# Nested JSON form of a TrainConfig, accepted back by resolve_config
def config_to_raw(cfg):
  return {
    "benchmark": cfg.benchmark,
    "net": {"widths": list(cfg.widths), "clip": cfg.clip, "init_seed": cfg.init_seed},
    "mesh": {"n_cells_x": list(cfg.n_cells_x), "n_cells_t": cfg.n_cells_t, "oversample": cfg.oversample},
    "train": {
      "n_strips": cfg.n_strips, "n_train": cfg.n_train, "learning_rate": cfg.learning_rate,
      "log_every": cfg.log_every, "threads": cfg.threads,
    },
    "pert": {
      "b": cfg.b, "n_pert": cfg.n_pert, "augment_constants": cfg.augment_constants,
      "shared_across_cells": cfg.shared_across_cells, "seed": cfg.pert_seed,
    },
  }

def with_seed(raw, seed):
  raw = copy.deepcopy(raw)
  raw.setdefault("net", {})["init_seed"] = int(seed)
  raw.setdefault("pert", {})["seed"] = int(seed)
  return raw
