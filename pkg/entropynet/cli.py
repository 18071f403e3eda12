import argparse
import json
import logging
import os
import sys

import numpy as np
import pandas as pd

from . import __version__, config, cpwl, metrics, network, plot, structs, train, util
from .reference import make_benchmark, solve_reference

logger = logging.getLogger(__name__)

VERSION_STRING = "entropynet {}".format(__version__)
FLOAT_FORMAT = "%.17g"
DEFAULT_COMPETITOR_H = (1.0 / 16, 1.0 / 32, 1.0 / 64)


def _header(resolved):
  return [
    "{} {}".format(VERSION_STRING, util.content_hash(VERSION_STRING)),
    "config {}".format(json.dumps(resolved, sort_keys=True)),
  ]

# CSV with '#' header lines; floats printed round-trip exact so reruns compare bytewise
def write_csv(df, path, resolved):
  with open(path, "w") as f:
    for line in _header(resolved):
      f.write("# {}\n".format(line))
    df.to_csv(f, index=False, float_format=FLOAT_FORMAT)
  logger.info("wrote %s", path)
  return path

def read_csv(path):
  return pd.read_csv(path, comment="#")

def write_json(data, path):
  with open(path, "w") as f:
    json.dump(data, f, indent=2, sort_keys=True)
  logger.info("wrote %s", path)
  return path

def _raw_config(args):
  if args.config:
    raw = config.load_config(args.config)
  elif args.benchmark:
    raw = {"benchmark": args.benchmark}
  else:
    raise structs.ConfigError("either --config or --benchmark is required", path="benchmark")
  if getattr(args, "benchmark", None) and raw.get("benchmark") != args.benchmark:
    raw = dict(raw, benchmark=args.benchmark)
  if getattr(args, "seed", None) is not None:
    raw = config.with_seed(raw, args.seed)
  if getattr(args, "threads", None) is not None:
    raw.setdefault("train", {})["threads"] = args.threads
  return config.validate_config(raw)


def cmd_train(args):
  raw = _raw_config(args)
  problem = make_benchmark(raw["benchmark"])
  seed = args.seed if args.seed is not None else 0

  for attempt in range(args.retry + 1):
    attempt_raw = config.with_seed(raw, seed + attempt) if attempt else raw
    cfg = config.resolve_config(attempt_raw, problem)
    try:
      result = train.train(cfg, problem)
      break
    except structs.NonFiniteLossError as e:
      if attempt == args.retry:
        raise
      logger.warning("training diverged (%s), retrying with seed %d", e, seed + attempt + 1)

  resolved = config.config_to_raw(cfg)
  os.makedirs(args.out, exist_ok=True)
  write_csv(result.history, os.path.join(args.out, "history.csv"), resolved)
  checkpoints = []
  for s, net in enumerate(result.nets):
    meta = {
      "config": resolved,
      "strip": s,
      "best_iteration": int(result.best_iterations[s]),
      "best_loss": float(result.best_losses[s]),
    }
    checkpoints.append(network.save_checkpoint(net, os.path.join(args.out, "strip_{}.json".format(s)), meta))

  report = {
    "config": resolved,
    "version": VERSION_STRING,
    "best_iterations": [int(i) for i in result.best_iterations],
    "best_losses": [float(v) for v in result.best_losses],
    "wall_time": result.wall_time,
    "checkpoints": checkpoints,
  }
  try:
    errors = metrics.relative_errors(result.solution, problem)
    result.report = errors
    report["errors"] = errors.as_dict()
  except structs.UnsupportedError as e:
    logger.warning("no error report: %s", e)
  write_json(report, os.path.join(args.out, "report.json"))

  if args.plot and problem.dim == 1:
    plot.plot_solution(result.solution, problem, _plot_times(problem), filedir=args.out)
  return 0

def _plot_times(problem):
  return [0.0, 0.5 * problem.t_final, problem.t_final]

def cmd_eval(args):
  nets = [network.load_checkpoint(path) for path in args.checkpoint]
  raw = _raw_config(args) if (args.config or args.benchmark) else None
  if raw is None:
    stored = network.read_checkpoint(args.checkpoint[0]).get("meta", {}).get("config")
    if stored is None:
      raise structs.ConfigError("{} carries no configuration, pass --config or --benchmark".format(args.checkpoint[0]))
    raw = config.validate_config(stored)
  problem = make_benchmark(raw["benchmark"])
  cfg = config.resolve_config(raw, problem)
  if len(nets) != cfg.n_strips:
    raise structs.ConfigError("configuration has {} strips but {} checkpoints were given".format(
      cfg.n_strips, len(nets)
    ), path="train.n_strips")

  solution = train.StitchedSolution(nets, train.strip_edges(problem, cfg.n_strips), train.strip_grids(cfg, problem))
  errors = metrics.relative_errors(solution, problem)
  os.makedirs(args.out, exist_ok=True)
  write_json({"config": config.config_to_raw(cfg), "version": VERSION_STRING, "errors": errors.as_dict()}, os.path.join(args.out, "eval.json"))
  print(json.dumps(errors.as_dict(), sort_keys=True))
  if args.plot and problem.dim == 1:
    plot.plot_solution(solution, problem, _plot_times(problem), filedir=args.out)
  return 0

def cmd_reference(args):
  problem = make_benchmark(args.benchmark)
  times = args.times if args.times else None
  snaps = solve_reference(problem, n_cells=args.cells, cfl=args.cfl, times=times)
  frames = []
  for s in snaps:
    df = pd.DataFrame({"t": s.t, "x": s.x, "u": s.u})
    if problem.exact is not None:
      df["exact"] = problem.exact(np.column_stack([s.x, np.full(len(s.x), s.t)]))
    frames.append(df)
  resolved = {
    "benchmark": problem.name,
    "reference": {"cells": len(snaps[0].u), "cfl": args.cfl if args.cfl is not None else problem.cfl},
    "times": [s.t for s in snaps],
  }
  os.makedirs(args.out, exist_ok=True)
  write_csv(pd.concat(frames, ignore_index=True), os.path.join(args.out, "reference_{}.csv".format(problem.name)), resolved)
  return 0

def cmd_convergence(args):
  raw = _raw_config(args)
  problem = make_benchmark(raw["benchmark"])
  cfg = config.resolve_config(raw, problem)
  levels = args.levels or (raw.get("convergence") or {}).get("levels")
  if not levels:
    raise structs.ConfigError("a convergence study needs levels (--levels or convergence.levels)", path="convergence.levels")

  table, slope = metrics.convergence_study(cfg, levels, problem)
  table["slope"] = slope
  resolved = dict(config.config_to_raw(cfg), convergence={"levels": levels})
  os.makedirs(args.out, exist_ok=True)
  write_csv(table, os.path.join(args.out, "convergence.csv"), resolved)
  if args.plot:
    plot.plot_convergence(table, slope, filedir=args.out)
  return 0

def cmd_cpwl_verify(args):
  os.makedirs(args.out, exist_ok=True)

  # Smoothing trace of the middle hat on {0, 0.5, 1}
  hat = cpwl.CpwlFunction(cpwl.interval_mesh([0.0, 0.5, 1.0]), np.array([0.0, 1.0, 0.0]))
  net = cpwl.compile_cpwl_to_net(hat, args.tol)
  resolved = {"case": "hat", "tol": args.tol}
  write_csv(net.trace, os.path.join(args.out, "cpwl_trace.csv"), resolved)

  problem = make_benchmark(args.case)
  hs = args.h or list(DEFAULT_COMPETITOR_H)
  rows = []
  for h in hs:
    competitor = cpwl.build_shock_competitor(problem, h, shift=args.shift)
    breakdown = cpwl.competitor_loss(competitor, problem, h, n_pert=args.n_pert, seed=args.seed or 0, threads=args.threads)
    row = {"h": h, "simplices": len(competitor.function.mesh.simplices)}
    row.update(breakdown.as_row())
    rows.append(row)
  table = pd.DataFrame(rows)
  if len(table) >= 2 and np.all(table["total"] > 0):
    table["slope"] = util.fit_loglog_slope(table["h"], table["total"])
  resolved = {"case": problem.name, "h": hs, "n_pert": args.n_pert, "seed": args.seed or 0, "shift": args.shift}
  write_csv(table, os.path.join(args.out, "cpwl_competitor.csv"), resolved)
  return 0


# Usage errors become ConfigError so they exit with the validation code
class ArgumentParser(argparse.ArgumentParser):
  def error(self, message):
    raise structs.ConfigError(message)


def build_parser():
  parser = ArgumentParser(prog="entropynet", description="Entropy-residual networks for scalar conservation laws")
  parser.add_argument("--debug", action="store_true", help="log at DEBUG level")
  sub = parser.add_subparsers(dest="command")

  def common(p, config_flags=True):
    p.add_argument("--out", default="out", help="output directory")
    p.add_argument("--threads", type=int, default=None, help="worker threads, default physical cores (ENTROPY_NET_THREADS overrides)")
    p.add_argument("--seed", type=int, default=None)
    if config_flags:
      p.add_argument("--config", default=None, help="JSON configuration file")
      p.add_argument("--benchmark", default=None)
    p.add_argument("--debug", action="store_true", default=argparse.SUPPRESS)

  p = sub.add_parser("train", help="train strip networks")
  common(p)
  p.add_argument("--retry", type=int, default=0, help="re-run a divergent training with seed+1 up to N times")
  p.add_argument("--plot", action="store_true")
  p.set_defaults(func=cmd_train)

  p = sub.add_parser("eval", help="error report for saved checkpoints")
  common(p)
  p.add_argument("--checkpoint", nargs="+", required=True, help="strip checkpoints in time order")
  p.add_argument("--plot", action="store_true")
  p.set_defaults(func=cmd_eval)

  p = sub.add_parser("reference", help="WENO5 reference snapshots")
  common(p, config_flags=False)
  p.add_argument("--benchmark", required=True)
  p.add_argument("--cells", type=int, default=None)
  p.add_argument("--cfl", type=float, default=None)
  p.add_argument("--times", type=float, nargs="+", default=None)
  p.set_defaults(func=cmd_reference)

  p = sub.add_parser("convergence", help="mesh refinement study")
  common(p)
  p.add_argument("--levels", type=int, nargs="+", default=None, help="spatial cell counts per level")
  p.add_argument("--plot", action="store_true")
  p.set_defaults(func=cmd_convergence)

  p = sub.add_parser("cpwl-verify", help="CPwL smoothing trace and shock competitor losses")
  common(p, config_flags=False)
  p.add_argument("--case", default="standing_shock", choices=["standing_shock", "moving_shock"])
  p.add_argument("--h", type=float, nargs="+", default=None)
  p.add_argument("--tol", type=float, default=1e-3)
  p.add_argument("--n-pert", dest="n_pert", type=int, default=256)
  p.add_argument("--shift", type=float, default=0.0, help="competitor mesh displacement in cells, in [0, 1)")
  p.set_defaults(func=cmd_cpwl_verify)
  return parser

def run(argv=None):
  parser = build_parser()
  try:
    args = parser.parse_args(argv)
  except structs.ConfigError as e:
    parser.print_usage(sys.stderr)
    logger.error("%s: %s", type(e).__name__, e)
    return e.exit_code
  logging.basicConfig(
    level=logging.DEBUG if args.debug else logging.INFO,
    format="%(asctime)s %(name)s %(levelname)s %(message)s",
  )
  if not getattr(args, "command", None):
    parser.print_help()
    return structs.ConfigError.exit_code

  try:
    return args.func(args)
  except structs.EntropyNetError as e:
    logger.error("%s: %s", type(e).__name__, e)
    return e.exit_code
  except OSError as e:
    logger.error("%s: %s", type(e).__name__, e)
    return structs.EntropyNetError.exit_code

def main():
  sys.exit(run())
