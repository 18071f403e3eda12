import hashlib
import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

THREADS_ENV = "ENTROPY_NET_THREADS"

# Sign with the sgn(0) = 0 convention
def sgn(x):
  return np.sign(x)

# Counter-based random stream. Each (seed, counter tuple) pair names an
# independent stream, so draws do not depend on the order in which
# candidates, strips or iterations are visited.
def stream(seed, *counter):
  words = [0] + [int(c) for c in counter]
  words = (words + [0, 0, 0, 0])[:4]
  return np.random.Generator(np.random.Philox(key=int(seed), counter=words))

CPUINFO_PATH = "/proc/cpuinfo"

# Distinct (physical id, core id) pairs in a /proc/cpuinfo listing, None when
# the listing carries no core ids
def count_physical_cores(cpuinfo):
  cores = set()
  physical = "0"
  for line in cpuinfo.splitlines():
    key, _, value = line.partition(":")
    key = key.strip()
    if key == "physical id":
      physical = value.strip()
    elif key == "core id":
      cores.add((physical, value.strip()))
  return len(cores) or None

def physical_cores():
  try:
    with open(CPUINFO_PATH, "r") as f:
      n = count_physical_cores(f.read())
  except OSError:
    n = None
  return n or os.cpu_count() or 1

# Worker count: the env override wins, then the explicit request, then
# physical cores (logical cpu count where cores cannot be read)
def resolve_threads(requested=None):
  env = os.environ.get(THREADS_ENV)
  if env:
    return max(1, int(env))
  if requested:
    return max(1, int(requested))
  return max(1, physical_cores())

# Order-preserving map over a thread pool. Results are gathered in input
# order so reductions downstream stay independent of the worker count.
def parallel_map(fn, items, threads=None):
  items = list(items)
  n = min(resolve_threads(threads), len(items))
  if n <= 1:
    return [fn(item) for item in items]
  with ThreadPoolExecutor(max_workers=n) as pool:
    return list(pool.map(fn, items))

# git-style blob hash of a text (same digest as `git hash-object`)
def content_hash(text):
  data = text.encode("utf-8")
  header = "blob {}\0".format(len(data)).encode("utf-8")
  return hashlib.sha1(header + data).hexdigest()

# Least-squares slope of log(err) against log(h)
def fit_loglog_slope(h, err):
  h = np.asarray(h, dtype=float)
  err = np.asarray(err, dtype=float)
  if len(h) < 2:
    raise ValueError("at least two points are required for a slope fit, received {}".format(len(h)))
  m, _ = np.polyfit(np.log(h), np.log(err), 1)
  return float(m)

# Low-discrepancy points in a box (additive recurrence on the generalised
# golden ratio). Deterministic, so sampled error checks are reproducible.
def kronecker_points(n, lo, hi):
  lo = np.asarray(lo, dtype=float)
  hi = np.asarray(hi, dtype=float)
  dim = len(lo)
  phi = 2.0
  for _ in range(64):
    phi = (1.0 + phi) ** (1.0 / (dim + 1))
  alpha = (1.0 / phi) ** np.arange(1, dim + 1)
  frac = np.mod(0.5 + np.outer(np.arange(1, n + 1), alpha), 1.0)
  return lo + frac * (hi - lo)
