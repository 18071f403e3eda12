import logging

import numpy as np

from . import dpwp, mesh, network, structs, util
from .flux import eval_spacetime_flux

logger = logging.getLogger(__name__)

# Candidates scored per work item. Fixed so that results never depend on
# the number of worker threads.
CANDIDATE_CHUNK = 64

# A field is anything with evaluate(points) -> FieldEvaluation: trained
# networks, compiled CPwL networks, CPwL and DPwP functions, analytic fields.

def _node_eval(field, grid):
  return field.evaluate(grid.nodes)

# div F(u) = du/dt + f'(u) . grad_x u
def residual_from(evaluation, flux):
  u = evaluation.value
  g = evaluation.grad
  return g[:, -1] + np.sum(flux.f_prime(u) * g[:, :-1], axis=1)

def residual(field, flux, z):
  ev = field.evaluate(z)
  r = residual_from(ev, flux)
  if np.ndim(z) == 1:
    return float(r[0])
  return r

def _zero(points):
  return np.zeros(len(points))

def _ibc_terms(ev, grid, u0, g):
  """Initial and lateral L1 mismatch from an evaluation at the grid nodes."""
  idx0, w0 = mesh.initial_nodes(grid)
  x0 = grid.nodes[idx0][:, :-1]
  diff0 = ev.value[idx0] - np.asarray(u0(x0), dtype=float)

  idxb, wb = mesh.lateral_nodes(grid)
  target = np.asarray((g or _zero)(grid.nodes[idxb]), dtype=float)
  diffb = ev.value[idxb] - target

  return {
    "initial": float(np.sum(w0 * np.abs(diff0))),
    "boundary": float(np.sum(wb * np.abs(diffb))),
    "idx0": idx0, "w0": w0, "diff0": diff0,
    "idxb": idxb, "wb": wb, "diffb": diffb,
  }

def j_ent(field, flux, k, grid):
  ev = _node_eval(field, grid)
  r = residual_from(ev, flux)
  return float(mesh.integrate(grid, r * util.sgn(ev.value - k.at_nodes())))

def _score_chunk(args):
  u, weighted_r, coeffs, grid = args
  k = dpwp.eval_at_nodes(coeffs, grid)
  return np.sum(util.sgn(u[None, :] - k) * weighted_r[None, :], axis=1)

def _score(u, r, coeff_chunks, grid, threads=None):
  weighted_r = r * grid.weights
  parts = util.parallel_map(
    _score_chunk,
    [(u, weighted_r, c, grid) for c in coeff_chunks],
    threads,
  )
  return np.concatenate(parts)

def l_ent_hat(field, flux, candidates, grid, threads=None):
  if len(candidates) == 0:
    raise structs.ParameterError("l_ent_hat needs at least one candidate")
  ev = _node_eval(field, grid)
  r = residual_from(ev, flux)
  chunks = [
    np.stack([k.coeffs for k in candidates[i:i + CANDIDATE_CHUNK]])
    for i in range(0, len(candidates), CANDIDATE_CHUNK)
  ]
  scores = _score(ev.value, r, chunks, grid, threads)
  best = int(np.argmax(scores))
  return float(scores[best]), best

def l_reg(field, flux, grid, h=None):
  h = grid.h if h is None else h
  if not h > 0:
    raise structs.ParameterError("l_reg needs a positive mesh size, received {}".format(h))
  ev = _node_eval(field, grid)
  return h * float(mesh.integrate(grid, np.abs(residual_from(ev, flux))))

def l_ibc(field, u0, g, grid):
  terms = _ibc_terms(_node_eval(field, grid), grid, u0, g)
  return terms["initial"], terms["boundary"]


def _pool_scores(ev, r, grid, pert, iteration, strip, threads):
  avgs = dpwp.cell_average(ev.value, grid)
  n_total = dpwp.candidate_count(pert.n_pert, pert.augment_constants)

  def chunk(start):
    stop = min(start + CANDIDATE_CHUNK, n_total)
    coeffs = np.stack([
      dpwp.candidate_coeffs(avgs, grid, pert, iteration, j, strip) for j in range(start, stop)
    ])
    return _score_chunk((ev.value, r * grid.weights, coeffs, grid))

  scores = np.concatenate(util.parallel_map(chunk, range(0, n_total, CANDIDATE_CHUNK), threads))
  return avgs, scores

def assemble_loss(
  field,
  flux,
  grid,
  pert,
  u0,
  g=None,
  iteration=0,
  strip=0,
  threads=None,
  with_objective=False,
):
  """
  Sampled loss L = J_ent(u; k*) + L_reg + L_ibc at one iteration.

  k* maximises J_ent over the candidate pool drawn for (seed, strip,
  iteration). With with_objective=True the field must be a ClippedTanhNet
  and the adjoints of the loss with frozen sgn factors, frozen k* and
  frozen clip pattern are returned as a network.Objective.
  """
  if pert.augment_constants and (pert.clip is None or pert.clip <= 0):
    raise structs.ParameterError("constant augmentation needs a positive clip level, received {}".format(pert.clip))
  if pert.b < 0:
    raise structs.ParameterError("perturbation bound b must be nonnegative, received {}".format(pert.b))

  ev = _node_eval(field, grid)
  r = residual_from(ev, flux)
  avgs, scores = _pool_scores(ev, r, grid, pert, iteration, strip, threads)
  best = int(np.argmax(scores))
  logger.debug("strip %d iteration %d: k* is candidate %d of %d (score %.6e)", strip, iteration, best, len(scores), scores[best])
  k_star = dpwp.DpwpFunction(grid, dpwp.candidate_coeffs(avgs, grid, pert, iteration, best, strip))

  s_star = util.sgn(ev.value - k_star.at_nodes())
  j_star = float(mesh.integrate(grid, r * s_star))
  reg = grid.h * float(mesh.integrate(grid, np.abs(r)))
  ibc = _ibc_terms(ev, grid, u0, g)

  total = j_star + reg + ibc["initial"] + ibc["boundary"]
  breakdown = structs.LossBreakdown(
    j_ent_star=j_star,
    l_reg=reg,
    l_ibc_initial=ibc["initial"],
    l_ibc_boundary=ibc["boundary"],
    total=total,
    argmax_index=best,
    argmax_norm=dpwp.dpwp_norm(k_star),
  )
  if not with_objective:
    return breakdown, None

  # dL/dr at each node, then through r = u_t + f'(u) . grad_x u
  rho = grid.weights * (s_star + grid.h * util.sgn(r))
  fp = flux.f_prime(ev.value)
  fpp = flux.f_second(ev.value)
  value_bar = rho * np.sum(fpp * ev.grad[:, :-1], axis=1)
  grad_bar = rho[:, None] * np.concatenate([fp, np.ones((len(r), 1))], axis=1)

  np.add.at(value_bar, ibc["idx0"], ibc["w0"] * util.sgn(ibc["diff0"]))
  np.add.at(value_bar, ibc["idxb"], ibc["wb"] * util.sgn(ibc["diffb"]))

  return breakdown, network.Objective(ev, value_bar, grad_bar)

def total_loss(field, flux, problem, pert, grid, iteration=0, strip=0, u0=None, g=None, threads=None):
  breakdown, _ = assemble_loss(
    field,
    flux,
    grid,
    pert,
    u0 if u0 is not None else problem.u0,
    g if g is not None else problem.boundary,
    iteration=iteration,
    strip=strip,
    threads=threads,
  )
  return breakdown

# Loss of a field with the idealised supremum replaced by a fixed set of
# candidates; used to score competitors that are not networks
def loss_with_candidates(field, flux, grid, candidates, u0, g=None, threads=None):
  ev = _node_eval(field, grid)
  r = residual_from(ev, flux)
  chunks = [
    np.stack([k.coeffs for k in candidates[i:i + CANDIDATE_CHUNK]])
    for i in range(0, len(candidates), CANDIDATE_CHUNK)
  ]
  scores = _score(ev.value, r, chunks, grid, threads)
  best = int(np.argmax(scores))
  j_star = float(scores[best])
  reg = grid.h * float(mesh.integrate(grid, np.abs(r)))
  ibc = _ibc_terms(ev, grid, u0, g)
  return structs.LossBreakdown(
    j_ent_star=j_star,
    l_reg=reg,
    l_ibc_initial=ibc["initial"],
    l_ibc_boundary=ibc["boundary"],
    total=j_star + reg + ibc["initial"] + ibc["boundary"],
    argmax_index=best,
    argmax_norm=dpwp.dpwp_norm(candidates[best]),
  )


# Surface side of the divergence identity for a constant k:
# sum over faces of integral sgn(v - k) (F(v) - F(k)) . n
def boundary_flux_integral(field, flux, k, grid):
  ev = _node_eval(field, grid)
  Fk = eval_spacetime_flux(flux, np.asarray(float(k)))
  total = 0.0
  for face in mesh.boundary_faces(grid):
    idx = face["index"]
    v = ev.value[idx]
    Fv = eval_spacetime_flux(flux, v)
    normal_flux = (Fv - Fk) @ face["normal"]
    total += float(np.sum(face["weights"] * util.sgn(v - k) * normal_flux))
  return total

def cellwise_identity_terms(field, flux, k_corners, cell_lo, cell_hi, oversample=64):
  """
  Terms of the cellwise identity on one space-time cell K:
  int_K div F(v) sgn(v-k) = int_dK (F(v)-F(k)) sgn(v-k) . n + int_K div F(k) sgn(v-k).

  k_corners are the Q1 corner values of k on K. Returns
  (volume, boundary, source).
  """
  cell_lo = np.atleast_1d(np.asarray(cell_lo, dtype=float))
  cell_hi = np.atleast_1d(np.asarray(cell_hi, dtype=float))
  grid = mesh.build_grid(
    cell_lo[:-1], cell_hi[:-1], cell_hi[-1], 1, 1, t_start=cell_lo[-1], oversample=oversample,
  )
  k = dpwp.DpwpFunction(grid, np.asarray(k_corners, dtype=float).reshape(1, -1))

  ev_v = _node_eval(field, grid)
  ev_k = k.evaluate(grid.nodes)
  s = util.sgn(ev_v.value - ev_k.value)

  volume = float(mesh.integrate(grid, residual_from(ev_v, flux) * s))
  source = float(mesh.integrate(grid, residual_from(ev_k, flux) * s))

  boundary = 0.0
  for face in mesh.boundary_faces(grid):
    idx = face["index"]
    jump = eval_spacetime_flux(flux, ev_v.value[idx]) - eval_spacetime_flux(flux, ev_k.value[idx])
    boundary += float(np.sum(face["weights"] * s[idx] * (jump @ face["normal"])))
  return volume, boundary, source
