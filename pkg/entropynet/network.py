import json
from dataclasses import dataclass, field

import numpy as np

from . import structs

CHECKPOINT_FORMAT = "entropynet-checkpoint"
CHECKPOINT_VERSION = 1

class ClippedTanhNet():
  """
  tanh multilayer perceptron with an affine read-out and a clipping head.

  weights[l] has shape (out, in), biases[l] shape (out,). Every layer but
  the last applies tanh; the network output is Pi_c(raw) where
  Pi_c(r) = min(max(r, -c/2), c/2). Instances are treated as immutable:
  updates build a new net.
  """
  def __init__(self, weights, biases, clip):
    if clip is None or not clip > 0:
      raise structs.ParameterError("clip level c must be positive, received {}".format(clip))
    if len(weights) == 0 or len(weights) != len(biases):
      raise structs.ParameterError("expected matching nonempty weight and bias lists, received {} and {}".format(
        len(weights), len(biases)
      ))
    self.weights = [np.asarray(W, dtype=float) for W in weights]
    self.biases = [np.asarray(b, dtype=float) for b in biases]
    self.clip = float(clip)

    for l, (W, b) in enumerate(zip(self.weights, self.biases)):
      if W.ndim != 2 or b.shape != (W.shape[0],):
        raise structs.ShapeError("layer {} has weight shape {} and bias shape {}".format(l, W.shape, b.shape))
      if l > 0 and W.shape[1] != self.weights[l - 1].shape[0]:
        raise structs.ShapeError("layer {} expects {} inputs but layer {} has {} outputs".format(
          l, W.shape[1], l - 1, self.weights[l - 1].shape[0]
        ))
    if self.weights[-1].shape[0] != 1:
      raise structs.ShapeError("output layer must have width 1, received {}".format(self.weights[-1].shape[0]))

  @property
  def widths(self):
    return [self.weights[0].shape[1]] + [W.shape[0] for W in self.weights]

  @property
  def input_dim(self):
    return self.weights[0].shape[1]

  @property
  def depth(self):
    return len(self.weights)

  def parameter_count(self):
    return int(sum(W.size + b.size for W, b in zip(self.weights, self.biases)))

  def parameters(self):
    params = []
    for W, b in zip(self.weights, self.biases):
      params.extend([W, b])
    return params

  def with_parameters(self, params):
    return ClippedTanhNet(params[0::2], params[1::2], self.clip)

  def evaluate(self, points):
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if points.shape[1] != self.input_dim:
      raise structs.ShapeError("network expects inputs of dimension {}, received {}".format(
        self.input_dim, points.shape[1]
      ))
    n, dim = points.shape

    # Forward pass carrying the input Jacobian J[n, d, i] = da_i / dz_d
    acts = [points]
    jacs = [np.broadcast_to(np.eye(dim), (n, dim, dim))]
    slopes = []
    pre_jacs = []
    for W, b in zip(self.weights[:-1], self.biases[:-1]):
      a = np.tanh(acts[-1] @ W.T + b)
      s = 1.0 - a ** 2
      P = np.einsum("ndj,ij->ndi", jacs[-1], W)
      acts.append(a)
      slopes.append(s)
      pre_jacs.append(P)
      jacs.append(s[:, None, :] * P)

    W, b = self.weights[-1], self.biases[-1]
    raw = (acts[-1] @ W.T + b)[:, 0]
    raw_grad = np.einsum("ndj,j->nd", jacs[-1], W[0])

    half = 0.5 * self.clip
    active = (raw > -half) & (raw < half)
    value = np.clip(raw, -half, half)
    grad = raw_grad * active[:, None]
    return NetEvaluation(
      points=points, value=value, grad=grad, active=active,
      net=self, raw=raw, acts=acts, jacs=jacs, slopes=slopes, pre_jacs=pre_jacs,
    )

  def backward(self, evaluation, value_bar, grad_bar):
    """
    Reverse pass: parameter gradient of sum(value_bar * value + grad_bar * grad).

    Clip indicators are frozen at the evaluation's activation pattern.
    """
    if not isinstance(evaluation, NetEvaluation) or evaluation.net is not self:
      raise structs.ContractViolation("backward needs an evaluation produced by this network")
    value_bar = np.asarray(value_bar, dtype=float)
    grad_bar = np.asarray(grad_bar, dtype=float)
    n = len(evaluation.value)
    if value_bar.shape != (n,) or grad_bar.shape != evaluation.grad.shape:
      raise structs.ShapeError("adjoint shapes {} and {} do not match evaluation of {} points".format(
        value_bar.shape, grad_bar.shape, n
      ))

    mask = evaluation.active.astype(float)
    raw_bar = value_bar * mask
    raw_grad_bar = grad_bar * mask[:, None]

    grads_W = [None] * self.depth
    grads_b = [None] * self.depth

    # Affine read-out
    W = self.weights[-1]
    a_prev = evaluation.acts[-1]
    J_prev = evaluation.jacs[-1]
    grads_W[-1] = (raw_bar @ a_prev)[None, :] + np.einsum("nd,ndj->j", raw_grad_bar, J_prev)[None, :]
    grads_b[-1] = np.array([np.sum(raw_bar)])
    a_bar = raw_bar[:, None] * W[0][None, :]
    J_bar = raw_grad_bar[:, :, None] * W[0][None, None, :]

    # tanh layers, last to first
    for l in range(self.depth - 2, -1, -1):
      W = self.weights[l]
      a = evaluation.acts[l + 1]
      s = evaluation.slopes[l]
      P = evaluation.pre_jacs[l]
      a_prev = evaluation.acts[l]
      J_prev = evaluation.jacs[l]

      P_bar = J_bar * s[:, None, :]
      s_bar = np.einsum("ndi,ndi->ni", J_bar, P)
      pre_bar = a_bar * s + s_bar * (-2.0 * a * s)

      grads_W[l] = pre_bar.T @ a_prev + np.einsum("ndi,ndj->ij", P_bar, J_prev)
      grads_b[l] = np.sum(pre_bar, axis=0)
      if l > 0:
        a_bar = pre_bar @ W
        J_bar = np.einsum("ndi,ij->ndj", P_bar, W)

    params = []
    for gW, gb in zip(grads_W, grads_b):
      params.extend([gW, gb])
    return params


@dataclass
class NetEvaluation(structs.FieldEvaluation):
  net: object = None
  raw: np.ndarray = None
  acts: list = field(default_factory=list)
  jacs: list = field(default_factory=list)
  slopes: list = field(default_factory=list)
  pre_jacs: list = field(default_factory=list)


@dataclass
class Objective:
  """
  A scalar assembled from one network evaluation: sum(value_bar * u) +
  sum(grad_bar * grad u), with the adjoints already fixed by the loss.
  """
  evaluation: NetEvaluation
  value_bar: np.ndarray
  grad_bar: np.ndarray


def _check_widths(widths):
  if len(widths) < 2:
    raise structs.ParameterError("widths need an input and an output entry, received {}".format(widths))
  if any(int(w) < 1 for w in widths):
    raise structs.ParameterError("every layer width must be at least one, received {}".format(widths))
  if int(widths[-1]) != 1:
    raise structs.ParameterError("output width must be 1, received {}".format(widths))

# Glorot-uniform weights, zero biases
def init_network(widths, c, seed):
  _check_widths(widths)
  rng = np.random.default_rng(seed)
  weights = []
  biases = []
  for fan_in, fan_out in zip(widths[:-1], widths[1:]):
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    weights.append(rng.uniform(-limit, limit, size=(fan_out, fan_in)))
    biases.append(np.zeros(fan_out))
  return ClippedTanhNet(weights, biases, c)

def zeros_network(widths, c):
  _check_widths(widths)
  weights = [np.zeros((o, i)) for i, o in zip(widths[:-1], widths[1:])]
  biases = [np.zeros(o) for o in widths[1:]]
  return ClippedTanhNet(weights, biases, c)

def forward(net, z):
  ev = net.evaluate(z)
  if np.ndim(z) == 1:
    return float(ev.value[0])
  return ev.value

def forward_with_input_grad(net, z):
  ev = net.evaluate(z)
  if np.ndim(z) == 1:
    return float(ev.value[0]), ev.grad[0], bool(ev.active[0])
  return ev.value, ev.grad, ev.active

def grad_loss_params(net, objective):
  if not isinstance(objective, Objective):
    raise structs.ContractViolation("objective must be an Objective assembled by the loss module, received {}".format(
      type(objective).__name__
    ))
  return net.backward(objective.evaluation, objective.value_bar, objective.grad_bar)


@dataclass
class AdamState:
  first: list
  second: list
  step: int = 0
  learning_rate: float = 1e-3
  beta1: float = 0.9
  beta2: float = 0.999
  eps: float = 1e-8

def adam_init(net, learning_rate=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
  params = net.parameters()
  return AdamState(
    first=[np.zeros_like(p) for p in params],
    second=[np.zeros_like(p) for p in params],
    step=0,
    learning_rate=learning_rate,
    beta1=beta1,
    beta2=beta2,
    eps=eps,
  )

def adam_step(state, net, grads):
  params = net.parameters()
  if len(grads) != len(params):
    raise structs.ShapeError("expected {} gradient arrays, received {}".format(len(params), len(grads)))
  for p, g in zip(params, grads):
    if np.shape(g) != p.shape:
      raise structs.ShapeError("gradient shape {} does not match parameter shape {}".format(np.shape(g), p.shape))

  step = state.step + 1
  b1, b2 = state.beta1, state.beta2
  first = [b1 * m + (1.0 - b1) * g for m, g in zip(state.first, grads)]
  second = [b2 * v + (1.0 - b2) * g * g for v, g in zip(state.second, grads)]
  c1 = 1.0 - b1 ** step
  c2 = 1.0 - b2 ** step
  updated = [
    p - state.learning_rate * (m / c1) / (np.sqrt(v / c2) + state.eps)
    for p, m, v in zip(params, first, second)
  ]
  new_state = AdamState(first, second, step, state.learning_rate, b1, b2, state.eps)
  return net.with_parameters(updated), new_state


def checkpoint_dict(net, meta=None):
  return {
    "format": CHECKPOINT_FORMAT,
    "version": CHECKPOINT_VERSION,
    "clip": net.clip,
    "widths": net.widths,
    "layers": [
      {"shape": list(W.shape), "weights": W.ravel().tolist(), "bias": b.tolist()}
      for W, b in zip(net.weights, net.biases)
    ],
    "meta": meta or {},
  }

def net_from_dict(data):
  if data.get("format") != CHECKPOINT_FORMAT:
    raise structs.ConfigError("not a network checkpoint, format tag is {}".format(data.get("format")))
  if data.get("version") != CHECKPOINT_VERSION:
    raise structs.ConfigError("unsupported checkpoint version {}".format(data.get("version")))
  weights = []
  biases = []
  for layer in data["layers"]:
    weights.append(np.array(layer["weights"], dtype=float).reshape(layer["shape"]))
    biases.append(np.array(layer["bias"], dtype=float))
  return ClippedTanhNet(weights, biases, data["clip"])

def save_checkpoint(net, path, meta=None):
  with open(path, "w") as f:
    json.dump(checkpoint_dict(net, meta), f)
  return path

def read_checkpoint(path):
  try:
    with open(path, "r") as f:
      return json.load(f)
  except OSError as e:
    raise structs.ConfigError("cannot read checkpoint {}: {}".format(path, e.strerror or e))
  except ValueError as e:
    raise structs.ConfigError("checkpoint {} is not valid JSON: {}".format(path, e))

def load_checkpoint(path):
  data = read_checkpoint(path)
  try:
    return net_from_dict(data)
  except (AttributeError, KeyError, TypeError, ValueError) as e:
    raise structs.ConfigError("checkpoint {} is malformed: {!r}".format(path, e))
