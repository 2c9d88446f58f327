"""Self-tuning GCN layers with exact reverse mode gradients, the masked
NLL loss, Adam, and parameter checkpoints.

Each layer holds elementary parameters ``W, b`` plus the hypernet terms
``W_lam, b_lam, e_W, e_b``. For a conditioning vector ``c`` (the
standardized unconstrained hyperparameters) the layer computes with::

    W_hat = W + W_lam * (e_W @ c)[None, :]      # scales output columns
    b_hat = b + b_lam * (e_b @ c)

and propagates ``Z = A_hat @ (H @ W_hat) + b_hat``. Hidden layers apply
ReLU followed by a relaxed (concrete) dropout, so the loss is
differentiable in the dropout rates. The last layer produces logits.
"""

import logging
import os
from pathlib import Path
from typing import Callable, Dict, List, Mapping, Sequence, Tuple, Union

import numpy as np

from gcntune import utils
from gcntune.graph import DropRateError, NormalizedAdjacency
from gcntune.hyper import HyperVector, constrain_grad

LOGGER = logging.getLogger(__name__)

PARAM_KINDS = ('W', 'b', 'W_lam', 'b_lam', 'e_W', 'e_b')
ELEMENTARY_KINDS = ('W', 'b')
HYPERNET_KINDS = ('W_lam', 'b_lam', 'e_W', 'e_b')

TRAIN = 'train'
EVAL = 'eval'

CONCRETE_TEMPERATURE = 0.5
CONCRETE_EPS = 1e-7

HYPERNET_INIT_SCALE = 0.1

ADAM_BETAS = (0.9, 0.999)
ADAM_EPS = 1e-8

CHECKPOINT_FORMAT = 1


class ShapeError(ValueError):
    """Raised when array shapes don't line up."""


class NumericError(ArithmeticError):
    """Raised when activations, losses or gradients become non-finite.

    :ivar layer: The layer index or parameter name involved, if known.
    """

    def __init__(self, msg, layer=None):
        self.layer = layer
        if layer is not None:
            msg = "{} (at {})".format(msg, layer)
        super().__init__(msg)


class LossError(ValueError):
    """Raised for invalid loss inputs."""


class TraceError(RuntimeError):
    """Raised when a forward trace can't be used for the backward pass."""


class CheckpointError(RuntimeError):
    """Raised when a checkpoint can't be written or read."""


def _glorot(rng: np.random.Generator, fan_in: int, fan_out: int,
            shape) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


class SelfTuningLayer:
    """One GCN layer with its hypernet terms."""

    __slots__ = PARAM_KINDS

    def __init__(self, W, b, W_lam, b_lam, e_W, e_b):
        # pylint: disable=invalid-name
        self.W = np.asarray(W, dtype=np.float64)
        self.b = np.asarray(b, dtype=np.float64)
        self.W_lam = np.asarray(W_lam, dtype=np.float64)
        self.b_lam = np.asarray(b_lam, dtype=np.float64)
        self.e_W = np.asarray(e_W, dtype=np.float64)
        self.e_b = np.asarray(e_b, dtype=np.float64)

        if self.W.ndim != 2:
            raise ShapeError("W must be a matrix, got shape {}"
                             .format(self.W.shape))
        out_dim = self.W.shape[1]
        if self.b.shape != (out_dim,):
            raise ShapeError("b has shape {}, expected ({},)"
                             .format(self.b.shape, out_dim))
        if self.W_lam.shape != self.W.shape:
            raise ShapeError("W_lam has shape {}, expected {}"
                             .format(self.W_lam.shape, self.W.shape))
        if self.b_lam.shape != self.b.shape:
            raise ShapeError("b_lam has shape {}, expected {}"
                             .format(self.b_lam.shape, self.b.shape))
        if self.e_W.ndim != 2 or self.e_W.shape[0] != out_dim:
            raise ShapeError("e_W has shape {}, expected ({}, q)"
                             .format(self.e_W.shape, out_dim))
        if self.e_b.shape != self.e_W.shape:
            raise ShapeError("e_b has shape {}, expected {}"
                             .format(self.e_b.shape, self.e_W.shape))

    @property
    def in_dim(self) -> int:
        return self.W.shape[0]

    @property
    def out_dim(self) -> int:
        return self.W.shape[1]

    @property
    def q(self) -> int:
        return self.e_W.shape[1]

    @classmethod
    def init(cls, in_dim: int, out_dim: int, q: int,
             rng: np.random.Generator) -> 'SelfTuningLayer':
        """Glorot uniform W, zero bias, scaled down Glorot hypernet weights
        and zero embeddings. With zero embeddings a fresh layer behaves
        exactly like a plain GCN layer."""

        W = _glorot(rng, in_dim, out_dim, (in_dim, out_dim))
        W_lam = HYPERNET_INIT_SCALE * _glorot(rng, in_dim, out_dim,
                                              (in_dim, out_dim))
        b_lam = HYPERNET_INIT_SCALE * _glorot(rng, in_dim, out_dim,
                                              (out_dim,))
        return cls(W, np.zeros(out_dim), W_lam, b_lam,
                   np.zeros((out_dim, q)), np.zeros((out_dim, q)))

    def arrays(self) -> Dict[str, np.ndarray]:
        return {kind: getattr(self, kind) for kind in PARAM_KINDS}

    def copy(self) -> 'SelfTuningLayer':
        return SelfTuningLayer(**{kind: arr.copy()
                                  for kind, arr in self.arrays().items()})


def _conditioning(lam: Union[HyperVector, np.ndarray]) -> np.ndarray:
    if isinstance(lam, HyperVector):
        return lam.conditioning
    return np.asarray(lam, dtype=np.float64)


def effective_params(layer: SelfTuningLayer,
                     lam: Union[HyperVector, np.ndarray]) \
        -> Tuple[np.ndarray, np.ndarray]:
    """Compute the hyperparameter conditioned weights and bias of a layer.

    :param layer:
    :param lam: A HyperVector (its standardized unconstrained values are
        used) or a raw conditioning vector.
    :raises ShapeError: When the conditioning size doesn't match q.
    """

    cond = _conditioning(lam)
    if cond.shape != (layer.q,):
        raise ShapeError("Layer expects {} hyperparameters, got shape {}."
                         .format(layer.q, cond.shape))

    w_hat = layer.W + layer.W_lam * (layer.e_W @ cond)[None, :]
    b_hat = layer.b + layer.b_lam * (layer.e_b @ cond)
    return w_hat, b_hat


class ModelParams:
    """The ordered layers of a self-tuning GCN."""

    def __init__(self, layers: Sequence[SelfTuningLayer]):
        self.layers = list(layers)
        if not self.layers:
            raise ShapeError("A model needs at least one layer.")

        for i in range(1, len(self.layers)):
            prev, cur = self.layers[i - 1], self.layers[i]
            if prev.out_dim != cur.in_dim:
                raise ShapeError(
                    "Layer {} outputs {} features but layer {} expects {}."
                    .format(i - 1, prev.out_dim, i, cur.in_dim))
            if prev.q != cur.q:
                raise ShapeError("Layers {} and {} disagree on q."
                                 .format(i - 1, i))

    @classmethod
    def init(cls, layer_dims: Sequence[int], q: int,
             seed: int) -> 'ModelParams':
        """Initialize a model with the given layer widths, eg.
        (F, 128, 128, 128, C) for a 4 layer model."""

        if len(layer_dims) < 2:
            raise ShapeError("Need at least an input and output width.")

        rng = utils.make_rng(seed)
        return cls([SelfTuningLayer.init(fan_in, fan_out, q, rng)
                    for fan_in, fan_out in zip(layer_dims, layer_dims[1:])])

    @property
    def num_layers(self) -> int:
        return len(self.layers)

    @property
    def layer_dims(self) -> Tuple[int, ...]:
        return tuple([self.layers[0].in_dim] +
                     [layer.out_dim for layer in self.layers])

    @property
    def q(self) -> int:
        return self.layers[0].q

    def arrays(self) -> Dict[str, np.ndarray]:
        """Every parameter array, by 'layer<i>.<kind>'. These are the live
        arrays, not copies."""

        out = {}
        for i, layer in enumerate(self.layers):
            for kind in PARAM_KINDS:
                out['layer{}.{}'.format(i, kind)] = getattr(layer, kind)
        return out

    @staticmethod
    def names_of(num_layers: int, kinds: Sequence[str]) -> List[str]:
        """Parameter names of the given kinds, across all layers."""

        return ['layer{}.{}'.format(i, kind)
                for i in range(num_layers) for kind in kinds]

    @classmethod
    def from_arrays(cls, arrays: Mapping[str, np.ndarray]) -> 'ModelParams':
        layers = []
        i = 0
        while 'layer{}.W'.format(i) in arrays:
            try:
                layers.append(SelfTuningLayer(
                    **{kind: np.array(arrays['layer{}.{}'.format(i, kind)])
                       for kind in PARAM_KINDS}))
            except KeyError as err:
                raise CheckpointError(
                    "Missing parameter array {}".format(err))
            i += 1
        return cls(layers)

    def sq_norm(self) -> float:
        """Squared L2 norm of the elementary parameters (W and b)."""

        return float(sum(np.sum(layer.W*layer.W) + np.sum(layer.b*layer.b)
                         for layer in self.layers))

    def checksum(self) -> str:
        return utils.checksum(self.arrays().values())

    def copy(self) -> 'ModelParams':
        return ModelParams([layer.copy() for layer in self.layers])


class LayerCache:
    """Everything the backward pass needs about one layer."""

    __slots__ = ('inputs', 'w_hat', 'b_hat', 'pre', 'activation',
                 'rate', 'noise', 'drop')

    def __init__(self, inputs, w_hat, b_hat, pre):
        self.inputs = inputs
        self.w_hat = w_hat
        self.b_hat = b_hat
        self.pre = pre
        self.activation = None
        self.rate = 0.0
        self.noise = None
        self.drop = None


class ForwardTrace:
    """The cached forward state of one pass.

    The loss fields are filled in by loss_nll.
    """

    def __init__(self, params: ModelParams, adj: NormalizedAdjacency,
                 lam, mode: str, seed: int):
        self.params = params
        self.adj = adj
        self.lam = lam
        self.cond = _conditioning(lam)
        self.mode = mode
        self.seed = seed
        self.layer_dims = params.layer_dims
        self.layers = []  # type: List[LayerCache]
        self.logits = None

        self.loss = None
        self.dlogits = None
        self.weight_decay = 0.0


def _concrete_keep(rate: float, noise: np.ndarray) -> np.ndarray:
    """The relaxed drop indicator z; the keep mask is 1 - z."""

    eps = CONCRETE_EPS
    logit = (np.log(rate + eps) - np.log(1.0 - rate + eps) +
             np.log(noise + eps) - np.log(1.0 - noise + eps))
    return 1.0 / (1.0 + np.exp(-logit / CONCRETE_TEMPERATURE))


def forward(params: ModelParams, adj: NormalizedAdjacency, features,
            lam: HyperVector, mode: str = EVAL,
            seed: int = 0) -> Tuple[np.ndarray, ForwardTrace]:
    """Run the model over the whole graph.

    :param params:
    :param adj: The normalized adjacency to propagate over. In train mode
        with a non-zero edge drop rate this must be a dropped adjacency.
    :param features: N x F node features.
    :param lam: Hyperparameters; dropout rates come from here.
    :param mode: 'train' (relaxed dropout) or 'eval' (no dropout).
    :param seed: Seed for the dropout noise.
    :returns: The N x C logits and the trace for the backward pass.
    :raises NumericError: On non-finite activations.
    """

    if mode not in (TRAIN, EVAL):
        raise ValueError("Invalid forward mode '{}'".format(mode))

    features = np.asarray(features, dtype=np.float64)
    if features.shape != (adj.matrix.shape[0], params.layer_dims[0]):
        raise ShapeError("Features have shape {}, expected ({}, {})."
                         .format(features.shape, adj.matrix.shape[0],
                                 params.layer_dims[0]))

    rates = lam.dropout_rates
    if len(rates) != params.num_layers - 1:
        raise ShapeError("Got {} dropout rates for a {} layer model."
                         .format(len(rates), params.num_layers))

    if mode == TRAIN and lam.edge_drop > 0 and not adj.dropped:
        raise DropRateError(
            "Training with edge drop rate {} needs an edge-dropped "
            "adjacency.".format(lam.edge_drop))

    trace = ForwardTrace(params, adj, lam, mode, seed)
    rng = utils.make_rng(seed) if mode == TRAIN else None

    hidden = features
    last = params.num_layers - 1
    for i, layer in enumerate(params.layers):
        w_hat, b_hat = effective_params(layer, trace.cond)
        pre = adj @ (hidden @ w_hat) + b_hat
        if not np.isfinite(pre).all():
            raise NumericError("Non-finite activations", layer=i)

        cache = LayerCache(hidden, w_hat, b_hat, pre)
        trace.layers.append(cache)

        if i == last:
            hidden = pre
            break

        act = np.maximum(pre, 0.0)
        cache.activation = act
        rate = float(rates[i])
        cache.rate = rate

        if mode == TRAIN and rate > 0.0:
            noise = rng.random(act.shape)
            drop = _concrete_keep(rate, noise)
            cache.noise = noise
            cache.drop = drop
            hidden = act * (1.0 - drop) / (1.0 - rate)
        else:
            hidden = act

    trace.logits = hidden
    return hidden, trace


def _mask_index(mask) -> np.ndarray:
    mask = np.asarray(mask)
    if mask.dtype == bool:
        return np.flatnonzero(mask)
    return mask.astype(np.int64)


def predict_proba(logits: np.ndarray) -> np.ndarray:
    """Row-wise softmax."""

    shifted = logits - logits.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=1, keepdims=True)


def loss_nll(logits: np.ndarray, labels, mask, weight_decay: float = 0.0,
             params: ModelParams = None, trace: ForwardTrace = None) -> float:
    """Mean softmax cross entropy over the masked nodes, plus
    ``weight_decay * ||W, b||^2`` over every layer.

    :param logits: N x C logits.
    :param labels: N class indices.
    :param mask: Boolean node mask or index array.
    :param weight_decay: The decay coefficient. Zero for validation losses.
    :param params: Needed when weight_decay is non-zero.
    :param trace: When given, the loss gradient is recorded on it for the
        backward pass.
    :raises LossError: On an empty mask or out of range labels.
    """

    idx = _mask_index(mask)
    if not len(idx):
        raise LossError("Cannot compute a loss over an empty node mask.")

    num_classes = logits.shape[1]
    targets = np.asarray(labels)[idx]
    if targets.min() < 0 or targets.max() >= num_classes:
        raise LossError("Labels must be in [0, {}), got range [{}, {}]."
                        .format(num_classes, targets.min(), targets.max()))

    rows = logits[idx]
    shifted = rows - rows.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(shifted).sum(axis=1))
    log_probs = shifted - log_norm[:, None]
    picked = np.arange(len(idx))
    loss = -float(np.mean(log_probs[picked, targets]))

    if weight_decay:
        if params is None:
            raise LossError("Weight decay requires the model parameters.")
        loss += weight_decay * params.sq_norm()

    if not np.isfinite(loss):
        raise NumericError("Non-finite loss", layer='loss')

    if trace is not None:
        probs = np.exp(log_probs)
        probs[picked, targets] -= 1.0
        dlogits = np.zeros_like(logits)
        dlogits[idx] = probs / len(idx)

        trace.dlogits = dlogits
        trace.loss = loss
        trace.weight_decay = float(weight_decay)

    return loss


class Gradients:
    """Gradients of a traced loss.

    :ivar dict params: d loss / d parameter array, by parameter name.
    :ivar np.ndarray lam: Direct d loss / d constrained hyperparameters,
        through the relaxed dropout and the weight decay term.
    :ivar np.ndarray conditioning: d loss / d hypernet conditioning vector.
    """

    def __init__(self, params: Dict[str, np.ndarray], lam: np.ndarray,
                 conditioning: np.ndarray):
        self.params = params
        self.lam = lam
        self.conditioning = conditioning

    def wrt_u(self, hyper: HyperVector, dropout: bool = True) -> np.ndarray:
        """Chain the hyperparameter gradients back to unconstrained space.

        :param hyper: The vector the trace was computed with.
        :param dropout: Include the relaxed dropout path.
        """

        lam_grad = self.lam.copy()
        if not dropout:
            lam_grad[hyper.space.dropout_indices] = 0.0

        return (lam_grad * constrain_grad(hyper.u, hyper.space) +
                self.conditioning / hyper.space.u_scale)


def backward(trace: ForwardTrace, params: ModelParams) -> Gradients:
    """Exact reverse mode gradients of the traced loss with respect to every
    parameter array and the hyperparameters.

    :raises TraceError: When the trace has no loss, or belongs to other
        parameters.
    """

    if trace.dlogits is None:
        raise TraceError("The trace has no loss; call loss_nll with the "
                         "trace first.")
    if trace.params is not params or trace.layer_dims != params.layer_dims:
        raise TraceError("The trace was produced by different parameters.")

    lam = trace.lam
    space = lam.space
    dropout_idx = space.dropout_indices

    grads = {}
    lam_grad = np.zeros(space.q)
    cond_grad = np.zeros(space.q)
    cond = trace.cond
    decay = trace.weight_decay
    matrix_t = trace.adj.matrix.T

    upstream = trace.dlogits
    for i in reversed(range(params.num_layers)):
        layer = params.layers[i]
        cache = trace.layers[i]

        if i == params.num_layers - 1:
            dpre = upstream
        else:
            dact = upstream
            if cache.drop is not None:
                rate = cache.rate
                keep = 1.0 - cache.drop
                dact = upstream * keep / (1.0 - rate)

                eps = CONCRETE_EPS
                dlogit = 1.0/(rate + eps) + 1.0/(1.0 - rate + eps)
                dkeep = (-cache.drop * (1.0 - cache.drop) /
                         CONCRETE_TEMPERATURE * dlogit)
                dout = (dkeep / (1.0 - rate) +
                        keep / (1.0 - rate)**2)
                lam_grad[dropout_idx[i]] += float(
                    np.sum(upstream * cache.activation * dout))

            dpre = dact * (cache.pre > 0)

        db_hat = dpre.sum(axis=0)
        prop = matrix_t @ dpre
        dw_hat = cache.inputs.T @ prop
        upstream = prop @ cache.w_hat.T

        cond_w = layer.e_W @ cond
        cond_b = layer.e_b @ cond

        dcond_w = np.sum(dw_hat * layer.W_lam, axis=0)
        dcond_b = db_hat * layer.b_lam

        prefix = 'layer{}.'.format(i)
        grads[prefix + 'W'] = dw_hat + 2.0 * decay * layer.W
        grads[prefix + 'b'] = db_hat + 2.0 * decay * layer.b
        grads[prefix + 'W_lam'] = dw_hat * cond_w[None, :]
        grads[prefix + 'b_lam'] = db_hat * cond_b
        grads[prefix + 'e_W'] = np.outer(dcond_w, cond)
        grads[prefix + 'e_b'] = np.outer(dcond_b, cond)

        cond_grad += layer.e_W.T @ dcond_w + layer.e_b.T @ dcond_b

    lam_grad[space.decay_index] += params.sq_norm() if decay else 0.0

    ordered = {name: grads[name] for name in params.arrays()}
    return Gradients(ordered, lam_grad, cond_grad)


class AdamState:
    """First and second moment estimates, by parameter name."""

    def __init__(self, m: Dict[str, np.ndarray], v: Dict[str, np.ndarray],
                 step: int = 0):
        self.m = m
        self.v = v
        self.step = step

    @classmethod
    def for_params(cls, arrays: Mapping[str, np.ndarray]) -> 'AdamState':
        return cls({name: np.zeros_like(arr) for name, arr in arrays.items()},
                   {name: np.zeros_like(arr) for name, arr in arrays.items()})

    def copy(self) -> 'AdamState':
        return AdamState({k: a.copy() for k, a in self.m.items()},
                         {k: a.copy() for k, a in self.v.items()},
                         self.step)

    def to_arrays(self, prefix: str) -> Dict[str, np.ndarray]:
        out = {'{}step'.format(prefix): np.array(self.step)}
        for name, arr in self.m.items():
            out['{}m.{}'.format(prefix, name)] = arr
        for name, arr in self.v.items():
            out['{}v.{}'.format(prefix, name)] = arr
        return out

    @classmethod
    def from_arrays(cls, arrays: Mapping[str, np.ndarray],
                    prefix: str) -> 'AdamState':
        m_pre = prefix + 'm.'
        v_pre = prefix + 'v.'
        try:
            step = int(arrays[prefix + 'step'])
        except KeyError:
            raise CheckpointError("Missing optimizer state '{}'"
                                  .format(prefix))
        return cls(
            {k[len(m_pre):]: np.array(a) for k, a in arrays.items()
             if k.startswith(m_pre)},
            {k[len(v_pre):]: np.array(a) for k, a in arrays.items()
             if k.startswith(v_pre)},
            step)


def adam_step(params: Mapping[str, np.ndarray],
              grads: Mapping[str, np.ndarray],
              state: AdamState, lr: float, frozen=(),
              betas: Tuple[float, float] = ADAM_BETAS,
              eps: float = ADAM_EPS) -> Mapping[str, np.ndarray]:
    """Apply one Adam update, in place.

    :param params: Arrays to update, by name.
    :param grads: Gradients, by the same names.
    :param state: Moment estimates; updated in place.
    :param lr: Learning rate.
    :param frozen: Names of parameters to leave untouched.
    :raises NumericError: If any gradient is non-finite. Nothing is updated
        in that case.
    :raises ShapeError: If the state doesn't match the parameters.
    """

    names = [name for name in params if name not in frozen]

    for name in names:
        if name not in grads or name not in state.m:
            raise ShapeError("No gradient or optimizer state for '{}'"
                             .format(name))
        if state.m[name].shape != params[name].shape:
            raise ShapeError("Optimizer state for '{}' has shape {}, "
                             "expected {}".format(name, state.m[name].shape,
                                                  params[name].shape))
        if not np.isfinite(grads[name]).all():
            raise NumericError("Non-finite gradient", layer=name)

    beta1, beta2 = betas
    state.step += 1
    bias1 = 1.0 - beta1 ** state.step
    bias2 = 1.0 - beta2 ** state.step

    for name in names:
        grad = grads[name]
        m = state.m[name]
        v = state.v[name]
        m *= beta1
        m += (1.0 - beta1) * grad
        v *= beta2
        v += (1.0 - beta2) * grad * grad

        params[name] -= lr * (m / bias1) / (np.sqrt(v / bias2) + eps)

    return params


def save_checkpoint(path: Union[str, Path],
                    arrays: Mapping[str, np.ndarray]):
    """Write named arrays to a versioned .npz checkpoint, atomically."""

    path = Path(path)
    tmp_path = path.with_name(path.name + '.tmp')
    payload = dict(arrays)
    payload['__format__'] = np.array(CHECKPOINT_FORMAT)

    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with tmp_path.open('wb') as file:
            np.savez(file, **payload)
        os.replace(str(tmp_path), str(path))
    except OSError as err:
        raise CheckpointError("Could not write checkpoint '{}': {}"
                              .format(path, err))


def load_checkpoint(path: Union[str, Path]) -> Dict[str, np.ndarray]:
    """Read a checkpoint written by save_checkpoint.

    :raises CheckpointError: For missing files, bad formats or versions.
    """

    path = Path(path)
    try:
        with np.load(str(path), allow_pickle=False) as data:
            arrays = {name: data[name] for name in data.files}
    except (OSError, ValueError) as err:
        raise CheckpointError("Could not read checkpoint '{}': {}"
                              .format(path, err))

    version = arrays.pop('__format__', None)
    if version is None or int(version) != CHECKPOINT_FORMAT:
        raise CheckpointError("Checkpoint '{}' has format {}, expected {}."
                              .format(path, version, CHECKPOINT_FORMAT))
    return arrays


def numeric_gradient(func: Callable[[], float], array: np.ndarray,
                     step: float = 1e-4) -> np.ndarray:
    """Central finite difference gradient of func() with respect to every
    entry of array. The array is perturbed in place and restored."""

    grad = np.zeros_like(array)
    flat = array.reshape(-1)
    out = grad.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + step
        upper = func()
        flat[i] = orig - step
        lower = func()
        flat[i] = orig
        out[i] = (upper - lower) / (2 * step)
    return grad


def relative_error(analytic, numeric, floor: float = 1e-6) -> np.ndarray:
    """Elementwise |a - n| / max(|a|, |n|, floor)."""

    analytic = np.asarray(analytic)
    numeric = np.asarray(numeric)
    scale = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), floor)
    return np.abs(analytic - numeric) / scale
