"""The alternating training loop: model epochs update the network on the
training split, hyper epochs update the hyperparameter distribution on the
validation split.

A TrainState is one complete, self-contained trainee: model parameters,
the hyperparameter distribution, optimizer moments, and its own root
seed. All randomness in an epoch comes from seeds derived from
(root seed, stream, epoch, attempt), so a run is exactly reproducible. ::

    settings = TrainSettings(num_layers=4, max_epochs=400)
    state = new_state(graph, settings, seed=42)
    history = alternate_loop(state, graph)
"""

import logging
import math
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from gcntune import graph as graph_mod
from gcntune import hyper
from gcntune import nn
from gcntune import utils
from gcntune.graph import Graph
from gcntune.hyper import HyperDistribution, HyperSpace, HyperVector

LOGGER = logging.getLogger(__name__)

MODEL_PHASE = 'M'
HYPER_PHASE = 'H'

HISTORY_COLUMNS = ('epoch', 'phase', 'train_loss', 'val_loss', 'val_acc',
                   'test_acc')


class TrainingAborted(RuntimeError):
    """Raised when an agent diverges twice in a row."""

    def __init__(self, msg, epoch=None):
        self.epoch = epoch
        super().__init__(msg)


class TrainSettings:
    """Everything that controls how a state trains. The defaults are the
    citation benchmark defaults."""

    # pylint: disable=too-many-instance-attributes,too-many-arguments
    def __init__(self, num_layers: int = 4, hidden: int = 128,
                 lr_theta: float = 0.0005, lr_lambda: float = 0.01,
                 lr_eps: float = 0.01, tau: float = 0.001,
                 schedule: Tuple[int, int] = (2, 1),
                 max_epochs: int = 400,
                 init_dropout: float = 0.1,
                 init_edge_drop: float = 0.1,
                 init_weight_decay: float = 5e-4,
                 init_sigma: float = 0.5,
                 sigma_min: float = hyper.SIGMA_MIN,
                 sigma_max: float = hyper.SIGMA_MAX,
                 hyper_training: bool = True,
                 self_tuning: bool = True,
                 dropout_hypergrad: bool = True):

        if num_layers < 2:
            raise ValueError("num_layers must be at least 2, got {}"
                             .format(num_layers))
        if hidden < 1:
            raise ValueError("hidden must be positive, got {}".format(hidden))
        for name, val in (('lr_theta', lr_theta), ('lr_lambda', lr_lambda),
                          ('lr_eps', lr_eps), ('tau', tau)):
            if val < 0 or not math.isfinite(val):
                raise ValueError("{} must be a non-negative number, got {}"
                                 .format(name, val))

        schedule = tuple(schedule)
        if len(schedule) != 2 or min(schedule) < 1:
            raise ValueError("The schedule needs two counts of at least 1, "
                             "got {}".format(schedule))
        if max_epochs < 0:
            raise ValueError("max_epochs must be non-negative")

        self.num_layers = int(num_layers)
        self.hidden = int(hidden)
        self.lr_theta = float(lr_theta)
        self.lr_lambda = float(lr_lambda)
        self.lr_eps = float(lr_eps)
        self.tau = float(tau)
        self.schedule = (int(schedule[0]), int(schedule[1]))
        self.max_epochs = int(max_epochs)
        self.init_dropout = float(init_dropout)
        self.init_edge_drop = float(init_edge_drop)
        self.init_weight_decay = float(init_weight_decay)
        self.init_sigma = float(init_sigma)
        self.sigma_min = float(sigma_min)
        self.sigma_max = float(sigma_max)
        self.hyper_training = bool(hyper_training)
        self.self_tuning = bool(self_tuning)
        self.dropout_hypergrad = bool(dropout_hypergrad)

    def init_lam(self, space: HyperSpace) -> np.ndarray:
        """The starting constrained hyperparameters."""

        lam = np.empty(space.q)
        lam[space.dropout_indices] = self.init_dropout
        lam[space.edge_index] = self.init_edge_drop
        lam[space.decay_index] = self.init_weight_decay
        return lam

    def copy(self, **overrides) -> 'TrainSettings':
        values = dict(self.__dict__)
        values.update(overrides)
        return TrainSettings(**values)

    def __repr__(self):
        return 'TrainSettings({})'.format(
            ', '.join('{}={}'.format(k, v) for k, v in self.__dict__.items()))


class History:
    """Per-epoch metrics for one state, plus best epoch tracking.

    Rows are dicts keyed by HISTORY_COLUMNS plus the hyperparameter names.
    Rows for hyper epochs have train_loss set to None.
    """

    def __init__(self, hyper_names: Sequence[str]):
        self.hyper_names = list(hyper_names)
        self.rows = []  # type: List[dict]
        self.best_val_acc = -1.0
        self.best_epoch = None
        self.test_at_best = None

    @property
    def columns(self) -> List[str]:
        return list(HISTORY_COLUMNS) + self.hyper_names

    def append(self, row: dict):
        self.rows.append(row)
        if row['val_acc'] > self.best_val_acc:
            self.best_val_acc = row['val_acc']
            self.best_epoch = row['epoch']
            self.test_at_best = row['test_acc']

    def extend(self, other: 'History'):
        for row in other.rows:
            self.append(row)

    def column(self, name: str) -> List:
        return [row[name] for row in self.rows]

    @property
    def phases(self) -> List[str]:
        return self.column('phase')

    def series(self) -> List[dict]:
        """The per-epoch validation series (epoch, val_acc, val_loss)."""
        return [{'epoch': row['epoch'], 'val_acc': row['val_acc'],
                 'val_loss': row['val_loss']} for row in self.rows]

    def __len__(self):
        return len(self.rows)

    def __eq__(self, other):
        return isinstance(other, History) and self.rows == other.rows


class TrainState:
    """The complete training state of one agent.

    :ivar ModelParams params:
    :ivar HyperDistribution dist:
    :ivar HyperSpace space:
    :ivar TrainSettings settings:
    :ivar int seed: Root seed; every random stream derives from it.
    :ivar int epoch: Completed epochs.
    :ivar HyperVector fixed_hyper: When set, hyperparameters are this point
        value instead of samples from dist.
    :ivar frozenset frozen: Parameter names Adam never updates.
    """

    def __init__(self, params: nn.ModelParams, dist: HyperDistribution,
                 space: HyperSpace, settings: TrainSettings, seed: int,
                 fixed_hyper: HyperVector = None):
        self.params = params
        self.dist = dist
        self.space = space
        self.settings = settings
        self.seed = int(seed)
        self.fixed_hyper = fixed_hyper
        self.epoch = 0

        self.theta_adam = nn.AdamState.for_params(params.arrays())
        self.mu_adam = nn.AdamState.for_params({'mu': dist.mu})
        self.sigma_adam = nn.AdamState.for_params({'sigma': dist.sigma})

        if fixed_hyper is not None or not settings.self_tuning:
            self.frozen = frozenset(
                nn.ModelParams.names_of(params.num_layers,
                                        nn.HYPERNET_KINDS))
        else:
            self.frozen = frozenset()

        self.history = History(space.names)

    @property
    def hyper_training(self) -> bool:
        return self.settings.hyper_training and self.fixed_hyper is None

    def center(self) -> HyperVector:
        """The hyperparameters used for evaluation."""

        if self.fixed_hyper is not None:
            return self.fixed_hyper
        return self.dist.center(self.space)

    def phase(self, epoch: int = None) -> str:
        """The phase of the given (zero based) epoch."""

        epoch = self.epoch if epoch is None else epoch
        if not self.hyper_training:
            return MODEL_PHASE

        t_trn, t_val = self.settings.schedule
        return MODEL_PHASE if epoch % (t_trn + t_val) < t_trn else HYPER_PHASE

    def snapshot(self) -> dict:
        """Deep copy of everything an epoch can change."""

        return {
            'params': self.params.copy(),
            'dist': self.dist.copy(),
            'theta_adam': self.theta_adam.copy(),
            'mu_adam': self.mu_adam.copy(),
            'sigma_adam': self.sigma_adam.copy(),
            'epoch': self.epoch,
        }

    def restore(self, snap: dict):
        """Restore from a snapshot. The snapshot itself stays untouched, so
        it can be restored again."""

        self.params = snap['params'].copy()
        self.dist = snap['dist'].copy()
        self.theta_adam = snap['theta_adam'].copy()
        self.mu_adam = snap['mu_adam'].copy()
        self.sigma_adam = snap['sigma_adam'].copy()
        self.epoch = snap['epoch']

    def copy_from(self, other: 'TrainState'):
        """Take the parameters, distribution and optimizer state of another
        state. Seed, epoch counter and history are kept."""

        snap = other.snapshot()
        snap['epoch'] = self.epoch
        self.restore(snap)
        self.fixed_hyper = other.fixed_hyper

    def to_arrays(self) -> Dict[str, np.ndarray]:
        """Flatten into named arrays for a checkpoint."""

        arrays = {'params.' + name: arr
                  for name, arr in self.params.arrays().items()}
        arrays['dist.mu'] = self.dist.mu
        arrays['dist.sigma'] = self.dist.sigma
        arrays.update(self.theta_adam.to_arrays('adam.theta.'))
        arrays.update(self.mu_adam.to_arrays('adam.mu.'))
        arrays.update(self.sigma_adam.to_arrays('adam.sigma.'))
        arrays['epoch'] = np.array(self.epoch)
        arrays['seed'] = np.array(self.seed, dtype=np.uint64)
        return arrays

    def load_arrays(self, arrays: Dict[str, np.ndarray]):
        """Restore from checkpoint arrays produced by to_arrays."""

        params = nn.ModelParams.from_arrays(
            {name[len('params.'):]: arr for name, arr in arrays.items()
             if name.startswith('params.')})
        if params.layer_dims != self.params.layer_dims:
            raise nn.CheckpointError(
                "Checkpoint has layer widths {}, expected {}"
                .format(params.layer_dims, self.params.layer_dims))

        try:
            self.dist = self.dist.clamped(mu=arrays['dist.mu'],
                                          sigma=arrays['dist.sigma'])
            self.epoch = int(arrays['epoch'])
        except KeyError as err:
            raise nn.CheckpointError("Checkpoint is missing {}".format(err))

        self.params = params
        self.theta_adam = nn.AdamState.from_arrays(arrays, 'adam.theta.')
        self.mu_adam = nn.AdamState.from_arrays(arrays, 'adam.mu.')
        self.sigma_adam = nn.AdamState.from_arrays(arrays, 'adam.sigma.')

    def checksum(self) -> str:
        return self.params.checksum()

    def __repr__(self):
        return 'TrainState(seed={}, epoch={}, {})'.format(
            self.seed, self.epoch, self.dist.describe(self.space))


def layer_dims(graph: Graph, settings: TrainSettings) -> Tuple[int, ...]:
    """(F, hidden, ..., hidden, C) for the graph and settings."""

    return tuple([graph.num_features] +
                 [settings.hidden] * (settings.num_layers - 1) +
                 [graph.num_classes])


def new_state(graph: Graph, settings: TrainSettings, seed: int,
              fixed_lam=None) -> TrainState:
    """Create a fresh state.

    :param graph: Used for the input and output widths.
    :param settings:
    :param seed: The state's root seed.
    :param fixed_lam: Constrained point hyperparameters. When given, the
        state trains a plain GCN (hypernet frozen at zero embeddings) with
        these hyperparameters and never runs hyper epochs.
    """

    space = HyperSpace.for_layers(settings.num_layers)
    params = nn.ModelParams.init(layer_dims(graph, settings), space.q,
                                 utils.derive_seed(seed, 'init'))

    fixed = None
    if fixed_lam is not None:
        fixed = HyperVector.fixed(space, fixed_lam)
        init_lam = fixed.lam
    else:
        init_lam = settings.init_lam(space)

    dist = hyper.initial_distribution(
        space, init_lam, settings.init_sigma,
        sigma_min=settings.sigma_min, sigma_max=settings.sigma_max)

    return TrainState(params, dist, space, settings, seed, fixed_hyper=fixed)


def _draw(state: TrainState, attempt: int) \
        -> Tuple[HyperVector, Optional[np.ndarray]]:
    if state.fixed_hyper is not None:
        return state.fixed_hyper, None

    seed = utils.derive_seed(state.seed, 'hyper', state.epoch, attempt)
    return hyper.sample(state.dist, state.space, seed)


def _train_adjacency(state: TrainState, graph: Graph, lam: HyperVector,
                     attempt: int) -> graph_mod.NormalizedAdjacency:
    rate = lam.edge_drop
    if rate <= 0.0:
        return graph.normalized()

    seed = utils.derive_seed(state.seed, 'data', state.epoch, attempt)
    return graph_mod.drop_edge(graph, rate, seed)


def _train_forward(state: TrainState, graph: Graph, lam: HyperVector,
                   attempt: int):
    adj = _train_adjacency(state, graph, lam, attempt)
    seed = utils.derive_seed(state.seed, 'dropout', state.epoch, attempt)
    return nn.forward(state.params, adj, graph.features, lam, mode=nn.TRAIN,
                      seed=seed)


def model_training_epoch(state: TrainState, graph: Graph,
                         attempt: int = 0) -> float:
    """Sample hyperparameters, then take one Adam step on the training loss
    for every unfrozen model parameter. The distribution is not touched.

    :returns: The training loss (with weight decay).
    """

    lam, _ = _draw(state, attempt)
    logits, trace = _train_forward(state, graph, lam, attempt)
    loss = nn.loss_nll(logits, graph.labels, graph.mask('train'),
                       weight_decay=lam.weight_decay, params=state.params,
                       trace=trace)
    grads = nn.backward(trace, state.params)

    nn.adam_step(state.params.arrays(), grads.params, state.theta_adam,
                 state.settings.lr_theta, frozen=state.frozen)
    return loss


def hyper_objective(state: TrainState, graph: Graph, noise: np.ndarray,
                    adj: graph_mod.NormalizedAdjacency, seed: int) -> dict:
    """The hyper training objective at ``u = mu + sigma * noise``: the
    validation NLL (no weight decay) minus tau times the entropy, with its
    gradients with respect to the distribution centers and widths.

    The noise, adjacency and dropout seed are held fixed, so this is a
    deterministic function of (mu, sigma).

    :returns: A dict of 'val_loss', 'objective', 'grad_mu' and 'grad_sigma'.
    """

    settings = state.settings
    dist = state.dist
    lam = HyperVector(dist.mu + dist.sigma * noise, state.space)

    logits, trace = nn.forward(state.params, adj, graph.features, lam,
                               mode=nn.TRAIN, seed=seed)
    loss = nn.loss_nll(logits, graph.labels, graph.mask('val'), trace=trace)
    grads = nn.backward(trace, state.params)

    grad_u = grads.wrt_u(lam, dropout=settings.dropout_hypergrad)
    return {
        'val_loss': loss,
        'objective': loss - settings.tau * hyper.entropy(dist),
        'grad_mu': grad_u,
        'grad_sigma': grad_u * noise - settings.tau * hyper.entropy_grad(dist),
    }


def hyper_training_epoch(state: TrainState, graph: Graph,
                         attempt: int = 0) -> float:
    """Sample hyperparameters with recorded noise, compute the validation
    loss (no weight decay) minus the entropy bonus, and take one Adam step
    on the distribution centers and widths. Model parameters are not
    touched.

    :returns: The validation NLL of the sampled pass.
    """

    if state.fixed_hyper is not None:
        raise hyper.HyperError("States with fixed hyperparameters have no "
                               "distribution to train.")

    settings = state.settings
    lam, noise = _draw(state, attempt)
    adj = _train_adjacency(state, graph, lam, attempt)
    result = hyper_objective(
        state, graph, noise, adj,
        utils.derive_seed(state.seed, 'dropout', state.epoch, attempt))
    grad_mu = result['grad_mu']
    grad_sigma = result['grad_sigma']

    mu = {'mu': state.dist.mu.copy()}
    sigma = {'sigma': state.dist.sigma.copy()}
    nn.adam_step(mu, {'mu': grad_mu}, state.mu_adam, settings.lr_lambda)
    nn.adam_step(sigma, {'sigma': grad_sigma}, state.sigma_adam,
                 settings.lr_eps)

    dist = state.dist.clamped(mu=mu['mu'], sigma=sigma['sigma'])
    if (dist.sigma != sigma['sigma']).any():
        LOGGER.debug("Distribution width clamped at epoch %d", state.epoch)
    state.dist = dist

    return result['val_loss']


def accuracy(logits: np.ndarray, labels: np.ndarray, mask) -> float:
    """Fraction of masked nodes whose argmax logit is their label.

    :raises LossError: On an empty mask.
    """

    idx = np.flatnonzero(np.asarray(mask))
    if not len(idx):
        raise nn.LossError("Cannot compute accuracy over an empty mask.")
    return float(np.mean(logits[idx].argmax(axis=1) == labels[idx]))


def eval_logits(params: nn.ModelParams, lam: HyperVector,
                graph: Graph) -> np.ndarray:
    """Deterministic eval mode logits over the full normalized adjacency."""

    logits, _ = nn.forward(params, graph.normalized(), graph.features, lam,
                           mode=nn.EVAL)
    return logits


def evaluate(params: nn.ModelParams, dist: HyperDistribution, graph: Graph,
             mask_kind: str, lam: HyperVector = None) -> float:
    """Accuracy on the given split, with hyperparameters at the distribution
    center (or the given point value).
    """

    if lam is None:
        lam = dist.center(HyperSpace.for_layers(params.num_layers))
    logits = eval_logits(params, lam, graph)
    return accuracy(logits, graph.labels, graph.mask(mask_kind))


def evaluate_state(state: TrainState, graph: Graph) -> dict:
    """One eval pass giving validation loss and accuracy, plus test accuracy
    when there's a test split."""

    lam = state.center()
    logits = eval_logits(state.params, lam, graph)

    result = {
        'val_loss': nn.loss_nll(logits, graph.labels, graph.mask('val')),
        'val_acc': accuracy(logits, graph.labels, graph.mask('val')),
        'test_acc': None,
    }
    if not np.isfinite(result['val_loss']):
        raise nn.NumericError("Non-finite validation loss", layer='eval')
    if graph.mask('test').any():
        result['test_acc'] = accuracy(logits, graph.labels,
                                      graph.mask('test'))
    return result


def run_epoch(state: TrainState, graph: Graph) -> dict:
    """Run one epoch of whichever phase is due, with divergence recovery,
    then evaluate and record a history row.

    On a non-finite loss, activation or gradient, in the training step or
    in the evaluation after it, the state is rolled back and the epoch
    retried with fresh samples. A second failure aborts.

    :raises TrainingAborted:
    """

    phase = state.phase()
    step = model_training_epoch if phase == MODEL_PHASE else \
        hyper_training_epoch

    snap = state.snapshot()
    for attempt in range(2):
        try:
            loss = step(state, graph, attempt=attempt)
            metrics = evaluate_state(state, graph)
            break
        except nn.NumericError as err:
            state.restore(snap)
            if attempt:
                raise TrainingAborted(
                    "Training diverged twice at epoch {} (seed {}): {}"
                    .format(state.epoch, state.seed, err),
                    epoch=state.epoch)
            LOGGER.warning("Divergence at epoch %d (seed %d): %s. Rolling "
                           "back and resampling.", state.epoch, state.seed,
                           err)

    state.epoch += 1

    row = {
        'epoch': state.epoch,
        'phase': phase,
        'train_loss': loss if phase == MODEL_PHASE else None,
        'val_loss': metrics['val_loss'],
        'val_acc': metrics['val_acc'],
        'test_acc': metrics['test_acc'],
    }
    row.update(state.center().as_dict())
    state.history.append(row)

    LOGGER.debug("epoch %d %s loss=%.5f val_acc=%.4f", state.epoch, phase,
                 loss, metrics['val_acc'])
    return row


def alternate_loop(state: TrainState, graph: Graph,
                   schedule: Tuple[int, int] = None,
                   max_epochs: int = None,
                   on_epoch: Callable[[dict], None] = None) -> History:
    """Alternate model and hyper epochs until the state has completed
    max_epochs epochs in total.

    :param state:
    :param graph:
    :param schedule: (model epochs, hyper epochs) per cycle. Defaults to the
        settings' schedule.
    :param max_epochs: Total epochs. Defaults to the settings' value.
    :param on_epoch: Called with each new history row.
    :returns: The history rows produced by this call.
    """

    if schedule is not None:
        state.settings = state.settings.copy(schedule=schedule)
    if max_epochs is None:
        max_epochs = state.settings.max_epochs

    history = History(state.space.names)
    while state.epoch < max_epochs:
        row = run_epoch(state, graph)
        history.append(row)
        if on_epoch is not None:
            on_epoch(row)

    LOGGER.info("Trained seed %d to epoch %d: best val acc %.4f at epoch %s",
                state.seed, state.epoch, state.history.best_val_acc,
                state.history.best_epoch)
    return history


def train_epochs(state: TrainState, graph: Graph, epochs: int,
                 on_epoch: Callable[[dict], None] = None) -> History:
    """Train the given number of additional epochs."""

    return alternate_loop(state, graph, max_epochs=state.epoch + epochs,
                          on_epoch=on_epoch)
