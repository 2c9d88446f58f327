"""Fixed hyperparameter baselines: random search, Hyperband and plain
population based training.

Every baseline trains plain GCNs through the same model code as the
self-tuning methods; a plain GCN is just a trainer state with point
hyperparameters and a frozen, zero-embedding hypernet.
"""

import logging
import math
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from gcntune import pbt
from gcntune import trainer
from gcntune import utils
from gcntune.graph import Graph
from gcntune.hyper import HyperSpace, HyperVector, constrain
from gcntune.trainer import TrainSettings, TrainState

LOGGER = logging.getLogger(__name__)

COMPLETE = 'complete'
DEAD = 'dead'

TRIAL_COLUMNS = ('trial_id', 'bracket', 'budget')
TRIAL_RESULT_COLUMNS = ('best_val_acc', 'test_acc', 'status')


class SearchError(RuntimeError):
    """Raised for invalid search configurations."""


class Trial:
    """One fixed hyperparameter configuration and its results.

    :ivar int id:
    :ivar np.ndarray u: Unconstrained hyperparameters.
    :ivar np.ndarray lam: Constrained hyperparameters.
    :ivar int budget: Epochs this trial has been trained for.
    :ivar float best_val_acc: Best epoch validation accuracy.
    :ivar float test_acc: Test accuracy at the best validation epoch.
    :ivar str status: 'complete' or 'dead'.
    :ivar int bracket: Hyperband bracket, or None.
    """

    def __init__(self, trial_id: int, u: np.ndarray, space: HyperSpace,
                 bracket: int = None):
        self.id = trial_id
        self.u = np.asarray(u, dtype=np.float64)
        self.lam = constrain(self.u, space)
        self.space = space
        self.budget = 0
        self.best_val_acc = 0.0
        self.test_acc = None  # type: Optional[float]
        self.status = COMPLETE
        self.bracket = bracket
        self.diagnostic = None
        self.state = None  # type: Optional[TrainState]
        self.history = None  # type: Optional[trainer.History]

    def row(self) -> dict:
        row = {
            'trial_id': self.id,
            'bracket': '' if self.bracket is None else self.bracket,
            'budget': self.budget,
        }
        row.update(dict(zip(self.space.names, self.lam.tolist())))
        row['best_val_acc'] = self.best_val_acc
        row['test_acc'] = self.test_acc
        row['status'] = self.status
        return row

    def __repr__(self):
        return 'Trial({}, budget={}, acc={:.4f}, {})'.format(
            self.id, self.budget, self.best_val_acc, self.status)


class SearchResult:
    """The outcome of a baseline search.

    :ivar Trial best:
    :ivar list trials: Every trial, in id order.
    :ivar int epoch_budget: Total epochs trained over all trials.
    :ivar list brackets: Hyperband rung log rows (empty for other searches).
    """

    def __init__(self, best: Trial, trials: List[Trial], epoch_budget: int,
                 brackets: List[dict] = None):
        self.best = best
        self.trials = trials
        self.epoch_budget = epoch_budget
        self.brackets = brackets or []

    @property
    def num_trials(self) -> int:
        return len(self.trials)


def _best(trials: Sequence[Trial]) -> Trial:
    return min(trials, key=lambda trial: (-trial.best_val_acc, trial.id))


def train_trial(trial: Trial, graph: Graph, settings: TrainSettings,
                epochs: int, seed: int) -> Trial:
    """Train (or continue training) a trial's plain GCN to the given total
    budget. Diverged trials are marked dead with accuracy 0."""

    if trial.status == DEAD:
        return trial

    if trial.state is None:
        trial.state = trainer.new_state(
            graph, settings, utils.derive_seed(seed, 'trial', trial.id),
            fixed_lam=trial.lam)

    try:
        trainer.alternate_loop(trial.state, graph, max_epochs=epochs)
    except trainer.TrainingAborted as err:
        trial.status = DEAD
        trial.best_val_acc = 0.0
        trial.budget = trial.state.epoch
        trial.history = trial.state.history
        trial.diagnostic = str(err)
        LOGGER.warning("Trial %d diverged: %s", trial.id, err)
        return trial

    history = trial.state.history
    trial.history = history
    trial.budget = trial.state.epoch
    trial.best_val_acc = max(history.best_val_acc, 0.0)
    trial.test_acc = history.test_at_best
    return trial


def _train_all(trials: Sequence[Trial], graph: Graph,
               settings: TrainSettings, epochs: int, seed: int,
               workers: int):
    tasks = [(lambda trial=trial: train_trial(trial, graph, settings, epochs,
                                              seed))
             for trial in trials]
    _, errors = utils.run_threaded(tasks, workers)
    if errors:
        raise next(iter(errors.values()))


def random_search(space: HyperSpace, graph: Graph, n_trials: int,
                  budget_epochs: int, seed: int,
                  settings: TrainSettings = None,
                  workers: int = 1) -> SearchResult:
    """Train n_trials plain GCNs, each with hyperparameters drawn uniformly
    within the unconstrained bounds, for budget_epochs each.

    :raises SearchError: If n_trials < 1.
    """

    if n_trials < 1:
        raise SearchError("Random search needs at least one trial.")

    settings = _plain_settings(settings, space)
    rng = utils.make_rng(utils.derive_seed(seed, 'trial', 'draw'))
    trials = [Trial(i, space.draw_u(rng), space) for i in range(n_trials)]

    _train_all(trials, graph, settings, budget_epochs, seed, workers)
    best = _best(trials)
    # Trial states hold full models.
    for trial in trials:
        trial.state = None

    epoch_budget = sum(trial.budget for trial in trials)

    LOGGER.info("Random search: %d trials, %d epochs, best trial %d "
                "(val acc %.4f)", n_trials, epoch_budget, best.id,
                best.best_val_acc)
    return SearchResult(best, trials, epoch_budget)


def hyperband_schedule(max_budget: int, eta: int = 3) \
        -> List[List[Tuple[int, int]]]:
    """The Hyperband bracket plan: for each bracket s = s_max..0, the
    (number of configurations, budget per configuration) of every rung.

    :raises SearchError: When max_budget < eta or eta < 2.
    """

    if eta < 2:
        raise SearchError("The halving rate must be at least 2.")
    if max_budget < eta:
        raise SearchError("The max budget ({}) must be at least the halving "
                          "rate ({}).".format(max_budget, eta))

    s_max = 0
    while eta ** (s_max + 1) <= max_budget:
        s_max += 1

    brackets = []
    for s in range(s_max, -1, -1):
        num = -(-(s_max + 1) * eta ** s // (s + 1))
        rungs = []
        for i in range(s + 1):
            budget = int(round(max_budget * eta ** (i - s)))
            rungs.append((num, budget))
            num = max(1, -(-num // eta))
        brackets.append(rungs)
    return brackets


def hyperband(space: HyperSpace, graph: Graph, max_budget_epochs: int,
              eta: int = 3, seed: int = 0, settings: TrainSettings = None,
              workers: int = 1, sweeps: int = 1) -> SearchResult:
    """Hyperband over plain GCNs. Each bracket runs successive halving: all
    configurations train to the rung budget, then the top ceil(n / eta) by
    best validation accuracy (ties by trial id) continue from where they
    left off.

    :param sweeps: How many times to run the full set of brackets.
    """

    schedule = hyperband_schedule(max_budget_epochs, eta)
    settings = _plain_settings(settings, space)
    rng = utils.make_rng(utils.derive_seed(seed, 'trial', 'draw'))

    trials = []  # type: List[Trial]
    rung_log = []
    s_max = len(schedule) - 1

    for sweep in range(sweeps):
        for bracket_idx, rungs in enumerate(schedule):
            bracket = s_max - bracket_idx
            num = rungs[0][0]
            alive = [Trial(len(trials) + i, space.draw_u(rng), space,
                           bracket=bracket)
                     for i in range(num)]
            trials.extend(alive)

            for rung, (_, budget) in enumerate(rungs):
                _train_all(alive, graph, settings, budget, seed, workers)
                ranked = sorted(alive, key=lambda t: (-t.best_val_acc, t.id))

                rung_log.append({
                    'sweep': sweep, 'bracket': bracket, 'rung': rung,
                    'configs': len(alive), 'budget': budget,
                    'best_trial': ranked[0].id,
                    'best_val_acc': ranked[0].best_val_acc})

                if rung == len(rungs) - 1:
                    keep = []
                else:
                    keep = ranked[:int(math.ceil(len(alive) / eta))]
                for trial in alive:
                    if trial not in keep:
                        trial.state = None
                alive = keep

    best = _best(trials)
    epoch_budget = sum(trial.budget for trial in trials)

    LOGGER.info("Hyperband: %d sweeps, %d trials, %d epochs, best trial %d "
                "(val acc %.4f)", sweeps, len(trials), epoch_budget, best.id,
                best.best_val_acc)
    return SearchResult(best, trials, epoch_budget, brackets=rung_log)


def sweeps_for_target(max_budget: int, eta: int, target_trials: int) -> int:
    """How many Hyperband sweeps get closest to the target trial count."""

    per_sweep = sum(rungs[0][0] for rungs in hyperband_schedule(max_budget,
                                                                eta))
    return max(1, int(round(target_trials / per_sweep)))


def pbt_baseline(space: HyperSpace, graph: Graph, num_agents: int,
                 total_epochs: int, seed: int,
                 settings: TrainSettings = None,
                 pop_options: Dict = None
                 ) -> Tuple[Trial, pbt.PopulationResult]:
    """Population based training over plain, fixed hyperparameter GCNs.
    Point hyperparameters only change when explore perturbs them.

    :param pop_options: Extra Population arguments (warmup_epochs,
        step_epochs, workers, exploit_enabled, ...).
    :returns: The best agent as a Trial, and the full population result.
    :raises SearchError: When num_agents < 3.
    """

    if num_agents < 3:
        raise SearchError("Plain PBT needs at least 3 agents, got {}."
                          .format(num_agents))

    settings = _plain_settings(settings, space)
    agents = pbt.make_agents(graph, settings, num_agents, seed, plain=True)
    pop = pbt.Population(agents, seed=seed, **(pop_options or {}))
    result = pbt.run_population(pop, graph, total_epochs)

    best_state = result.best.state
    trial = Trial(result.best.id, best_state.fixed_hyper.u, space)
    trial.budget = best_state.epoch
    trial.best_val_acc = result.best.last_val_acc
    trial.test_acc = result.test_acc
    trial.state = best_state
    trial.history = best_state.history
    return trial, result


def _plain_settings(settings: Optional[TrainSettings],
                    space: HyperSpace) -> TrainSettings:
    if settings is None:
        settings = TrainSettings(num_layers=len(space.dropout_indices) + 1)
    return settings.copy(hyper_training=False, self_tuning=False)


def trial_columns(space: HyperSpace) -> List[str]:
    return list(TRIAL_COLUMNS) + space.names + list(TRIAL_RESULT_COLUMNS)


def point_hyper(trial: Trial) -> HyperVector:
    return HyperVector.fixed(trial.space, trial.lam)
