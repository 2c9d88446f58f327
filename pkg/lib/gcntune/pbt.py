"""Population based training over trainer states.

A population of agents trains in parallel in fixed size steps. Between
steps every live agent waits at a barrier; then the bottom tier copies the
complete state of a top tier agent (exploit) and perturbs its
hyperparameter distribution (explore). Barrier synchronization, with all
randomness derived from per-agent and per-step seeds, makes a population
run reproducible regardless of the number of workers.
"""

import logging
import math
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

from gcntune import hyper
from gcntune import nn
from gcntune import trainer
from gcntune import utils
from gcntune.graph import Graph
from gcntune.hyper import HyperVector
from gcntune.trainer import TrainSettings, TrainState

LOGGER = logging.getLogger(__name__)

RUNNING = 'running'
READY = 'ready'
DEAD = 'dead'

TOP = 'top'
MIDDLE = 'middle'
BOTTOM = 'bottom'

LEADERBOARD_COLUMNS = ('step', 'agent_id', 'val_acc', 'tier', 'action')

MIN_EXPLOIT_AGENTS = 3


class PopulationError(RuntimeError):
    """Raised when a population can't be run, or every agent died."""


class Agent:
    """One population member.

    :ivar int id:
    :ivar TrainState state:
    :ivar int step_count: Completed training steps (warmup included).
    :ivar float last_val_acc: Validation accuracy after the latest step (or
        explore).
    :ivar str status: RUNNING, READY or DEAD.
    :ivar str diagnostic: Why the agent died, if it did.
    """

    def __init__(self, agent_id: int, state: TrainState):
        self.id = agent_id
        self.state = state
        self.step_count = 0
        self.last_val_acc = 0.0
        self.status = RUNNING
        self.diagnostic = None  # type: Optional[str]

    @property
    def alive(self) -> bool:
        return self.status != DEAD

    def __repr__(self):
        return 'Agent({}, {}, acc={:.4f})'.format(self.id, self.status,
                                                  self.last_val_acc)


def tier_sizes(num_agents: int,
               fractions: Sequence[float] = (1/3, 1/3, 1/3)) \
        -> Tuple[int, int, int]:
    """Split K agents into (top, middle, bottom) counts. Top rounds up,
    bottom rounds down, the middle gets the rest."""

    fractions = tuple(fractions)
    if len(fractions) != 3 or min(fractions) < 0 or \
            abs(sum(fractions) - 1.0) > 1e-6:
        raise PopulationError("Tier fractions must be three non-negative "
                              "values summing to 1, got {}".format(fractions))

    # Rounding guards against 9 * (1/3) landing just below 3.
    top = int(math.ceil(round(num_agents * fractions[0], 9)))
    bottom = int(math.floor(round(num_agents * fractions[2], 9)))
    top = min(top, num_agents)
    bottom = min(bottom, num_agents - top)
    return top, num_agents - top - bottom, bottom


def rank(agents: Sequence[Agent]) -> List[Agent]:
    """Live agents by descending accuracy; ties go to the lower id."""

    return sorted((agent for agent in agents if agent.alive),
                  key=lambda agent: (-agent.last_val_acc, agent.id))


def assign_tiers(agents: Sequence[Agent],
                 fractions: Sequence[float] = (1/3, 1/3, 1/3)) \
        -> Dict[int, str]:
    """Tier name by agent id, for every agent (dead agents get DEAD)."""

    ranked = rank(agents)
    top, middle, _ = tier_sizes(len(ranked), fractions)

    tiers = {agent.id: DEAD for agent in agents}
    for pos, agent in enumerate(ranked):
        if pos < top:
            tiers[agent.id] = TOP
        elif pos < top + middle:
            tiers[agent.id] = MIDDLE
        else:
            tiers[agent.id] = BOTTOM
    return tiers


def evaluate_agent(agent: Agent, graph: Graph) -> float:
    state = agent.state
    agent.last_val_acc = trainer.evaluate(
        state.params, state.dist, graph, 'val', lam=state.center())
    return agent.last_val_acc


def training_step(agent: Agent, graph: Graph, epochs: int) -> Agent:
    """Train the agent for the given number of epochs, then refresh its
    validation accuracy. Agents that abort are marked dead."""

    if agent.status == DEAD:
        return agent

    agent.status = RUNNING
    try:
        trainer.train_epochs(agent.state, graph, epochs)
    except trainer.TrainingAborted as err:
        agent.status = DEAD
        agent.diagnostic = str(err)
        LOGGER.warning("Agent %d died: %s", agent.id, err)
        return agent

    evaluate_agent(agent, graph)
    agent.step_count += 1
    agent.status = READY
    return agent


def exploit(agents: Sequence[Agent], seed: int,
            fractions: Sequence[float] = (1/3, 1/3, 1/3)) \
        -> Dict[int, int]:
    """Replace the state of every bottom tier agent with a copy of a
    uniformly chosen top tier agent's state (parameters, distribution and
    optimizer moments). Agents keep their own id, seed and history.

    :returns: Source agent id, by the id of each agent that was replaced.
        Empty when fewer than three agents are alive.
    """

    live = rank(agents)
    if len(live) < MIN_EXPLOIT_AGENTS:
        LOGGER.warning("Only %d live agents; skipping exploitation.",
                       len(live))
        return {}

    not_ready = [agent.id for agent in live if agent.status != READY]
    if not_ready:
        raise PopulationError("Agents {} are not at the barrier."
                              .format(not_ready))

    tiers = assign_tiers(agents, fractions)
    top = [agent for agent in live if tiers[agent.id] == TOP]
    bottom = [agent for agent in live if tiers[agent.id] == BOTTOM]

    rng = utils.make_rng(seed)
    copies = {}
    for agent in bottom:
        source = top[int(rng.integers(len(top)))]
        agent.state.copy_from(source.state)
        agent.last_val_acc = source.last_val_acc
        copies[agent.id] = source.id
        LOGGER.debug("Agent %d copies agent %d", agent.id, source.id)

    return copies


def explore(agent: Agent, graph: Graph, seed: int) -> Agent:
    """Perturb the agent's hyperparameter distribution, then re-evaluate it.
    Model parameters are untouched. Agents with point hyperparameters move
    their point to the perturbed center."""

    state = agent.state
    state.dist = hyper.perturb(state.dist, seed)
    if state.fixed_hyper is not None:
        state.fixed_hyper = HyperVector(state.dist.mu, state.space)

    evaluate_agent(agent, graph)
    return agent


class PopulationResult:
    """The outcome of a population run.

    :ivar Agent best: The live agent with the best final validation
        accuracy.
    :ivar list leaderboard: One row per agent per step after warmup.
    :ivar int epoch_budget: Epochs trained, summed over agents.
    :ivar float test_acc: The best agent's final test accuracy.
    """

    def __init__(self, best: Agent, agents: List[Agent],
                 leaderboard: List[dict], epoch_budget: int,
                 test_acc: Optional[float]):
        self.best = best
        self.agents = agents
        self.leaderboard = leaderboard
        self.epoch_budget = epoch_budget
        self.test_acc = test_acc


class Population:
    """A set of agents and the rules for training them.

    :ivar list agents:
    :ivar int step_epochs: Epochs per training step after warmup.
    :ivar int warmup_epochs: Epochs trained before the first barrier.
    :ivar tuple tiers: (top, middle, bottom) fractions.
    :ivar int seed: Seed for the exploit and explore streams.
    """

    # pylint: disable=too-many-arguments
    def __init__(self, agents: List[Agent], step_epochs: int = 1,
                 warmup_epochs: int = 200,
                 tiers: Sequence[float] = (1/3, 1/3, 1/3),
                 seed: int = 0, workers: int = 1,
                 exploit_enabled: bool = True,
                 explore_enabled: bool = True,
                 checkpoint_dir: Path = None,
                 checkpoint_interval: int = 0):

        if not agents:
            raise PopulationError("A population needs at least one agent.")
        if step_epochs < 1:
            raise PopulationError("step_epochs must be at least 1.")
        if warmup_epochs < 0:
            raise PopulationError("warmup_epochs must be non-negative.")

        tier_sizes(len(agents), tiers)

        self.agents = list(agents)
        self.step_epochs = step_epochs
        self.warmup_epochs = warmup_epochs
        self.tiers = tuple(tiers)
        self.seed = seed
        self.workers = max(1, workers)
        self.exploit_enabled = exploit_enabled
        self.explore_enabled = explore_enabled
        self.checkpoint_dir = checkpoint_dir
        self.checkpoint_interval = checkpoint_interval

    def live_agents(self) -> List[Agent]:
        return [agent for agent in self.agents if agent.alive]

    def train_all(self, graph: Graph, epochs: int):
        """Run a training step on every live agent over the worker pool, and
        wait for all of them (the barrier)."""

        tasks = [(lambda agent=agent: training_step(agent, graph, epochs))
                 for agent in self.live_agents()]
        _, errors = utils.run_threaded(tasks, self.workers)
        if errors:
            # Anything other than a training abort is a bug; don't hide it.
            raise next(iter(errors.values()))

        if not self.live_agents():
            raise PopulationError(
                "Every agent in the population died:\n" +
                '\n'.join('  agent {}: {}'.format(agent.id, agent.diagnostic)
                          for agent in self.agents))

    def exploit_and_explore(self, graph: Graph, step: int) -> List[dict]:
        """Run the between-step exploit and explore, and produce this step's
        leaderboard rows."""

        tiers = assign_tiers(self.agents, self.tiers)
        actions = {agent.id: 'none' for agent in self.agents}

        if len(self.live_agents()) < MIN_EXPLOIT_AGENTS:
            if self.exploit_enabled or self.explore_enabled:
                LOGGER.warning("Step %d: fewer than %d live agents, skipping "
                               "exploit and explore.", step,
                               MIN_EXPLOIT_AGENTS)
        else:
            copies = {}
            if self.exploit_enabled:
                copies = exploit(self.agents,
                                 utils.derive_seed(self.seed, 'pbt', step),
                                 self.tiers)
                for agent_id, source_id in copies.items():
                    actions[agent_id] = 'exploited_from:{}'.format(source_id)

            if self.explore_enabled:
                for agent in self.agents:
                    if tiers[agent.id] != BOTTOM:
                        continue
                    explore(agent, graph, utils.derive_seed(
                        self.seed, 'pbt', step, 'explore', agent.id))
                    if agent.id not in copies:
                        actions[agent.id] = 'explored'

        return [{'step': step, 'agent_id': agent.id,
                 'val_acc': agent.last_val_acc, 'tier': tiers[agent.id],
                 'action': actions[agent.id]}
                for agent in self.agents]

    def checkpoint(self, step: int):
        """Write every live agent's state to agents/<id>/step_<n>.npz."""

        if self.checkpoint_dir is None:
            return

        for agent in self.live_agents():
            path = (Path(self.checkpoint_dir) / str(agent.id) /
                    'step_{}.npz'.format(step))
            nn.save_checkpoint(path, agent.state.to_arrays())

    def best(self) -> Agent:
        live = rank(self.agents)
        if not live:
            raise PopulationError("No live agents.")
        return live[0]


def run_population(pop: Population, graph: Graph,
                   total_epochs: int) -> PopulationResult:
    """Warm every agent up, then alternate training steps and
    exploit/explore barriers until every agent has trained total_epochs.

    :raises PopulationError: When every agent dies, or the warmup is longer
        than the whole run.
    """

    if total_epochs < pop.warmup_epochs:
        raise PopulationError(
            "The warmup ({} epochs) is longer than the run ({} epochs)."
            .format(pop.warmup_epochs, total_epochs))

    LOGGER.info("Population of %d: %d warmup epochs, then %d epoch steps to "
                "epoch %d.", len(pop.agents), pop.warmup_epochs,
                pop.step_epochs, total_epochs)

    start_epochs = sum(agent.state.epoch for agent in pop.agents)

    if pop.warmup_epochs:
        pop.train_all(graph, pop.warmup_epochs)
    else:
        for agent in pop.agents:
            evaluate_agent(agent, graph)
            agent.status = READY
    pop.checkpoint(0)

    leaderboard = []
    step = 0
    epoch = pop.warmup_epochs
    while epoch < total_epochs:
        step += 1
        epochs = min(pop.step_epochs, total_epochs - epoch)
        pop.train_all(graph, epochs)
        epoch += epochs

        leaderboard.extend(pop.exploit_and_explore(graph, step))

        best = pop.best()
        LOGGER.info("Step %d (epoch %d): best agent %d, val acc %.4f",
                    step, epoch, best.id, best.last_val_acc)

        if epoch >= total_epochs or (
                pop.checkpoint_interval and
                step % pop.checkpoint_interval == 0):
            pop.checkpoint(step)

    best = pop.best()
    test_acc = None
    if graph.mask('test').any():
        test_acc = trainer.evaluate(best.state.params, best.state.dist,
                                    graph, 'test', lam=best.state.center())

    epoch_budget = sum(agent.state.epoch for agent in pop.agents) - \
        start_epochs

    return PopulationResult(best, pop.agents, leaderboard, epoch_budget,
                            test_acc)


def make_agents(graph: Graph, settings: TrainSettings, num_agents: int,
                seed: int, plain: bool = False) -> List[Agent]:
    """Create agents with independent seeds and distribution centers drawn
    uniformly within the unconstrained bounds.

    :param plain: Create fixed hyperparameter plain GCN agents (no
        hypernet, no hyper epochs) instead of self-tuning ones.
    """

    agents = []
    for agent_id in range(num_agents):
        agent_seed = utils.derive_seed(seed, 'agent', agent_id)
        space = hyper.HyperSpace.for_layers(settings.num_layers)
        u_init = space.draw_u(utils.make_rng(
            utils.derive_seed(agent_seed, 'pbt', 'init')))

        if plain:
            state = trainer.new_state(graph, settings, agent_seed,
                                      fixed_lam=hyper.constrain(u_init, space))
        else:
            state = trainer.new_state(graph, settings, agent_seed)
            state.dist = state.dist.clamped(mu=u_init)
        agents.append(Agent(agent_id, state))

    return agents
