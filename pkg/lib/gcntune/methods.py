"""Method plugins provide the tuning methods an experiment can run: the
self-tuning GCN, its population based variant, and the random search,
Hyperband and plain PBT baselines.

Each plugin contributes its own section to the experiment config format
(``get_conf()``) and implements ``run(ctx)``, which trains on the context's
graph, writes its artifacts into the run directory and returns a
MethodResult.
"""

# pylint: disable=W0603

import inspect
import logging
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import yaml_config as yc
from yapsy import IPlugin

from gcntune import hyper
from gcntune import output
from gcntune import pbt
from gcntune.file_format import ExperimentConfigError, ExperimentConfigLoader
from gcntune.graph import Graph
from gcntune.trainer import History, TrainSettings

LOGGER = logging.getLogger(__name__)

SERIES_COLUMNS = ('epoch', 'val_acc', 'val_loss')


class MethodPluginError(RuntimeError):
    """Raised when method plugins encounter an error."""


_METHOD_PLUGINS = {}


def __reset():
    """This exists for testing purposes only."""

    for plugin in list(_METHOD_PLUGINS.values()):
        plugin.deactivate()


def get_plugin(name: str) -> 'MethodPlugin':
    """Return the method plugin of the given name.

    :raises MethodPluginError: If there is no such plugin.
    """

    if name not in _METHOD_PLUGINS:
        raise MethodPluginError(
            "Method plugin not found: '{}'. Known methods: {}"
            .format(name, ', '.join(sorted(_METHOD_PLUGINS)) or '<none>'))

    return _METHOD_PLUGINS[name]


def list_plugins() -> List[str]:
    """Return a list of all available method plugin names."""

    return list(_METHOD_PLUGINS.keys())


def training_elements(lr_theta: float = 0.0005, max_epochs: int = 400,
                      self_tuning: bool = True) -> list:
    """Config elements shared by every method that trains GCNs. Each call
    returns fresh elements."""

    elements = [
        yc.FloatRangeElem(
            'lr_theta', default=lr_theta, vmin=0.0,
            help_text="Adam learning rate for the model parameters."),
        yc.IntRangeElem(
            'max_epochs', default=max_epochs, vmin=1,
            help_text="Total epochs trained per model."),
    ]

    if not self_tuning:
        return elements

    elements.extend([
        yc.FloatRangeElem(
            'lr_lambda', default=0.01, vmin=0.0,
            help_text="Adam learning rate for the hyperparameter centers."),
        yc.FloatRangeElem(
            'lr_eps', default=0.01, vmin=0.0,
            help_text="Adam learning rate for the hyperparameter scales."),
        yc.FloatRangeElem(
            'tau', default=0.001, vmin=0.0,
            help_text="Weight of the entropy bonus on the sampling "
                      "distribution."),
        yc.ListElem(
            'schedule', sub_elem=yc.IntElem(),
            help_text="Model epochs then hyper epochs per cycle. Defaults "
                      "to [2, 1]."),
        yc.FloatRangeElem(
            'init_dropout', default=0.1, vmin=0.0, vmax=hyper.RATE_SCALE,
            help_text="Starting dropout rate of every hidden layer."),
        yc.FloatRangeElem(
            'init_edge_drop', default=0.1, vmin=0.0, vmax=hyper.RATE_SCALE,
            help_text="Starting edge drop rate."),
        yc.FloatRangeElem(
            'init_weight_decay', default=5e-4,
            vmin=hyper.DECAY_BOUNDS[0], vmax=hyper.DECAY_BOUNDS[1],
            help_text="Starting weight decay."),
        yc.FloatRangeElem(
            'init_sigma', default=0.5, vmin=0.0,
            help_text="Starting scale of the sampling distribution."),
        yc.FloatRangeElem(
            'sigma_min', default=hyper.SIGMA_MIN, vmin=0.0,
            help_text="Lower clamp on the sampling scale."),
        yc.FloatRangeElem(
            'sigma_max', default=hyper.SIGMA_MAX, vmin=0.0,
            help_text="Upper clamp on the sampling scale."),
        yc.BoolElem(
            'dropout_hypergrad', default=True,
            help_text="Let hypergradients flow through the relaxed dropout "
                      "masks."),
    ])
    return elements


def population_elements(warmup_epochs: int = 200) -> list:
    """Config elements shared by the population based methods."""

    return [
        yc.IntRangeElem(
            'agents', default=20, vmin=1,
            help_text="Population size (K)."),
        yc.IntRangeElem(
            'warmup_epochs', default=warmup_epochs, vmin=0,
            help_text="Epochs every agent trains before the first exploit "
                      "and explore."),
        yc.IntRangeElem(
            'step_epochs', default=1, vmin=1,
            help_text="Epochs per training step after warmup."),
        yc.ListElem(
            'tiers', sub_elem=yc.FloatElem(),
            help_text="Top, middle and bottom tier fractions. Defaults to "
                      "thirds."),
        yc.BoolElem(
            'exploit', default=True,
            help_text="Copy top agents over bottom agents between steps."),
        yc.BoolElem(
            'explore', default=True,
            help_text="Perturb bottom agents' hyperparameters between "
                      "steps."),
        yc.IntRangeElem(
            'checkpoint_interval', default=0, vmin=0,
            help_text="Also checkpoint every agent each this many steps. "
                      "Agents are always checkpointed after warmup and at "
                      "the end."),
    ]


class MethodResult:
    """What a method run produced.

    :ivar float best_val_acc: Validation accuracy of the selected model.
    :ivar float test_acc: Its test accuracy (None without a test split).
    :ivar int epoch_budget: Epochs trained across every model.
    :ivar list series: The selected model's (epoch, val_acc, val_loss)
        rows.
    :ivar dict hyper: The selected model's hyperparameters by name.
    :ivar dict extra: Method specific summary values.
    """

    # pylint: disable=too-many-arguments
    def __init__(self, best_val_acc: float, test_acc: Optional[float],
                 epoch_budget: int, series: List[dict],
                 hyper: Dict[str, float] = None, extra: dict = None):
        self.best_val_acc = best_val_acc
        self.test_acc = test_acc
        self.epoch_budget = epoch_budget
        self.series = series
        self.hyper = hyper or {}
        self.extra = extra or {}


class RunContext:
    """Everything a method plugin needs to run.

    :ivar Graph graph: The split dataset.
    :ivar exp_cfg: The full experiment config.
    :ivar int seed: The root seed.
    :ivar int workers: Worker threads.
    :ivar Path run_dir: Where to write artifacts.
    """

    def __init__(self, graph: Graph, exp_cfg, seed: int, workers: int,
                 run_dir: Path):
        self.graph = graph
        self.exp_cfg = exp_cfg
        self.seed = seed
        self.workers = workers
        self.run_dir = Path(run_dir)

    @property
    def method(self) -> str:
        return self.exp_cfg['method']

    @property
    def method_cfg(self) -> dict:
        return self.exp_cfg[self.method] or {}

    @property
    def num_layers(self) -> int:
        return self.exp_cfg['model']['layers']

    @property
    def space(self) -> hyper.HyperSpace:
        return hyper.HyperSpace.for_layers(self.num_layers)

    def write_csv(self, name: str, fields: Sequence[str],
                  rows: Sequence[dict]) -> Path:
        """Write rows to a CSV under the run directory."""

        path = self.run_dir / name
        path.parent.mkdir(parents=True, exist_ok=True)
        output.write_csv(path, fields, rows)
        return path

    def write_history(self, name: str, history: History) -> Path:
        return self.write_csv(name, history.columns, history.rows)


class MethodPlugin(IPlugin.IPlugin):
    """The base method plugin class. Method plugins should inherit from
    this, and override get_conf and run."""

    PRIO_CORE = 0
    PRIO_COMMON = 10
    PRIO_USER = 20

    def __init__(self, name, description, priority=PRIO_CORE):

        super().__init__()

        self.logger = logging.getLogger('method.' + name)
        self.name = name
        self.description = description
        self.priority = priority
        self.path = inspect.getfile(self.__class__)

    def get_conf(self) -> yc.KeyedElem:
        """Return this method's experiment config section."""

        raise NotImplementedError

    def run(self, ctx: RunContext) -> MethodResult:
        """Run the method on ctx.graph.

        :raises ExperimentConfigError: For bad method settings.
        """

        raise NotImplementedError

    def settings(self, ctx: RunContext, **overrides) -> TrainSettings:
        """Build train settings from the model section and this method's
        section.

        :raises ExperimentConfigError:
        """

        model = ctx.exp_cfg['model']
        method_cfg = ctx.method_cfg
        values = {
            'num_layers': model['layers'],
            'hidden': model['hidden'],
        }
        for key in ('lr_theta', 'lr_lambda', 'lr_eps', 'tau', 'max_epochs',
                    'init_dropout', 'init_edge_drop', 'init_weight_decay',
                    'init_sigma', 'sigma_min', 'sigma_max',
                    'dropout_hypergrad'):
            if method_cfg.get(key) is not None:
                values[key] = method_cfg[key]
        if method_cfg.get('schedule'):
            values['schedule'] = tuple(method_cfg['schedule'])
        values.update(overrides)

        try:
            return TrainSettings(**values)
        except ValueError as err:
            raise ExperimentConfigError(
                "Invalid '{}' settings: {}".format(self.name, err))

    def activate(self):
        """Add this plugin to the method plugin list, and its section to the
        experiment config format."""

        name = self.name

        if name not in _METHOD_PLUGINS:
            _METHOD_PLUGINS[name] = self
            ExperimentConfigLoader.add_subsection(self.get_conf())
        else:
            ex_plugin = _METHOD_PLUGINS[name]
            if ex_plugin.priority > self.priority:
                LOGGER.warning(
                    "Method plugin %s ignored due to priority", name)
            elif ex_plugin.priority == self.priority:
                raise MethodPluginError(
                    "Two plugins for the same method have the same "
                    "priority {}, {}.".format(self, ex_plugin))
            else:
                ExperimentConfigLoader.remove_subsection(name)
                ExperimentConfigLoader.add_subsection(self.get_conf())
                _METHOD_PLUGINS[name] = self

    def deactivate(self):
        """Remove this plugin from the method plugin list."""

        name = self.name

        if name in _METHOD_PLUGINS:
            ExperimentConfigLoader.remove_subsection(name)
            del _METHOD_PLUGINS[name]

    def __repr__(self):
        return '<{} from file {} named {}>'.format(
            self.__class__.__name__, self.path, self.name)


def pop_options(ctx: RunContext) -> dict:
    """Population arguments from a population method's config section.

    :raises ExperimentConfigError: When the warmup is longer than the run,
        or the tier fractions are malformed.
    """

    cfg = ctx.method_cfg
    if cfg['warmup_epochs'] > cfg['max_epochs']:
        raise ExperimentConfigError(
            "Invalid '{}' settings: warmup_epochs ({}) is more than "
            "max_epochs ({}).".format(ctx.method, cfg['warmup_epochs'],
                                      cfg['max_epochs']))
    options = {
        'warmup_epochs': cfg['warmup_epochs'],
        'step_epochs': cfg['step_epochs'],
        'workers': ctx.workers,
        'exploit_enabled': cfg['exploit'],
        'explore_enabled': cfg['explore'],
        'checkpoint_dir': ctx.run_dir / 'agents',
        'checkpoint_interval': cfg['checkpoint_interval'],
    }
    if cfg.get('tiers'):
        options['tiers'] = tuple(cfg['tiers'])
        try:
            pbt.tier_sizes(cfg['agents'], options['tiers'])
        except pbt.PopulationError as err:
            raise ExperimentConfigError(
                "Invalid '{}' settings: {}".format(ctx.method, err))
    return options


def series_of(history: Optional[History]) -> List[dict]:
    return [] if history is None else history.series()


def write_population(ctx: RunContext, result: pbt.PopulationResult):
    """Write the leaderboard plus one history per agent."""

    ctx.write_csv('leaderboard.csv', pbt.LEADERBOARD_COLUMNS,
                  result.leaderboard)
    for agent in result.agents:
        ctx.write_history('agents/{}/history.csv'.format(agent.id),
                          agent.state.history)
