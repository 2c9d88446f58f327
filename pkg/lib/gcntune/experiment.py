"""Experiment orchestration: load and validate an experiment config, build
its dataset, run the chosen method in a fresh run directory and summarize
the outcome. Also builds results tables from finished run directories.

A run directory looks like: ::

    0000012/
        status          # Timestamped run states.
        config.yaml     # The resolved experiment config, seed included.
        series.csv      # epoch, val_acc, val_loss of the selected model.
        summary.json    # The final summary.
        ...             # Method artifacts (history.csv, trials.csv, ...)
"""

import csv
import json
import logging
import os
import statistics
import time
from collections import OrderedDict, defaultdict
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import yc_yaml
from yaml_config import RequiredError

from gcntune import config
from gcntune import dir_db
from gcntune import graph as graph_mod
from gcntune import log_setup
from gcntune import methods
from gcntune import output
from gcntune import synthetic
from gcntune import utils
from gcntune.file_format import (DEFAULT_SPLIT, ExperimentConfigError,
                                 ExperimentConfigLoader)
from gcntune.status_file import STATES, StatusFile

__all__ = [
    'ExperimentConfigError',
    'ExperimentConfigLoader',
    'ReportError',
    'RunRecord',
    'load_experiment',
    'load_dataset',
    'run_experiment',
    'build_report',
    'write_report',
]

LOGGER = logging.getLogger(__name__)

SUMMARY_VERSION = 1

CONFIG_FILE = 'config.yaml'
SERIES_FILE = 'series.csv'
STATUS_FILE = 'status'
SUMMARY_FILE = 'summary.json'

# Dataset statistics that must agree between runs reported under one name.
DATASET_SHAPE_KEYS = ('nodes', 'features', 'classes')

# Report column order. Other methods follow, sorted.
METHOD_ORDER = ('rs', 'hb', 'pbt', 'st', 'pst')

MISSING = 'missing'
NO_RUN = '-'


class ReportError(RuntimeError):
    """Raised when run directories can't be combined into one report."""


def _resolve(base: Path, path: Optional[Path]) -> Optional[Path]:
    if path is None:
        return None
    path = Path(path)
    return path if path.is_absolute() else (base/path).resolve()


def load_experiment(path: Union[str, Path], overrides: dict = None):
    """Load and validate an experiment config.

    Relative dataset and output paths are taken relative to the config
    file's directory.

    :param path: The experiment config file.
    :param overrides: Top level keys to replace after loading ('seed',
        'workers', 'deterministic', 'method'). None values are ignored.
    :raises ExperimentConfigError:
    """

    path = Path(path)

    try:
        with path.open() as exp_file:
            exp_cfg = ExperimentConfigLoader().load(exp_file)
    except OSError as err:
        raise ExperimentConfigError(
            "Could not read experiment config '{}': {}".format(path, err))
    except RequiredError as err:
        raise ExperimentConfigError(
            "Experiment config '{}' has a missing key. {}".format(path, err))
    except (ValueError, TypeError) as err:
        raise ExperimentConfigError(
            "Experiment config '{}' has an invalid value. {}"
            .format(path, err))
    except KeyError as err:
        raise ExperimentConfigError(
            "Experiment config '{}' has an invalid key. {}".format(path, err))
    except yc_yaml.YAMLError as err:
        raise ExperimentConfigError(
            "Experiment config '{}' has a YAML Error: {}".format(path, err))

    for key, value in (overrides or {}).items():
        if value is not None:
            exp_cfg[key] = value

    base = path.resolve().parent
    dataset = exp_cfg['dataset']
    for key in ('content', 'cites', 'synthetic'):
        dataset[key] = _resolve(base, dataset.get(key))
    exp_cfg['output_dir'] = _resolve(base, exp_cfg.get('output_dir'))

    validate_experiment(exp_cfg)
    return exp_cfg


def validate_experiment(exp_cfg) -> None:
    """The checks yaml_config can't express.

    :raises ExperimentConfigError:
    """

    method = exp_cfg['method']
    known = methods.list_plugins()
    if method not in known:
        raise ExperimentConfigError(
            "Invalid 'method': '{}'. Known methods: {}"
            .format(method, ', '.join(sorted(known)) or '<none>'))

    dataset = exp_cfg['dataset']
    raw = dataset.get('content') is not None or \
        dataset.get('cites') is not None
    if raw and dataset.get('synthetic') is not None:
        raise ExperimentConfigError(
            "Invalid 'dataset': give 'content' and 'cites', or 'synthetic', "
            "not both.")

    if raw:
        keys = ('content', 'cites')
    elif dataset.get('synthetic') is not None:
        keys = ('synthetic',)
    else:
        raise ExperimentConfigError(
            "Invalid 'dataset': one of 'content' and 'cites', or "
            "'synthetic' is required.")

    for key in keys:
        if dataset.get(key) is None:
            raise ExperimentConfigError(
                "Invalid 'dataset.{}': missing.".format(key))
        if not dataset[key].is_file():
            raise ExperimentConfigError(
                "Invalid 'dataset.{}': '{}' does not exist."
                .format(key, dataset[key]))

    split = dataset.get('split') or {}
    if split.get('fractions') and split.get('counts'):
        raise ExperimentConfigError(
            "Invalid 'dataset.split': give 'fractions' or 'counts', not "
            "both.")


def split_policy(exp_cfg) -> graph_mod.SplitPolicy:
    """:raises ExperimentConfigError:"""

    split = exp_cfg['dataset'].get('split') or {}
    fractions = split.get('fractions') or None
    counts = split.get('counts') or None
    if fractions is None and counts is None:
        fractions = DEFAULT_SPLIT

    try:
        return graph_mod.SplitPolicy(fractions=fractions, counts=counts)
    except graph_mod.SplitError as err:
        raise ExperimentConfigError(
            "Invalid 'dataset.split': {}".format(err))


def load_dataset(exp_cfg, seed: int) -> Tuple[graph_mod.Graph, dict]:
    """Load (or generate) the experiment's graph and split it.

    :returns: The split graph, and a dict with the dataset name and its
        statistics (plus the oracle accuracy for synthetic datasets).
    :raises ExperimentConfigError: For bad synthetic specs.
    :raises graph_mod.GraphError: For unreadable or unsplittable datasets.
    """

    dataset = exp_cfg['dataset']
    info = {}

    if dataset.get('synthetic') is not None:
        try:
            spec = synthetic.SyntheticSpec.load(dataset['synthetic'])
        except synthetic.SyntheticSpecError as err:
            raise ExperimentConfigError(
                "Invalid 'dataset.synthetic': {}".format(err))
        generated = synthetic.generate_synthetic(
            spec, utils.derive_seed(seed, 'data'))
        graph = generated.graph
        name = dataset.get('name') or spec.name
        info['oracle_acc'] = generated.oracle_acc
    else:
        graph = graph_mod.load_citation_raw(dataset['content'],
                                            dataset['cites'])
        name = dataset.get('name') or dataset['content'].stem

    split = dataset.get('split') or {}
    split_seed = split.get('seed')
    if split_seed is None:
        split_seed = utils.derive_seed(seed, 'split')

    graph = graph_mod.split_nodes(graph, split_policy(exp_cfg), split_seed)

    info['name'] = name
    info.update(graph.summary())
    return graph, info


class RunRecord:
    """A run directory and its summary.

    :ivar int run_id:
    :ivar Path path:
    :ivar dict summary: None until the run completes.
    """

    def __init__(self, run_id: int, path: Path, summary: dict = None):
        self.run_id = run_id
        self.path = Path(path)
        self.summary = summary

    @classmethod
    def load(cls, path: Path) -> 'RunRecord':
        """Load a finished run's summary.

        :raises ReportError: When it has no readable summary.
        """

        path = Path(path)
        try:
            with (path/SUMMARY_FILE).open() as summary_file:
                summary = json.load(summary_file)
        except (OSError, ValueError) as err:
            raise ReportError("Run '{}' has no readable summary: {}"
                              .format(path, err))

        return cls(summary.get('run_id', int(path.name)), path, summary)

    @property
    def status(self) -> StatusFile:
        return StatusFile(self.path/STATUS_FILE)

    def series(self) -> List[dict]:
        """The run's (epoch, val_acc, val_loss) rows. Empty when the series
        file is missing or empty."""

        path = self.path/SERIES_FILE
        try:
            with path.open(encoding='utf-8', newline='') as series_file:
                return list(csv.DictReader(series_file))
        except OSError:
            return []

    def __repr__(self):
        return 'RunRecord({}, {})'.format(self.run_id, self.path)


def _plain(value):
    """Convert a loaded config into builtin types for dumping."""

    if isinstance(value, dict):
        return {key: _plain(val) for key, val in value.items()}
    elif isinstance(value, list):
        return [_plain(val) for val in value]
    elif isinstance(value, Path):
        return value.as_posix()
    return value


def _check_determinism(exp_cfg):
    if not exp_cfg['deterministic']:
        return

    threads = {var: os.environ.get(var) for var in (
        'OMP_NUM_THREADS', 'OPENBLAS_NUM_THREADS', 'MKL_NUM_THREADS')}
    if any(value != '1' for value in threads.values()):
        LOGGER.warning(
            "The experiment asks to be deterministic, but the numeric "
            "libraries may be multi-threaded (%s). Run with --deterministic "
            "for bitwise reproducible results.",
            ', '.join('{}={}'.format(var, val)
                      for var, val in sorted(threads.items())))


def run_experiment(cfg, exp_cfg) -> RunRecord:
    """Run the configured method in a new run directory.

    :param cfg: The gcntune configuration.
    :param exp_cfg: A validated experiment config (see load_experiment).
    :raises ExperimentConfigError: For settings the method rejects.
    :raises OSError: When the run directory can't be created.
    """

    output_dir = exp_cfg.get('output_dir') or cfg.output_root
    if exp_cfg.get('workers') is None:
        exp_cfg['workers'] = cfg.workers

    _check_determinism(exp_cfg)

    run_id, run_dir = dir_db.create_id_dir(output_dir)
    record = RunRecord(run_id, run_dir)
    status = record.status

    with (run_dir/CONFIG_FILE).open('w') as config_file:
        ExperimentConfigLoader().dump(config_file, values=_plain(exp_cfg))

    seed = exp_cfg['seed']
    method = exp_cfg['method']
    start = time.time()

    try:
        status.set(STATES.LOADING, "Loading the dataset.")
        graph, dataset_info = load_dataset(exp_cfg, seed)

        status.set(STATES.TRAINING, "Running method '{}'.".format(method))
        plugin = methods.get_plugin(method)
        ctx = methods.RunContext(graph, exp_cfg, seed, exp_cfg['workers'],
                                 run_dir)
        result = plugin.run(ctx)

        status.set(STATES.REPORTING, "Writing the summary.")
        output.write_csv(run_dir/SERIES_FILE, methods.SERIES_COLUMNS,
                         result.series)

        summary = OrderedDict([
            ('summary_version', SUMMARY_VERSION),
            ('run_id', run_id),
            ('method', method),
            ('dataset', dataset_info['name']),
            ('layers', exp_cfg['model']['layers']),
            ('best_val_acc', result.best_val_acc),
            ('test_acc', result.test_acc),
            ('wall_time', round(time.time() - start, 3)),
            ('epoch_budget', result.epoch_budget),
            ('seed', seed),
            ('dataset_stats', dataset_info),
            ('hyper', result.hyper),
            ('extra', result.extra),
            ('version', config.get_version()),
        ])

        with (run_dir/SUMMARY_FILE).open('w', encoding='utf-8',
                                         newline='\n') as summary_file:
            output.json_dump(summary, summary_file, indent=2)
            summary_file.write('\n')

    except Exception as err:
        status.set(STATES.RUN_ERROR, "{}: {}".format(type(err).__name__,
                                                     err))
        raise

    record.summary = summary
    logging.getLogger(log_setup.RESULT_LOGGER).info(
        output.json_dumps(summary))

    status.set(STATES.COMPLETE, "Test accuracy {}.".format(
        'n/a' if result.test_acc is None
        else '{:.4f}'.format(result.test_acc)))

    LOGGER.info("Run %d (%s on %s, L=%d) complete: val acc %.4f.", run_id,
                method, dataset_info['name'], exp_cfg['model']['layers'],
                result.best_val_acc)
    return record


def find_runs(paths: List[Path]) -> List[Path]:
    """Expand each path into run directories. A path is a run directory
    itself when it holds a status or summary file, otherwise the numbered
    directories under it are used.

    :raises ReportError: When a path doesn't exist, or nothing was found.
    """

    runs = []
    for path in paths:
        path = Path(path)
        if not path.is_dir():
            raise ReportError("No such run directory: '{}'".format(path))

        if (path/SUMMARY_FILE).exists() or (path/STATUS_FILE).exists():
            runs.append(path)
        else:
            runs.extend(dir_db.select(path, order_func=lambda p: int(p.name)))

    if not runs:
        raise ReportError("No run directories found in: {}"
                          .format(', '.join(str(path) for path in paths)))

    return runs


def method_order(names) -> List[str]:
    """Known methods in their usual order, then any others sorted."""

    names = set(names)
    ordered = [name for name in METHOD_ORDER if name in names]
    return ordered + sorted(names - set(METHOD_ORDER))


class Report:
    """A dataset x layers x method accuracy matrix.

    :ivar list methods: Column order.
    :ivar list rows: One dict per (dataset, layers) with 'dataset',
        'layers' and a cell per method: a test accuracy in percent, MISSING
        or NO_RUN.
    :ivar list runs: The RunRecords the report was built from.
    :ivar int skipped: Run directories without a summary.
    """

    def __init__(self, methods_: List[str], rows: List[dict],
                 runs: List[RunRecord], skipped: int = 0):
        self.methods = methods_
        self.rows = rows
        self.runs = runs
        self.skipped = skipped

    @property
    def fields(self) -> List[str]:
        return ['dataset', 'layers'] + self.methods


def _cell_value(records: List[RunRecord]) -> Union[float, str]:
    """The median test accuracy in percent, or MISSING if any run lacks
    either a test accuracy or a series."""

    values = []
    for record in records:
        test_acc = record.summary.get('test_acc')
        if test_acc is None or not record.series():
            return MISSING
        values.append(test_acc * 100)

    return round(statistics.median(values), 2)


def build_report(paths: List[Path], aggregate: bool = False) -> Report:
    """Gather the runs under paths into a report.

    :param aggregate: Report the median over runs that share a (dataset,
        layers, method) cell instead of refusing them.
    :raises ReportError: For duplicate cells without aggregate, mixed
        summary versions, and different datasets reported under one name.
    """

    records = []
    skipped = 0
    for path in find_runs(paths):
        try:
            records.append(RunRecord.load(path))
        except ReportError as err:
            LOGGER.warning("Skipping run: %s", err)
            skipped += 1

    if not records:
        raise ReportError("None of the given runs have a summary.")

    versions = {record.summary.get('summary_version') for record in records}
    if len(versions) > 1:
        raise ReportError("Runs have mixed summary versions: {}"
                          .format(sorted(str(ver) for ver in versions)))

    shapes = {}  # type: Dict[str, Tuple[tuple, Path]]
    cells = defaultdict(list)
    for record in records:
        summary = record.summary
        dataset = summary['dataset']
        stats = summary.get('dataset_stats') or {}
        shape = tuple(stats.get(key) for key in DATASET_SHAPE_KEYS)

        if dataset in shapes and shapes[dataset][0] != shape:
            raise ReportError(
                "Runs '{}' and '{}' both use dataset '{}', but the graphs "
                "differ ({} vs {}). Give the datasets different names."
                .format(shapes[dataset][1], record.path, dataset,
                        dict(zip(DATASET_SHAPE_KEYS, shapes[dataset][0])),
                        dict(zip(DATASET_SHAPE_KEYS, shape))))
        shapes.setdefault(dataset, (shape, record.path))

        cells[(dataset, summary['layers'], summary['method'])].append(record)

    if not aggregate:
        for key, dupes in cells.items():
            if len(dupes) > 1:
                raise ReportError(
                    "Runs {} all report {} L={} with method '{}'. Use "
                    "--aggregate to report their median."
                    .format(', '.join(str(rec.path) for rec in dupes),
                            *key))

    method_names = method_order(key[2] for key in cells)
    rows = []
    for dataset, layers in sorted({key[:2] for key in cells}):
        row = {'dataset': dataset, 'layers': layers}
        for method in method_names:
            runs = cells.get((dataset, layers, method))
            row[method] = NO_RUN if runs is None else _cell_value(runs)
        rows.append(row)

    return Report(method_names, rows, records, skipped)


def series_name(record: RunRecord) -> str:
    summary = record.summary
    return '{}_{}layer_{}_{}.csv'.format(
        summary['dataset'], summary['layers'], summary['method'],
        record.run_id)


def write_report(report: Report, out_path: Path, outfile=None) -> Path:
    """Write the report matrix as CSV to out_path, each run's series to
    '<out_path>.series/', and (optionally) a text table to outfile.

    :returns: The series directory.
    """

    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    output.write_csv(out_path, report.fields, report.rows)

    series_dir = out_path.with_name(out_path.name + '.series')
    series_dir.mkdir(parents=True, exist_ok=True)
    for record in report.runs:
        series = record.series()
        if series:
            output.write_csv(series_dir/series_name(record),
                             methods.SERIES_COLUMNS, series)

    if outfile is not None:
        field_info = {
            'dataset': {'title': 'Dataset'},
            'layers': {'title': 'L'},
        }
        for method in report.methods:
            field_info[method] = {
                'title': method.upper(),
                'transform': lambda v: v if isinstance(v, str)
                else '{:.1f}'.format(v),
            }
        output.draw_table(outfile, report.fields, report.rows,
                          field_info=field_info,
                          title="Test accuracy (%)")

    return series_dir
