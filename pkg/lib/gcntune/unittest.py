"""This module provides a base set of utilities for creating unittests
for gcntune."""

import copy
import fnmatch
import inspect
import pprint
import tempfile
import types
import unittest
from pathlib import Path

import yc_yaml

from gcntune import arguments
from gcntune import config
from gcntune import graph as graph_mod
from gcntune import synthetic
from gcntune.output import dbg_print
from gcntune.trainer import TrainSettings


class GcnTuneTestCase(unittest.TestCase):
    """A unittest.TestCase with a lot of useful gcntune features baked in.
All gcntune unittests (in test/tests) should use this as their base class.

:cvar Path GCNTUNE_LIB_DIR: The Path to gcntune's lib directory.
:cvar Path GCNTUNE_ROOT_DIR: The Path to gcntune's root directory.
:cvar Path TEST_DATA_ROOT: The unit test data directory.
:cvar Path CONFIG_PATH: The path to the configuration used by unit tests.
:cvar dict QUICK_SPEC: The generator spec behind ``_quick_graph()``.
:cvar dict QUICK_EXP_BASE_CFG: The base experiment config returned by
    ``_quick_exp_cfg()``.

:ivar yaml_config.ConfigDict cfg: A gcntune config setup for unit tests.
    Unit tests should **always** use this cfg. If it needs to be modified,
    copy it using copy.deepcopy.
"""

    GCNTUNE_LIB_DIR = Path(__file__).resolve().parents[1]  # type: Path
    GCNTUNE_ROOT_DIR = GCNTUNE_LIB_DIR.parent  # type: Path
    TEST_DATA_ROOT = GCNTUNE_ROOT_DIR/'test'/'data'  # type: Path

    CONFIG_PATH = TEST_DATA_ROOT/'gcntune_config_dir'/'gcntune.yaml'

    # Skip any tests that match these globs.
    SKIP = []
    # Only run tests that match these globs.
    ONLY = []

    def __init__(self, *args, **kwargs):
        """Setup the cfg object, and do other initialization required by
        gcntune."""

        # Load the unittest config, point it at the test working directory,
        # and then save the modified file to a temp location and read it
        # back so it goes through validation.
        with self.CONFIG_PATH.open() as cfg_file:
            raw_cfg = config.GcnTuneConfigLoader().load(cfg_file)

        raw_cfg.config_dirs = [self.TEST_DATA_ROOT/'gcntune_config_dir']

        raw_cfg.working_dir = self.GCNTUNE_ROOT_DIR/'test'/'working_dir'
        raw_cfg.output_root = raw_cfg.working_dir/'runs'
        raw_cfg.result_log = raw_cfg.working_dir/'results.log'
        raw_cfg.exception_log = raw_cfg.working_dir/'exceptions.log'

        raw_cfg.working_dir.mkdir(parents=True, exist_ok=True)

        cfg_dir = raw_cfg.working_dir/'gcntune_cfgs'
        cfg_dir.mkdir(exist_ok=True)

        cfg_path = Path(tempfile.mktemp(suffix='.yaml', dir=str(cfg_dir)))

        with cfg_path.open('w') as cfg_file:
            config.GcnTuneConfigLoader().dump(cfg_file, raw_cfg)

        with cfg_path.open() as cfg_file:
            self.cfg = config.GcnTuneConfigLoader().load(cfg_file)

        self.cfg.cfg_file = cfg_path

        self.tmp_dir = tempfile.TemporaryDirectory()

        # We have to get this to set up the base argument parser before
        # plugins can add to it.
        _ = arguments.get_parser()
        super().__init__(*args, **kwargs)

    def __getattribute__(self, item):
        """When the unittest framework wants a test, check if the test
is in the SKIP or ONLY lists, and skip it as appropriate. Only
test methods are effected by this.
A test is in the SKIP or ONLY list if the filename (minus extension),
class name, or test name (minus the test_ prefix) match one of the
SKIP or ONLY globs (provided via ``./run_tests`` ``-s`` or ``-o``
options.
"""
        attr = super().__getattribute__(item)

        cls = super().__getattribute__('__class__')
        cname = cls.__name__.lower()
        fname = Path(inspect.getfile(cls)).with_suffix('').name.lower()

        if (isinstance(attr, types.MethodType) and
                attr.__name__.startswith('test_')):

            name = attr.__name__[len('test_'):].lower()

            if self.SKIP:
                for skip_glob in self.SKIP:
                    skip_glob = skip_glob.lower()
                    if (fnmatch.fnmatch(name, skip_glob) or
                            fnmatch.fnmatch(cname, skip_glob) or
                            fnmatch.fnmatch(fname, skip_glob)):
                        return unittest.skip("via cmdline")(attr)
                return attr

            if self.ONLY:
                for only_glob in self.ONLY:
                    only_glob = only_glob.lower()
                    if (fnmatch.fnmatch(name, only_glob) or
                            fnmatch.fnmatch(cname, only_glob) or
                            fnmatch.fnmatch(fname, only_glob)):
                        return attr
                return unittest.skip("via cmdline")(attr)

        return attr

    @classmethod
    def set_skip(cls, globs):
        """Skip tests whose names match the given globs."""

        cls.SKIP = globs

    @classmethod
    def set_only(cls, globs):
        """Only run tests whose names match the given globs."""
        cls.ONLY = globs

    @property
    def tmp_path(self) -> Path:
        return Path(self.tmp_dir.name)

    def _cmp_files(self, a_path, b_path):
        """Compare the contents of two files.

        :param Path a_path:
        :param Path b_path:
        """

        with Path(a_path).open('rb') as a_file, \
                Path(b_path).open('rb') as b_file:
            self.assertEqual(a_file.read(), b_file.read(),
                             "File contents mismatch for {} and {}."
                             .format(a_path, b_path))

    dbg_print = staticmethod(dbg_print)

    QUICK_SPEC = {
        'name': 'quick',
        'nodes': 60,
        'classes': 3,
        'communities': 3,
        'p_in': 0.2,
        'p_out': 0.01,
        'dim': 8,
        'noise': 0.5,
        'separation': 2.0,
    }

    def _quick_graph(self, seed=0, split=(0.6, 0.2, 0.2), **spec):
        """A small split planted-partition graph. Keyword arguments
        override QUICK_SPEC."""

        values = dict(self.QUICK_SPEC)
        values.update(spec)
        dataset = synthetic.generate_synthetic(
            synthetic.SyntheticSpec(**values), seed)
        return graph_mod.split_nodes(
            dataset.graph, graph_mod.SplitPolicy(fractions=split), seed)

    @staticmethod
    def _quick_settings(**overrides) -> TrainSettings:
        """Train settings small enough for unit tests."""

        values = {
            'num_layers': 2,
            'hidden': 8,
            'lr_theta': 0.01,
            'max_epochs': 6,
        }
        values.update(overrides)
        return TrainSettings(**values)

    def _quick_spec_file(self, **spec) -> Path:
        """Write a generator spec (QUICK_SPEC plus overrides) to the temp
        directory."""

        values = dict(self.QUICK_SPEC)
        values.update(spec)
        path = self.tmp_path/'{}_spec.yaml'.format(values['name'])
        with path.open('w') as spec_file:
            yc_yaml.safe_dump(values, spec_file, default_flow_style=False)
        return path

    QUICK_EXP_BASE_CFG = {
        'model': {'layers': 2, 'hidden': 8},
        'seed': 0,
        'st': {'max_epochs': 6, 'lr_theta': 0.01},
        'pst': {'max_epochs': 6, 'lr_theta': 0.01, 'agents': 3,
                'warmup_epochs': 3, 'step_epochs': 1},
        'pbt': {'max_epochs': 6, 'agents': 3, 'warmup_epochs': 3,
                'step_epochs': 1},
        'rs': {'trials': 3, 'budget_epochs': 4},
        'hb': {'max_budget': 9, 'eta': 3, 'sweeps': 1},
    }

    def _quick_exp_cfg(self, method='st'):
        """Return a pre-populated experiment config dict (on a synthetic
dataset) to use with ``self._write_exp_cfg``. The default config is: ::

{}
"""

        cfg = copy.deepcopy(self.QUICK_EXP_BASE_CFG)
        cfg['method'] = method
        cfg['dataset'] = {'synthetic': str(self._quick_spec_file())}
        cfg['output_dir'] = str(self.tmp_path/'runs')
        return cfg

    __config_lines = pprint.pformat(QUICK_EXP_BASE_CFG).split('\n')
    _quick_exp_cfg.__doc__ = _quick_exp_cfg.__doc__.format(
        '\n'.join(['    ' + line for line in __config_lines]))
    del __config_lines

    def _write_exp_cfg(self, cfg, name='experiment.yaml') -> Path:
        """Write an experiment config dict to the temp directory."""

        path = self.tmp_path/name
        with path.open('w') as cfg_file:
            yc_yaml.safe_dump(cfg, cfg_file, default_flow_style=False)
        return path


class ColorResult(unittest.TextTestResult):
    """Provides colorized results for the python unittest library."""

    COLOR_BASE = '\x1b[{}m'
    COLOR_RESET = '\x1b[0m'
    RED = COLOR_BASE.format(31)
    GREEN = COLOR_BASE.format(32)
    MAGENTA = COLOR_BASE.format(35)
    CYAN = COLOR_BASE.format(36)
    GREY = COLOR_BASE.format(2)

    def __init__(self, *args, **kwargs):
        self.stream = None
        self.showAll = None
        super().__init__(*args, **kwargs)

    def startTest(self, test):
        """Write out the test description (with shading)."""
        super().startTest(test)
        if self.showAll:
            self.stream.write(self.GREY)
            self.stream.write(self.getDescription(test))
            self.stream.write(self.COLOR_RESET)
            self.stream.write(" ... ")
            self.stream.flush()

    def addSuccess(self, test):
        self.stream.write(self.GREEN)
        super().addSuccess(test)
        self.stream.write(self.COLOR_RESET)

    def addFailure(self, test, err):
        self.stream.write(self.MAGENTA)
        super().addFailure(test, err)
        self.stream.write(self.COLOR_RESET)

    def addError(self, test, err):
        self.stream.write(self.RED)
        super().addError(test, err)
        self.stream.write(self.COLOR_RESET)

    def addSkip(self, test, reason):
        self.stream.write(self.CYAN)
        super().addSkip(test, reason)
        self.stream.write(self.COLOR_RESET)
