"""This module defines the base configuration for gcntune itself: where
plugins are searched for, where runs and logs go, and the default worker
count. Experiment configs are a separate format (see gcntune.experiment)."""

import logging
import os
import sys
from pathlib import Path

import yaml_config as yc

from gcntune import output

LOGGER = logging.getLogger(__name__)

CONFIG_NAME = 'gcntune.yaml'

# Figure out what directories we'll search for configuration files.
CONFIG_SEARCH_DIRS = [Path('./').resolve()]

try:
    USER_HOME_DIR = (Path('~')/'.gcntune').expanduser()
except (OSError, RuntimeError):
    USER_HOME_DIR = Path('/tmp')/'.gcntune'

CONFIG_SEARCH_DIRS.append(USER_HOME_DIR)

ENV_CONFIG_DIR = os.environ.get('GCNTUNE_CONFIG_DIR', None)

if ENV_CONFIG_DIR is not None:
    ENV_CONFIG_DIR = Path(ENV_CONFIG_DIR)

    if ENV_CONFIG_DIR.exists():
        CONFIG_SEARCH_DIRS.append(ENV_CONFIG_DIR)
    else:
        output.fprint(
            "Invalid path in env var GCNTUNE_CONFIG_DIR: '{}'. Ignoring."
            .format(ENV_CONFIG_DIR),
            color=output.YELLOW,
            file=sys.stderr
        )

GCNTUNE_ROOT = Path(__file__).resolve().parents[2]

# Use this config file, if it exists.
ENV_CONFIG_FILE = os.environ.get('GCNTUNE_CONFIG_FILE', None)


class ExPathElem(yc.PathElem):
    """Expand environment variables and '~' in the path."""

    def validate(self, value, partial=False):
        path = super().validate(value, partial=partial)

        if path is None:
            return None
        elif isinstance(path, str):
            path = Path(path)

        path = Path(os.path.expandvars(path.as_posix()))
        return path.expanduser()


def config_dirs_validator(_, values):
    """Resolve the config directories, dropping any that don't exist."""

    config_dirs = []

    for value in values:
        path = Path(value)
        if not path.exists():
            output.fprint(
                "Config directory {} does not exist. Ignoring."
                .format(value),
                file=sys.stderr,
                color=output.YELLOW
            )
        elif path.resolve() not in config_dirs:
            config_dirs.append(path.resolve())

    return config_dirs


def _output_root(cfg, value):
    """Default to $GCNTUNE_OUTPUT_ROOT, then '<working_dir>/runs'."""

    if value is not None:
        return value

    env_root = os.environ.get('GCNTUNE_OUTPUT_ROOT')
    if env_root:
        return Path(os.path.expandvars(env_root)).expanduser()

    return cfg['working_dir']/'runs'


class GcnTuneConfigLoader(yc.YamlConfigLoader):
    """The format of the base gcntune.yaml config. Every element is optional
    or has a sensible default; gcntune must work with no config at all."""

    ELEMENTS = [
        yc.ListElem(
            "config_dirs",
            sub_elem=ExPathElem(),
            post_validator=config_dirs_validator,
            help_text="Additional paths to search for plugins. Plugins are "
                      "looked for in the 'plugins' directory of each."),
        ExPathElem(
            'working_dir', default=USER_HOME_DIR/'working_dir', required=True,
            help_text="Where gcntune puts its logs and, by default, its run "
                      "directories."),
        ExPathElem(
            'output_root',
            post_validator=_output_root,
            help_text="Where numbered run directories are created. Defaults "
                      "to $GCNTUNE_OUTPUT_ROOT, or 'runs' in the working "
                      "directory."),
        yc.IntRangeElem(
            "workers", default=1, vmin=1,
            help_text="Default number of threads used to train agents or "
                      "trials concurrently. Experiment configs and the "
                      "--workers option override this."),
        yc.ListElem(
            "disable_plugins", sub_elem=yc.StrElem(),
            help_text="Disable plugins by '<type>.<name>'. For example, "
                      "'method.hb' would disable the Hyperband method."),
        yc.StrElem(
            "log_format",
            default="{asctime}, {levelname}, {hostname}, {name}: {message}",
            help_text="The log format for the gcntune logger. Uses the "
                      "'{' format style."),
        yc.StrElem(
            "log_level", default="info",
            choices=['debug', 'info', 'warning', 'error', 'critical'],
            help_text="The minimum log level for messages sent to the gcntune "
                      "logfile."),
        ExPathElem(
            "result_log",
            post_validator=(lambda d, v: v if v is not None else
                            d['working_dir']/'results.log'),
            help_text="Each finished run logs its JSON summary here, one per "
                      "line. Defaults to 'results.log' in the working "
                      "directory."),
        ExPathElem(
            'exception_log',
            post_validator=(lambda d, v: v if v is not None else
                            d['working_dir']/'exceptions.log'),
            help_text="Full exception tracebacks and related debugging "
                      "information is logged here."),

        # Internal use only.
        ExPathElem(
            'cfg_file', hidden=True,
            help_text="The location of the loaded config file."),
        ExPathElem(
            'gcntune_root', default=GCNTUNE_ROOT, hidden=True,
            help_text="The root directory of the gcntune install."),
    ]


def find(target=None, warn=True):
    """Search for a gcntune.yaml configuration file. Use, in order:

- The given 'target' file (--config-file, or tests).
- The file named by the GCNTUNE_CONFIG_FILE environment variable.
- The first 'gcntune.yaml' in the current directory, ~/.gcntune, or
  $GCNTUNE_CONFIG_DIR.

With nothing found, return an empty/default config.

:raises RuntimeError: When a config file exists but doesn't load.
"""

    candidates = [Path(path) for path in (target, ENV_CONFIG_FILE)
                  if path is not None]
    candidates.extend(config_dir/CONFIG_NAME
                      for config_dir in CONFIG_SEARCH_DIRS)

    for path in candidates:
        if path.is_file():
            try:
                with path.open() as cfg_file:
                    cfg = GcnTuneConfigLoader().load(cfg_file)
            except Exception as err:
                raise RuntimeError("Error in gcntune config at {}: {}"
                                   .format(path, err))
            cfg.cfg_file = path
            return cfg

    if warn:
        LOGGER.warning("Could not find a gcntune config file. Using an "
                       "empty/default config.")
    return GcnTuneConfigLoader().load_empty()


def get_version():
    """Returns the current version of gcntune."""
    version_path = GCNTUNE_ROOT / 'RELEASE.txt'

    try:
        with version_path.open() as file:
            for line in file.readlines():
                if line.startswith('RELEASE='):
                    return line.split('=')[1].strip()

            return '<unknown>'

    except FileNotFoundError:
        return '<unknown>'
