"""This is the core gcntune script.
It shouldn't be run directly; use bin/gcntune instead."""

import os
import sys

# Numeric libraries read their thread counts once, at import time.
if '--deterministic' in sys.argv:
    for _var in ('OMP_NUM_THREADS', 'OPENBLAS_NUM_THREADS', 'MKL_NUM_THREADS'):
        os.environ[_var] = '1'

# pylint: disable=wrong-import-position
import logging
import traceback

from gcntune import arguments
from gcntune import commands
from gcntune import config
from gcntune import log_setup
from gcntune import output
from gcntune import plugins

try:
    import yaml_config  # noqa: F401 pylint: disable=unused-import
except ImportError:
    output.fprint(
        "Could not find python module 'yaml_config'. Did you install the "
        "packages in requirements.txt?",
        color=output.RED, file=sys.stderr)
    sys.exit(-1)


def _early_options(argv):
    """Pick the global --config-file and --verbose options out of argv,
    stopping at the sub-command name."""

    config_file = None
    verbose = False
    argv = list(argv)
    while argv and argv[0].startswith('-'):
        arg = argv.pop(0)
        if arg in ('-v', '--verbose'):
            verbose = True
        elif arg == '--config-file' and argv:
            config_file = argv.pop(0)
        elif arg.startswith('--config-file='):
            config_file = arg.split('=', 1)[1]
    return config_file, verbose


def main():
    """Setup gcntune and run a command."""

    if sys.version_info[0] != 3 or sys.version_info[1] < 6:
        output.fprint("gcntune requires python 3.6 or higher.",
                      color=output.RED,
                      file=sys.stderr)
        sys.exit(-1)

    # This has to be done before we initialize plugins
    parser = arguments.get_parser()

    # The config file and verbosity have to be known before the plugins
    # (and thus the sub-command parsers) are loaded.
    config_file, verbose = _early_options(sys.argv[1:])

    try:
        cfg = config.find(config_file)
    except Exception as err:
        output.fprint(
            "Error getting config, exiting: {}"
            .format(err),
            file=sys.stderr,
            color=output.RED)
        sys.exit(-1)

    for path in [cfg.working_dir, cfg.output_root]:
        try:
            path = path.expanduser()
            path.mkdir(parents=True, exist_ok=True)
        except OSError as err:
            output.fprint(
                "Could not create base directory '{}': {}"
                .format(path, err),
                color=output.RED,
                file=sys.stderr,
            )
            sys.exit(1)

    if not log_setup.setup_loggers(cfg, verbose=verbose):
        sys.exit(1)

    try:
        plugins.initialize_plugins(cfg)
    except plugins.PluginError as err:
        output.fprint(
            "Error initializing plugins: {}"
            .format(err),
            color=output.RED,
            file=sys.stderr)
        sys.exit(-1)

    args = parser.parse_args()

    if args.command_name is None:
        parser.print_help()
        sys.exit(0)

    run_cmd(cfg, args)


def run_cmd(cfg, args):
    """Run the chosen command, logging anything unexpected it raises."""

    try:
        cmd = commands.get_command(args.command_name)
    except KeyError:
        output.fprint(
            "Unknown command '{}'."
            .format(args.command_name),
            color=output.RED,
            file=sys.stderr)
        sys.exit(-1)

    try:
        sys.exit(cmd.run(cfg, args))
    except Exception as err:
        exc_info = {
            'traceback': traceback.format_exc(),
            'args': vars(args),
            'config': cfg,
        }

        json_data = output.json_dumps(exc_info)
        logger = logging.getLogger(log_setup.EXCEPTION_LOGGER)
        logger.error(json_data)

        output.fprint(
            "Unknown error running command {}: {}."
            .format(args.command_name, err),
            color=output.RED,
            file=sys.stderr,
        )
        traceback.print_exc(file=sys.stderr)

        output.fprint(
            "Traceback logged to {}".format(cfg.exception_log),
            color=output.RED,
            file=sys.stderr,
        )
        sys.exit(-1)


if __name__ == '__main__':
    main()
