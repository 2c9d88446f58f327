"""Sets up the base set of gcntune arguments, and allows command plugins to
add sub-commands.
"""
# pylint: disable=W0603

import argparse

import gcntune.config

_PARSER = None
_SUB_PARSER = None


def get_parser():
    """Get the main gcntune argument parser, defining it if needed."""

    global _PARSER
    global _SUB_PARSER

    if _PARSER is not None:
        return _PARSER

    parser = argparse.ArgumentParser(
        prog='gcntune',
        description="gcntune tunes the hyperparameters of deep graph "
                    "convolutional networks with self-tuning layers, "
                    "population based training and classic search "
                    "baselines.")
    parser.add_argument('-v', '--verbose', dest='verbose', action='store_true',
                        default=False,
                        help='Log all levels of messages to stderr.')
    parser.add_argument('--version', action='version',
                        version='gcntune ' + gcntune.config.get_version(),
                        default=False,
                        help='Displays the current version of gcntune.')
    parser.add_argument(
        '--config-file', dest='config_file', default=None,
        help="Use this gcntune.yaml instead of searching for one.")

    _PARSER = parser
    _SUB_PARSER = parser.add_subparsers(dest='command_name')

    return parser


def get_subparser():
    """Get the sub-command parser object. Command plugins get their own
parser through ``_setup_arguments`` and shouldn't normally need this.

:rtype: argparse._SubParsersAction
"""

    if _PARSER is None:
        raise RuntimeError("get_parser() must be called to setup the base "
                           "argument parser before calling get_subparser.")

    return _SUB_PARSER


def reset_parser():
    """Reset back to the base parser. This is for unittests only."""

    global _PARSER

    _PARSER = None

    get_parser()
