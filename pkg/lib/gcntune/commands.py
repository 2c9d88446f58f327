# Base classes and methods for Command plugins

# pylint: disable=W0603

import errno
import inspect
import io
import logging
import sys

from yapsy import IPlugin

from gcntune import arguments
from gcntune import output

_COMMANDS = {}


def __reset():
    """Reset the command plugins. This is only to be used as part of
    unittests."""

    global _COMMANDS

    _COMMANDS = {}

    arguments.reset_parser()


class CommandError(RuntimeError):
    """The error type commands should raise for semi-expected errors."""


def add_command(command):
    """Register a command under its name and each of its aliases.

:param Command command: The command object to add
"""

    for name in [command.name] + command.aliases:
        if name in _COMMANDS:
            raise RuntimeError(
                "Command '{}' is defined by both {} and {}."
                .format(name, _COMMANDS[name].file, command.file))
        _COMMANDS[name] = command


def get_command(command_name):
    """Return the command of the given name.

    :param str command_name: The name of the command to search for.
    :rtype: Command
    :raises KeyError: When there's no such command.
    """

    return _COMMANDS[command_name]


class Command(IPlugin.IPlugin):
    """Provides a gcntune command via a plugin.

    Commands write through ``outfile`` and ``errfile`` so tests can capture
    them with ``silence()``. Expected failures are reported with
    ``_error()``, which returns an errno style exit code; anything else
    propagates to bin/gcntune.py.
    """

    def __init__(self, name, description, short_help=None, aliases=None):
        """
        :param name: The subcommand name.
        :param str description: The help header shown by
            'gcntune <cmd> --help'.
        :param str short_help: The one line shown by 'gcntune --help'. When
            None, the command isn't listed there.
        :param list aliases: Other names for the command.
        """
        super().__init__()

        self.logger = logging.getLogger('command.' + name)
        self.name = name
        self.file = inspect.getfile(self.__class__)
        self.description = description
        self.short_help = short_help
        self.aliases = [] if aliases is None else list(aliases)

        self.outfile = sys.stdout
        self.errfile = sys.stderr

        self._parser = None

    def _setup_arguments(self, parser):
        """Add this command's arguments to its sub-command parser. ::

    parser.add_argument('--seed', type=int, default=None,
                        help="Override the root seed.")

:param argparse.ArgumentParser parser: The parser object.
"""

    def activate(self):
        """Called by yapsy: add our sub-command parser and arguments, then
        register the command."""

        sub_parser = arguments.get_subparser()

        kwargs = {'aliases': self.aliases, 'description': self.description}
        # argparse lists a subcommand whenever 'help' is given, even when
        # it's None.
        if self.short_help is not None:
            kwargs['help'] = self.short_help

        self._parser = sub_parser.add_parser(self.name, **kwargs)
        self._setup_arguments(self._parser)

        add_command(self)

    def deactivate(self):
        """You can't deactivate commands."""
        raise RuntimeError("Command plugins cannot be deactivated.")

    def run(self, cfg, args):
        """Override this method with your command's code.

:param cfg: The gcntune configuration object.
:param argparse.Namespace args: The parsed arguments.
:return: 0 on success, an errno code otherwise.
"""
        raise NotImplementedError(
            "Command plugins must override the 'run' method.")

    def _error(self, msg, code=errno.EINVAL):
        """Print msg in red to our error file and return the given exit
        code."""

        self.logger.info("%s failed: %s", self.name, msg)
        output.fprint(msg, color=output.RED, file=self.errfile)
        return code

    def __repr__(self):
        return '<{} from file {} named {}>'.format(
            self.__class__.__name__, self.file, self.name)

    def silence(self):
        """Convert the command to use string IO for its output and error
        output."""
        self.outfile = io.StringIO()
        self.errfile = io.StringIO()

    def clear_output(self):
        """Empty the silenced output buffers, returning (out, err)."""

        if not isinstance(self.outfile, io.StringIO):
            raise RuntimeError("Only silenced commands can be cleared.")

        captured = []
        for buf in self.outfile, self.errfile:
            captured.append(buf.getvalue())
            buf.seek(0)
            buf.truncate(0)

        return tuple(captured)
