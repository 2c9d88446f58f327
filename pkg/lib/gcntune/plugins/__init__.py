"""Plugin loading for gcntune. Two categories exist: 'command' plugins
add subcommands to bin/gcntune and 'method' plugins provide tuning methods
along with their experiment config section. The core plugins live in this
package; more are picked up from 'plugins/' under each config dir, where
a higher priority method plugin replaces a core one of the same name.

Each category's base module provides a ``__reset()`` that forgets its
activated plugins, so unit tests can start from scratch.
"""

import inspect
import logging
import traceback
from pathlib import Path

from yapsy import PluginManager

from gcntune.commands import Command
from gcntune.methods import MethodPlugin

LOGGER = logging.getLogger('plugins')

_PLUGIN_MANAGER = None

PLUGIN_CATEGORIES = {
    'command': Command,
    'method': MethodPlugin,
}

__all__ = [
    "PluginError",
    "initialize_plugins",
    "list_plugins",
]


class PluginError(RuntimeError):
    """Raised for problems loading or activating plugins."""


def initialize_plugins(cfg):
    """Find and activate the core plugins and those in each config dir's
    'plugins' directory, skipping any named in cfg.disable_plugins
    (as 'category.name'). Later calls only warn.

    :param cfg: The gcntune configuration.
    :raises PluginError: When there's an issue with a plugin or the plugin
        system in general.
    """

    global _PLUGIN_MANAGER  # pylint: disable=W0603

    if _PLUGIN_MANAGER is not None:
        LOGGER.warning("Tried to initialize plugins multiple times.")
        return

    plugin_dirs = [Path(__file__).parent.as_posix()]
    plugin_dirs.extend((cfg_dir/'plugins').as_posix()
                       for cfg_dir in cfg.config_dirs)

    try:
        pman = PluginManager.PluginManager(directories_list=plugin_dirs,
                                           categories_filter=PLUGIN_CATEGORIES)

        pman.collectPlugins()
    except Exception as err:
        raise PluginError("Error initializing plugin system: {}".format(err))

    disabled = set(cfg.disable_plugins or [])
    unmatched = set(disabled)
    active = []
    for plugin in pman.getAllPlugins():
        dot_name = '{p.category}.{p.name}'.format(p=plugin)

        if dot_name in disabled:
            LOGGER.info("Plugin %s is disabled.", dot_name)
            unmatched.discard(dot_name)
            continue

        try:
            plugin.plugin_object.activate()
        except Exception as err:
            raise PluginError("Error activating plugin {name}:\n{err}\n{tb}"
                              .format(name=dot_name, err=err,
                                      tb=traceback.format_exc()))
        active.append(dot_name)

    for dot_name in sorted(unmatched):
        LOGGER.warning("disable_plugins names '%s', but no such plugin "
                       "was found. Entries look like 'method.hb'.",
                       dot_name)

    LOGGER.debug("Activated plugins: %s", ', '.join(active))
    _PLUGIN_MANAGER = pman


def list_plugins():
    """Return {category: {name: yapsy PluginInfo}} for every collected
    plugin, disabled ones included.
    :raises RuntimeError: If the plugin system isn't initialized.
    """

    if _PLUGIN_MANAGER is None:
        raise RuntimeError("Plugin system has not been initialized.")

    return {
        category: {plugin.name: plugin for plugin in
                   _PLUGIN_MANAGER.getPluginsOfCategory(category)}
        for category in _PLUGIN_MANAGER.getCategories()
    }


def _reset_plugins():
    """Reset the plugin system. This is for unittests only."""

    global _PLUGIN_MANAGER  # pylint: disable=W0603

    _PLUGIN_MANAGER = None

    for base in PLUGIN_CATEGORIES.values():
        module = inspect.getmodule(base)

        if hasattr(module, '__reset'):
            module.__reset()  # pylint: disable=W0212
