import logging

from gcntune import arguments
from gcntune import commands
from gcntune import config
from gcntune import methods
from gcntune import plugins
from gcntune.file_format import ExperimentConfigLoader
from gcntune.unittest import GcnTuneTestCase

LOGGER = logging.getLogger(__name__)

CORE_METHODS = ['hb', 'pbt', 'pst', 'rs', 'st']


class PluginTests(GcnTuneTestCase):

    def setUp(self):
        # This has to run before any command plugins are loaded.
        arguments.get_parser()

    def tearDown(self):
        plugins._reset_plugins()

    def _cfg(self, *dirs):
        """An empty gcntune config with the given config dirs."""

        cfg = config.GcnTuneConfigLoader().load_empty()
        cfg.config_dirs = [self.TEST_DATA_ROOT/name for name in dirs]
        for path in cfg.config_dirs:
            self.assertTrue(path.exists())
        return cfg

    def _method_keys(self, name):
        """The keys of a method's section in the experiment config
        format."""

        for elem in ExperimentConfigLoader.ELEMENTS:
            if elem.name == name:
                return sorted(sub.name for sub in elem.config_elems.values())
        return None

    def test_plugin_loading(self):
        """Check to make sure the plugin system initializes correctly."""

        cfg = self._cfg('gcntune_config_dir', 'gcntune_config_dir2')

        plugins.initialize_plugins(cfg)

        created_manager = plugins._PLUGIN_MANAGER

        # Make sure this can run multiple times,
        with self.assertLogs('plugins', 'WARNING'):
            plugins.initialize_plugins(cfg)

        # Make sure only one of these is ever created.
        self.assertIs(created_manager, plugins._PLUGIN_MANAGER)

        listed = plugins.list_plugins()
        self.assertIn('run', listed['command'])
        self.assertIn('const', listed['method'])

        plugins._reset_plugins()
        with self.assertRaises(RuntimeError):
            plugins.list_plugins()

    def test_method_plugins(self):
        """Core methods load; user plugins override them by priority and
        bring their own config sections."""

        plugins.initialize_plugins(self._cfg('gcntune_config_dir'))

        self.assertEqual(sorted(methods.list_plugins()),
                         sorted(CORE_METHODS + ['const']))
        for name in CORE_METHODS:
            plugin = methods.get_plugin(name)
            self.assertEqual(plugin.priority, plugin.PRIO_CORE)
            self.assertIsNotNone(self._method_keys(name))
        self.assertIn('val_acc', self._method_keys('const'))
        self.assertIn('tau', self._method_keys('st'))
        self.assertIn('agents', self._method_keys('pst'))
        self.assertNotIn('tau', self._method_keys('pbt'))

        with self.assertRaises(methods.MethodPluginError):
            methods.get_plugin('nope')

        plugins._reset_plugins()
        self.assertEqual(methods.list_plugins(), [])
        self.assertIsNone(self._method_keys('const'))

        plugins.initialize_plugins(
            self._cfg('gcntune_config_dir', 'gcntune_config_dir2'))
        user_st = methods.get_plugin('st')
        self.assertEqual(user_st.priority, user_st.PRIO_USER)
        self.assertEqual(self._method_keys('st'), ['flavor'])

        plugins._reset_plugins()
        self.assertIsNone(self._method_keys('st'))

    def test_plugin_conflicts(self):
        """Two plugins for one method at the same priority are an error."""

        cfg = self._cfg('gcntune_config_dir', 'gcntune_config_dir_conflicts')
        with self.assertRaises(plugins.PluginError):
            plugins.initialize_plugins(cfg)

    def test_bad_plugins(self):
        """Plugins that fail to activate stop the plugin system."""

        with self.assertRaises(plugins.PluginError):
            plugins.initialize_plugins(self._cfg('bad_plugins'))

    def test_disable_plugins(self):
        """Disabled plugins are never activated."""

        cfg = self._cfg('gcntune_config_dir')
        cfg.disable_plugins = ['method.hb', 'command.poof']
        plugins.initialize_plugins(cfg)

        self.assertNotIn('hb', methods.list_plugins())
        self.assertIsNone(self._method_keys('hb'))
        with self.assertRaises(KeyError):
            commands.get_command('poof')
        commands.get_command('run')

    def test_disable_unknown_plugin(self):
        """Disabling a plugin that doesn't exist is only a warning."""

        cfg = self._cfg('gcntune_config_dir')
        cfg.disable_plugins = ['method.hyperband']
        with self.assertLogs('plugins', 'WARNING') as logs:
            plugins.initialize_plugins(cfg)

        self.assertIn('method.hyperband', '\n'.join(logs.output))
        self.assertIn('hb', methods.list_plugins())

    def test_command_plugins(self):
        """Make sure command plugin loading is sane."""

        plugins.initialize_plugins(self._cfg('gcntune_config_dir'))

        poof = commands.get_command('poof')
        poof.silence()
        self.assertEqual(poof.run(self.cfg, []), 0)
        self.assertEqual(poof.clear_output(), ('POOF\n', ''))

        for name in ('run', 'generate', 'report'):
            cmd = commands.get_command(name)
            self.assertEqual(cmd.name, name)
            self.assertIsNotNone(cmd.short_help)

        with self.assertRaises(RuntimeError):
            poof.deactivate()
