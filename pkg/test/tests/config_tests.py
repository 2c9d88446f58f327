import io
import os
from unittest import mock

from gcntune import config
from gcntune.unittest import GcnTuneTestCase


class ConfigTests(GcnTuneTestCase):
    """The base gcntune.yaml config."""

    def test_defaults(self):
        """gcntune works with an empty config."""

        with mock.patch.dict(os.environ):
            os.environ.pop('GCNTUNE_OUTPUT_ROOT', None)
            cfg = config.GcnTuneConfigLoader().load_empty()

        self.assertEqual(cfg.workers, 1)
        self.assertEqual(cfg.log_level, 'info')
        self.assertEqual(cfg.output_root, cfg.working_dir/'runs')
        self.assertEqual(cfg.result_log, cfg.working_dir/'results.log')
        self.assertEqual(cfg.exception_log,
                         cfg.working_dir/'exceptions.log')

        with mock.patch.dict(os.environ,
                             {'GCNTUNE_OUTPUT_ROOT': str(self.tmp_path)}):
            cfg = config.GcnTuneConfigLoader().load_empty()
        self.assertEqual(cfg.output_root, self.tmp_path)

    def test_config_values(self):
        """Paths expand, missing config dirs are dropped, and bad values
        are rejected."""

        raw = io.StringIO(
            "config_dirs:\n"
            "  - {good}\n"
            "  - {bad}\n"
            "working_dir: ~/gcntune_wd\n"
            "output_root: {root}\n"
            "workers: 4\n".format(
                good=self.TEST_DATA_ROOT/'gcntune_config_dir',
                bad=self.tmp_path/'nope',
                root=self.tmp_path/'runs'))

        cfg = config.GcnTuneConfigLoader().load(raw)
        self.assertEqual(cfg.config_dirs,
                         [(self.TEST_DATA_ROOT/'gcntune_config_dir')
                          .resolve()])
        self.assertFalse(str(cfg.working_dir).startswith('~'))
        self.assertEqual(cfg.output_root, self.tmp_path/'runs')
        self.assertEqual(cfg.workers, 4)

        with self.assertRaises(ValueError):
            config.GcnTuneConfigLoader().load(io.StringIO("workers: 0\n"))
        with self.assertRaises(ValueError):
            config.GcnTuneConfigLoader().load(
                io.StringIO("log_level: chatty\n"))

    def test_find(self):
        """Explicit files win; broken files are errors; nothing found means
        defaults."""

        cfg = config.find(self.CONFIG_PATH)
        self.assertEqual(cfg.cfg_file, self.CONFIG_PATH)
        self.assertEqual(cfg.log_level, 'debug')

        bad = self.tmp_path/'gcntune.yaml'
        bad.write_text("workers: many\n")
        with self.assertRaises(RuntimeError):
            config.find(bad)

        with mock.patch.object(config, 'CONFIG_SEARCH_DIRS', []), \
                mock.patch.object(config, 'ENV_CONFIG_FILE', None):
            cfg = config.find(self.tmp_path/'missing.yaml', warn=False)
            self.assertIsNone(cfg.cfg_file)

            with mock.patch.object(config, 'CONFIG_SEARCH_DIRS',
                                   [self.CONFIG_PATH.parent]):
                self.assertEqual(config.find().cfg_file, self.CONFIG_PATH)

    def test_version(self):
        """The version comes from RELEASE.txt."""

        version = config.get_version()
        self.assertNotEqual(version, '<unknown>')
        self.assertTrue(version[0].isdigit())
