import errno
import json

from gcntune import arguments
from gcntune import commands
from gcntune import experiment
from gcntune import plugins
from gcntune.status_file import STATES
from gcntune.unittest import GcnTuneTestCase


class CommandTests(GcnTuneTestCase):
    """The run, generate and report commands."""

    def setUp(self):
        plugins.initialize_plugins(self.cfg)

    def tearDown(self):
        plugins._reset_plugins()

    def _command(self, *argv):
        """Parse argv and return the silenced command and its arguments."""

        args = arguments.get_parser().parse_args([str(arg) for arg in argv])
        cmd = commands.get_command(args.command_name)
        cmd.silence()
        return cmd, args

    def test_run_cmd(self):
        """The run command runs the experiment and says where it went."""

        cfg_path = self._write_exp_cfg(self._quick_exp_cfg('const'))
        run_cmd, args = self._command('run', '--config', cfg_path,
                                      '--seed', 3)

        self.assertEqual(run_cmd.run(self.cfg, args), 0)
        out, err = run_cmd.clear_output()
        self.assertIn("Run 1 (const on quick, L=2)", out)
        self.assertIn("test acc 0.2500", out)
        self.assertEqual(err, '')

        record = run_cmd.last_run
        self.assertEqual(record.summary['seed'], 3)
        self.assertEqual(record.status.current().state, STATES.COMPLETE)
        self.assertIn(str(record.path), out)

        # Overriding the method on the command line.
        run_cmd, args = self._command('run', '--config', cfg_path,
                                      '--method', 'st')
        self.assertEqual(run_cmd.run(self.cfg, args), 0)
        self.assertEqual(run_cmd.last_run.summary['method'], 'st')
        self.assertEqual(run_cmd.last_run.run_id, 2)

    def test_run_cmd_errors(self):
        """Bad configs and options are reported, not raised."""

        run_cmd, args = self._command(
            'run', '--config', self.tmp_path/'nope.yaml')
        self.assertEqual(run_cmd.run(self.cfg, args), errno.EINVAL)
        _, err = run_cmd.clear_output()
        self.assertIn("Error in experiment config", err)

        cfg_path = self._write_exp_cfg(self._quick_exp_cfg('const'))
        run_cmd, args = self._command('run', '--config', cfg_path,
                                      '--workers', 0)
        self.assertEqual(run_cmd.run(self.cfg, args), errno.EINVAL)
        _, err = run_cmd.clear_output()
        self.assertIn("--workers", err)

        run_cmd, args = self._command('run', '--config', cfg_path,
                                      '--method', 'nope')
        self.assertEqual(run_cmd.run(self.cfg, args), errno.EINVAL)

        raw = self._quick_exp_cfg('pst')
        raw['pst']['warmup_epochs'] = 10
        cfg_path = self._write_exp_cfg(raw, 'bad_warmup.yaml')
        run_cmd, args = self._command('run', '--config', cfg_path)
        self.assertEqual(run_cmd.run(self.cfg, args), errno.EINVAL)
        _, err = run_cmd.clear_output()
        self.assertIn('warmup_epochs', err)

    def test_generate_cmd(self):
        """Generate writes the dataset files and prints the oracle."""

        spec_path = self._quick_spec_file()
        out_dir = self.tmp_path/'gen'
        gen_cmd, args = self._command('generate', '--spec', spec_path,
                                      '--out', out_dir, '--seed', 2)

        self.assertEqual(gen_cmd.run(self.cfg, args), 0)
        out, _ = gen_cmd.clear_output()
        self.assertIn("Generated 'quick': 60 nodes", out)
        for name in ('quick.content', 'quick.cites', 'oracle.json'):
            self.assertTrue((out_dir/name).exists(), name)
            self.assertIn(str(out_dir/name), out)

        with (out_dir/'oracle.json').open() as oracle_file:
            self.assertIn('oracle_acc', json.load(oracle_file))

        gen_cmd, args = self._command('generate', '--spec',
                                      self.tmp_path/'nope.yaml',
                                      '--out', out_dir)
        self.assertEqual(gen_cmd.run(self.cfg, args), errno.EINVAL)

    def test_report_cmd(self):
        """Report tabulates finished runs into a CSV and series files."""

        for method in ('const', 'st'):
            cfg_path = self._write_exp_cfg(self._quick_exp_cfg(method),
                                           method + '.yaml')
            run_cmd, args = self._command('run', '--config', cfg_path)
            self.assertEqual(run_cmd.run(self.cfg, args), 0)

        out_path = self.tmp_path/'report'/'table.csv'
        rep_cmd, args = self._command('report', self.tmp_path/'runs',
                                      '--out', out_path)
        self.assertEqual(rep_cmd.run(self.cfg, args), 0)
        out, _ = rep_cmd.clear_output()
        self.assertIn("Test accuracy (%)", out)
        self.assertIn("Wrote {}".format(out_path), out)

        with out_path.open() as table_file:
            lines = table_file.read().splitlines()
        self.assertEqual(lines[0], 'dataset,layers,st,const')
        self.assertEqual(lines[1].split(',')[:2], ['quick', '2'])
        self.assertEqual(lines[1].split(',')[3], '25.0')

        series_dir = out_path.with_name('table.csv.series')
        self.assertEqual(
            sorted(path.name for path in series_dir.iterdir()),
            ['quick_2layer_const_1.csv', 'quick_2layer_st_2.csv'])

        # Running st again duplicates a cell.
        cfg_path = self._write_exp_cfg(self._quick_exp_cfg('st'), 'st.yaml')
        run_cmd, args = self._command('run', '--config', cfg_path)
        self.assertEqual(run_cmd.run(self.cfg, args), 0)

        rep_cmd, args = self._command('report', self.tmp_path/'runs',
                                      '--out', out_path)
        self.assertEqual(rep_cmd.run(self.cfg, args), errno.EINVAL)
        _, err = rep_cmd.clear_output()
        self.assertIn('--aggregate', err)

        rep_cmd, args = self._command('report', self.tmp_path/'runs',
                                      '--out', out_path, '--aggregate')
        self.assertEqual(rep_cmd.run(self.cfg, args), 0)

        rep_cmd, args = self._command('report', self.tmp_path/'nope',
                                      '--out', out_path)
        self.assertEqual(rep_cmd.run(self.cfg, args), errno.EINVAL)

        # Runs without a summary are skipped with a warning.
        (self.tmp_path/'runs'/'0000009').mkdir()
        (self.tmp_path/'runs'/'0000009'/experiment.STATUS_FILE).touch()
        rep_cmd, args = self._command('report', self.tmp_path/'runs',
                                      '--out', out_path, '--aggregate')
        self.assertEqual(rep_cmd.run(self.cfg, args), 0)
        _, err = rep_cmd.clear_output()
        self.assertIn("Skipped 1 run", err)
