import csv

from gcntune import experiment
from gcntune import methods
from gcntune import plugins
from gcntune.file_format import ExperimentConfigError, ExperimentConfigLoader
from gcntune.unittest import GcnTuneTestCase

HYPER_NAMES = ['dropout_0', 'edge_drop', 'weight_decay']


class MethodTests(GcnTuneTestCase):
    """Each core tuning method, run end to end on a small graph."""

    def setUp(self):
        plugins.initialize_plugins(self.cfg)

    def tearDown(self):
        plugins._reset_plugins()

    def _run(self, method, **section):
        raw = self._quick_exp_cfg(method)
        raw[method].update(section)
        exp_cfg = experiment.load_experiment(self._write_exp_cfg(raw))
        return experiment.run_experiment(self.cfg, exp_cfg)

    @staticmethod
    def _read_csv(path):
        with path.open(newline='') as csv_file:
            return list(csv.DictReader(csv_file))

    def test_rs(self):
        """Random search writes one row per trial."""

        record = self._run('rs')
        summary = record.summary

        self.assertEqual(summary['epoch_budget'], 12)
        self.assertEqual(summary['extra']['trials'], 3)
        self.assertEqual(sorted(summary['hyper']), sorted(HYPER_NAMES))
        self.assertEqual(len(record.series()), 4)

        trials = self._read_csv(record.path/'trials.csv')
        self.assertEqual(len(trials), 3)
        self.assertEqual(list(trials[0]), ['trial_id', 'bracket', 'budget'] +
                         HYPER_NAMES + ['best_val_acc', 'test_acc', 'status'])
        best = max(float(row['best_val_acc']) for row in trials)
        self.assertEqual(summary['best_val_acc'], best)

    def test_hb(self):
        """Hyperband writes its trials and its bracket plan."""

        record = self._run('hb')
        summary = record.summary

        self.assertEqual(summary['extra']['trials'], 17)
        self.assertEqual(summary['extra']['sweeps'], 1)
        self.assertEqual(summary['epoch_budget'], 75)
        self.assertEqual(len(self._read_csv(record.path/'trials.csv')), 17)
        brackets = self._read_csv(record.path/'brackets.csv')
        self.assertEqual([row['configs'] for row in brackets],
                         ['9', '3', '1', '5', '2', '3'])

        # Without an explicit sweep count, the target decides.
        record = self._run('hb', sweeps=None, target_trials=30)
        self.assertEqual(record.summary['extra']['sweeps'], 2)
        self.assertEqual(record.summary['extra']['trials'], 34)

    def test_pbt(self):
        """Plain PBT writes the leaderboard, agent histories and final
        agent hyperparameters."""

        record = self._run('pbt')
        summary = record.summary

        self.assertEqual(summary['epoch_budget'], 18)
        self.assertEqual(summary['extra']['agents'], 3)
        self.assertEqual(len(record.series()), 6)

        board = self._read_csv(record.path/'leaderboard.csv')
        self.assertEqual(len(board), 9)
        self.assertEqual(list(board[0]), ['step', 'agent_id', 'val_acc',
                                          'tier', 'action'])
        for agent_id in range(3):
            history = self._read_csv(
                record.path/'agents'/str(agent_id)/'history.csv')
            self.assertEqual(len(history), 6)
            self.assertEqual({row['phase'] for row in history}, {'M'})
            self.assertTrue(
                (record.path/'agents'/str(agent_id)/'step_0.npz').exists())

        trials = self._read_csv(record.path/'trials.csv')
        self.assertEqual(len(trials), 3)
        self.assertEqual(sum(1 for row in trials if row['test_acc']), 1)

    def test_pst(self):
        """Population self-tuning reports the best agent."""

        record = self._run('pst')
        summary = record.summary

        self.assertEqual(summary['epoch_budget'], 18)
        self.assertIn(summary['extra']['best_agent'], (0, 1, 2))
        self.assertEqual(summary['extra']['dead_agents'], 0)
        history = self._read_csv(record.path/'agents'/'0'/'history.csv')
        self.assertIn('H', {row['phase'] for row in history})

        board = self._read_csv(record.path/'leaderboard.csv')
        for row in board:
            self.assertTrue(row['action'] in ('none', 'explored') or
                            row['action'].startswith('exploited_from:'),
                            row['action'])
        self.assertTrue(any(row['action'].startswith('exploited_from:')
                            for row in board))

    def test_bad_settings(self):
        """Settings the trainer or population reject are config errors."""

        with self.assertRaises(ExperimentConfigError) as context:
            self._run('st', schedule=[2, 0])
        self.assertIn("'st'", str(context.exception))

        with self.assertRaises(ExperimentConfigError) as context:
            self._run('pst', tiers=[0.5, 0.6, 0.2])
        self.assertIn('pst', str(context.exception))

        with self.assertRaises(ExperimentConfigError):
            self._run('pbt', warmup_epochs=7)

    def test_settings(self):
        """Method sections map onto train settings."""

        raw = self._quick_exp_cfg('st')
        raw['st'].update({'tau': 0.5, 'schedule': [3, 1], 'init_sigma': 0.2})
        exp_cfg = experiment.load_experiment(self._write_exp_cfg(raw))
        graph, _ = experiment.load_dataset(exp_cfg, 0)
        ctx = methods.RunContext(graph, exp_cfg, 0, 1, self.tmp_path/'run')

        settings = methods.get_plugin('st').settings(ctx)
        self.assertEqual(settings.num_layers, 2)
        self.assertEqual(settings.hidden, 8)
        self.assertEqual(settings.tau, 0.5)
        self.assertEqual(settings.schedule, (3, 1))
        self.assertEqual(settings.init_sigma, 0.2)
        self.assertEqual(settings.max_epochs, 6)

        self.assertEqual(ctx.space.names, HYPER_NAMES)
        self.assertEqual(ctx.method_cfg['lr_theta'], 0.01)

    def test_shipped_configs(self):
        """The configs in configs/ load, with the per-dataset rates."""

        configs = self.GCNTUNE_ROOT_DIR/'configs'
        layer_cfgs = sorted(configs.glob('*layer.yaml'))
        self.assertEqual(len(layer_cfgs), 6)

        for path in layer_cfgs:
            with path.open() as cfg_file:
                exp_cfg = ExperimentConfigLoader().load(cfg_file)
            dataset, layers = path.stem.split('_')
            self.assertEqual(exp_cfg['dataset']['name'], dataset)
            self.assertEqual('{}layer'.format(exp_cfg['model']['layers']),
                             layers)
            self.assertEqual(exp_cfg['model']['hidden'], 128)
            self.assertEqual(exp_cfg['st']['max_epochs'], 400)
            self.assertEqual(exp_cfg['rs']['lr_theta'],
                             0.09 if dataset == 'citeseer' else 0.01)
            self.assertEqual(exp_cfg['st']['lr_theta'],
                             0.005 if dataset == 'pubmed' else 0.0005)

        exp_cfg = experiment.load_experiment(configs/'synthetic.yaml')
        graph, info = experiment.load_dataset(exp_cfg, exp_cfg['seed'])
        self.assertEqual(graph.num_nodes, 600)
        self.assertEqual(graph.num_features, 32)
        self.assertEqual(info['name'], 'synthetic')
        self.assertIn('oracle_acc', info)
