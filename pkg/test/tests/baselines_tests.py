from unittest import mock

from gcntune import baselines
from gcntune import hyper
from gcntune import nn
from gcntune import trainer
from gcntune import utils
from gcntune.unittest import GcnTuneTestCase


class BaselineTests(GcnTuneTestCase):
    """Random search, Hyperband and plain PBT."""

    def test_hyperband_schedule(self):
        """The bracket plan for R=81, eta=3."""

        self.assertEqual(baselines.hyperband_schedule(81, 3), [
            [(81, 1), (27, 3), (9, 9), (3, 27), (1, 81)],
            [(34, 3), (12, 9), (4, 27), (2, 81)],
            [(15, 9), (5, 27), (2, 81)],
            [(8, 27), (3, 81)],
            [(5, 81)],
        ])
        self.assertEqual(baselines.hyperband_schedule(9, 3), [
            [(9, 1), (3, 3), (1, 9)],
            [(5, 3), (2, 9)],
            [(3, 9)],
        ])

        with self.assertRaises(baselines.SearchError):
            baselines.hyperband_schedule(81, 1)
        with self.assertRaises(baselines.SearchError):
            baselines.hyperband_schedule(2, 3)

        # 143 configurations per sweep.
        self.assertEqual(baselines.sweeps_for_target(81, 3, 200), 1)
        self.assertEqual(baselines.sweeps_for_target(81, 3, 300), 2)
        self.assertEqual(baselines.sweeps_for_target(81, 3, 10), 1)

    def test_random_search(self):
        """Every trial trains for the full budget; the best is the highest
        validation accuracy."""

        gph = self._quick_graph()
        space = hyper.HyperSpace.for_layers(2)
        settings = self._quick_settings()

        result = baselines.random_search(space, gph, 3, 4, seed=5,
                                         settings=settings)
        self.assertEqual(result.num_trials, 3)
        self.assertEqual(result.epoch_budget, 3 * 4)
        self.assertEqual(result.best.best_val_acc,
                         max(t.best_val_acc for t in result.trials))
        for trial in result.trials:
            self.assertEqual(trial.budget, 4)
            self.assertIsNone(trial.state)
            self.assertEqual(trial.history.phases, ['M'] * 4)
            self.assertEqual(trial.status, baselines.COMPLETE)
            for dim, val in zip(space.dims, trial.lam):
                self.assertTrue(dim.bounds[0] <= val <= dim.bounds[1])

        again = baselines.random_search(space, gph, 3, 4, seed=5,
                                        settings=settings)
        self.assertEqual([t.lam.tolist() for t in again.trials],
                         [t.lam.tolist() for t in result.trials])
        self.assertEqual([t.best_val_acc for t in again.trials],
                         [t.best_val_acc for t in result.trials])
        self.assertEqual(again.best.id, result.best.id)

        with self.assertRaises(baselines.SearchError):
            baselines.random_search(space, gph, 0, 4, seed=0)

        columns = baselines.trial_columns(space)
        # The status column trails the documented result columns.
        self.assertEqual(columns[:3], ['trial_id', 'bracket', 'budget'])
        self.assertEqual(columns[-3:], ['best_val_acc', 'test_acc', 'status'])
        self.assertEqual(list(result.best.row()), columns)
        self.assertEqual(baselines.point_hyper(result.best).lam.tolist(),
                         result.best.lam.tolist())

    def test_hyperband(self):
        """Successive halving keeps the top ceil(n/eta) and continues them
        from their current state."""

        gph = self._quick_graph()
        space = hyper.HyperSpace.for_layers(2)

        result = baselines.hyperband(space, gph, 9, eta=3, seed=1,
                                     settings=self._quick_settings())

        self.assertEqual(result.num_trials, 9 + 5 + 3)
        # Bracket 2: 6 trials stop at 1 epoch, 2 at 3, 1 at 9. Bracket 1:
        # 3 at 3 and 2 at 9. Bracket 0: 3 at 9.
        self.assertEqual(result.epoch_budget, 21 + 27 + 27)
        self.assertEqual(sorted(t.budget for t in result.trials
                                if t.bracket == 2), [1] * 6 + [3] * 2 + [9])
        self.assertEqual([(row['bracket'], row['rung'], row['configs'])
                          for row in result.brackets],
                         [(2, 0, 9), (2, 1, 3), (2, 2, 1),
                          (1, 0, 5), (1, 1, 2), (0, 0, 3)])
        for trial in result.trials:
            self.assertIsNone(trial.state)
            self.assertEqual(len(trial.history), trial.budget)

        twice = baselines.hyperband(space, gph, 9, eta=3, seed=1,
                                    settings=self._quick_settings(),
                                    sweeps=2)
        self.assertEqual(twice.num_trials, 34)
        self.assertEqual(twice.brackets[-1]['sweep'], 1)

    def test_dead_trial(self):
        """Diverged trials are dead, with zero accuracy."""

        gph = self._quick_graph()
        space = hyper.HyperSpace.for_layers(2)
        trial = baselines.Trial(0, space.draw_u(
            utils.make_rng(0)), space)

        abort = trainer.TrainingAborted("diverged", epoch=2)
        with mock.patch.object(trainer, 'alternate_loop', side_effect=abort):
            with self.assertLogs('gcntune.baselines', 'WARNING'):
                baselines.train_trial(trial, gph, self._quick_settings(),
                                      4, 0)

        self.assertEqual(trial.status, baselines.DEAD)
        self.assertEqual(trial.best_val_acc, 0.0)
        self.assertEqual(trial.row()['status'], 'dead')
        self.assertIn('diverged', trial.diagnostic)

        # Dead trials are never trained again.
        baselines.train_trial(trial, gph, self._quick_settings(), 4, 0)
        self.assertEqual(trial.status, baselines.DEAD)

    def test_eval_blowup_kills_trials(self):
        """Evaluation blowups end trials instead of the whole search."""

        gph = self._quick_graph()
        boom = nn.NumericError("Non-finite activations", layer=1)
        with mock.patch.object(trainer, 'evaluate_state', side_effect=boom):
            result = baselines.random_search(
                hyper.HyperSpace.for_layers(2), gph, 3, 4, seed=0,
                settings=self._quick_settings(), workers=2)

        self.assertEqual([trial.status for trial in result.trials],
                         [baselines.DEAD] * 3)
        self.assertEqual(result.epoch_budget, 0)

    def test_pbt_baseline(self):
        """Plain PBT agents are fixed hyperparameter GCNs with frozen
        hypernets."""

        gph = self._quick_graph()
        space = hyper.HyperSpace.for_layers(2)

        with self.assertRaises(baselines.SearchError):
            baselines.pbt_baseline(space, gph, 2, 4, seed=0)

        trial, result = baselines.pbt_baseline(
            space, gph, 3, 4, seed=0, settings=self._quick_settings(),
            pop_options={'warmup_epochs': 2, 'step_epochs': 1})

        self.assertEqual(trial.budget, 4)
        self.assertEqual(trial.id, result.best.id)
        self.assertEqual(trial.test_acc, result.test_acc)
        self.assertEqual(result.epoch_budget, 12)
        for agent in result.agents:
            state = agent.state
            self.assertIsNotNone(state.fixed_hyper)
            self.assertEqual(state.history.phases, ['M'] * 4)
            for name in nn.ModelParams.names_of(2, ('e_W', 'e_b')):
                self.assertFalse(state.params.arrays()[name].any())
