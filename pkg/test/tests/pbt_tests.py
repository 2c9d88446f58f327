from unittest import mock

from gcntune import pbt
from gcntune import trainer
from gcntune.unittest import GcnTuneTestCase


class PBTTests(GcnTuneTestCase):
    """Population tiers, exploit, explore and full population runs."""

    def _ready_agents(self, count, seed=0, plain=False):
        gph = self._quick_graph()
        agents = pbt.make_agents(gph, self._quick_settings(), count, seed,
                                 plain=plain)
        # Distinct accuracies in a scrambled order.
        for agent in agents:
            agent.last_val_acc = ((agent.id * 7) % count) / count
            agent.status = pbt.READY
        return gph, agents

    def test_tier_sizes(self):
        """Top rounds up, bottom rounds down."""

        self.assertEqual(pbt.tier_sizes(3), (1, 1, 1))
        self.assertEqual(pbt.tier_sizes(9), (3, 3, 3))
        self.assertEqual(pbt.tier_sizes(10), (4, 3, 3))
        self.assertEqual(pbt.tier_sizes(20), (7, 7, 6))
        self.assertEqual(pbt.tier_sizes(1), (1, 0, 0))
        self.assertEqual(pbt.tier_sizes(10, (0.2, 0.6, 0.2)), (2, 6, 2))

        for bad in ((0.5, 0.5), (0.5, 0.6, -0.1), (0.5, 0.5, 0.5)):
            with self.assertRaises(pbt.PopulationError):
                pbt.tier_sizes(9, bad)

    def test_rank_and_tiers(self):
        """Ranking is by accuracy then id, and skips dead agents."""

        _, agents = self._ready_agents(6)
        agents[0].last_val_acc = agents[1].last_val_acc = 0.9
        agents[5].status = pbt.DEAD

        ranked = pbt.rank(agents)
        self.assertEqual([a.id for a in ranked[:2]], [0, 1])
        self.assertNotIn(agents[5], ranked)

        tiers = pbt.assign_tiers(agents)
        self.assertEqual(tiers[5], pbt.DEAD)
        self.assertEqual(tiers[0], pbt.TOP)
        self.assertEqual(sorted(tiers.values()).count(pbt.TOP), 2)
        self.assertEqual(sorted(tiers.values()).count(pbt.BOTTOM), 1)

    def test_exploit(self):
        """Bottom agents take a top agent's full state; top agents and the
        best accuracy are untouched."""

        for count in (3, 9, 10):
            _, agents = self._ready_agents(count)
            tiers = pbt.assign_tiers(agents)
            sums = {agent.id: agent.state.checksum() for agent in agents}
            seeds = {agent.id: agent.state.seed for agent in agents}
            best = max(agent.last_val_acc for agent in agents)

            copies = pbt.exploit(agents, 42)

            bottom = [aid for aid, tier in tiers.items()
                      if tier == pbt.BOTTOM]
            self.assertEqual(sorted(copies), sorted(bottom))
            self.assertEqual(len(bottom), pbt.tier_sizes(count)[2])
            for agent in agents:
                if agent.id in copies:
                    source = copies[agent.id]
                    self.assertEqual(tiers[source], pbt.TOP)
                    self.assertEqual(agent.state.checksum(), sums[source])
                    self.assertEqual(agent.state.dist,
                                     agents[source].state.dist)
                else:
                    self.assertEqual(agent.state.checksum(), sums[agent.id])
                self.assertEqual(agent.state.seed, seeds[agent.id])

            self.assertEqual(max(agent.last_val_acc for agent in agents),
                             best)

            # The copy is independent of its source.
            target = agents[bottom[0]]
            target.state.params.layers[0].W[0, 0] += 1.0
            self.assertEqual(agents[copies[target.id]].state.checksum(),
                             sums[copies[target.id]])

        _, first = self._ready_agents(9)
        _, second = self._ready_agents(9)
        self.assertEqual(pbt.exploit(first, 1), pbt.exploit(second, 1))

    def test_exploit_guards(self):
        """Exploit needs three live agents, all at the barrier."""

        _, agents = self._ready_agents(4)
        agents[0].status = pbt.DEAD
        agents[1].status = pbt.DEAD
        with self.assertLogs('gcntune.pbt', 'WARNING'):
            self.assertEqual(pbt.exploit(agents, 0), {})

        _, agents = self._ready_agents(4)
        agents[2].status = pbt.RUNNING
        with self.assertRaises(pbt.PopulationError):
            pbt.exploit(agents, 0)

    def test_explore(self):
        """Explore only moves the hyperparameter distribution."""

        gph, agents = self._ready_agents(3)
        agent = agents[0]
        params = agent.state.checksum()
        dist = agent.state.dist.copy()

        pbt.explore(agent, gph, 5)
        self.assertEqual(agent.state.checksum(), params)
        self.assertNotEqual(agent.state.dist.mu.tolist(), dist.mu.tolist())
        self.assertNotEqual(agent.state.dist.sigma.tolist(),
                            dist.sigma.tolist())

        gph, agents = self._ready_agents(3, plain=True)
        agent = agents[1]
        params = agent.state.checksum()
        point = agent.state.fixed_hyper.lam.copy()
        pbt.explore(agent, gph, 5)
        self.assertEqual(agent.state.checksum(), params)
        self.assertNotEqual(agent.state.fixed_hyper.lam.tolist(),
                            point.tolist())
        self.assertTrue((agent.state.fixed_hyper.u ==
                         agent.state.dist.mu).all())

    def test_run_population(self):
        """A population warms up, steps to the end, checkpoints, and gives
        the same answer with any number of workers."""

        gph = self._quick_graph()
        settings = self._quick_settings()

        def run(workers, ckpt_dir=None):
            agents = pbt.make_agents(gph, settings, 3, 11)
            pop = pbt.Population(agents, step_epochs=1, warmup_epochs=3,
                                 seed=11, workers=workers,
                                 checkpoint_dir=ckpt_dir)
            return pbt.run_population(pop, gph, 6)

        ckpt_dir = self.tmp_path/'agents'
        result = run(1, ckpt_dir)

        self.assertEqual(result.epoch_budget, 18)
        self.assertEqual(len(result.leaderboard), 3 * 3)
        self.assertEqual([row['step'] for row in result.leaderboard[::3]],
                         [1, 2, 3])
        for agent in result.agents:
            self.assertEqual(agent.state.epoch, 6)
            self.assertEqual(agent.status, pbt.READY)
            for step in (0, 3):
                self.assertTrue(
                    (ckpt_dir/str(agent.id)/'step_{}.npz'.format(step))
                    .exists())
        self.assertFalse((ckpt_dir/'0'/'step_1.npz').exists())
        self.assertIsNotNone(result.test_acc)
        self.assertEqual(result.best, pbt.rank(result.agents)[0])

        threaded = run(3)
        self.assertEqual(threaded.leaderboard, result.leaderboard)
        self.assertEqual([a.state.checksum() for a in threaded.agents],
                         [a.state.checksum() for a in result.agents])

    def test_population_errors(self):
        """Bad populations and fully dead populations are errors."""

        gph = self._quick_graph()
        agents = pbt.make_agents(gph, self._quick_settings(), 3, 0)

        with self.assertRaises(pbt.PopulationError):
            pbt.Population([])
        with self.assertRaises(pbt.PopulationError):
            pbt.Population(agents, step_epochs=0)
        with self.assertRaises(pbt.PopulationError):
            pbt.Population(agents, tiers=(0.5, 0.5))
        with self.assertRaises(pbt.PopulationError):
            pbt.run_population(pbt.Population(agents, warmup_epochs=10),
                               gph, 5)

        pop = pbt.Population(agents, warmup_epochs=2)
        abort = trainer.TrainingAborted("diverged", epoch=0)
        with mock.patch.object(trainer, 'train_epochs', side_effect=abort):
            with self.assertRaises(pbt.PopulationError) as context:
                pbt.run_population(pop, gph, 4)
        self.assertIn('diverged', str(context.exception))
        self.assertTrue(all(agent.status == pbt.DEAD for agent in agents))

    def test_exploding_agents_die(self):
        """Agents whose weights blow up are marked dead instead of taking the
        population down with a numeric error."""

        gph = self._quick_graph()
        agents = pbt.make_agents(gph, self._quick_settings(lr_theta=1e300),
                                 3, 0)
        pop = pbt.Population(agents, warmup_epochs=2)

        with self.assertRaises(pbt.PopulationError):
            pbt.run_population(pop, gph, 2)
        for agent in agents:
            self.assertEqual(agent.status, pbt.DEAD)
            self.assertIn('diverged', agent.diagnostic)

    def test_no_exploit_no_explore(self):
        """With both disabled, agents train independently."""

        gph = self._quick_graph()
        settings = self._quick_settings()

        agents = pbt.make_agents(gph, settings, 3, 2)
        pop = pbt.Population(agents, warmup_epochs=0, seed=2,
                             exploit_enabled=False, explore_enabled=False)
        result = pbt.run_population(pop, gph, 3)

        alone = pbt.make_agents(gph, settings, 3, 2)
        for agent in alone:
            trainer.train_epochs(agent.state, gph, 3)
        self.assertEqual([a.state.checksum() for a in result.agents],
                         [a.state.checksum() for a in alone])
        self.assertTrue(all(row['action'] == 'none'
                            for row in result.leaderboard))
