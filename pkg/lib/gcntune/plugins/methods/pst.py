"""Population based self-tuning: a population of self-tuning GCNs with
exploit and explore between training steps."""

import yaml_config as yc

from gcntune import methods
from gcntune import pbt


class PopulationSelfTuning(methods.MethodPlugin):
    """Train a population of self-tuning GCNs."""

    def __init__(self):
        super().__init__(
            'pst',
            'Population based training over self-tuning GCNs.')

    def get_conf(self):
        return yc.KeyedElem(
            'pst',
            elements=(methods.training_elements() +
                      methods.population_elements()),
            help_text="Settings for the population based self-tuning GCN.")

    def run(self, ctx):

        settings = self.settings(ctx)
        cfg = ctx.method_cfg

        agents = pbt.make_agents(ctx.graph, settings, cfg['agents'], ctx.seed)
        try:
            pop = pbt.Population(agents, seed=ctx.seed,
                                 **methods.pop_options(ctx))
        except pbt.PopulationError as err:
            raise methods.ExperimentConfigError(
                "Invalid 'pst' population settings: {}".format(err))

        result = pbt.run_population(pop, ctx.graph, settings.max_epochs)
        methods.write_population(ctx, result)

        best = result.best
        return methods.MethodResult(
            best_val_acc=best.last_val_acc,
            test_acc=result.test_acc,
            epoch_budget=result.epoch_budget,
            series=best.state.history.series(),
            hyper=best.state.center().as_dict(),
            extra={
                'best_agent': best.id,
                'agents': len(result.agents),
                'dead_agents': sum(1 for agent in result.agents
                                   if not agent.alive),
            })
