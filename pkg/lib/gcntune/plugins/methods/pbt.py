"""Plain population based training: fixed hyperparameter GCNs that only
change hyperparameters through explore."""

import yaml_config as yc

from gcntune import baselines
from gcntune import methods
from gcntune import pbt


def agent_rows(result: pbt.PopulationResult, space) -> list:
    """One trials.csv row per agent, with its final point
    hyperparameters."""

    rows = []
    for agent in result.agents:
        row = {
            'trial_id': agent.id,
            'bracket': '',
            'budget': agent.state.epoch,
            'best_val_acc': agent.last_val_acc,
            'test_acc': result.test_acc if agent is result.best else None,
            'status': agent.status,
        }
        row.update(dict(zip(space.names,
                            agent.state.fixed_hyper.lam.tolist())))
        rows.append(row)
    return rows


class PlainPBT(methods.MethodPlugin):
    """Population based training over plain GCNs."""

    def __init__(self):
        super().__init__(
            'pbt',
            'Population based training over fixed hyperparameter GCNs.')

    def get_conf(self):
        return yc.KeyedElem(
            'pbt', help_text="Settings for plain population based training.",
            elements=(methods.training_elements(lr_theta=0.01,
                                                self_tuning=False) +
                      methods.population_elements()))

    def run(self, ctx):

        cfg = ctx.method_cfg
        space = ctx.space
        settings = self.settings(ctx)
        options = methods.pop_options(ctx)

        try:
            trial, result = baselines.pbt_baseline(
                space, ctx.graph, cfg['agents'], settings.max_epochs,
                ctx.seed, settings=settings, pop_options=options)
        except baselines.SearchError as err:
            raise methods.ExperimentConfigError(
                "Invalid 'pbt' settings: {}".format(err))

        methods.write_population(ctx, result)
        ctx.write_csv('trials.csv', baselines.trial_columns(space),
                      agent_rows(result, space))

        return methods.MethodResult(
            best_val_acc=trial.best_val_acc,
            test_acc=trial.test_acc,
            epoch_budget=result.epoch_budget,
            series=methods.series_of(trial.history),
            hyper=dict(zip(space.names, trial.lam.tolist())),
            extra={
                'best_agent': trial.id,
                'agents': len(result.agents),
                'dead_agents': sum(1 for agent in result.agents
                                   if not agent.alive),
            })
