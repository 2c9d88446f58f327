"""Random search over fixed hyperparameter GCNs."""

import yaml_config as yc

from gcntune import baselines
from gcntune import methods


class RandomSearch(methods.MethodPlugin):
    """Train independently drawn plain GCNs and keep the best."""

    def __init__(self):
        super().__init__(
            'rs',
            'Random search over fixed hyperparameter GCNs.')

    def get_conf(self):
        return yc.KeyedElem(
            'rs', help_text="Settings for random search.",
            elements=[
                yc.IntRangeElem(
                    'trials', default=200, vmin=1,
                    help_text="Number of configurations to train."),
                yc.IntRangeElem(
                    'budget_epochs', default=400, vmin=1,
                    help_text="Epochs per configuration."),
                yc.FloatRangeElem(
                    'lr_theta', default=0.01, vmin=0.0,
                    help_text="Adam learning rate for the model "
                              "parameters."),
            ])

    def run(self, ctx):

        cfg = ctx.method_cfg
        space = ctx.space
        result = baselines.random_search(
            space, ctx.graph, cfg['trials'], cfg['budget_epochs'], ctx.seed,
            settings=self.settings(ctx), workers=ctx.workers)

        ctx.write_csv('trials.csv', baselines.trial_columns(space),
                      [trial.row() for trial in result.trials])

        best = result.best
        return methods.MethodResult(
            best_val_acc=best.best_val_acc,
            test_acc=best.test_acc,
            epoch_budget=result.epoch_budget,
            series=methods.series_of(best.history),
            hyper=dict(zip(space.names, best.lam.tolist())),
            extra={
                'trials': result.num_trials,
                'best_trial': best.id,
                'dead_trials': sum(1 for trial in result.trials
                                   if trial.status == baselines.DEAD),
            })
