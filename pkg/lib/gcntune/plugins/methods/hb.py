"""Hyperband over fixed hyperparameter GCNs."""

import yaml_config as yc

from gcntune import baselines
from gcntune import methods

BRACKET_COLUMNS = ('sweep', 'bracket', 'rung', 'configs', 'budget',
                   'best_trial', 'best_val_acc')


class Hyperband(methods.MethodPlugin):
    """Successive halving brackets of plain GCNs, resumed across rungs."""

    def __init__(self):
        super().__init__(
            'hb',
            'Hyperband over fixed hyperparameter GCNs.')

    def get_conf(self):
        return yc.KeyedElem(
            'hb', help_text="Settings for Hyperband.",
            elements=[
                yc.IntRangeElem(
                    'max_budget', default=400, vmin=2,
                    help_text="Largest per-configuration budget, in "
                              "epochs."),
                yc.IntRangeElem(
                    'eta', default=3, vmin=2,
                    help_text="Halving rate between rungs."),
                yc.IntRangeElem(
                    'target_trials', default=200, vmin=1,
                    help_text="Run as many full sweeps of the brackets as "
                              "gets the total configuration count closest "
                              "to this."),
                yc.IntRangeElem(
                    'sweeps', vmin=1,
                    help_text="Run exactly this many sweeps instead of "
                              "following target_trials."),
                yc.FloatRangeElem(
                    'lr_theta', default=0.01, vmin=0.0,
                    help_text="Adam learning rate for the model "
                              "parameters."),
            ])

    def run(self, ctx):

        cfg = ctx.method_cfg
        space = ctx.space

        try:
            sweeps = cfg.get('sweeps') or baselines.sweeps_for_target(
                cfg['max_budget'], cfg['eta'], cfg['target_trials'])
        except baselines.SearchError as err:
            raise methods.ExperimentConfigError(
                "Invalid 'hb' settings: {}".format(err))

        result = baselines.hyperband(
            space, ctx.graph, cfg['max_budget'], eta=cfg['eta'],
            seed=ctx.seed, settings=self.settings(ctx),
            workers=ctx.workers, sweeps=sweeps)

        if result.num_trials != cfg['target_trials']:
            self.logger.info("Hyperband trained %d configurations (target "
                             "%d).", result.num_trials, cfg['target_trials'])

        ctx.write_csv('trials.csv', baselines.trial_columns(space),
                      [trial.row() for trial in result.trials])
        ctx.write_csv('brackets.csv', BRACKET_COLUMNS, result.brackets)

        best = result.best
        return methods.MethodResult(
            best_val_acc=best.best_val_acc,
            test_acc=best.test_acc,
            epoch_budget=result.epoch_budget,
            series=methods.series_of(best.history),
            hyper=dict(zip(space.names, best.lam.tolist())),
            extra={
                'trials': result.num_trials,
                'target_trials': cfg['target_trials'],
                'sweeps': sweeps,
                'best_trial': best.id,
                'best_bracket': best.bracket,
            })
