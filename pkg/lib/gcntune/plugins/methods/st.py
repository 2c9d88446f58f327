"""The self-tuning GCN: one model whose layers condition on the
hyperparameters, trained by alternating model and hyper epochs."""

import yaml_config as yc

from gcntune import methods
from gcntune import nn
from gcntune import trainer


class SelfTuning(methods.MethodPlugin):
    """Train a single self-tuning GCN."""

    def __init__(self):
        super().__init__(
            'st',
            'Self-tuning GCN trained by alternating model and hyper epochs.')

    def get_conf(self):
        return yc.KeyedElem(
            'st', elements=methods.training_elements(),
            help_text="Settings for the self-tuning GCN.")

    def run(self, ctx):

        settings = self.settings(ctx)
        state = trainer.new_state(ctx.graph, settings, ctx.seed)

        self.logger.info("Training %s", state)
        trainer.alternate_loop(state, ctx.graph)

        history = state.history
        ctx.write_history('history.csv', history)
        nn.save_checkpoint(ctx.run_dir/'model.npz', state.to_arrays())

        return methods.MethodResult(
            best_val_acc=history.best_val_acc,
            test_acc=history.test_at_best,
            epoch_budget=state.epoch,
            series=history.series(),
            hyper=state.center().as_dict(),
            extra={
                'best_epoch': history.best_epoch,
                'final_val_acc': history.rows[-1]['val_acc']
                                 if history.rows else None,
                'distribution': state.dist.describe(state.space),
            })
