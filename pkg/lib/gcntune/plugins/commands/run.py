"""The run command loads an experiment config, runs its tuning method and
writes a numbered run directory."""

import errno

from gcntune import commands
from gcntune import experiment
from gcntune import graph
from gcntune import output
from gcntune.pbt import PopulationError


class RunCommand(commands.Command):
    """Run one experiment.

    :ivar RunRecord last_run: The last run this command made (for unit
        testing).
    """

    def __init__(self):

        super().__init__('run', 'Run a tuning experiment.',
                         short_help="Run a tuning experiment.")

        self.last_run = None

    def _setup_arguments(self, parser):

        parser.add_argument(
            '--config', required=True,
            help="The experiment config file.")
        parser.add_argument(
            '--seed', type=int, default=None,
            help="Override the experiment's root seed.")
        parser.add_argument(
            '--workers', type=int, default=None,
            help="Override how many threads train agents or trials "
                 "concurrently.")
        parser.add_argument(
            '--deterministic', action='store_true', default=None,
            help="Run single threaded numeric libraries for bitwise "
                 "reproducible results. Must be given on the command line "
                 "so it takes effect before numpy starts.")
        parser.add_argument(
            '--method', default=None,
            help="Override the experiment's method (rs, hb, pbt, st or "
                 "pst).")

    def run(self, cfg, args):
        """Load the experiment, run it, and print where the results went."""

        if args.workers is not None and args.workers < 1:
            return self._error("--workers must be at least 1, got {}."
                               .format(args.workers))

        overrides = {
            'seed': args.seed,
            'workers': args.workers,
            'deterministic': args.deterministic,
            'method': args.method,
        }

        try:
            exp_cfg = experiment.load_experiment(args.config, overrides)
        except experiment.ExperimentConfigError as err:
            return self._error("Error in experiment config: {}".format(err))

        try:
            record = experiment.run_experiment(cfg, exp_cfg)
        except experiment.ExperimentConfigError as err:
            return self._error("Error in experiment config: {}".format(err))
        except graph.GraphError as err:
            return self._error("Error loading the dataset: {}".format(err))
        except PopulationError as err:
            return self._error("Population failed: {}".format(err),
                               errno.ECANCELED)
        except OSError as err:
            return self._error("Could not write the run: {}".format(err),
                               errno.EIO)

        self.last_run = record
        summary = record.summary
        test_acc = summary['test_acc']

        output.fprint(
            "Run {run_id} ({method} on {dataset}, L={layers}): best val acc "
            "{val:.4f}, test acc {test}, {epochs} epochs in {time:.1f}s."
            .format(run_id=record.run_id, method=summary['method'],
                    dataset=summary['dataset'], layers=summary['layers'],
                    val=summary['best_val_acc'],
                    test='n/a' if test_acc is None
                    else '{:.4f}'.format(test_acc),
                    epochs=summary['epoch_budget'],
                    time=summary['wall_time']),
            file=self.outfile)
        output.fprint("Results in {}".format(record.path), file=self.outfile)
        return 0
