"""Build a results table from finished run directories."""

import errno

from gcntune import commands
from gcntune import experiment
from gcntune import output


class ReportCommand(commands.Command):
    """Summarize runs as a dataset x layers x method accuracy table."""

    def __init__(self):

        super().__init__(
            'report',
            'Combine run directories into a test accuracy table (text and '
            'CSV), plus one validation series CSV per run for plotting.',
            short_help="Tabulate the results of finished runs.")

    def _setup_arguments(self, parser):

        parser.add_argument(
            'dirs', nargs='+',
            help="Run directories, or output roots holding numbered run "
                 "directories.")
        parser.add_argument(
            '--out', required=True,
            help="Where to write the table CSV. Series go in "
                 "'<out>.series/'.")
        parser.add_argument(
            '--aggregate', action='store_true', default=False,
            help="Report the median over runs of the same dataset, layers "
                 "and method, instead of refusing duplicates.")

    def run(self, cfg, args):

        try:
            report = experiment.build_report(args.dirs,
                                             aggregate=args.aggregate)
        except experiment.ReportError as err:
            return self._error(str(err))

        try:
            series_dir = experiment.write_report(report, args.out,
                                                 outfile=self.outfile)
        except OSError as err:
            return self._error("Could not write the report: {}".format(err),
                               errno.EIO)

        if report.skipped:
            output.fprint("Skipped {} run(s) without a summary."
                          .format(report.skipped),
                          color=output.YELLOW, file=self.errfile)

        output.fprint("Wrote {} and {}".format(args.out, series_dir),
                      file=self.outfile)
        return 0
