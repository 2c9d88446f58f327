"""Generate a synthetic planted-partition benchmark in the citation raw
format."""

import errno

from gcntune import commands
from gcntune import output
from gcntune import synthetic


class GenerateCommand(commands.Command):
    """Write a synthetic dataset and its oracle accuracy."""

    def __init__(self):

        super().__init__(
            'generate',
            'Generate a synthetic planted-partition dataset. Writes '
            '<name>.content, <name>.cites and oracle.json to the output '
            'directory.',
            short_help="Generate a synthetic benchmark dataset.")

    def _setup_arguments(self, parser):

        parser.add_argument(
            '--spec', required=True,
            help="The generator spec file.")
        parser.add_argument(
            '--out', required=True,
            help="The directory to write the dataset to.")
        parser.add_argument(
            '--seed', type=int, default=0,
            help="Generator seed. The same spec and seed always give the "
                 "same files.")

    def run(self, cfg, args):

        try:
            spec = synthetic.SyntheticSpec.load(args.spec)
        except synthetic.SyntheticSpecError as err:
            return self._error(str(err))

        dataset = synthetic.generate_synthetic(spec, args.seed)

        try:
            paths = synthetic.write_synthetic(dataset, args.out)
        except OSError as err:
            return self._error("Could not write the dataset to '{}': {}"
                               .format(args.out, err), errno.EIO)

        summary = dataset.graph.summary()
        output.fprint(
            "Generated '{}': {} nodes, {} edges, {} classes. Oracle accuracy "
            "{:.4f}.".format(spec.name, summary['nodes'], summary['edges'],
                             summary['classes'], dataset.oracle_acc),
            file=self.outfile)
        for kind in ('content', 'cites', 'oracle'):
            output.fprint(str(paths[kind]), bullet='  ', file=self.outfile)
        return 0
