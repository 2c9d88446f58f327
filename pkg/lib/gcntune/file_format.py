"""The experiment config format.

An experiment config is a YAML document naming a dataset, a model shape and
a tuning method, plus one section per method plugin. Method plugins add
their own sections at activation time (see gcntune.methods), so the
sections available depend on which plugins are loaded: ::

    dataset:
        name: cora
        content: data/cora/cora.content
        cites: data/cora/cora.cites
        split:
            fractions: [0.6, 0.2, 0.2]
    model:
        layers: 8
        hidden: 128
    method: st
    seed: 1
    st:
        lr_theta: 0.0005
"""

import yaml_config as yc

from gcntune.config import ExPathElem

DEFAULT_SPLIT = [0.6, 0.2, 0.2]


class ExperimentConfigError(ValueError):
    """Raised for experiment configs that don't validate or don't make
    sense. The message names the offending key."""


class ExperimentConfigLoader(yc.YamlConfigLoader):
    """The base experiment config. Method sections are added by method
    plugins through add_subsection."""

    ELEMENTS = [
        yc.KeyedElem(
            'dataset', required=True,
            help_text="The graph to train on. Give either 'content' and "
                      "'cites' (the raw citation format) or 'synthetic' "
                      "(a generator spec file).",
            elements=[
                yc.StrElem(
                    'name',
                    help_text="Dataset name used in summaries and reports. "
                              "Defaults to the content file's stem, or "
                              "the synthetic spec's name."),
                ExPathElem(
                    'content',
                    help_text="Path to the '.content' file. Relative paths "
                              "are relative to the experiment config."),
                ExPathElem(
                    'cites',
                    help_text="Path to the '.cites' file."),
                ExPathElem(
                    'synthetic',
                    help_text="Path to a synthetic generator spec. The graph "
                              "is generated in memory from the run seed."),
                yc.KeyedElem(
                    'split',
                    help_text="How labeled nodes are divided between the "
                              "train, val and test masks. Stratified by "
                              "class.",
                    elements=[
                        yc.ListElem(
                            'fractions', sub_elem=yc.FloatElem(),
                            help_text="Fractions of each class for train, "
                                      "val and test. Defaults to "
                                      "[0.6, 0.2, 0.2]."),
                        yc.ListElem(
                            'counts', sub_elem=yc.IntElem(),
                            help_text="Absolute per-class node counts for "
                                      "train, val and test. Replaces "
                                      "'fractions'."),
                        yc.IntElem(
                            'seed',
                            help_text="Seed for the split. Defaults to a "
                                      "stream derived from the run seed."),
                    ]),
            ]),
        yc.KeyedElem(
            'model',
            help_text="The GCN shape.",
            elements=[
                yc.IntRangeElem(
                    'layers', default=4, vmin=2,
                    help_text="Number of graph convolution layers (L)."),
                yc.IntRangeElem(
                    'hidden', default=128, vmin=1,
                    help_text="Units per hidden layer."),
            ]),
        yc.StrElem(
            'method', required=True,
            help_text="The tuning method: the name of a method plugin (rs, "
                      "hb, pbt, st or pst)."),
        yc.IntElem(
            'seed', default=0,
            help_text="Root seed. Every random stream of the run is derived "
                      "from it."),
        yc.IntRangeElem(
            'workers', vmin=1,
            help_text="Threads used to train agents or trials concurrently. "
                      "Defaults to the gcntune config's 'workers'."),
        yc.BoolElem(
            'deterministic', default=False,
            help_text="Request bitwise reproducible runs. Pass "
                      "--deterministic on the command line so the numeric "
                      "libraries start single threaded."),
        ExPathElem(
            'output_dir',
            help_text="Where to create the numbered run directory. Defaults "
                      "to the gcntune config's output_root."),
    ]

    @classmethod
    def add_subsection(cls, subsection):
        """Add a method section to the format.

        :param yc.ConfigElement subsection: Usually a KeyedElem named for
            the method.
        :raises ValueError: For non-elements, and for duplicate names.
        """

        if not isinstance(subsection, yc.ConfigElement):
            raise ValueError("Tried to add a subsection to the experiment "
                             "config, but it wasn't a yaml_config "
                             "ConfigElement instance.")

        name = subsection.name
        if name in [el.name for el in cls.ELEMENTS]:
            raise ValueError("Tried to add a subsection to the config called "
                             "{0}, but one already exists.".format(name))

        cls.ELEMENTS.append(subsection)

    @classmethod
    def remove_subsection(cls, subsection_name):
        """Remove a section. Only for plugin deactivate methods."""

        for section in list(cls.ELEMENTS):
            if subsection_name == section.name:
                cls.ELEMENTS.remove(section)
                return
