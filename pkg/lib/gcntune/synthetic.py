"""Planted partition benchmark graphs with class correlated Gaussian
features, written out in the raw citation format so they load exactly like
the real datasets.

Generator specs are small YAML files::

    name: synthetic
    nodes: 600
    classes: 3
    communities: 3
    p_in: 0.05
    p_out: 0.005
    dim: 32
    noise: 1.0

Alongside the dataset files the generator writes ``oracle.json``: the
held-out accuracy of a simple feature centroid plus neighbor vote
classifier. It gives trained models a computable bar to clear.
"""

import json
import logging
from pathlib import Path
from typing import Union

import numpy as np
import yaml_config as yc

from gcntune import output
from gcntune import utils
from gcntune.graph import Graph

LOGGER = logging.getLogger(__name__)

ORACLE_FILE = 'oracle.json'


class SyntheticSpecError(ValueError):
    """Raised for infeasible generator specs."""


class SyntheticSpecLoader(yc.YamlConfigLoader):
    """The synthetic benchmark spec file format."""

    ELEMENTS = [
        yc.StrElem(
            'name', default='synthetic',
            help_text="Base name of the generated '.content' and '.cites' "
                      "files."),
        yc.IntRangeElem(
            'nodes', default=600, vmin=2,
            help_text="Number of nodes."),
        yc.IntRangeElem(
            'classes', default=3, vmin=2,
            help_text="Number of classes. Community c has class "
                      "c mod classes."),
        yc.IntRangeElem(
            'communities', default=3, vmin=1,
            help_text="Number of planted communities (contiguous blocks of "
                      "node ids)."),
        yc.FloatRangeElem(
            'p_in', default=0.05, vmin=0.0, vmax=1.0,
            help_text="Edge probability within a community."),
        yc.FloatRangeElem(
            'p_out', default=0.005, vmin=0.0, vmax=1.0,
            help_text="Edge probability between communities."),
        yc.IntRangeElem(
            'dim', default=32, vmin=1,
            help_text="Feature dimension."),
        yc.FloatRangeElem(
            'noise', default=1.0, vmin=0.0,
            help_text="Standard deviation of the per-node feature noise."),
        yc.FloatRangeElem(
            'separation', default=2.0, vmin=0.0,
            help_text="Scale of the class centroids. Larger values make "
                      "the features more informative."),
    ]


class SyntheticSpec:
    """A validated generator spec."""

    # pylint: disable=too-many-arguments
    def __init__(self, nodes: int = 600, classes: int = 3,
                 communities: int = 3, p_in: float = 0.05,
                 p_out: float = 0.005, dim: int = 32, noise: float = 1.0,
                 separation: float = 2.0, name: str = 'synthetic'):

        self.name = name
        self.nodes = int(nodes)
        self.classes = int(classes)
        self.communities = int(communities)
        self.p_in = float(p_in)
        self.p_out = float(p_out)
        self.dim = int(dim)
        self.noise = float(noise)
        self.separation = float(separation)

        if not self.p_in > self.p_out:
            raise SyntheticSpecError(
                "p_in ({}) must be greater than p_out ({})."
                .format(self.p_in, self.p_out))
        if self.classes > self.communities:
            raise SyntheticSpecError(
                "Can't have more classes ({}) than communities ({})."
                .format(self.classes, self.communities))
        if self.communities > self.nodes:
            raise SyntheticSpecError(
                "Can't have more communities ({}) than nodes ({})."
                .format(self.communities, self.nodes))

    @classmethod
    def load(cls, path: Union[str, Path]) -> 'SyntheticSpec':
        """Load a spec from a YAML file.

        :raises SyntheticSpecError:
        """

        path = Path(path)
        try:
            with path.open() as spec_file:
                cfg = SyntheticSpecLoader().load(spec_file)
        except (OSError, ValueError, KeyError, TypeError) as err:
            raise SyntheticSpecError("Invalid synthetic spec '{}': {}"
                                     .format(path, err))
        return cls.from_config(cfg)

    @classmethod
    def from_config(cls, cfg) -> 'SyntheticSpec':
        return cls(**{key: cfg[key] for key in (
            'nodes', 'classes', 'communities', 'p_in', 'p_out', 'dim',
            'noise', 'separation', 'name')})

    def as_dict(self) -> dict:
        return dict(self.__dict__)


class SyntheticDataset:
    """A generated benchmark.

    :ivar Graph graph: Unsplit graph.
    :ivar np.ndarray communities: Community of each node.
    :ivar float oracle_acc: Held-out accuracy of the reference classifier.
    """

    def __init__(self, spec: SyntheticSpec, graph: Graph,
                 communities: np.ndarray, oracle_acc: float, seed: int):
        self.spec = spec
        self.graph = graph
        self.communities = communities
        self.oracle_acc = oracle_acc
        self.seed = seed


def _planted_edges(communities: np.ndarray, p_in: float, p_out: float,
                   rng: np.random.Generator) -> np.ndarray:
    """Draw each pair i < j independently, row by row."""

    num = len(communities)
    edges = []
    for i in range(num - 1):
        others = np.arange(i + 1, num)
        probs = np.where(communities[others] == communities[i], p_in, p_out)
        hits = others[rng.random(len(others)) < probs]
        edges.extend((i, j) for j in hits)

    if not edges:
        return np.zeros((0, 2), dtype=np.int64)
    return np.array(edges, dtype=np.int64)


def oracle_accuracy(graph: Graph) -> float:
    """Reference accuracy on odd numbered nodes: class centroids come from
    the even numbered nodes, each node votes for its nearest centroid, and a
    node's prediction is the majority vote over itself and its neighbors
    (ties go to the lowest class)."""

    features = graph.features
    labels = graph.labels
    num_classes = graph.num_classes
    fit = np.arange(graph.num_nodes) % 2 == 0

    centroids = np.zeros((num_classes, features.shape[1]))
    for cls_idx in range(num_classes):
        members = fit & (labels == cls_idx)
        if members.any():
            centroids[cls_idx] = features[members].mean(axis=0)

    dists = ((features[:, None, :] - centroids[None, :, :])**2).sum(axis=2)
    votes = np.eye(num_classes)[dists.argmin(axis=1)]

    adj = graph.adjacency()
    tallies = votes + adj @ votes
    preds = tallies.argmax(axis=1)

    held_out = ~fit
    return float(np.mean(preds[held_out] == labels[held_out]))


def generate_synthetic(spec: SyntheticSpec, seed: int) -> SyntheticDataset:
    """Build a planted partition graph for a generator spec. Fully
    determined by (spec, seed)."""

    rng = utils.make_rng(utils.derive_seed(seed, 'data', 'synthetic'))

    # Contiguous blocks, so the adjacency is block structured by node id.
    communities = (np.arange(spec.nodes) * spec.communities) // spec.nodes
    labels = communities % spec.classes

    edges = _planted_edges(communities, spec.p_in, spec.p_out, rng)

    centroids = (rng.standard_normal((spec.classes, spec.dim)) /
                 np.sqrt(spec.dim) * spec.separation)
    features = (centroids[labels] +
                spec.noise * rng.standard_normal((spec.nodes, spec.dim)))

    graph = Graph(spec.nodes, edges, features, labels,
                  class_names=['c{}'.format(i) for i in range(spec.classes)],
                  node_ids=['n{:04d}'.format(i) for i in range(spec.nodes)])

    oracle = oracle_accuracy(graph)
    LOGGER.info("Generated %s (oracle accuracy %.4f)", graph, oracle)
    return SyntheticDataset(spec, graph, communities, oracle, seed)


def write_synthetic(dataset: SyntheticDataset,
                    out_dir: Union[str, Path]) -> dict:
    """Write the dataset in the raw citation format, plus the oracle file.

    :returns: Paths of the written files, by kind ('content', 'cites',
        'oracle').
    """

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    graph = dataset.graph
    name = dataset.spec.name

    paths = {
        'content': out_dir / '{}.content'.format(name),
        'cites': out_dir / '{}.cites'.format(name),
        'oracle': out_dir / ORACLE_FILE,
    }

    with paths['content'].open('w', newline='\n') as content_file:
        for i in range(graph.num_nodes):
            values = '\t'.join(repr(float(val))
                               for val in graph.features[i])
            content_file.write('{}\t{}\t{}\n'.format(
                graph.node_ids[i], values,
                graph.class_names[graph.labels[i]]))

    with paths['cites'].open('w', newline='\n') as cites_file:
        for i, j in graph.edges:
            cites_file.write('{}\t{}\n'.format(graph.node_ids[i],
                                               graph.node_ids[j]))

    oracle = {
        'oracle_acc': dataset.oracle_acc,
        'seed': dataset.seed,
        'nodes': graph.num_nodes,
        'edges': graph.num_edges,
        'spec': dataset.spec.as_dict(),
    }
    with paths['oracle'].open('w', newline='\n') as oracle_file:
        output.json_dump(oracle, oracle_file, indent=2, sort_keys=True)
        oracle_file.write('\n')

    return paths


def read_oracle(data_dir: Union[str, Path]) -> float:
    """Read the oracle accuracy written next to a generated dataset."""

    path = Path(data_dir) / ORACLE_FILE
    with path.open() as oracle_file:
        return float(json.load(oracle_file)['oracle_acc'])
