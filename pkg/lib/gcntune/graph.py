"""Sparse graph storage, citation dataset ingestion, node splits, symmetric
renormalization and DropEdge sampling.

Graphs are undirected. Edges are stored once per pair as ``(i, j)`` with
``i < j``; materialized adjacencies are always symmetric. Self-loops are
never stored, they're only added during normalization. ::

    graph = load_citation_raw('cora.content', 'cora.cites')
    graph = split_nodes(graph, SplitPolicy(fractions=(0.6, 0.2, 0.2)), seed=7)
    adj = drop_edge(graph, rate=0.3, seed=11)
"""

import logging
from pathlib import Path
from typing import Dict, List, Sequence, Tuple, Union

import numpy as np
import scipy.sparse as sp

from gcntune import utils

LOGGER = logging.getLogger(__name__)

# Search space bound for the edge drop rate.
MAX_DROP_RATE = 0.9

MASK_KINDS = ('train', 'val', 'test')


class GraphError(ValueError):
    """Raised for invalid graphs and graph operations."""


class GraphParseError(GraphError):
    """Raised when a raw dataset file can't be parsed."""

    def __init__(self, path, line_num, msg):
        self.path = path
        self.line_num = line_num
        super().__init__("{}:{}: {}".format(path, line_num, msg))


class SplitError(GraphError):
    """Raised when a node split can't be produced."""


class DropRateError(GraphError):
    """Raised for edge drop rates outside of the search space."""


class Graph:
    """An undirected graph with node features, labels and node masks.

    Graph objects are treated as immutable once created; all 'modifying'
    operations (like split_nodes) return a new graph.

    :ivar int num_nodes:
    :ivar np.ndarray edges: (E, 2) int array of undirected pairs, i < j,
        sorted and deduplicated.
    :ivar np.ndarray features: (N, F) float array.
    :ivar np.ndarray labels: (N,) int array of class indices.
    :ivar dict masks: Boolean (N,) arrays under 'train', 'val' and 'test'.
    :ivar list class_names: Class strings, by class index.
    :ivar list node_ids: Original node id strings, by node index.
    """

    def __init__(self, num_nodes: int, edges, features, labels,
                 masks: Dict[str, np.ndarray] = None,
                 class_names: List[str] = None,
                 node_ids: List[str] = None,
                 skipped_cites: int = 0):

        self.num_nodes = int(num_nodes)

        features = np.asarray(features, dtype=np.float64)
        if features.ndim != 2 or features.shape[0] != self.num_nodes:
            raise GraphError(
                "Features must be a {} row matrix, got shape {}."
                .format(self.num_nodes, features.shape))
        self.features = features

        labels = np.asarray(labels, dtype=np.int64)
        if labels.shape != (self.num_nodes,):
            raise GraphError("Expected {} labels, got shape {}."
                             .format(self.num_nodes, labels.shape))
        self.labels = labels

        self.edges = self._canonical_edges(edges, self.num_nodes)

        if masks is None:
            masks = {}
        self.masks = {}
        for kind in MASK_KINDS:
            mask = masks.get(kind)
            if mask is None:
                mask = np.zeros(self.num_nodes, dtype=bool)
            mask = np.asarray(mask, dtype=bool)
            if mask.shape != (self.num_nodes,):
                raise GraphError("Mask '{}' has shape {}, expected ({},)."
                                 .format(kind, mask.shape, self.num_nodes))
            self.masks[kind] = mask

        overlap = (self.masks['train'].astype(int) +
                   self.masks['val'].astype(int) +
                   self.masks['test'].astype(int))
        if (overlap > 1).any():
            raise GraphError("Node masks must be pairwise disjoint.")

        if class_names is None:
            num_classes = int(labels.max()) + 1 if len(labels) else 0
            class_names = [str(i) for i in range(num_classes)]
        self.class_names = list(class_names)

        if node_ids is None:
            node_ids = [str(i) for i in range(self.num_nodes)]
        self.node_ids = list(node_ids)

        self.skipped_cites = skipped_cites

        self._normalized = None

    @staticmethod
    def _canonical_edges(edges, num_nodes) -> np.ndarray:
        """Sort each pair, then sort and deduplicate the pair list."""

        edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        if not len(edges):
            return np.zeros((0, 2), dtype=np.int64)

        if edges.min() < 0 or edges.max() >= num_nodes:
            raise GraphError("Edge endpoints must be in [0, {})."
                             .format(num_nodes))

        if (edges[:, 0] == edges[:, 1]).any():
            raise GraphError("Self-loops can't be stored in a graph.")

        edges = np.sort(edges, axis=1)
        edges = np.unique(edges, axis=0)
        return edges

    @property
    def num_edges(self) -> int:
        """Number of undirected edges."""
        return len(self.edges)

    @property
    def num_features(self) -> int:
        return self.features.shape[1]

    @property
    def num_classes(self) -> int:
        return len(self.class_names)

    def mask(self, kind: str) -> np.ndarray:
        """Get the node mask of the given kind ('train', 'val', or 'test')."""

        if kind not in self.masks:
            raise GraphError("Unknown mask kind '{}'. Expected one of {}."
                             .format(kind, MASK_KINDS))
        return self.masks[kind]

    def with_masks(self, masks: Dict[str, np.ndarray]) -> 'Graph':
        """Return a copy of this graph with the given masks."""

        return Graph(self.num_nodes, self.edges, self.features, self.labels,
                     masks=masks, class_names=self.class_names,
                     node_ids=self.node_ids,
                     skipped_cites=self.skipped_cites)

    def adjacency(self, edges: np.ndarray = None) -> sp.csr_matrix:
        """Materialize the symmetric 0/1 adjacency matrix (no self-loops).

        :param edges: Use this subset of undirected edges instead of all of
            them.
        """

        if edges is None:
            edges = self.edges

        rows = np.concatenate([edges[:, 0], edges[:, 1]])
        cols = np.concatenate([edges[:, 1], edges[:, 0]])
        data = np.ones(len(rows), dtype=np.float64)
        adj = sp.csr_matrix((data, (rows, cols)),
                            shape=(self.num_nodes, self.num_nodes))
        adj.sort_indices()
        return adj

    def normalized(self) -> 'NormalizedAdjacency':
        """The cached full normalization of this graph."""

        if self._normalized is None:
            self._normalized = normalize(self)
        return self._normalized

    def summary(self) -> dict:
        """Dataset statistics: nodes, edges, features, classes, label rate."""

        labeled = self.masks['train'].sum()
        return {
            'nodes': self.num_nodes,
            'edges': self.num_edges,
            'features': self.num_features,
            'classes': self.num_classes,
            'train': int(labeled),
            'val': int(self.masks['val'].sum()),
            'test': int(self.masks['test'].sum()),
            'label_rate': float(labeled) / max(self.num_nodes, 1),
            'skipped_cites': self.skipped_cites,
        }

    def __repr__(self):
        return ('Graph(nodes={}, edges={}, features={}, classes={})'
                .format(self.num_nodes, self.num_edges, self.num_features,
                        self.num_classes))


class NormalizedAdjacency:
    """A symmetric renormalized adjacency D^-1/2 (A + I) D^-1/2.

    :ivar sp.csr_matrix matrix: The N x N sparse matrix, sorted indices.
    :ivar tuple provenance: ('full',) or ('dropped', rate, seed).
    :ivar int num_edges: Undirected edges (excluding self-loops) retained.
    """

    __slots__ = ('matrix', 'provenance', 'num_edges')

    def __init__(self, matrix: sp.csr_matrix, provenance: tuple,
                 num_edges: int):
        object.__setattr__(self, 'matrix', matrix)
        object.__setattr__(self, 'provenance', tuple(provenance))
        object.__setattr__(self, 'num_edges', num_edges)

    def __setattr__(self, key, value):
        raise AttributeError("NormalizedAdjacency objects are immutable.")

    @property
    def dropped(self) -> bool:
        return self.provenance[0] == 'dropped'

    def __matmul__(self, other):
        return self.matrix @ other

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()


def _normalize_edges(num_nodes: int, edges: np.ndarray) -> sp.csr_matrix:
    """Build the renormalized adjacency for the given undirected edges."""

    loops = np.arange(num_nodes, dtype=np.int64)
    rows = np.concatenate([edges[:, 0], edges[:, 1], loops])
    cols = np.concatenate([edges[:, 1], edges[:, 0], loops])

    # Degree in A + I.
    degree = np.bincount(rows, minlength=num_nodes).astype(np.float64)

    # The product of two integer degrees is exact, so (i, j) and (j, i)
    # get bit-identical entries.
    data = 1.0 / np.sqrt(degree[rows] * degree[cols])

    matrix = sp.csr_matrix((data, (rows, cols)), shape=(num_nodes, num_nodes))
    matrix.sort_indices()
    return matrix


def normalize(graph: Graph) -> NormalizedAdjacency:
    """Return D^-1/2 (A + I) D^-1/2 for the whole graph. Isolated nodes
    keep their self-loop, with an entry of 1.0."""

    matrix = _normalize_edges(graph.num_nodes, graph.edges)
    return NormalizedAdjacency(matrix, ('full',), graph.num_edges)


def drop_edge(graph: Graph, rate: float, seed: int) -> NormalizedAdjacency:
    """Randomly drop undirected edges (both directions together), then
    renormalize what's left with self-loops.

    Each edge is retained independently with probability 1 - rate. The
    result is a pure function of (graph, rate, seed).

    :raises DropRateError: When the rate is outside [0, 0.9].
    """

    rate = float(rate)
    if not 0.0 <= rate <= MAX_DROP_RATE:
        raise DropRateError(
            "Edge drop rate {} is outside of [0, {}]."
            .format(rate, MAX_DROP_RATE))

    rng = utils.make_rng(seed)
    keep = rng.random(graph.num_edges) >= rate
    kept = graph.edges[keep]

    matrix = _normalize_edges(graph.num_nodes, kept)
    return NormalizedAdjacency(matrix, ('dropped', rate, seed), len(kept))


def load_citation_raw(content_path: Union[str, Path],
                      cites_path: Union[str, Path]) -> Graph:
    """Load a citation dataset in the raw 'content'/'cites' text format.

    The content file has one node per line: ``<id> <f_1> ... <f_F> <class>``.
    The cites file has one directed citation per line:
    ``<citing_id> <cited_id>``. Citations are merged into undirected,
    deduplicated edges. Lines referencing unknown ids are counted and
    skipped, as are self-citations. Class strings are indexed in order of
    first appearance. Masks are left unset.

    :raises GraphParseError: On malformed lines, duplicate ids, or an empty
        content file.
    """

    content_path = Path(content_path)
    cites_path = Path(cites_path)

    node_index = {}
    node_ids = []
    rows = []
    class_index = {}
    class_names = []
    labels = []
    num_cols = None

    try:
        with content_path.open() as content_file:
            for line_num, line in enumerate(content_file, 1):
                parts = line.split()
                if not parts:
                    continue

                if len(parts) < 2:
                    raise GraphParseError(
                        content_path, line_num,
                        "Expected '<id> <features...> <class>'.")

                if num_cols is None:
                    num_cols = len(parts)
                elif len(parts) != num_cols:
                    raise GraphParseError(
                        content_path, line_num,
                        "Expected {} columns, got {}."
                        .format(num_cols, len(parts)))

                node_id = parts[0]
                if node_id in node_index:
                    raise GraphParseError(
                        content_path, line_num,
                        "Duplicate node id '{}'.".format(node_id))

                try:
                    rows.append([float(val) for val in parts[1:-1]])
                except ValueError as err:
                    raise GraphParseError(
                        content_path, line_num,
                        "Invalid feature value: {}".format(err))

                class_name = parts[-1]
                if class_name not in class_index:
                    class_index[class_name] = len(class_names)
                    class_names.append(class_name)

                node_index[node_id] = len(node_ids)
                node_ids.append(node_id)
                labels.append(class_index[class_name])
    except OSError as err:
        raise GraphError("Could not read content file '{}': {}"
                         .format(content_path, err))

    if not node_ids:
        raise GraphParseError(content_path, 0, "Content file is empty.")

    edges = []
    skipped = 0
    self_cites = 0
    try:
        with cites_path.open() as cites_file:
            for line_num, line in enumerate(cites_file, 1):
                parts = line.split()
                if not parts:
                    continue

                if len(parts) != 2:
                    raise GraphParseError(
                        cites_path, line_num,
                        "Expected '<citing_id> <cited_id>'.")

                citing, cited = parts
                if citing not in node_index or cited not in node_index:
                    skipped += 1
                    continue

                i, j = node_index[citing], node_index[cited]
                if i == j:
                    self_cites += 1
                    continue

                edges.append((i, j))
    except OSError as err:
        raise GraphError("Could not read cites file '{}': {}"
                         .format(cites_path, err))

    if skipped:
        LOGGER.warning("Skipped %d citations with unknown node ids in %s.",
                       skipped, cites_path)
    if self_cites:
        LOGGER.info("Ignored %d self-citations in %s.", self_cites, cites_path)

    features = np.array(rows, dtype=np.float64).reshape(
        len(node_ids), num_cols - 2)

    graph = Graph(len(node_ids), edges, features, labels,
                  class_names=class_names, node_ids=node_ids,
                  skipped_cites=skipped)

    LOGGER.info("Loaded %s from %s.", graph, content_path)
    return graph


def _largest_remainder(total: int, weights: np.ndarray) -> np.ndarray:
    """Split the integer total proportionally to weights. Floors first, then
    one extra unit each to the largest fractional parts (lower index wins
    ties)."""

    weights = np.asarray(weights, dtype=np.float64)
    if total <= 0 or weights.sum() <= 0:
        return np.zeros(len(weights), dtype=np.int64)

    ideal = total * weights / weights.sum()
    alloc = np.floor(ideal + 1e-9).astype(np.int64)
    short = total - int(alloc.sum())
    if short > 0:
        order = np.argsort(-(ideal - alloc), kind='stable')
        alloc[order[:short]] += 1
    return alloc


class SplitPolicy:
    """How to divide labeled nodes into train/val/test.

    Give either ``fractions`` (of all nodes) or ``counts`` (absolute nodes
    per class for each split). Fraction split sizes are exact over the whole
    graph, rounded by largest remainder; each split's quota is then spread
    over the classes in proportion to their unassigned nodes. Nodes are only
    left unassigned when the fractions sum to less than 1.
    """

    def __init__(self, fractions: Sequence[float] = None,
                 counts: Sequence[int] = None):

        if fractions is not None and counts is not None:
            raise SplitError("Give split fractions or counts, not both.")

        if fractions is None and counts is None:
            fractions = (0.6, 0.2, 0.2)

        if fractions is not None:
            fractions = tuple(float(frac) for frac in fractions)
            if len(fractions) != 3:
                raise SplitError("Expected three split fractions, got {}."
                                 .format(fractions))
            if any(frac < 0 for frac in fractions):
                raise SplitError("Split fractions can't be negative: {}"
                                 .format(fractions))
            if sum(fractions) > 1.0 + 1e-9:
                raise SplitError("Split fractions {} sum to more than 1."
                                 .format(fractions))

        if counts is not None:
            counts = tuple(int(count) for count in counts)
            if len(counts) != 3 or any(count < 0 for count in counts):
                raise SplitError("Expected three non-negative per-class "
                                 "split counts, got {}.".format(counts))

        self.fractions = fractions
        self.counts = counts

    def split_totals(self, num_nodes: int) -> Tuple[int, int, int]:
        """The train/val/test sizes for a graph of num_nodes under
        fractions."""

        leftover = max(0.0, 1.0 - sum(self.fractions))
        alloc = _largest_remainder(num_nodes, self.fractions + (leftover,))
        return tuple(int(size) for size in alloc[:3])

    def allocate(self, class_sizes: Sequence[int],
                 class_names: Sequence[str] = None) -> np.ndarray:
        """Nodes per (class, split), as a classes x 3 integer array.

        :raises SplitError: When counts ask for more nodes than a class has.
        """

        class_sizes = np.asarray(class_sizes, dtype=np.int64)

        if self.counts is not None:
            alloc = np.tile(np.array(self.counts, dtype=np.int64),
                            (len(class_sizes), 1))
            short = np.flatnonzero(alloc.sum(axis=1) > class_sizes)
            if len(short):
                cls = int(short[0])
                name = class_names[cls] if class_names else cls
                raise SplitError(
                    "Class '{}' has {} nodes, but the split {} needs {}."
                    .format(name, int(class_sizes[cls]), self,
                            sum(self.counts)))
            return alloc

        alloc = np.zeros((len(class_sizes), 3), dtype=np.int64)
        remaining = class_sizes.copy()
        for kind, total in enumerate(
                self.split_totals(int(class_sizes.sum()))):
            # Proportional to what's left, so no class is over drawn.
            alloc[:, kind] = _largest_remainder(total, remaining)
            remaining -= alloc[:, kind]
        return alloc

    def __repr__(self):
        if self.counts is not None:
            return 'SplitPolicy(counts={})'.format(self.counts)
        return 'SplitPolicy(fractions={})'.format(self.fractions)


def split_nodes(graph: Graph, policy: SplitPolicy, seed: int) -> Graph:
    """Assign train/val/test masks, stratified by class and deterministic for
    a given seed.

    :raises SplitError: When a class has fewer nodes than the policy
        requires.
    """

    rng = utils.make_rng(seed)
    masks = {kind: np.zeros(graph.num_nodes, dtype=bool)
             for kind in MASK_KINDS}

    class_members = [np.flatnonzero(graph.labels == cls_idx)
                     for cls_idx in range(len(graph.class_names))]
    alloc = policy.allocate([len(members) for members in class_members],
                            graph.class_names)

    for members, sizes in zip(class_members, alloc):
        members = rng.permutation(members)
        start = 0
        for kind, size in zip(MASK_KINDS, sizes):
            masks[kind][members[start:start + size]] = True
            start += size

    return graph.with_masks(masks)
