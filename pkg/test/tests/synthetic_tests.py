import json

import numpy as np

from gcntune import graph
from gcntune import synthetic
from gcntune.unittest import GcnTuneTestCase


class SyntheticTests(GcnTuneTestCase):
    """The planted partition benchmark generator."""

    def test_spec_checks(self):
        """Infeasible specs are rejected."""

        for kwargs in ({'p_in': 0.01, 'p_out': 0.01},
                       {'classes': 4, 'communities': 3},
                       {'nodes': 2, 'communities': 3, 'classes': 2}):
            with self.assertRaises(synthetic.SyntheticSpecError):
                synthetic.SyntheticSpec(**kwargs)

        spec = synthetic.SyntheticSpec.load(self._quick_spec_file())
        self.assertEqual(spec.nodes, 60)
        self.assertEqual(spec.name, 'quick')

        bad = self._quick_spec_file(name='bad', p_in=0.001)
        with self.assertRaises(synthetic.SyntheticSpecError):
            synthetic.SyntheticSpec.load(bad)
        with self.assertRaises(synthetic.SyntheticSpecError):
            synthetic.SyntheticSpec.load(self.tmp_path/'nope.yaml')

    def test_generate(self):
        """Communities are contiguous blocks, and the classes follow
        them."""

        spec = synthetic.SyntheticSpec(**self.QUICK_SPEC)
        data = synthetic.generate_synthetic(spec, 3)
        gph = data.graph

        self.assertEqual(gph.num_nodes, 60)
        self.assertEqual(gph.num_features, 8)
        self.assertEqual(gph.num_classes, 3)
        self.assertEqual(data.communities.tolist(),
                         [0] * 20 + [1] * 20 + [2] * 20)
        self.assertEqual(gph.labels.tolist(), data.communities.tolist())
        self.assertGreater(gph.num_edges, 0)
        self.assertTrue(1/3 < data.oracle_acc <= 1.0)

        again = synthetic.generate_synthetic(spec, 3)
        self.assertEqual(again.graph.edges.tolist(), gph.edges.tolist())
        self.assertTrue((again.graph.features == gph.features).all())
        other = synthetic.generate_synthetic(spec, 4)
        self.assertNotEqual(other.graph.edges.tolist(), gph.edges.tolist())

    def test_block_diagonal(self):
        """With p_out = 0 every edge stays inside its community."""

        spec = synthetic.SyntheticSpec(**dict(self.QUICK_SPEC, p_out=0.0,
                                              p_in=0.5))
        data = synthetic.generate_synthetic(spec, 0)
        comm = data.communities
        edges = data.graph.edges
        self.assertTrue((comm[edges[:, 0]] == comm[edges[:, 1]]).all())

        dense = data.graph.adjacency().toarray()
        for block in range(3):
            rows = slice(block * 20, block * 20 + 20)
            self.assertEqual(dense[rows].sum(), dense[rows, rows].sum())

    def test_write(self):
        """Written datasets load back through the raw loader, byte for byte
        the same on every run."""

        spec = synthetic.SyntheticSpec(**self.QUICK_SPEC)
        first = synthetic.write_synthetic(
            synthetic.generate_synthetic(spec, 1), self.tmp_path/'a')
        second = synthetic.write_synthetic(
            synthetic.generate_synthetic(spec, 1), self.tmp_path/'b')

        for kind in 'content', 'cites', 'oracle':
            self._cmp_files(first[kind], second[kind])
        self.assertEqual(first['content'].name, 'quick.content')

        data = synthetic.generate_synthetic(spec, 1)
        loaded = graph.load_citation_raw(first['content'], first['cites'])
        self.assertEqual(loaded.num_nodes, 60)
        self.assertEqual(loaded.num_edges, data.graph.num_edges)
        self.assertEqual(loaded.skipped_cites, 0)
        # Features are written at full precision.
        self.assertEqual(loaded.features.tolist(),
                         data.graph.features.tolist())
        # Classes are named c0, c1, .. so they load in the same order.
        self.assertEqual(loaded.labels.tolist(), data.graph.labels.tolist())

        self.assertEqual(synthetic.read_oracle(self.tmp_path/'a'),
                         data.oracle_acc)

        with first['oracle'].open() as oracle_file:
            oracle = json.load(oracle_file)
        self.assertEqual(oracle['seed'], 1)
        self.assertEqual(oracle['edges'], data.graph.num_edges)
        self.assertEqual(oracle['spec']['nodes'], 60)
