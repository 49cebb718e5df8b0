"""Precision values are checked against an explicit two-pass variance
computation; pruning against a full sort done the slow way."""

import numpy as np
import pytest

from meshwave.netstats import (
    PrecisionNetwork,
    edge_precision,
    export_edge_list,
    export_precision,
    prune_to_sparsity,
    read_edge_list,
)


def twopass_variance(samples):
    """Textbook two-pass sample variance, one scalar at a time."""
    mean = sum(samples) / len(samples)
    return sum((s - mean) ** 2 for s in samples) / (len(samples) - 1)


class TestEdgePrecision:
    def test_matches_twopass_oracle(self):
        rng = np.random.default_rng(0)
        nets = rng.standard_normal((6, 5, 5))
        prec = edge_precision(nets)
        for i in range(5):
            for j in range(5):
                var = twopass_variance([nets[n, i, j] for n in range(6)])
                if var == 0.0:
                    assert prec.infinite[i, j]
                else:
                    assert abs(prec.values[i, j] - 1.0 / var) < 1e-12 * (1.0 / var)

    def test_constant_edges_flagged(self):
        nets = np.zeros((4, 3, 3))
        nets[:, 0, 1] = 2.5  # identical across networks
        nets[:, 1, 2] = [1.0, 2.0, 3.0, 4.0]
        prec = edge_precision(nets)
        assert prec.infinite[0, 1] and prec.values[0, 1] == 0.0
        assert not prec.infinite[1, 2]
        assert abs(prec.values[1, 2] - 1.0 / twopass_variance([1.0, 2.0, 3.0, 4.0])) < 1e-12
        # diagonals of mesh networks never vary
        assert prec.infinite[0, 0]

    def test_needs_two_networks(self):
        with pytest.raises(ValueError):
            edge_precision(np.zeros((1, 3, 3)))

    def test_flag_consistency_enforced(self):
        with pytest.raises(ValueError, match="0.0"):
            PrecisionNetwork(np.ones((2, 2)), np.ones((2, 2), dtype=bool))


class TestPruning:
    def test_keep_counts_at_reference_scales(self):
        rng = np.random.default_rng(1)
        for n, expect in ((20, 4), (90, 81)):
            pruned = prune_to_sparsity(rng.standard_normal((n, n)), 0.01)
            off = pruned.copy()
            np.fill_diagonal(off, 0.0)
            assert int((off != 0).sum()) == expect

    def test_keeps_largest_by_magnitude(self):
        rng = np.random.default_rng(2)
        w = rng.standard_normal((10, 10))
        pruned = prune_to_sparsity(w, 0.05)  # ceil(0.05*90) = 5 edges
        off = [(abs(w[i, j]), i, j) for i in range(10) for j in range(10) if i != j]
        off.sort(key=lambda t: (-t[0], t[1], t[2]))
        kept = {(i, j) for _, i, j in off[:5]}
        for i in range(10):
            for j in range(10):
                if i == j:
                    continue
                if (i, j) in kept:
                    assert pruned[i, j] == w[i, j]
                else:
                    assert pruned[i, j] == 0.0

    def test_tie_break_lexicographic(self):
        w = np.zeros((3, 3))
        w[0, 1] = w[0, 2] = w[1, 0] = w[2, 1] = -1.0  # all tied in magnitude
        pruned = prune_to_sparsity(w, 1.0 / 6.0)  # keeps ceil(1) = 1 edge
        assert pruned[0, 1] == -1.0
        assert (pruned != 0).sum() == 1

    def test_diagonal_untouched(self):
        w = np.diag([5.0, 6.0, 7.0])
        w[0, 1] = 0.1
        pruned = prune_to_sparsity(w, 0.5)
        np.testing.assert_array_equal(np.diag(pruned), [5.0, 6.0, 7.0])

    def test_fraction_bounds(self):
        with pytest.raises(ValueError):
            prune_to_sparsity(np.zeros((3, 3)), 0.0)
        with pytest.raises(ValueError):
            prune_to_sparsity(np.zeros((3, 3)), 1.5)


class TestExports:
    def test_edge_list_round_trip(self, tmp_path):
        rng = np.random.default_rng(3)
        w = prune_to_sparsity(rng.standard_normal((7, 7)), 0.1)
        np.fill_diagonal(w, 0.0)
        path = tmp_path / "edges.csv"
        export_edge_list(path, w)
        back = read_edge_list(path, 7)
        np.testing.assert_array_equal(back, w)

    def test_edge_list_sorted_by_strength(self, tmp_path):
        w = np.zeros((3, 3))
        w[0, 1], w[1, 2], w[2, 0] = 0.5, -2.0, 1.0
        path = tmp_path / "edges.csv"
        export_edge_list(path, w)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "source,target,weight"
        order = [tuple(map(int, ln.split(",")[:2])) for ln in lines[1:]]
        assert order == [(1, 2), (2, 0), (0, 1)]

    def test_precision_export_flags(self, tmp_path):
        nets = np.zeros((3, 2, 2))
        nets[:, 0, 1] = [1.0, 2.0, 3.0]
        prec = edge_precision(nets)
        path = tmp_path / "prec.csv"
        export_precision(path, prec)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "source,target,precision,flag"
        rows = {tuple(ln.split(",")[:2]): ln.split(",")[2:] for ln in lines[1:]}
        assert rows[("1", "0")][1] == "infinite"
        assert rows[("1", "0")][0] == "%.17e" % 0.0
        assert rows[("0", "1")][1] == "finite"
        assert abs(float(rows[("0", "1")][0]) - 1.0) < 1e-12
