"""Partition agreement scores built on pair-counting.

Every unordered pair of items falls into one of four buckets depending
on whether the two partitions place it together or apart; the Rand index
is the agreeing fraction and its adjusted form subtracts the chance
level implied by the two partitions' cluster sizes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class PairCounts:
    """Unordered-pair bucket counts for two partitions of the same items.

    together_both   together in both partitions
    apart_both      apart in both partitions
    first_only      together only in the first partition
    second_only     together only in the second partition
    """

    together_both: int
    apart_both: int
    first_only: int
    second_only: int

    @property
    def total(self) -> int:
        return self.together_both + self.apart_both + self.first_only + self.second_only


def _as_codes(labels) -> np.ndarray:
    arr = np.asarray(labels)
    if arr.ndim != 1:
        raise ValueError("labels must be a flat sequence")
    _, codes = np.unique(arr, return_inverse=True)
    return codes


def _choose2(x: np.ndarray) -> np.ndarray:
    return x * (x - 1) // 2


def pair_counts(labels_a, labels_b) -> PairCounts:
    """Bucket all unordered item pairs by their joint treatment."""
    a = _as_codes(labels_a)
    b = _as_codes(labels_b)
    if a.shape != b.shape:
        raise ValueError("label sequences must have equal length")
    n = a.size
    if n < 2:
        raise ValueError("need at least two items to form a pair")
    table = np.zeros((a.max() + 1, b.max() + 1), dtype=np.int64)
    np.add.at(table, (a, b), 1)
    together_both = int(_choose2(table).sum())
    together_a = int(_choose2(table.sum(axis=1)).sum())
    together_b = int(_choose2(table.sum(axis=0)).sum())
    total = n * (n - 1) // 2
    first_only = together_a - together_both
    second_only = together_b - together_both
    apart_both = total - together_a - second_only
    return PairCounts(together_both, apart_both, first_only, second_only)


def rand_index(labels_a, labels_b) -> float:
    """Fraction of pairs on which the two partitions agree."""
    pc = pair_counts(labels_a, labels_b)
    return (pc.together_both + pc.apart_both) / pc.total


def _same_partition(a: np.ndarray, b: np.ndarray) -> bool:
    """True when the partitions are identical up to cluster relabeling."""
    fwd: dict[int, int] = {}
    bwd: dict[int, int] = {}
    for x, y in zip(a, b):
        if fwd.setdefault(x, y) != y or bwd.setdefault(y, x) != x:
            return False
    return True


def adjusted_rand_index(labels_a, labels_b) -> float:
    """Chance-corrected Rand index (hypergeometric null).

    Degenerate cases where the correction denominator vanishes (both
    partitions all-singletons, or both one single cluster) score 1.0
    when the partitions coincide and 0.0 otherwise.
    """
    a = _as_codes(labels_a)
    b = _as_codes(labels_b)
    if a.shape != b.shape:
        raise ValueError("label sequences must have equal length")
    n = a.size
    if n < 2:
        raise ValueError("need at least two items to form a pair")
    table = np.zeros((a.max() + 1, b.max() + 1), dtype=np.int64)
    np.add.at(table, (a, b), 1)
    index = float(_choose2(table).sum())
    sum_a = float(_choose2(table.sum(axis=1)).sum())
    sum_b = float(_choose2(table.sum(axis=0)).sum())
    total = n * (n - 1) / 2.0
    expected = sum_a * sum_b / total
    max_index = 0.5 * (sum_a + sum_b)
    denom = max_index - expected
    if denom == 0.0:
        return 1.0 if _same_partition(a, b) else 0.0
    return (index - expected) / denom
