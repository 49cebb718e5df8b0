"""Statistics across collections of mesh networks.

Edge precision is the reciprocal sample variance of a weight across a
set of networks — edges that never move are flagged as infinitely
precise rather than stored as a float infinity.  Pruning keeps only the
strongest off-diagonal weights at a requested sparsity level.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from meshwave.io import format_float


@dataclass
class PrecisionNetwork:
    """Per-edge precision with an explicit mask for zero-variance edges.

    ``values[i, j]`` is 1/var of edge (i, j); wherever ``infinite`` is
    True the variance was exactly zero and ``values`` holds 0.0.
    """

    values: np.ndarray
    infinite: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        self.infinite = np.asarray(self.infinite, dtype=bool)
        if self.values.shape != self.infinite.shape or self.values.ndim != 2:
            raise ValueError("values and infinite mask must be matching 2-D arrays")
        if np.any(self.values[self.infinite] != 0.0):
            raise ValueError("flagged edges must store 0.0")

    @property
    def n_regions(self) -> int:
        return self.values.shape[0]


def edge_precision(networks: np.ndarray) -> PrecisionNetwork:
    """1 / sample variance (ddof=1) of every edge across the given networks."""
    nets = np.asarray(networks, dtype=float)
    if nets.ndim != 3:
        raise ValueError("expected a stack of networks with shape (count, R, R)")
    if nets.shape[0] < 2:
        raise ValueError("variance needs at least two networks")
    var = nets.var(axis=0, ddof=1)
    infinite = var == 0.0
    values = np.zeros_like(var)
    np.divide(1.0, var, out=values, where=~infinite)
    return PrecisionNetwork(values, infinite)


def prune_to_sparsity(weights: np.ndarray, fraction: float) -> np.ndarray:
    """Keep the ceil(fraction * R * (R - 1)) largest off-diagonal weights.

    Ranking is by |weight|, ties resolved toward the smaller (row, col);
    everything else off the diagonal is zeroed and the diagonal is left
    untouched.
    """
    weights = np.asarray(weights, dtype=float)
    r, c = weights.shape
    if r != c:
        raise ValueError("weight matrix must be square")
    if not 0.0 < fraction <= 1.0:
        raise ValueError("fraction must lie in (0, 1]")
    keep = math.ceil(fraction * r * (r - 1))
    entries = sorted(
        ((i, j) for i in range(r) for j in range(r) if i != j),
        key=lambda ij: (-abs(weights[ij]), ij),
    )
    pruned = np.zeros_like(weights)
    np.fill_diagonal(pruned, np.diag(weights))
    for i, j in entries[:keep]:
        pruned[i, j] = weights[i, j]
    return pruned


def _offdiag_entries(n: int):
    for i in range(n):
        for j in range(n):
            if i != j:
                yield i, j


def export_edge_list(path, weights: np.ndarray) -> None:
    """CSV of nonzero off-diagonal edges, strongest first."""
    weights = np.asarray(weights, dtype=float)
    n = weights.shape[0]
    edges = [(i, j) for i, j in _offdiag_entries(n) if weights[i, j] != 0.0]
    edges.sort(key=lambda ij: (-abs(weights[ij]), ij))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("source,target,weight\n")
        for i, j in edges:
            fh.write(f"{i},{j},{format_float(weights[i, j])}\n")


def read_edge_list(path, n_regions: int) -> np.ndarray:
    weights = np.zeros((n_regions, n_regions))
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != "source,target,weight":
            raise ValueError(f"{path}: unexpected header {header!r}")
        for line in fh:
            line = line.strip()
            if not line:
                continue
            src, dst, val = line.split(",")
            weights[int(src), int(dst)] = float(val)
    return weights


def export_precision(path, precision: PrecisionNetwork) -> None:
    """CSV of off-diagonal precisions in (row, col) order, with a flag
    column separating finite edges from zero-variance ones."""
    n = precision.n_regions
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("source,target,precision,flag\n")
        for i, j in _offdiag_entries(n):
            if precision.infinite[i, j]:
                fh.write(f"{i},{j},{format_float(0.0)},infinite\n")
            else:
                fh.write(f"{i},{j},{format_float(precision.values[i, j])},finite\n")
