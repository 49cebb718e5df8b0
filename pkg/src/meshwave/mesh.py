"""Windowed mesh networks: local ridge fits around every region.

Within one scan window, each region is modelled as a linear blend of its
p most correlated peer regions.  The blend weights come from a ridge
regression (normal equations, Cholesky solve); collecting the weight
vectors of all regions gives an R x R directed network for the window,
and flattening one network per window row-wise yields the embedding
matrix handed to later stages.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from meshwave.session import Window, partition_windows


@dataclass(frozen=True)
class MeshConfig:
    """Knobs for the windowed mesh construction.

    p            neighbors per region (must end up in 1..R-1)
    ridge        L2 penalty on the blend weights; 0 is allowed only
                 when every local problem is non-singular
    window_width scans per window
    abs_corr     rank neighbors by |corr| instead of signed corr
    """

    p: int = 40
    ridge: float = 32.0
    window_width: int = 30
    abs_corr: bool = False

    def __post_init__(self):
        if self.p < 1:
            raise ValueError("p must be >= 1")
        if self.ridge < 0:
            raise ValueError("ridge must be >= 0")
        if self.window_width < 2:
            raise ValueError("window width must be >= 2")


@dataclass
class MeshNetwork:
    """Directed weight matrix of one window; diagonal is identically zero."""

    weights: np.ndarray

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float)
        r, c = self.weights.shape
        if r != c:
            raise ValueError("mesh network must be square")
        if np.any(np.diag(self.weights) != 0.0):
            raise ValueError("mesh network diagonal must be zero")
        if not np.all(np.isfinite(self.weights)):
            raise ValueError("mesh network contains non-finite weights")

    @property
    def n_regions(self) -> int:
        return self.weights.shape[0]


@dataclass
class EmbeddingMatrix:
    """W x R^2 matrix: one flattened mesh network per window row.

    Row-major flattening, so the weight from region r onto region r' sits
    in column r * R + r'.
    """

    features: np.ndarray
    n_regions: int

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=float)
        if self.features.ndim != 2:
            raise ValueError("embedding matrix must be 2-D")
        if self.features.shape[1] != self.n_regions**2:
            raise ValueError(
                f"row width {self.features.shape[1]} != n_regions^2 = {self.n_regions**2}"
            )

    @property
    def n_windows(self) -> int:
        return self.features.shape[0]


def unflatten_weights(row: np.ndarray, n_regions: int) -> np.ndarray:
    """Undo the row-major flattening of one embedding row."""
    row = np.asarray(row, dtype=float)
    if row.shape != (n_regions**2,):
        raise ValueError(f"expected {n_regions**2} entries, got {row.shape}")
    return row.reshape(n_regions, n_regions).copy()


def _row_correlations(window_data: np.ndarray, r: int) -> np.ndarray:
    """Pearson correlation of region r against every region (self included).

    Constant rows correlate at 0 with everything by convention.
    """
    centered = window_data - window_data.mean(axis=1, keepdims=True)
    norms = np.sqrt((centered**2).sum(axis=1))
    corr = np.zeros(window_data.shape[0])
    if norms[r] == 0.0:
        return corr
    ok = norms > 0.0
    corr[ok] = centered[ok] @ centered[r] / (norms[ok] * norms[r])
    return np.clip(corr, -1.0, 1.0)


def nearest_neighbors(window_data: np.ndarray, r: int, p: int, abs_corr: bool = False) -> np.ndarray:
    """Indices of the p regions most correlated with region r.

    Ranking is by signed correlation (or magnitude when ``abs_corr``),
    ties broken toward the lower region index; region r itself is never
    a candidate.
    """
    window_data = np.asarray(window_data, dtype=float)
    n_regions = window_data.shape[0]
    if not 0 <= r < n_regions:
        raise ValueError(f"region {r} out of range")
    if not 1 <= p <= n_regions - 1:
        raise ValueError(f"p={p} must lie in 1..{n_regions - 1}")
    corr = _row_correlations(window_data, r)
    score = np.abs(corr) if abs_corr else corr
    order = sorted((i for i in range(n_regions) if i != r), key=lambda i: (-score[i], i))
    return np.array(order[:p], dtype=int)


def fit_local_mesh(window_data: np.ndarray, r: int, neighbors: np.ndarray, ridge: float) -> np.ndarray:
    """Ridge-regress region r's window signal onto its neighbors.

    Solves (X^T X + ridge I) a = X^T y where X stacks the neighbor
    signals column-wise and y is region r's signal.
    """
    window_data = np.asarray(window_data, dtype=float)
    y = window_data[r]
    X = window_data[neighbors].T  # scans x p
    gram = X.T @ X + ridge * np.eye(len(neighbors))
    rhs = X.T @ y
    try:
        return scipy.linalg.solve(gram, rhs, assume_a="pos")
    except np.linalg.LinAlgError as err:
        raise ValueError(
            f"local fit for region {r} is singular at ridge={ridge:g}; rerun with ridge > 0"
        ) from err


def build_mesh_network(window_data: np.ndarray, config: MeshConfig) -> MeshNetwork:
    """One directed network from one window of region signals."""
    window_data = np.asarray(window_data, dtype=float)
    if window_data.ndim != 2:
        raise ValueError("window data must be 2-D (regions x scans)")
    n_regions = window_data.shape[0]
    if n_regions < 2:
        raise ValueError("need at least 2 regions to form a mesh")
    weights = np.zeros((n_regions, n_regions))
    for r in range(n_regions):
        nbrs = nearest_neighbors(window_data, r, config.p, config.abs_corr)
        coef = fit_local_mesh(window_data, r, nbrs, config.ridge)
        weights[r, nbrs] = coef
    return MeshNetwork(weights)


def build_embedding_matrix(
    data: np.ndarray, config: MeshConfig, windows: list[Window] | None = None
) -> EmbeddingMatrix:
    """Flatten one mesh network per window into a W x R^2 feature matrix."""
    data = np.asarray(data, dtype=float)
    if data.ndim != 2:
        raise ValueError("expected a 2-D (regions x scans) matrix")
    n_regions = data.shape[0]
    if windows is None:
        windows = partition_windows(data.shape[1], config.window_width)
    rows = np.zeros((len(windows), n_regions**2))
    for w, win in enumerate(windows):
        net = build_mesh_network(data[:, win.start : win.end], config)
        rows[w] = net.weights.reshape(-1)
    return EmbeddingMatrix(rows, n_regions)
