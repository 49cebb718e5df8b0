"""Synthetic sessions with planted per-task network structure.

Each distinct task label gets its own random directed acyclic mixing
matrix over the regions: the first ``source_count`` regions carry
smoothed Gaussian driver signals, and every later region is an exact
sparse linear mixture of lower-indexed regions.  Within a task block the
signals therefore satisfy x = G x + d identically before observation
noise is added, so a noise-free block admits exact least-squares
recovery of the mixing rows.  Different tasks mix differently, which is
the structure the downstream pipeline is supposed to find again.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from meshwave.session import RegionTimeSeries, ScanSession, TaskSpan

# block lengths (scans) of the default seven-task session layout
DEFAULT_TASK_BLOCKS: tuple[tuple[str, int], ...] = (
    ("emotion", 176),
    ("gambling", 253),
    ("language", 316),
    ("motor", 284),
    ("relational", 232),
    ("social", 274),
    ("wm", 405),
)


@dataclass(frozen=True)
class SynthSpec:
    """Shape and noise knobs for one synthetic session."""

    n_regions: int = 20
    task_blocks: tuple[tuple[str, int], ...] = DEFAULT_TASK_BLOCKS
    source_count: int = 4
    parents: int = 3
    weight_low: float = 0.35
    weight_high: float = 0.95
    driver_smoothing: int = 7
    noise_sigma: float = 0.05

    def __post_init__(self):
        if self.n_regions < 2:
            raise ValueError("need at least two regions")
        if not 1 <= self.source_count < self.n_regions:
            raise ValueError("source_count must lie in 1..n_regions-1")
        if self.parents < 1:
            raise ValueError("derived regions need at least one parent")
        if not 0.0 < self.weight_low <= self.weight_high:
            raise ValueError("weight magnitudes must satisfy 0 < low <= high")
        if self.driver_smoothing < 1:
            raise ValueError("driver_smoothing must be >= 1")
        if self.noise_sigma < 0.0:
            raise ValueError("noise_sigma must be >= 0")
        if not self.task_blocks:
            raise ValueError("at least one task block required")
        for label, length in self.task_blocks:
            if not label or length < 1:
                raise ValueError(f"bad task block ({label!r}, {length})")

    @property
    def n_scans(self) -> int:
        return sum(length for _, length in self.task_blocks)

    @property
    def labels(self) -> list[str]:
        seen: list[str] = []
        for label, _ in self.task_blocks:
            if label not in seen:
                seen.append(label)
        return seen


def _mixing_matrix(spec: SynthSpec, rng: np.random.Generator) -> np.ndarray:
    """Strictly lower-triangular sparse mixing matrix for one task."""
    n = spec.n_regions
    g = np.zeros((n, n))
    for r in range(spec.source_count, n):
        k = min(spec.parents, r)
        cols = np.sort(rng.choice(r, size=k, replace=False))
        mags = rng.uniform(spec.weight_low, spec.weight_high, size=k)
        signs = rng.integers(0, 2, size=k) * 2 - 1
        g[r, cols] = mags * signs
    radius = np.abs(np.linalg.eigvals(g)).max() if n > 0 else 0.0
    if radius >= 1.0:
        raise ValueError(f"mixing matrix unstable (spectral radius {radius:.3f})")
    return g


def _driver(length: int, smoothing: int, rng: np.random.Generator) -> np.ndarray:
    z = rng.standard_normal(length)
    if smoothing > 1:
        z = np.convolve(z, np.ones(smoothing) / smoothing, mode="same")
    z = z - z.mean()
    sd = z.std()
    if sd > 0:
        z = z / sd
    return z


def generate_session(
    spec: SynthSpec, seed: int | np.random.SeedSequence = 0, return_structure: bool = False
):
    """Draw one labelled session; optionally also return the per-task
    mixing matrices keyed by label."""
    rng = np.random.default_rng(seed)
    structures = {label: _mixing_matrix(spec, rng) for label in spec.labels}

    n = spec.n_regions
    blocks: list[np.ndarray] = []
    spans: list[TaskSpan] = []
    t = 0
    for label, length in spec.task_blocks:
        d = np.zeros((n, length))
        for s in range(spec.source_count):
            d[s] = _driver(length, spec.driver_smoothing, rng)
        g = structures[label]
        x = scipy.linalg.solve_triangular(np.eye(n) - g, d, lower=True, unit_diagonal=True)
        blocks.append(x)
        spans.append(TaskSpan(label, t, t + length))
        t += length

    signals = np.hstack(blocks)
    if spec.noise_sigma > 0:
        signals = signals + spec.noise_sigma * rng.standard_normal(signals.shape)
    session = ScanSession(RegionTimeSeries(signals), spans)
    if return_structure:
        return session, structures
    return session


def make_synth_spec(**overrides) -> SynthSpec:
    """SynthSpec with defaults, overridable field by field."""
    return SynthSpec(**overrides)
