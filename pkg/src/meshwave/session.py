"""Session containers: region time-series, task spans, and scan windows.

A session is an R x T matrix of region signals plus an optional list of
contiguous task spans covering the scan axis.  Windows are fixed-width,
non-overlapping slices of the scan axis; a trailing remainder shorter
than the window width is dropped.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class TaskSpan:
    """A contiguous run of scans sharing one task label. End is exclusive."""

    label: str
    start: int
    end: int

    def __post_init__(self):
        if not self.label:
            raise ValueError("task label must be non-empty")
        if self.start < 0 or self.end <= self.start:
            raise ValueError(f"bad span [{self.start}, {self.end})")

    @property
    def length(self) -> int:
        return self.end - self.start


@dataclass(frozen=True)
class Window:
    """Fixed-width slice of the scan axis. End is exclusive."""

    index: int
    start: int
    end: int

    def __post_init__(self):
        if self.index < 0 or self.start < 0 or self.end <= self.start:
            raise ValueError(f"bad window ({self.index}, [{self.start}, {self.end}))")

    @property
    def width(self) -> int:
        return self.end - self.start


@dataclass
class RegionTimeSeries:
    """R x T matrix of per-region signals; rows are regions, columns scans."""

    data: np.ndarray

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=float)
        if self.data.ndim != 2:
            raise ValueError(f"expected 2-D (regions x scans), got shape {self.data.shape}")
        if self.data.shape[0] < 1 or self.data.shape[1] < 1:
            raise ValueError(f"degenerate shape {self.data.shape}")
        if not np.all(np.isfinite(self.data)):
            raise ValueError("region signals contain non-finite values")

    @property
    def n_regions(self) -> int:
        return self.data.shape[0]

    @property
    def n_scans(self) -> int:
        return self.data.shape[1]


@dataclass
class ScanSession:
    """A region time-series together with its (optional) task annotation.

    ``spans`` must be in scan order, non-overlapping, and — when present —
    tile the scan axis exactly from 0 to T.  An empty span list marks an
    unlabeled session.
    """

    signals: RegionTimeSeries
    spans: list[TaskSpan] = field(default_factory=list)

    def __post_init__(self):
        if self.spans:
            t = 0
            for sp in self.spans:
                if sp.start != t:
                    raise ValueError(
                        f"spans must tile the scan axis: expected start {t}, got {sp.start}"
                    )
                t = sp.end
            if t != self.signals.n_scans:
                raise ValueError(
                    f"spans cover [0, {t}) but the session has {self.signals.n_scans} scans"
                )

    @property
    def n_regions(self) -> int:
        return self.signals.n_regions

    @property
    def n_scans(self) -> int:
        return self.signals.n_scans

    def scan_labels(self) -> list[str]:
        """Per-scan task label; empty list when the session is unlabeled."""
        out: list[str] = []
        for sp in self.spans:
            out.extend([sp.label] * sp.length)
        return out


def average_region_signals(voxel_data: np.ndarray, region_of_voxel: np.ndarray) -> RegionTimeSeries:
    """Collapse voxel rows into region rows by averaging.

    voxel_data: V x T matrix; region_of_voxel: length-V integer labels in
    0..R-1.  Every region id in the range must own at least one voxel.
    """
    voxel_data = np.asarray(voxel_data, dtype=float)
    region_of_voxel = np.asarray(region_of_voxel, dtype=int)
    if voxel_data.ndim != 2:
        raise ValueError("voxel_data must be 2-D (voxels x scans)")
    if region_of_voxel.shape != (voxel_data.shape[0],):
        raise ValueError("one region label per voxel row required")
    if region_of_voxel.min(initial=0) < 0:
        raise ValueError("region labels must be non-negative")
    n_regions = int(region_of_voxel.max()) + 1 if region_of_voxel.size else 0
    if n_regions < 1:
        raise ValueError("no voxels given")
    rows = np.zeros((n_regions, voxel_data.shape[1]))
    for r in range(n_regions):
        mask = region_of_voxel == r
        if not mask.any():
            raise ValueError(f"region {r} owns no voxels")
        rows[r] = voxel_data[mask].mean(axis=0)
    return RegionTimeSeries(rows)


def partition_windows(n_scans: int, width: int) -> list[Window]:
    """Non-overlapping windows of ``width`` scans; trailing remainder dropped."""
    if width < 1:
        raise ValueError("window width must be >= 1")
    if n_scans < width:
        raise ValueError(f"session of {n_scans} scans is shorter than one window ({width})")
    count = n_scans // width
    return [Window(i, i * width, (i + 1) * width) for i in range(count)]


def window_majority_label(window: Window, spans: list[TaskSpan]) -> str:
    """Label covering the most scans of ``window``; ties go to the earlier span."""
    if not spans:
        raise ValueError("session has no task spans")
    counts: dict[str, int] = {}
    for sp in spans:
        overlap = min(window.end, sp.end) - max(window.start, sp.start)
        if overlap > 0:
            counts[sp.label] = counts.get(sp.label, 0) + overlap
    if not counts:
        raise ValueError(f"window [{window.start}, {window.end}) lies outside all spans")
    best = max(counts.values())
    for sp in spans:  # first span in scan order wins ties
        if counts.get(sp.label, 0) == best:
            return sp.label
    raise AssertionError("unreachable")


def window_labels(session: ScanSession, windows: list[Window]) -> list[str]:
    return [window_majority_label(w, session.spans) for w in windows]
