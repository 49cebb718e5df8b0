"""On-disk formats: matrix CSVs, key-value manifests, content hashing.

All writers emit deterministic bytes for identical inputs: floats are
formatted with ``%.17e`` (round-trips float64 exactly), dict keys are
written in insertion order, and no timestamps are recorded.
"""

from __future__ import annotations

import hashlib
from pathlib import Path

import numpy as np

FLOAT_FMT = "%.17e"


def format_float(x: float) -> str:
    return FLOAT_FMT % float(x)


def write_matrix_csv(path: str | Path, matrix: np.ndarray, header: list[str] | None = None) -> None:
    """Write a 2-D array as CSV, one row per line, optional header row."""
    m = np.asarray(matrix, dtype=float)
    if m.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {m.shape}")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        if header is not None:
            if len(header) != m.shape[1]:
                raise ValueError("header length does not match column count")
            fh.write(",".join(header) + "\n")
        for row in m:
            fh.write(",".join(format_float(v) for v in row) + "\n")


def read_matrix_csv(path: str | Path, has_header: bool = False) -> tuple[np.ndarray, list[str] | None]:
    """Read a CSV written by :func:`write_matrix_csv`. Returns (matrix, header)."""
    header: list[str] | None = None
    rows: list[list[float]] = []
    with open(path, "r", encoding="utf-8") as fh:
        for i, line in enumerate(fh):
            line = line.strip()
            if not line:
                continue
            if i == 0 and has_header:
                header = line.split(",")
                continue
            rows.append([float(v) for v in line.split(",")])
    if not rows:
        return np.zeros((0, 0)), header
    return np.array(rows, dtype=float), header


def write_keyvalue(path: str | Path, entries: dict[str, str]) -> None:
    """Write a flat ``key = value`` text file, one entry per line."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for key, value in entries.items():
            fh.write(f"{key} = {value}\n")


def read_keyvalue(path: str | Path) -> dict[str, str]:
    entries: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"{path}: malformed line {line!r}")
            key, _, value = line.partition("=")
            entries[key.strip()] = value.strip()
    return entries


def sha256_file(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def sha256_text(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()
