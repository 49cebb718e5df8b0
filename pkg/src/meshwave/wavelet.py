"""Multi-level wavelet decomposition with periodic boundary handling.

The transform is the classical two-channel orthonormal filter bank run as
a cascade: at each level the current approximation is circularly filtered
and downsampled by two into a coarser approximation and a detail band.
Odd-length inputs are extended by repeating the final sample before the
split; the pre-extension length is remembered so synthesis can truncate
back, which keeps reconstruction exact (energy bookkeeping is only exact
when no extension was needed at any level).

Sub-band indexing for a depth-L decomposition of a signal x:

    band 0        the original signal
    band j, 1..L  A_j, the level-j approximation mapped back to full length
    band L+l      D_l, the level-l detail mapped back to full length

so that x = A_L + D_L + ... + D_1 and A_{j-1} = A_j + D_j.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# Analysis low-pass filters.  The high-pass mate is the alternating-sign
# reversal g[m] = (-1)^m h[M-1-m].
FILTERS: dict[str, np.ndarray] = {
    "haar": np.array([1.0, 1.0]) / math.sqrt(2.0),
    "db4": np.array(
        [
            0.48296291314469025,
            0.8365163037378079,
            0.22414386804185735,
            -0.12940952255092145,
        ]
    ),
}


def _filters(wavelet: str) -> tuple[np.ndarray, np.ndarray]:
    if wavelet not in FILTERS:
        raise ValueError(f"unknown wavelet {wavelet!r}; choose from {sorted(FILTERS)}")
    h = FILTERS[wavelet]
    m = len(h)
    g = np.array([(-1) ** i * h[m - 1 - i] for i in range(m)])
    return h, g


@dataclass
class WaveletCoefficients:
    """Coefficient pyramid from a depth-L decomposition of one signal.

    ``details[l-1]`` holds the level-l detail band; ``approx`` is the
    deepest approximation.  ``level_input_lengths[l-1]`` records the
    (pre-extension) length fed into level l, which doubles as the output
    length of the matching synthesis step.
    """

    wavelet: str
    original_length: int
    approx: np.ndarray
    details: list[np.ndarray]
    level_input_lengths: list[int]

    @property
    def levels(self) -> int:
        return len(self.details)

    @property
    def n_subbands(self) -> int:
        return 2 * self.levels + 1


def max_decomposition_levels(n: int, wavelet: str = "db4") -> int:
    """Deepest usable decomposition for a length-n signal.

    Bounded by log2(n); additionally each level's (even-extended) input
    must be at least as long as the filter, so that the periodized filter
    bank stays orthonormal.
    """
    if n < 1:
        raise ValueError("signal length must be >= 1")
    h, _ = _filters(wavelet)
    cap = int(math.floor(math.log2(n))) if n > 1 else 0
    levels = 0
    cur = n
    while levels < cap:
        padded = cur + (cur % 2)
        if padded < len(h):
            break
        levels += 1
        cur = padded // 2
    return levels


def _analyze_step(x: np.ndarray, h: np.ndarray, g: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    if len(x) % 2:
        x = np.append(x, x[-1])
    n = len(x)
    half = n // 2
    k2 = 2 * np.arange(half)
    a = np.zeros(half)
    d = np.zeros(half)
    for m in range(len(h)):
        xs = x[(k2 + m) % n]
        a += h[m] * xs
        d += g[m] * xs
    return a, d


def _synthesize_step(
    a: np.ndarray, d: np.ndarray, h: np.ndarray, g: np.ndarray, out_length: int
) -> np.ndarray:
    half = len(a)
    n = 2 * half
    y = np.zeros(n)
    k2 = 2 * np.arange(half)
    for m in range(len(h)):
        idx = (k2 + m) % n  # distinct for fixed m: stride-2 residues
        y[idx] += h[m] * a + g[m] * d
    return y[:out_length]


def dwt_decompose(x: np.ndarray, wavelet: str = "db4", levels: int | None = None) -> WaveletCoefficients:
    """Run the analysis cascade ``levels`` deep on a 1-D signal."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValueError("dwt_decompose expects a 1-D signal")
    limit = max_decomposition_levels(len(x), wavelet)
    if levels is None:
        levels = limit
    if not 1 <= levels <= limit:
        raise ValueError(
            f"levels={levels} out of range for length {len(x)} with {wavelet} (max {limit})"
        )
    h, g = _filters(wavelet)
    details: list[np.ndarray] = []
    input_lengths: list[int] = []
    a = x
    for _ in range(levels):
        input_lengths.append(len(a))
        a, d = _analyze_step(a, h, g)
        details.append(d)
    return WaveletCoefficients(wavelet, len(x), a, details, input_lengths)


def inverse_dwt(coeffs: WaveletCoefficients) -> np.ndarray:
    """Full synthesis back to the original signal."""
    h, g = _filters(coeffs.wavelet)
    a = coeffs.approx
    for level in range(coeffs.levels, 0, -1):
        a = _synthesize_step(a, coeffs.details[level - 1], h, g, coeffs.level_input_lengths[level - 1])
    return a


def reconstruct_subband(coeffs: WaveletCoefficients, band: int) -> np.ndarray:
    """Map one sub-band back to the original signal length.

    Band 0 resynthesizes everything; band j in 1..L keeps only the
    level-j approximation; band L+l keeps only the level-l detail.
    """
    levels = coeffs.levels
    if not 0 <= band <= 2 * levels:
        raise ValueError(f"band {band} out of range 0..{2 * levels}")
    if band == 0:
        return inverse_dwt(coeffs)
    h, g = _filters(coeffs.wavelet)
    if band <= levels:
        stop = band
        a = coeffs.approx
        # bring the approximation up from level L to the requested level
        for level in range(levels, stop, -1):
            a = _synthesize_step(a, coeffs.details[level - 1], h, g, coeffs.level_input_lengths[level - 1])
    else:
        stop = band - levels
        d = coeffs.details[stop - 1]
        a = _synthesize_step(np.zeros_like(d), d, h, g, coeffs.level_input_lengths[stop - 1])
        stop -= 1
    # remaining levels carry no coefficients: synthesize with zero details
    for level in range(stop, 0, -1):
        a = _synthesize_step(a, np.zeros_like(a), h, g, coeffs.level_input_lengths[level - 1])
    return a


def subband_name(band: int, levels: int) -> str:
    if band == 0:
        return "orig"
    if 1 <= band <= levels:
        return f"A{band}"
    if levels < band <= 2 * levels:
        return f"D{band - levels}"
    raise ValueError(f"band {band} out of range 0..{2 * levels}")


@dataclass
class SubbandStack:
    """All sub-band reconstructions of an R x T session matrix.

    ``bands`` has shape (2L+1, R, T); row order follows the band
    indexing documented at module level.
    """

    wavelet: str
    levels: int
    bands: np.ndarray

    def __post_init__(self):
        expected = 2 * self.levels + 1
        if self.bands.ndim != 3 or self.bands.shape[0] != expected:
            raise ValueError(f"bands must be ({expected}, R, T), got {self.bands.shape}")

    @property
    def n_subbands(self) -> int:
        return self.bands.shape[0]

    def names(self) -> list[str]:
        return [subband_name(b, self.levels) for b in range(self.n_subbands)]

    def band(self, index: int) -> np.ndarray:
        return self.bands[index]


def decompose_all_subbands(data: np.ndarray, wavelet: str = "db4", levels: int | None = None) -> SubbandStack:
    """Decompose every region row of an R x T matrix into all sub-bands.

    Band 0 is the input itself; the remaining 2L bands are per-region
    reconstructions from single coefficient bands.
    """
    data = np.asarray(data, dtype=float)
    if data.ndim != 2:
        raise ValueError("expected a 2-D (regions x scans) matrix")
    n_regions, n_scans = data.shape
    limit = max_decomposition_levels(n_scans, wavelet)
    if levels is None:
        levels = limit
    if not 1 <= levels <= limit:
        raise ValueError(
            f"levels={levels} out of range for length {n_scans} with {wavelet} (max {limit})"
        )
    bands = np.zeros((2 * levels + 1, n_regions, n_scans))
    bands[0] = data
    for r in range(n_regions):
        coeffs = dwt_decompose(data[r], wavelet, levels)
        for band in range(1, 2 * levels + 1):
            bands[band, r] = reconstruct_subband(coeffs, band)
    return SubbandStack(wavelet, levels, bands)
