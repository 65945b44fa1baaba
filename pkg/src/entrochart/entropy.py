"""Approximate-entropy core, the pixel wrapper, and baseline complexity measures.

Window convention
-----------------
The default (``"classical"``) is the textbook approximate-entropy recipe: a
window of size ``m`` holds m samples, giving W_m = N - m + 1 windows, the
similarity test is ``d <= r``, and every window matches itself, so similarity
fractions are at least 1/W and the entropy is always defined — this is what
lets approximate entropy score arbitrarily noisy charts where sample entropy
drops out. Natural logs throughout.

Two switches exist for sensitivity analysis. Both use windows spanning indices
i..i+m inclusive (m+1 samples, W_m = N - m) and a strict ``d < r`` test:
``"inclusive"`` counts the self-match, while ``"exclusive"`` removes it, so
similarity can hit zero and the score comes back flagged as undefined.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .raster import ChartDims, DEFAULT_DIMS, PixelSeries, rasterize
from .series import TimeSeries

INCLUSIVE = "inclusive"
EXCLUSIVE = "exclusive"
CLASSICAL = "classical"
DEFAULT_CONVENTION = CLASSICAL


@dataclass(frozen=True)
class EntropyParams:
    """Window length m and tolerance r (pixel units)."""

    m: int = 2
    r: float = 20.0

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("m must be >= 1")
        if self.r <= 0:
            raise ValueError("r must be > 0")


DEFAULT_PARAMS = EntropyParams(2, 20.0)


@dataclass(frozen=True)
class EntropyScore:
    """An entropy value in nats; ``value is None`` flags an undefined score
    (some window matched nothing), which downstream sweeps must tolerate."""

    value: float | None
    params: EntropyParams
    n: int

    @property
    def defined(self) -> bool:
        return self.value is not None


def window_distance(ys: np.ndarray, i: int, j: int, m: int) -> float:
    """Chebyshev distance between the size-m windows starting at i and j."""
    ys = np.asarray(ys, dtype=float)
    n = len(ys)
    if m < 0:
        raise ValueError("m must be non-negative")
    for start in (i, j):
        if start < 0 or start + m >= n:
            raise ValueError(f"window [{start}, {start + m}] out of range for n={n}")
    return float(np.max(np.abs(ys[i : i + m + 1] - ys[j : j + m + 1])))


def _pairwise_max_dist(ys: np.ndarray, size: int) -> np.ndarray:
    """W x W matrix of max aligned-value differences for windows of ``size`` samples."""
    w = len(ys) - size + 1
    d = np.zeros((w, w))
    for k in range(size):
        seg = ys[k : k + w]
        np.maximum(d, np.abs(seg[:, None] - seg[None, :]), out=d)
    return d


def phi(ys: np.ndarray, m: int, r: float, convention: str = DEFAULT_CONVENTION) -> float | None:
    """Mean log similarity fraction over all size-m windows; None if undefined."""
    ys = np.asarray(ys, dtype=float)
    if convention in (INCLUSIVE, EXCLUSIVE):
        size = m + 1
        w = len(ys) - size + 1
        if w < 2:
            raise ValueError(f"need at least 2 windows, got {w} (n={len(ys)}, m={m})")
        d = _pairwise_max_dist(ys, size)
        counts = np.count_nonzero(d < r, axis=1)  # d(i,i)=0 always passes
        if convention == EXCLUSIVE:
            counts = counts - 1
            if np.any(counts == 0):
                return None
        # Sorting fixes the summation order so window permutations (e.g.
        # reversing the series) reproduce the value bit-for-bit.
        return float(np.mean(np.log(np.sort(counts) / w)))
    if convention == CLASSICAL:
        size = m
        w = len(ys) - size + 1
        if w < 1:
            raise ValueError(f"need at least 1 window, got {w} (n={len(ys)}, m={m})")
        d = _pairwise_max_dist(ys, size)
        counts = np.count_nonzero(d <= r, axis=1)  # self-match included
        return float(np.mean(np.log(np.sort(counts) / w)))
    raise ValueError(f"unknown convention: {convention!r}")


def approx_entropy(
    ys: np.ndarray,
    params: EntropyParams = DEFAULT_PARAMS,
    convention: str = DEFAULT_CONVENTION,
) -> EntropyScore:
    """Approximate entropy phi(m) - phi(m+1); undefined propagates as a flag."""
    ys = np.asarray(ys, dtype=float)
    n = len(ys)
    if n <= params.m + 2:
        raise ValueError(f"need n > m + 2, got n={n}, m={params.m}")
    p_m = phi(ys, params.m, params.r, convention)
    p_m1 = phi(ys, params.m + 1, params.r, convention)
    if p_m is None or p_m1 is None:
        return EntropyScore(None, params, n)
    return EntropyScore(p_m - p_m1, params, n)


def pae(
    series: TimeSeries,
    dims: ChartDims = DEFAULT_DIMS,
    params: EntropyParams = DEFAULT_PARAMS,
    convention: str = DEFAULT_CONVENTION,
) -> EntropyScore:
    """Pixel approximate entropy: approx_entropy of the rasterized chart."""
    return approx_entropy(rasterize(series, dims).ys, params, convention)


def sample_entropy(
    ys: np.ndarray,
    params: EntropyParams = DEFAULT_PARAMS,
    convention: str = DEFAULT_CONVENTION,
) -> EntropyScore:
    """Sample entropy -log(A/B) under the same window convention as
    :func:`approx_entropy`; undefined (None) when either count is zero."""
    ys = np.asarray(ys, dtype=float)
    n = len(ys)
    if n <= params.m + 2:
        raise ValueError(f"need n > m + 2, got n={n}, m={params.m}")

    def matches(m: int) -> int:
        if convention in (INCLUSIVE, EXCLUSIVE):
            d = _pairwise_max_dist(ys, m + 1)
            hit = d < params.r
        elif convention == CLASSICAL:
            d = _pairwise_max_dist(ys, m)
            hit = d <= params.r
        else:
            raise ValueError(f"unknown convention: {convention!r}")
        np.fill_diagonal(hit, False)  # no self-matches in either variant
        return int(np.count_nonzero(hit))

    b = matches(params.m)
    a = matches(params.m + 1)
    if a == 0 or b == 0:
        return EntropyScore(None, params, n)
    return EntropyScore(float(-np.log(a / b)), params, n)


def multiscale_entropy(
    ys: np.ndarray,
    params: EntropyParams = DEFAULT_PARAMS,
    scales: tuple[int, ...] = (1, 2, 5),
    convention: str = DEFAULT_CONVENTION,
) -> list[tuple[int, EntropyScore]]:
    """Approximate entropy of non-overlapping block averages at each scale."""
    ys = np.asarray(ys, dtype=float)
    n = len(ys)
    out = []
    for scale in scales:
        if scale < 1:
            raise ValueError(f"scale must be >= 1, got {scale}")
        coarse_n = n // scale
        if coarse_n <= params.m + 2:
            raise ValueError(
                f"scale {scale} leaves {coarse_n} samples, need more than m + 2 = {params.m + 2}"
            )
        coarse = ys[: coarse_n * scale].reshape(coarse_n, scale).mean(axis=1)
        out.append((scale, approx_entropy(coarse, params, convention)))
    return out


def flattened_length(ps: PixelSeries) -> float:
    """Polyline arc length in pixel units (the 'stretched flat' length)."""
    return float(np.sum(np.sqrt(1.0 + np.diff(ps.ys) ** 2)))


def autocorr_lag1(ps: PixelSeries) -> float | None:
    """Pearson correlation with the lag-1 shifted series; None at zero variance."""
    a = ps.ys[:-1]
    b = ps.ys[1:]
    if np.std(a) == 0 or np.std(b) == 0:
        return None
    return float(np.corrcoef(a, b)[0, 1])


def fourier_highfreq_ratio(ps: PixelSeries, cutoff_fraction: float = 0.25) -> float | None:
    """Fraction of mean-removed spectral power above cutoff_fraction * Nyquist."""
    if not 0 < cutoff_fraction < 1:
        raise ValueError("cutoff_fraction must be in (0, 1)")
    n = len(ps.ys)
    if n < 8:
        raise ValueError("need at least 8 samples")
    y = ps.ys - ps.ys.mean()
    power = np.abs(np.fft.rfft(y)) ** 2
    freqs = np.fft.rfftfreq(n)  # cycles/sample; Nyquist = 0.5
    total = power[1:].sum()
    if total == 0:
        return None
    high = power[freqs > cutoff_fraction * 0.5].sum()
    return float(high / total)
