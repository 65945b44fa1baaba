"""Triangle-noise injection and target seeking toward a desired entropy value."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .entropy import DEFAULT_CONVENTION, DEFAULT_PARAMS, EntropyParams, approx_entropy
from .raster import ChartDims, PixelSeries, rasterize
from .series import TimeSeries

DEFAULT_HALF_WIDTH = 2
RETRY_BUDGET = 20
RETRY_DAMPING = 0.6


class UnreachableTargetError(ValueError):
    """Requested entropy target lies below what noise injection can reach."""


@dataclass(frozen=True)
class NoiseSpec:
    """Triangle-noise parameters.

    sigma bounds the uniform amplitude draw U(-sigma, sigma). It is expressed
    in the units of the series it is applied to: pixel units when handed to
    :func:`add_noise_step` directly, data units (defaulting to the clean
    series' standard deviation when None) for :func:`perturb_to_target_pae`,
    which converts it once using the rasterization y-scale.
    """

    sigma: float | None = None
    half_width: int = DEFAULT_HALF_WIDTH
    seed: int = 0

    def __post_init__(self):
        if self.sigma is not None and self.sigma <= 0:
            raise ValueError("sigma must be > 0")
        if self.half_width < 1:
            raise ValueError("half_width must be >= 1")


@dataclass(frozen=True)
class PerturbResult:
    series: PixelSeries
    achieved_pae: float
    steps: int
    converged: bool


def add_noise_step(
    ps: PixelSeries, spec: NoiseSpec, rng: np.random.Generator
) -> PixelSeries:
    """Apply one triangle perturbation at a random column.

    Draws a column x uniformly and an amplitude dy ~ U(-sigma, sigma), then
    adds a triangle-shaped bump: full dy at x, tapering linearly to zero at
    x +- half_width, so the perturbed value interpolates back to the existing
    curve at the triangle's feet. Columns outside that span are unchanged, and
    results are clamped to [0, height]. A zero draw leaves the series
    untouched.
    """
    if spec.sigma is None:
        raise ValueError("add_noise_step needs an explicit sigma (pixel units)")
    ys = ps.ys.copy()
    n = len(ys)
    hw = spec.half_width
    x = int(rng.integers(0, n))
    dy = float(rng.uniform(-spec.sigma, spec.sigma))

    left = max(0, x - hw)
    right = min(n - 1, x + hw)
    offsets = np.arange(left, right + 1) - x
    bump = dy * (1.0 - np.abs(offsets) / hw)
    ys[left : right + 1] = np.clip(ys[left : right + 1] + bump, 0.0, ps.dims.height)
    return PixelSeries(ys, ps.dims)


def seek_target_pae(
    ps: PixelSeries,
    target: float,
    tolerance: float,
    max_steps: int,
    sigma_px: float,
    half_width: int,
    rng: np.random.Generator,
    params: EntropyParams = DEFAULT_PARAMS,
    convention: str = DEFAULT_CONVENTION,
) -> PerturbResult:
    """Add triangle noise to a pixel series until its entropy hits ``target``.

    Each accepted step may consume up to RETRY_BUDGET fresh draws: a draw
    overshooting target + tolerance is discarded (noise cannot be removed)
    and the retry redraws with a geometrically damped amplitude so that fine
    targets stay reachable; if every retry overshoots, the draw closest to
    the target is accepted so progress continues.
    """
    if tolerance <= 0:
        raise ValueError("tolerance must be > 0")
    current = ps
    score = approx_entropy(current.ys, params, convention)
    achieved = score.value if score.defined else float("inf")
    if abs(achieved - target) <= tolerance:
        return PerturbResult(current, achieved, 0, True)
    if target < achieved - tolerance:
        raise UnreachableTargetError(
            f"target {target} below current entropy {achieved:.4f}; "
            "noise injection cannot lower entropy"
        )
    steps = 0
    while steps < max_steps:
        best = None
        best_gap = float("inf")
        accepted = None
        for attempt in range(RETRY_BUDGET):
            step_spec = NoiseSpec(
                sigma=sigma_px * RETRY_DAMPING**attempt, half_width=half_width
            )
            cand = add_noise_step(current, step_spec, rng)
            cand_score = approx_entropy(cand.ys, params, convention)
            if not cand_score.defined:
                continue
            value = cand_score.value
            if value <= target + tolerance:
                accepted = (cand, value)
                break
            gap = abs(value - target)
            if gap < best_gap:
                best, best_gap = (cand, value), gap
        if accepted is None:
            accepted = best
        if accepted is None:
            # Every retry produced an undefined score; count the attempt.
            steps += 1
            continue
        current, achieved = accepted
        steps += 1
        if abs(achieved - target) <= tolerance:
            return PerturbResult(current, achieved, steps, True)
    return PerturbResult(current, achieved, steps, False)


def perturb_to_target_pae(
    series: TimeSeries,
    dims: ChartDims,
    target: float,
    tolerance: float,
    max_steps: int,
    spec: NoiseSpec,
    params: EntropyParams = DEFAULT_PARAMS,
    convention: str = DEFAULT_CONVENTION,
) -> PerturbResult:
    """Rasterize ``series`` and add noise until its entropy reaches ``target``.

    spec.sigma is in data units (None means the clean series' standard
    deviation); it is converted to pixel units once and held fixed while noise
    accumulates, keeping step sizes stationary.
    """
    ps = rasterize(series, dims)
    lo, hi = series.ys.min(), series.ys.max()
    if spec.sigma is None:
        sigma_px = float(np.std(ps.ys))
        if sigma_px == 0:
            raise ValueError("flat series: provide an explicit sigma")
    elif hi > lo:
        sigma_px = spec.sigma * dims.height / (hi - lo)
    else:
        # Degenerate y-range: the pixel scale is undefined, treat sigma as pixels.
        sigma_px = spec.sigma
    rng = np.random.default_rng(spec.seed)
    return seek_target_pae(
        ps, target, tolerance, max_steps, sigma_px, spec.half_width, rng, params, convention
    )
