"""Experiment harness: noise-correlation analysis, parameter calibration,
stimulus-set generation, and chart advisors (smoothing, aspect selection).

Every generator is a pure function of its seed: regenerating a stimulus set
from its master seed reproduces every image byte and manifest field.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .entropy import DEFAULT_PARAMS, EntropyParams, approx_entropy, pae
from .noise import (
    DEFAULT_HALF_WIDTH,
    NoiseSpec,
    PerturbResult,
    UnreachableTargetError,
    add_noise_step,
    seek_target_pae,
)
from .raster import (
    ChartDims,
    ChartStyle,
    DEFAULT_DIMS,
    PixelSeries,
    RenderedChart,
    mask_series,
    rasterize,
    render_chart,
)
from .series import (
    BaseFunctionKind,
    CORRELATION_BASES,
    SHAPE_BASES,
    TimeSeries,
    generate_base,
)
from .stats import OlsFit, ols_fit

SCHEMA_VERSION = 1

DEFAULT_NOISE_LEVELS = tuple(range(0, 200, 20))
# Calibration uses a tighter, denser noise range: it compares how linearly each
# (m, r) cell tracks noise while the response is still unsaturated, which is
# where parameter differences matter.
CALIBRATION_NOISE_LEVELS = tuple(range(0, 60, 6))
CALIBRATION_DIMS = (ChartDims(100, 150), ChartDims(200, 300), ChartDims(400, 600))
DEFAULT_M_GRID = (1, 2, 3)
DEFAULT_R_GRID = (5.0, 10.0, 15.0, 20.0, 25.0, 30.0, 40.0)

LINEUP_LEVELS = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8)
SHAPE_LEVELS = (0.2, 0.4, 0.8, 1.2)
GLANCE_TIMES_MS = (50, 100, 200, 2000)
GLANCE_INITIAL_PAES = (0.045, 0.09, 0.18)
GLANCE_DELTAS = (0.015, 0.06, 0.24)

STIMULUS_TOLERANCE = 0.015
STIMULUS_MAX_STEPS = 5000


def _rng(master_seed: int, *indices: int) -> np.random.Generator:
    return np.random.default_rng([master_seed, *indices])


# ---------------------------------------------------------------------------
# Stimulus containers


@dataclass
class TrialManifest:
    trial_id: str
    images: dict[str, dict[str, str]]  # role -> {"svg": path, "pgm": path}
    conditions: dict
    answer_key: object
    order: list[str]  # display order of image roles

    def to_json_dict(self) -> dict:
        return {
            "trial_id": self.trial_id,
            "images": self.images,
            "conditions": self.conditions,
            "answer_key": self.answer_key,
            "order": self.order,
        }


@dataclass
class StimulusSet:
    experiment: str
    set_id: str
    master_seed: int
    dims: ChartDims
    trials: list[TrialManifest]
    presentation_order: list[str]  # trial ids in display order
    images: dict[str, RenderedChart] = field(repr=False)  # path base -> rendering
    pixel_series: dict[str, PixelSeries] = field(repr=False)  # path base -> columns

    def manifest_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "experiment": self.experiment,
            "set_id": self.set_id,
            "master_seed": self.master_seed,
            "dims": str(self.dims),
            "presentation_order": self.presentation_order,
            "trials": [t.to_json_dict() for t in self.trials],
        }

    def manifest_bytes(self) -> bytes:
        return (json.dumps(self.manifest_dict(), indent=2, sort_keys=True) + "\n").encode("utf-8")

    def write(self, outdir: str | Path) -> Path:
        """Write all images plus manifest.json under ``outdir``; returns the path."""
        outdir = Path(outdir)
        outdir.mkdir(parents=True, exist_ok=True)
        for base, rendered in self.images.items():
            target = outdir / base
            target.parent.mkdir(parents=True, exist_ok=True)
            target.with_suffix(".svg").write_bytes(rendered.svg)
            target.with_suffix(".pgm").write_bytes(rendered.pgm)
        (outdir / "manifest.json").write_bytes(self.manifest_bytes())
        return outdir


def _image_entry(
    set_id: str,
    trial_id: str,
    role: str,
    ps: PixelSeries,
    images: dict[str, RenderedChart],
    pixel_series: dict[str, PixelSeries],
    style: ChartStyle = ChartStyle(),
) -> dict[str, str]:
    base = f"{set_id}/{trial_id}_{role}"
    images[base] = render_chart(ps, style)
    pixel_series[base] = ps
    return {"svg": base + ".svg", "pgm": base + ".pgm"}


def _seek_level(
    ps: PixelSeries,
    target: float,
    rng: np.random.Generator,
    sigma_px: float,
    params: EntropyParams,
    tolerance: float = STIMULUS_TOLERANCE,
    max_steps: int = STIMULUS_MAX_STEPS,
    half_width: int = DEFAULT_HALF_WIDTH,
) -> PerturbResult:
    result = seek_target_pae(
        ps, target, tolerance, max_steps, sigma_px, half_width, rng, params
    )
    if not result.converged:
        raise UnreachableTargetError(
            f"level {target} not reached within {max_steps} steps "
            f"(achieved {result.achieved_pae:.4f})"
        )
    return result


# ---------------------------------------------------------------------------
# Noise-correlation analysis and parameter calibration


@dataclass(frozen=True)
class Exp1Report:
    fits: dict[BaseFunctionKind, OlsFit]
    samples: dict[BaseFunctionKind, list[tuple[int, float]]]
    levels: tuple[int, ...]
    replicates: int
    dims: ChartDims
    params: EntropyParams
    seed: int


def _noise_level_samples(
    kind: BaseFunctionKind,
    levels: tuple[int, ...],
    replicates: int,
    dims: ChartDims,
    seed: int,
    kind_index: int,
) -> list[tuple[int, np.ndarray]]:
    """Pixel series after each cumulative noise-step count, per replicate."""
    clean = rasterize(generate_base(kind, dims.width), dims)
    sigma_px = float(np.std(clean.ys))
    level_list = sorted(set(levels))
    out = []
    for rep in range(replicates):
        rng = _rng(seed, kind_index, rep)
        spec = NoiseSpec(sigma=sigma_px)
        cur = clean
        prev = 0
        for level in level_list:
            for _ in range(level - prev):
                cur = add_noise_step(cur, spec, rng)
            prev = level
            out.append((level, cur.ys))
    return out


def run_experiment1(
    levels: tuple[int, ...] = DEFAULT_NOISE_LEVELS,
    replicates: int = 5,
    dims: ChartDims = DEFAULT_DIMS,
    params: EntropyParams = DEFAULT_PARAMS,
    seed: int = 0,
) -> Exp1Report:
    """Regress chart entropy on injected noise level for each base curve.

    The noise level is the count of triangle-noise applications; level 0 is
    the clean chart.
    """
    if len(set(levels)) < 5:
        raise ValueError("need at least 5 distinct noise levels")
    if replicates < 3:
        raise ValueError("need at least 3 replicates")
    fits: dict[BaseFunctionKind, OlsFit] = {}
    samples: dict[BaseFunctionKind, list[tuple[int, float]]] = {}
    for k_idx, kind in enumerate(CORRELATION_BASES):
        pairs = []
        for level, ys in _noise_level_samples(kind, levels, replicates, dims, seed, k_idx):
            score = approx_entropy(ys, params)
            if score.defined:
                pairs.append((level, score.value))
        samples[kind] = pairs
        xs = np.array([p[0] for p in pairs], dtype=float)
        ys_ = np.array([p[1] for p in pairs], dtype=float)
        fits[kind] = ols_fit(xs, ys_)
    return Exp1Report(fits, samples, tuple(sorted(set(levels))), replicates, dims, params, seed)


@dataclass(frozen=True)
class CalibrationCell:
    m: int
    r: float
    mean_correlation: float | None
    undefined_fraction: float
    excluded: bool


@dataclass(frozen=True)
class CalibrationResult:
    cells: tuple[CalibrationCell, ...]  # ranked: best correlation first, excluded last

    def rank_of(self, m: int, r: float) -> int:
        """1-based rank of the (m, r) cell."""
        for i, cell in enumerate(self.cells):
            if cell.m == m and cell.r == r:
                return i + 1
        raise KeyError(f"({m}, {r}) not in the calibration grid")


def calibrate_params(
    m_grid: tuple[int, ...] = DEFAULT_M_GRID,
    r_grid: tuple[float, ...] = DEFAULT_R_GRID,
    dims_list: tuple[ChartDims, ...] = CALIBRATION_DIMS,
    seed: int = 0,
    levels: tuple[int, ...] = CALIBRATION_NOISE_LEVELS,
    replicates: int = 3,
) -> CalibrationResult:
    """Rank (m, r) grid cells by mean noise-to-entropy correlation.

    The same noisy-chart corpus (base curves x resolutions x noise levels) is
    scored under every parameter cell; cells where entropy is undefined on
    more than half the corpus are excluded with a flag and ranked last.
    """
    if not m_grid or not r_grid or not dims_list:
        raise ValueError("grids and dims_list must be non-empty")
    corpus: list[tuple[ChartDims, BaseFunctionKind, list[tuple[int, np.ndarray]]]] = []
    for d_idx, dims in enumerate(dims_list):
        for k_idx, kind in enumerate(CORRELATION_BASES):
            pairs = _noise_level_samples(kind, levels, replicates, dims, seed, d_idx * 100 + k_idx)
            corpus.append((dims, kind, pairs))

    cells = []
    for m, r in itertools.product(m_grid, r_grid):
        params = EntropyParams(m, r)
        corrs = []
        n_total = 0
        n_undef = 0
        for _dims, _kind, pairs in corpus:
            lv = []
            en = []
            for level, ys in pairs:
                n_total += 1
                score = approx_entropy(ys, params)
                if score.defined:
                    lv.append(level)
                    en.append(score.value)
                else:
                    n_undef += 1
            if len(en) >= 3 and np.std(lv) > 0 and np.std(en) > 0:
                corrs.append(float(np.corrcoef(lv, en)[0, 1]))
        undef_frac = n_undef / n_total if n_total else 1.0
        excluded = undef_frac > 0.5 or not corrs
        mean_corr = float(np.mean(corrs)) if corrs else None
        cells.append(CalibrationCell(m, float(r), None if excluded else mean_corr, undef_frac, excluded))

    ranked = sorted(
        cells,
        key=lambda c: (c.excluded, -(c.mean_correlation if c.mean_correlation is not None else -np.inf)),
    )
    return CalibrationResult(tuple(ranked))


# ---------------------------------------------------------------------------
# Stimulus generators


def generate_lineup_set(
    base: BaseFunctionKind | TimeSeries,
    pae_levels: tuple[float, ...] = LINEUP_LEVELS,
    dims: ChartDims = DEFAULT_DIMS,
    seed: int = 0,
    params: EntropyParams = DEFAULT_PARAMS,
    tolerance: float = STIMULUS_TOLERANCE,
    set_id: str | None = None,
    window_stride: int = 10,
) -> StimulusSet:
    """One pick-the-most/least-complex judgment set: one chart per entropy level.

    With a BaseFunctionKind, each chart is built by noise injection from the
    clean curve. With a real TimeSeries, fixed-width windows are slid over the
    data and the window scoring nearest each level is used (error if none is
    within 0.03).
    """
    synthetic = isinstance(base, BaseFunctionKind)
    if set_id is None:
        label = base.value if synthetic else "real"
        set_id = f"lineup_{label}_s{seed}"
    images: dict[str, RenderedChart] = {}
    pixel_series: dict[str, PixelSeries] = {}
    trial_id = "trial000"
    charts: list[tuple[float, float, PixelSeries]] = []  # (target, achieved, ps)

    if synthetic:
        clean = rasterize(generate_base(base, dims.width, seed), dims)
        sigma_px = float(np.std(clean.ys))
        for i, level in enumerate(pae_levels):
            rng = _rng(seed, 1, i)
            result = _seek_level(clean, level, rng, sigma_px, params, tolerance)
            charts.append((level, result.achieved_pae, result.series))
    else:
        width = dims.width
        if len(base) < width:
            raise ValueError(f"real series needs at least {width} samples")
        scored: list[tuple[float, int]] = []
        for start in range(0, len(base) - width + 1, window_stride):
            window = TimeSeries(base.xs[start : start + width], base.ys[start : start + width])
            score = pae(window, dims, params)
            if score.defined:
                scored.append((score.value, start))
        for level in pae_levels:
            if not scored:
                raise UnreachableTargetError(f"no scorable windows for level {level}")
            value, start = min(scored, key=lambda sv: abs(sv[0] - level))
            if abs(value - level) > 0.03:
                raise UnreachableTargetError(
                    f"no data window within 0.03 of level {level} (closest {value:.4f})"
                )
            window = TimeSeries(base.xs[start : start + width], base.ys[start : start + width])
            charts.append((level, value, rasterize(window, dims)))

    roles = [f"chart{i}" for i in range(len(charts))]
    image_map = {
        role: _image_entry(set_id, trial_id, role, ps, images, pixel_series)
        for role, (_t, _a, ps) in zip(roles, charts)
    }
    order_rng = _rng(seed, 2)
    order = [roles[i] for i in order_rng.permutation(len(roles))]
    achieved = [a for (_t, a, _ps) in charts]
    answer_key = {
        "least_complex": roles[int(np.argmin(achieved))],
        "most_complex": roles[int(np.argmax(achieved))],
    }
    trial = TrialManifest(
        trial_id=trial_id,
        images=image_map,
        conditions={
            "base": base.value if synthetic else "real",
            "target_pae": {role: t for role, (t, _a, _ps) in zip(roles, charts)},
            "achieved_pae": {role: a for role, (_t, a, _ps) in zip(roles, charts)},
        },
        answer_key=answer_key,
        order=order,
    )
    return StimulusSet("LineUp", set_id, seed, dims, [trial], [trial_id], images, pixel_series)


def _build_pair_trial(
    set_id: str,
    trial_id: str,
    clean: PixelSeries,
    sigma_px: float,
    base_name: str,
    initial_pae: float,
    delta: float,
    dims: ChartDims,
    seed: int,
    trial_index: int,
    params: EntropyParams,
    glance_ms: int,
    pause_ms: int,
    images: dict[str, RenderedChart],
    pixel_series: dict[str, PixelSeries],
) -> TrialManifest:
    if delta == 0:
        raise ValueError("delta must be non-zero: the two options would be identical")
    low_target = min(initial_pae, initial_pae + delta)
    high_target = max(initial_pae, initial_pae + delta)
    # Noise only raises entropy: build the lower chart first, then keep adding
    # noise to a copy to produce the higher one. Tight tolerance keeps the two
    # options ordered even for the smallest deltas.
    tol = min(STIMULUS_TOLERANCE, abs(delta) * 0.45)
    low = _seek_level(clean, low_target, _rng(seed, trial_index, 0), sigma_px, params, tol)
    high = _seek_level(
        low.series, high_target, _rng(seed, trial_index, 1), sigma_px, params, tol
    )
    if delta > 0:
        initial_ps, initial_ach = low.series, low.achieved_pae
        alt_ps, alt_ach = high.series, high.achieved_pae
    else:
        initial_ps, initial_ach = high.series, high.achieved_pae
        alt_ps, alt_ach = low.series, low.achieved_pae
    mask_ps = mask_series(dims, seed * 100003 + trial_index)

    opt_rng = _rng(seed, trial_index, 2)
    initial_first = bool(opt_rng.integers(0, 2))
    opt_roles = {"optA": "initial", "optB": "alternative"} if initial_first else {
        "optA": "alternative",
        "optB": "initial",
    }
    role_ps = {
        "initial": initial_ps,
        "mask": mask_ps,
        "optA": initial_ps if opt_roles["optA"] == "initial" else alt_ps,
        "optB": initial_ps if opt_roles["optB"] == "initial" else alt_ps,
    }
    image_map = {
        role: _image_entry(set_id, trial_id, role, ps, images, pixel_series)
        for role, ps in role_ps.items()
    }
    answer_key = "optA" if opt_roles["optA"] == "initial" else "optB"
    return TrialManifest(
        trial_id=trial_id,
        images=image_map,
        conditions={
            "base": base_name,
            "initial_pae": initial_pae,
            "delta": delta,
            "sign": 1 if delta > 0 else -1,
            "achieved_initial_pae": initial_ach,
            "achieved_alternative_pae": alt_ach,
            "glance_ms": glance_ms,
            "pause_ms": pause_ms,
        },
        answer_key=answer_key,
        order=["initial", "mask", "optA", "optB"],
    )


def generate_diff_pair(
    base: BaseFunctionKind,
    initial_pae: float,
    delta: float,
    dims: ChartDims = DEFAULT_DIMS,
    seed: int = 0,
    params: EntropyParams = DEFAULT_PARAMS,
    glance_ms: int = 200,
    pause_ms: int = 200,
    set_id: str | None = None,
) -> StimulusSet:
    """One find-the-difference trial: initial chart, mask, and two options
    (the initial plus a variant with ``delta`` more or less entropy)."""
    if set_id is None:
        set_id = f"diffpair_{base.value}_s{seed}"
    clean = rasterize(generate_base(base, dims.width, seed), dims)
    sigma_px = float(np.std(clean.ys))
    images: dict[str, RenderedChart] = {}
    pixel_series: dict[str, PixelSeries] = {}
    trial = _build_pair_trial(
        set_id, "trial000", clean, sigma_px, base.value, initial_pae, delta,
        dims, seed, 0, params, glance_ms, pause_ms, images, pixel_series,
    )
    return StimulusSet(
        "FindDifference", set_id, seed, dims, [trial], [trial.trial_id], images, pixel_series
    )


def generate_shape_trials(
    shapes: tuple[BaseFunctionKind, ...] = SHAPE_BASES,
    pae_levels: tuple[float, ...] = SHAPE_LEVELS,
    per_cell: int = 5,
    dims: ChartDims = DEFAULT_DIMS,
    seed: int = 0,
    params: EntropyParams = DEFAULT_PARAMS,
    glance_ms: int = 500,
    set_id: str | None = None,
) -> StimulusSet:
    """Shape-identification trials: per_cell noisy charts per (shape, level)."""
    for shape in shapes:
        if shape not in SHAPE_BASES:
            raise ValueError(f"{shape} is not one of the shape-task silhouettes")
    if set_id is None:
        set_id = f"shapeid_s{seed}"
    images: dict[str, RenderedChart] = {}
    pixel_series: dict[str, PixelSeries] = {}
    trials = []
    cleans = {
        shape: rasterize(generate_base(shape, dims.width, seed), dims) for shape in shapes
    }
    for t_idx, (shape, level, version) in enumerate(
        itertools.product(shapes, pae_levels, range(per_cell))
    ):
        clean = cleans[shape]
        sigma_px = float(np.std(clean.ys))
        rng = _rng(seed, t_idx)
        result = _seek_level(clean, level, rng, sigma_px, params)
        trial_id = f"trial{t_idx:03d}"
        image_map = {
            "chart": _image_entry(set_id, trial_id, "chart", result.series, images, pixel_series)
        }
        trials.append(
            TrialManifest(
                trial_id=trial_id,
                images=image_map,
                conditions={
                    "shape": shape.value,
                    "target_pae": level,
                    "achieved_pae": result.achieved_pae,
                    "version": version,
                    "glance_ms": glance_ms,
                },
                answer_key=shape.value,
                order=["chart"],
            )
        )
    order_rng = _rng(seed, 999999)
    presentation = [trials[i].trial_id for i in order_rng.permutation(len(trials))]
    return StimulusSet("ShapeId", set_id, seed, dims, trials, presentation, images, pixel_series)


def generate_glance_sweep(
    glance_ms_list: tuple[int, ...] = GLANCE_TIMES_MS,
    initial_paes: tuple[float, ...] = GLANCE_INITIAL_PAES,
    deltas: tuple[float, ...] = GLANCE_DELTAS,
    per_cell: int = 1,
    dims: ChartDims = DEFAULT_DIMS,
    seed: int = 0,
    params: EntropyParams = DEFAULT_PARAMS,
    base: BaseFunctionKind = BaseFunctionKind.LINEAR,
    set_id: str | None = None,
) -> StimulusSet:
    """Glance-time sweep over find-the-difference trials (pause time 0).

    The crossed design is initial entropy x delta magnitude x delta sign x
    glance time; the defaults give 3 x 3 x 2 x 4 = 72 cells.
    """
    if set_id is None:
        set_id = f"glance_s{seed}"
    clean = rasterize(generate_base(base, dims.width, seed), dims)
    sigma_px = float(np.std(clean.ys))
    images: dict[str, RenderedChart] = {}
    pixel_series: dict[str, PixelSeries] = {}
    trials = []
    cells = list(itertools.product(initial_paes, deltas, (1, -1), glance_ms_list))
    t_idx = 0
    for cell_idx, (level, magnitude, sign, glance_ms) in enumerate(cells):
        # The pair always spans [level, level + magnitude]; the sign says
        # whether the alternative is the higher (+) or lower (-) chart. A
        # literal level - magnitude target can fall below the clean chart's
        # entropy, which noise injection cannot reach.
        initial = level if sign > 0 else level + magnitude
        for _rep in range(per_cell):
            trial_id = f"trial{t_idx:03d}"
            trial = _build_pair_trial(
                set_id, trial_id, clean, sigma_px, base.value, initial,
                sign * magnitude, dims, seed, t_idx, params, glance_ms, 0,
                images, pixel_series,
            )
            trial.conditions["cell"] = cell_idx
            trial.conditions["level"] = level
            trials.append(trial)
            t_idx += 1
    order_rng = _rng(seed, 999998)
    presentation = [trials[i].trial_id for i in order_rng.permutation(len(trials))]
    return StimulusSet("FindDifference", set_id, seed, dims, trials, presentation, images, pixel_series)


# ---------------------------------------------------------------------------
# Advisors


@dataclass(frozen=True)
class SmoothResult:
    series: TimeSeries
    achieved_pae: float
    window: int
    reached: bool


def _centered_moving_average(ys: np.ndarray, window: int) -> np.ndarray:
    # Edge windows are truncated (partial averages), keeping the length fixed.
    half = window // 2
    csum = np.concatenate([[0.0], np.cumsum(ys)])
    n = len(ys)
    lo = np.clip(np.arange(n) - half, 0, n)
    hi = np.clip(np.arange(n) + half + 1, 0, n)
    return (csum[hi] - csum[lo]) / (hi - lo)


def smooth_to_pae(
    series: TimeSeries,
    dims: ChartDims = DEFAULT_DIMS,
    target: float = 0.2,
    max_window: int = 151,
    params: EntropyParams = DEFAULT_PARAMS,
) -> SmoothResult:
    """Grow a centered moving-average window (3, 5, 7, ...) until the
    rasterized chart's entropy drops to ``target``; best-effort with a flag
    when max_window is insufficient."""
    if max_window < 3:
        raise ValueError("max_window must be >= 3")
    current = pae(series, dims, params)
    value = current.value if current.defined else float("inf")
    if value <= target:
        return SmoothResult(series, value, 1, True)
    best = SmoothResult(series, value, 1, False)
    for window in range(3, max_window + 1, 2):
        smoothed = TimeSeries(series.xs, _centered_moving_average(series.ys, window))
        score = pae(smoothed, dims, params)
        if not score.defined:
            continue
        if score.value < best.achieved_pae:
            best = SmoothResult(smoothed, score.value, window, False)
        if score.value <= target:
            return SmoothResult(smoothed, score.value, window, True)
    return best


def aspect_sweep(
    series: TimeSeries,
    dims_list: tuple[ChartDims, ...],
    params: EntropyParams = DEFAULT_PARAMS,
) -> list[tuple[ChartDims, float | None]]:
    """Entropy of the same data at each resolution, sorted ascending by value
    (undefined scores last)."""
    if not dims_list:
        raise ValueError("dims_list must be non-empty")
    rows = [(dims, pae(series, dims, params).value) for dims in dims_list]
    return sorted(rows, key=lambda row: (row[1] is None, row[1] if row[1] is not None else 0.0))
