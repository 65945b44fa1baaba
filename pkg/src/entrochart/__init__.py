"""Pixel approximate entropy for 1D line charts.

Quantifies the visual complexity of a rasterized line chart, generates
noise-calibrated chart stimuli at target complexity levels, and provides the
statistical machinery to analyze chart-judgment response tables.
"""

from .entropy import (
    DEFAULT_PARAMS,
    EntropyParams,
    EntropyScore,
    approx_entropy,
    autocorr_lag1,
    flattened_length,
    fourier_highfreq_ratio,
    multiscale_entropy,
    pae,
    phi,
    sample_entropy,
    window_distance,
)
from .noise import (
    NoiseSpec,
    PerturbResult,
    UnreachableTargetError,
    add_noise_step,
    perturb_to_target_pae,
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
    render_mask,
)
from .series import BaseFunctionKind, ParseError, TimeSeries, generate_base, load_series
from .stats import (
    DegenerateDesignError,
    LogitFit,
    OlsFit,
    SingularInformationError,
    accuracy_summary,
    bootstrap_ci,
    logit_fit,
    ols_fit,
    wald_categorical,
)
from .studio import (
    CalibrationResult,
    Exp1Report,
    SmoothResult,
    StimulusSet,
    TrialManifest,
    aspect_sweep,
    calibrate_params,
    generate_diff_pair,
    generate_glance_sweep,
    generate_lineup_set,
    generate_shape_trials,
    run_experiment1,
    smooth_to_pae,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
