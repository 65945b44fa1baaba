"""Command-line surface: JSON reports to stdout, human summaries to stderr.

Exit codes: 0 success, 2 input error, 3 unreachable entropy target, 4
statistical non-convergence. Every command that draws random numbers echoes
its effective seed in the report, so reruns are reproducible from the report
alone. ``ENTROCHART_SEED`` provides a seed fallback when ``--seed`` is absent.
"""
from __future__ import annotations

import json
import os
import sys
from pathlib import Path

import click
import numpy as np
import pandas as pd

from . import __version__
from .entropy import (
    EntropyParams,
    autocorr_lag1,
    flattened_length,
    fourier_highfreq_ratio,
    multiscale_entropy,
    pae,
    sample_entropy,
)
from .noise import NoiseSpec, UnreachableTargetError, perturb_to_target_pae
from .raster import ChartDims, rasterize
from .series import BaseFunctionKind, ParseError, load_series
from .stats import accuracy_summary, bootstrap_ci, logit_fit, ols_fit, wald_categorical
from .studio import (
    SCHEMA_VERSION,
    aspect_sweep,
    calibrate_params,
    generate_diff_pair,
    generate_glance_sweep,
    generate_lineup_set,
    generate_shape_trials,
    run_experiment1,
    smooth_to_pae,
)

EXIT_INPUT_ERROR = 2
EXIT_UNREACHABLE = 3
EXIT_NON_CONVERGENCE = 4


def _parse_dims(text: str) -> ChartDims:
    try:
        w, h = text.lower().split("x")
        return ChartDims(int(w), int(h))
    except (ValueError, TypeError):
        raise click.BadParameter(f"expected WIDTHxHEIGHT, got {text!r}")


def _parse_floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(tok) for tok in text.split(",") if tok.strip())
    except ValueError:
        raise click.BadParameter(f"expected comma-separated numbers, got {text!r}")


def _parse_ints(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(tok) for tok in text.split(",") if tok.strip())
    except ValueError:
        raise click.BadParameter(f"expected comma-separated integers, got {text!r}")


def _resolve_seed(seed: int | None) -> int:
    if seed is not None:
        return seed
    env = os.environ.get("ENTROCHART_SEED")
    return int(env) if env else 0


def _value(score_value: float | None):
    """JSON-safe measure value: undefined scores become the string 'undefined'."""
    return "undefined" if score_value is None else score_value


def _emit(report: dict, out: str | None, summary: str) -> None:
    payload = json.dumps(report, indent=2, sort_keys=True) + "\n"
    if out:
        Path(out).write_text(payload, encoding="utf-8")
    else:
        sys.stdout.write(payload)
    click.echo(summary, err=True)


def _load(path: str, fmt: str | None):
    try:
        return load_series(path, fmt)
    except (FileNotFoundError, ParseError, ValueError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_INPUT_ERROR)


def _write_series_csv(path: str, ys: np.ndarray) -> None:
    lines = [f"{i},{y:.6f}" for i, y in enumerate(ys)]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


dims_option = click.option(
    "--dims", default="300x200", show_default=True, help="Chart size as WIDTHxHEIGHT."
)
m_option = click.option("--m", default=2, show_default=True, help="Entropy window length.")
r_option = click.option(
    "--r", default=20.0, show_default=True, help="Similarity tolerance in pixels."
)
seed_option = click.option(
    "--seed", default=None, type=int, help="RNG seed [default: $ENTROCHART_SEED or 0]."
)
out_option = click.option("--out", default=None, help="Write the JSON report here instead of stdout.")


@click.group()
@click.version_option(__version__)
def main():
    """Score, generate, and analyze line-chart complexity stimuli."""


@main.command()
@click.argument("input", type=str)
@dims_option
@m_option
@r_option
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default=None,
              help="Input format [default: inferred from suffix].")
@click.option("--all-measures", is_flag=True, help="Also report baseline complexity measures.")
@out_option
def score(input, dims, m, r, fmt, all_measures, out):
    """Pixel approximate entropy of a chart built from INPUT data."""
    series = _load(input, fmt)
    cdims = _parse_dims(dims)
    params = EntropyParams(m, r)
    report = {
        "command": "score",
        "schema_version": SCHEMA_VERSION,
        "input": input,
        "dims": str(cdims),
        "params": {"m": m, "r": r},
        "pae": _value(pae(series, cdims, params).value),
    }
    if all_measures:
        ps = rasterize(series, cdims)
        report["measures"] = {
            "sample_entropy": _value(sample_entropy(ps.ys, params).value),
            "multiscale_entropy": {
                str(scale): _value(s.value)
                for scale, s in multiscale_entropy(ps.ys, params)
            },
            "flattened_length": flattened_length(ps),
            "autocorr_lag1": _value(autocorr_lag1(ps)),
            "fourier_highfreq_ratio": _value(fourier_highfreq_ratio(ps)),
        }
    _emit(report, out, f"pae: {report['pae']}")


@main.command()
@click.argument("input", type=str)
@click.option("--target", required=True, type=float, help="Target entropy value.")
@click.option("--tol", default=0.015, show_default=True, help="Acceptance tolerance.")
@click.option("--max-steps", default=5000, show_default=True)
@click.option("--sigma", default=None, type=float,
              help="Noise amplitude bound, data units [default: series std].")
@dims_option
@m_option
@r_option
@seed_option
@click.option("--series-out", default=None, help="Write the perturbed pixel series as CSV here.")
@out_option
def noise(input, target, tol, max_steps, sigma, dims, m, r, seed, series_out, out):
    """Add triangle noise to INPUT until its chart entropy reaches --target."""
    series = _load(input, fmt=None)
    cdims = _parse_dims(dims)
    params = EntropyParams(m, r)
    seed = _resolve_seed(seed)
    spec = NoiseSpec(sigma=sigma, seed=seed)
    try:
        result = perturb_to_target_pae(series, cdims, target, tol, max_steps, spec, params)
    except UnreachableTargetError as exc:
        click.echo(f"unreachable-target: {exc}", err=True)
        sys.exit(EXIT_UNREACHABLE)
    if not result.converged:
        click.echo(
            f"unreachable-target: gave up after {result.steps} steps "
            f"at {result.achieved_pae:.4f}",
            err=True,
        )
        sys.exit(EXIT_UNREACHABLE)
    if series_out:
        _write_series_csv(series_out, result.series.ys)
    report = {
        "command": "noise",
        "schema_version": SCHEMA_VERSION,
        "input": input,
        "dims": str(cdims),
        "params": {"m": m, "r": r},
        "seed": seed,
        "target": target,
        "tolerance": tol,
        "achieved": result.achieved_pae,
        "steps": result.steps,
        "converged": result.converged,
        "series_out": series_out,
    }
    _emit(report, out, f"achieved {result.achieved_pae:.4f} in {result.steps} steps")


@main.group()
def stimuli():
    """Generate experiment stimulus sets (images + manifest) on disk."""


def _write_set(stim_set, outdir: str, out: str | None) -> None:
    stim_set.write(outdir)
    report = {
        "command": "stimuli",
        "schema_version": SCHEMA_VERSION,
        "experiment": stim_set.experiment,
        "set_id": stim_set.set_id,
        "seed": stim_set.master_seed,
        "dims": str(stim_set.dims),
        "n_trials": len(stim_set.trials),
        "outdir": outdir,
    }
    _emit(report, out, f"{stim_set.experiment}: {len(stim_set.trials)} trials -> {outdir}")


@stimuli.command()
@click.option("--base", default="linear", show_default=True)
@click.option("--outdir", required=True)
@dims_option
@seed_option
@out_option
def lineup(base, outdir, dims, seed, out):
    """Pick-the-most/least-complex gallery: one chart per entropy level."""
    stim = generate_lineup_set(
        BaseFunctionKind(base), dims=_parse_dims(dims), seed=_resolve_seed(seed)
    )
    _write_set(stim, outdir, out)


@stimuli.command("diff-pair")
@click.option("--base", default="linear", show_default=True)
@click.option("--initial", default=0.09, show_default=True, help="Initial chart entropy.")
@click.option("--delta", default=0.06, show_default=True, help="Entropy change (signed).")
@click.option("--glance-ms", default=200, show_default=True)
@click.option("--pause-ms", default=200, show_default=True)
@click.option("--outdir", required=True)
@dims_option
@seed_option
@out_option
def diff_pair(base, initial, delta, glance_ms, pause_ms, outdir, dims, seed, out):
    """Find-the-difference trial: initial chart, mask, and two options."""
    stim = generate_diff_pair(
        BaseFunctionKind(base), initial, delta, dims=_parse_dims(dims),
        seed=_resolve_seed(seed), glance_ms=glance_ms, pause_ms=pause_ms,
    )
    _write_set(stim, outdir, out)


@stimuli.command("shape-id")
@click.option("--outdir", required=True)
@dims_option
@seed_option
@out_option
def shape_id(outdir, dims, seed, out):
    """Shape-identification set: 4 shapes x 4 levels x 5 versions = 80 trials."""
    stim = generate_shape_trials(dims=_parse_dims(dims), seed=_resolve_seed(seed))
    _write_set(stim, outdir, out)


@stimuli.command()
@click.option("--outdir", required=True)
@dims_option
@seed_option
@out_option
def glance(outdir, dims, seed, out):
    """Glance-time sweep: 3 levels x 3 deltas x 2 signs x 4 times = 72 cells."""
    stim = generate_glance_sweep(dims=_parse_dims(dims), seed=_resolve_seed(seed))
    _write_set(stim, outdir, out)


@main.command()
@click.option("--replicates", default=5, show_default=True)
@dims_option
@m_option
@r_option
@seed_option
@out_option
def exp1(replicates, dims, m, r, seed, out):
    """Regress chart entropy on noise level for the four base curves."""
    seed = _resolve_seed(seed)
    report_obj = run_experiment1(
        replicates=replicates, dims=_parse_dims(dims), params=EntropyParams(m, r), seed=seed
    )
    fits = {
        kind.value: {
            "slope": fit.slope,
            "intercept": fit.intercept,
            "r_squared": fit.r_squared,
            "t_stat": fit.t_stat,
            "p_value": fit.p_value,
            "n": fit.n,
        }
        for kind, fit in report_obj.fits.items()
    }
    report = {
        "command": "exp1",
        "schema_version": SCHEMA_VERSION,
        "seed": seed,
        "dims": dims,
        "params": {"m": m, "r": r},
        "levels": list(report_obj.levels),
        "replicates": replicates,
        "fits": fits,
    }
    lines = ", ".join(f"{k} R2={v['r_squared']:.3f}" for k, v in fits.items())
    _emit(report, out, lines)


@main.command()
@click.option("--m-grid", default="1,2,3", show_default=True)
@click.option("--r-grid", default="5,10,15,20,25,30,40", show_default=True)
@click.option("--replicates", default=3, show_default=True)
@seed_option
@out_option
def calibrate(m_grid, r_grid, replicates, seed, out):
    """Rank (m, r) grid cells by mean noise-to-entropy correlation."""
    seed = _resolve_seed(seed)
    result = calibrate_params(
        m_grid=_parse_ints(m_grid), r_grid=_parse_floats(r_grid),
        seed=seed, replicates=replicates,
    )
    cells = [
        {
            "m": c.m,
            "r": c.r,
            "mean_correlation": _value(c.mean_correlation),
            "undefined_fraction": c.undefined_fraction,
            "excluded": c.excluded,
            "rank": i + 1,
        }
        for i, c in enumerate(result.cells)
    ]
    report = {
        "command": "calibrate",
        "schema_version": SCHEMA_VERSION,
        "seed": seed,
        "cells": cells,
    }
    best = cells[0]
    _emit(report, out, f"best cell: m={best['m']} r={best['r']} "
          f"corr={best['mean_correlation']}")


@main.command()
@click.argument("input", type=str)
@click.option("--target", default=0.2, show_default=True, help="Entropy ceiling to smooth to.")
@click.option("--max-window", default=151, show_default=True)
@dims_option
@m_option
@r_option
@click.option("--series-out", default=None, help="Write the smoothed series as CSV here.")
@out_option
def smooth(input, target, max_window, dims, m, r, series_out, out):
    """Grow a moving-average window until INPUT's chart entropy drops to --target."""
    series = _load(input, fmt=None)
    result = smooth_to_pae(
        series, _parse_dims(dims), target, max_window, EntropyParams(m, r)
    )
    if series_out:
        _write_series_csv(series_out, result.series.ys)
    report = {
        "command": "smooth",
        "schema_version": SCHEMA_VERSION,
        "input": input,
        "dims": dims,
        "params": {"m": m, "r": r},
        "target": target,
        "achieved": result.achieved_pae,
        "window": result.window,
        "reached": result.reached,
        "series_out": series_out,
    }
    _emit(report, out, f"window {result.window}: {result.achieved_pae:.4f} "
          f"({'reached' if result.reached else 'best effort'})")


@main.command()
@click.argument("input", type=str)
@click.option("--dims", "dims_multi", multiple=True, required=True,
              help="Candidate size WIDTHxHEIGHT; repeatable.")
@m_option
@r_option
@out_option
def aspect(input, dims_multi, m, r, out):
    """Rank candidate chart sizes for INPUT by resulting entropy (low first)."""
    series = _load(input, fmt=None)
    rows = aspect_sweep(
        series, tuple(_parse_dims(d) for d in dims_multi), EntropyParams(m, r)
    )
    report = {
        "command": "aspect",
        "schema_version": SCHEMA_VERSION,
        "input": input,
        "params": {"m": m, "r": r},
        "ranking": [{"dims": str(d), "pae": _value(v)} for d, v in rows],
    }
    best = report["ranking"][0]
    _emit(report, out, f"calmest: {best['dims']} ({best['pae']})")


@main.command()
@click.argument("responses", type=str)
@click.option("--outcome", default="correct", show_default=True,
              help="Binary outcome column.")
@click.option("--predictors", required=True,
              help="Comma-separated numeric predictor columns.")
@click.option("--group-by", default=None,
              help="Comma-separated columns for grouped accuracy tables.")
@click.option("--wald", "wald_groups", multiple=True,
              help="Comma-separated predictor names for a joint Wald test; repeatable.")
@seed_option
@out_option
def analyze(responses, outcome, predictors, group_by, wald_groups, seed, out):
    """Fit a logistic accuracy model to a RESPONSES table and summarize it."""
    seed = _resolve_seed(seed)
    try:
        df = pd.read_csv(responses)
    except (FileNotFoundError, pd.errors.ParserError, pd.errors.EmptyDataError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_INPUT_ERROR)
    names = [tok.strip() for tok in predictors.split(",") if tok.strip()]
    missing = [c for c in names + [outcome] if c not in df.columns]
    if missing:
        click.echo(f"error: missing columns: {', '.join(missing)}", err=True)
        sys.exit(EXIT_INPUT_ERROR)
    design = df[names].to_numpy(dtype=float)
    outcomes = df[outcome].to_numpy(dtype=float)
    fit = logit_fit(design, outcomes)
    if not fit.converged:
        click.echo(f"non-convergence: {fit.diagnostic}", err=True)
        sys.exit(EXIT_NON_CONVERGENCE)
    coef_names = ["intercept"] + names
    report = {
        "command": "analyze",
        "schema_version": SCHEMA_VERSION,
        "input": responses,
        "seed": seed,
        "outcome": outcome,
        "model": {
            "coefficients": dict(zip(coef_names, fit.coefficients.tolist())),
            "z_stats": dict(zip(coef_names, fit.z_stats.tolist())),
            "p_values": dict(zip(coef_names, fit.p_values.tolist())),
            "log_likelihood": fit.log_likelihood,
        },
    }
    if wald_groups:
        tests = []
        for group in wald_groups:
            members = [tok.strip() for tok in group.split(",") if tok.strip()]
            bad = [mname for mname in members if mname not in names]
            if bad:
                click.echo(f"error: unknown wald predictors: {', '.join(bad)}", err=True)
                sys.exit(EXIT_INPUT_ERROR)
            idx = [1 + names.index(mname) for mname in members]
            chi2, dof, p = wald_categorical(fit, idx)
            tests.append({"predictors": members, "chi2": chi2, "df": dof, "p_value": p})
        report["wald_tests"] = tests
    if group_by:
        cols = [tok.strip() for tok in group_by.split(",") if tok.strip()]
        bad = [c for c in cols if c not in df.columns]
        if bad:
            click.echo(f"error: missing group-by columns: {', '.join(bad)}", err=True)
            sys.exit(EXIT_INPUT_ERROR)
        table = accuracy_summary(df.rename(columns={outcome: "correct"}), cols, seed=seed)
        report["accuracy"] = table.to_dict(orient="records")
    report["overall_accuracy"] = {
        "mean": float(np.mean(outcomes)),
        "ci95": list(bootstrap_ci(outcomes, "mean", seed=seed)),
    }
    _emit(report, out, f"fit converged; accuracy {np.mean(outcomes):.3f} (n={len(outcomes)})")


if __name__ == "__main__":
    main()
