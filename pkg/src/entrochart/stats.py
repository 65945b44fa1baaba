"""Regression and resampling statistics for chart-response analysis.

OLS with a slope t-test and R^2, binomial logistic regression fitted by
iteratively reweighted least squares with Wald tests, percentile bootstrap
confidence intervals, and grouped accuracy summaries.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from scipy import stats as _sps


class DegenerateDesignError(ValueError):
    """Design matrix carries no usable variation."""


class SingularInformationError(np.linalg.LinAlgError):
    """Observed information (or a requested submatrix) is not invertible."""


@dataclass(frozen=True)
class OlsFit:
    slope: float
    intercept: float
    r_squared: float
    t_stat: float
    p_value: float
    n: int
    degenerate: bool = False


def ols_fit(x: np.ndarray, y: np.ndarray) -> OlsFit:
    """Simple least squares of y on x with a two-sided slope t-test (df = n-2)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("x and y must be 1-d arrays of equal length")
    n = len(x)
    if n < 3:
        raise ValueError("need at least 3 points")
    sxx = np.sum((x - x.mean()) ** 2)
    if sxx == 0:
        raise DegenerateDesignError("x has zero variance")
    ss_tot = np.sum((y - y.mean()) ** 2)
    if ss_tot == 0:
        # Constant response: the fit is exact but R^2 and the t-test are vacuous.
        return OlsFit(0.0, float(y.mean()), float("nan"), float("nan"), float("nan"), n, True)
    slope = np.sum((x - x.mean()) * (y - y.mean())) / sxx
    intercept = y.mean() - slope * x.mean()
    resid = y - (intercept + slope * x)
    ss_res = np.sum(resid**2)
    r_squared = 1.0 - ss_res / ss_tot
    se = np.sqrt(ss_res / (n - 2) / sxx)
    if se == 0:
        t_stat = float("inf") if slope != 0 else 0.0
        p_value = 0.0 if slope != 0 else 1.0
    else:
        t_stat = slope / se
        p_value = 2.0 * _sps.t.sf(abs(t_stat), df=n - 2)
    return OlsFit(float(slope), float(intercept), float(r_squared), float(t_stat), float(p_value), n)


@dataclass(frozen=True)
class LogitFit:
    coefficients: np.ndarray  # intercept first
    z_stats: np.ndarray
    p_values: np.ndarray
    converged: bool
    log_likelihood: float
    covariance: np.ndarray
    ll_trace: tuple[float, ...] = field(default=(), repr=False)
    diagnostic: str = ""


def _log_likelihood(eta: np.ndarray, y: np.ndarray) -> float:
    # log L = sum y*eta - log(1 + exp(eta)), computed stably
    return float(np.sum(y * eta - np.logaddexp(0.0, eta)))


# Coefficient magnitude beyond which the likelihood is flat to machine
# precision; treated as divergence (complete or quasi-complete separation).
_DIVERGENCE_BOUND = 30.0


def logit_fit(
    design: np.ndarray,
    outcomes: np.ndarray,
    max_iter: int = 100,
    tol: float = 1e-10,
) -> LogitFit:
    """Maximum-likelihood binomial logistic regression via IRLS.

    ``design`` holds the predictor columns (no intercept column; one is
    prepended). Convergence requires the max absolute coefficient change to
    fall below ``tol``. Diverging coefficients are reported via
    ``converged=False`` with a diagnostic, not silenced.
    """
    design = np.atleast_2d(np.asarray(design, dtype=float))
    y = np.asarray(outcomes, dtype=float).ravel()
    if design.shape[0] != len(y):
        raise ValueError("design rows must match outcome length")
    if not np.all((y == 0) | (y == 1)):
        raise ValueError("outcomes must be binary 0/1")
    X = np.column_stack([np.ones(len(y)), design])
    p_dim = X.shape[1]
    beta = np.zeros(p_dim)
    ll = _log_likelihood(X @ beta, y)
    trace = [ll]
    converged = False
    diagnostic = ""
    for _ in range(max_iter):
        eta = X @ beta
        mu = 1.0 / (1.0 + np.exp(-eta))
        w = mu * (1.0 - mu)
        grad = X.T @ (y - mu)
        hess = X.T @ (X * w[:, None])
        try:
            step = np.linalg.solve(hess, grad)
        except np.linalg.LinAlgError as exc:
            raise SingularInformationError(str(exc)) from None
        # Halve the step if needed so the log-likelihood never decreases.
        scale = 1.0
        for _ in range(30):
            cand = beta + scale * step
            cand_ll = _log_likelihood(X @ cand, y)
            if cand_ll >= ll - 1e-12:
                break
            scale /= 2.0
        beta = beta + scale * step
        ll = _log_likelihood(X @ beta, y)
        trace.append(ll)
        if np.max(np.abs(beta)) > _DIVERGENCE_BOUND:
            diagnostic = (
                "diverging coefficients (max |beta| = "
                f"{np.max(np.abs(beta)):.1f}); likely complete separation or a "
                "degenerate outcome"
            )
            break
        if np.max(np.abs(scale * step)) < tol:
            converged = True
            break
    eta = X @ beta
    mu = 1.0 / (1.0 + np.exp(-eta))
    w = mu * (1.0 - mu)
    hess = X.T @ (X * w[:, None])
    try:
        cov = np.linalg.inv(hess)
    except np.linalg.LinAlgError as exc:
        raise SingularInformationError(str(exc)) from None
    se = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(se > 0, beta / se, np.sign(beta) * np.inf)
    p = 2.0 * _sps.norm.sf(np.abs(z))
    return LogitFit(
        coefficients=beta,
        z_stats=z,
        p_values=p,
        converged=converged,
        log_likelihood=ll,
        covariance=cov,
        ll_trace=tuple(trace),
        diagnostic=diagnostic,
    )


def wald_categorical(fit: LogitFit, group_indices) -> tuple[float, int, float]:
    """Joint Wald test that the grouped coefficients are all zero.

    Returns (chi2, df, p). Indices address ``fit.coefficients`` directly
    (0 is the intercept).
    """
    idx = np.asarray(list(group_indices), dtype=int)
    if len(idx) == 0:
        raise ValueError("group_indices must be non-empty")
    if idx.min() < 0 or idx.max() >= len(fit.coefficients):
        raise ValueError("group index out of range")
    b = fit.coefficients[idx]
    v = fit.covariance[np.ix_(idx, idx)]
    try:
        chi2 = float(b @ np.linalg.solve(v, b))
    except np.linalg.LinAlgError as exc:
        raise SingularInformationError(str(exc)) from None
    df = len(idx)
    p = float(_sps.chi2.sf(chi2, df))
    return chi2, df, p


def bootstrap_ci(
    values: np.ndarray,
    statistic: str = "mean",
    n_resamples: int = 1000,
    level: float = 0.95,
    seed: int = 0,
) -> tuple[float, float]:
    """Percentile bootstrap interval for the mean; deterministic for a seed."""
    if statistic != "mean":
        raise ValueError(f"unsupported statistic: {statistic!r}")
    values = np.asarray(values, dtype=float)
    n = len(values)
    if n < 2:
        raise ValueError("need at least 2 values")
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, n, size=(n_resamples, n))
    stats = values[idx].mean(axis=1)
    alpha = 1.0 - level
    lo, hi = np.percentile(stats, [100 * alpha / 2, 100 * (1 - alpha / 2)])
    return float(lo), float(hi)


def accuracy_summary(
    responses: pd.DataFrame,
    group_by: list[str],
    n_resamples: int = 1000,
    level: float = 0.95,
    seed: int = 0,
) -> pd.DataFrame:
    """Per-group response counts, mean accuracy, and bootstrap CIs.

    ``responses`` must carry a binary ``correct`` column; ``group_by`` names
    condition columns. Groups of size 1 get a degenerate (point) interval.
    """
    if "correct" not in responses.columns:
        raise ValueError("responses table must have a 'correct' column")
    for col in group_by:
        if col not in responses.columns:
            raise ValueError(f"unknown column: {col!r}")
    rows = []
    grouped = responses.groupby(group_by, sort=True) if group_by else [((), responses)]
    for key, group in grouped:
        if not isinstance(key, tuple):
            key = (key,)
        vals = group["correct"].to_numpy(dtype=float)
        acc = float(vals.mean())
        if len(vals) >= 2:
            lo, hi = bootstrap_ci(vals, "mean", n_resamples, level, seed)
        else:
            lo = hi = acc
        rows.append(dict(zip(group_by, key)) | {"n": len(vals), "accuracy": acc, "ci_lo": lo, "ci_hi": hi})
    return pd.DataFrame(rows)
