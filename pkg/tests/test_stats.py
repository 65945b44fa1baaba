import numpy as np
import pandas as pd
import pytest

from entrochart import (
    DegenerateDesignError,
    accuracy_summary,
    bootstrap_ci,
    logit_fit,
    ols_fit,
    wald_categorical,
)


def simulate_logit(coefs, n, seed):
    """Draw (design, outcomes) from a logistic model with the given coefficients."""
    rng = np.random.default_rng(seed)
    design = rng.normal(size=(n, len(coefs) - 1))
    eta = coefs[0] + design @ np.asarray(coefs[1:])
    outcomes = (rng.random(n) < 1.0 / (1.0 + np.exp(-eta))).astype(float)
    return design, outcomes


class TestOls:
    def test_perfect_fit(self):
        x = np.arange(10.0)
        fit = ols_fit(x, 2.0 * x + 1.0)
        assert fit.slope == pytest.approx(2.0)
        assert fit.intercept == pytest.approx(1.0)
        assert fit.r_squared == pytest.approx(1.0)

    def test_matches_normal_equations(self):
        x = np.array([1.0, 2.0, 3.0, 4.0])
        y = np.array([2.0, 4.0, 5.0, 8.0])
        fit = ols_fit(x, y)
        slope = ((x - x.mean()) * (y - y.mean())).sum() / ((x - x.mean()) ** 2).sum()
        intercept = y.mean() - slope * x.mean()
        resid = y - intercept - slope * x
        r2 = 1 - (resid**2).sum() / ((y - y.mean()) ** 2).sum()
        assert abs(fit.slope - slope) < 1e-9
        assert abs(fit.intercept - intercept) < 1e-9
        assert abs(fit.r_squared - r2) < 1e-9

    def test_constant_response_degenerate(self):
        fit = ols_fit(np.arange(5.0), np.full(5, 3.0))
        assert fit.degenerate and fit.slope == 0.0

    def test_zero_variance_x(self):
        with pytest.raises(DegenerateDesignError):
            ols_fit(np.full(5, 1.0), np.arange(5.0))

    def test_order_invariance(self):
        rng = np.random.default_rng(0)
        x = rng.normal(size=50)
        y = 3 * x + rng.normal(size=50)
        perm = rng.permutation(50)
        a, b = ols_fit(x, y), ols_fit(x[perm], y[perm])
        assert a.slope == pytest.approx(b.slope)
        assert a.p_value == pytest.approx(b.p_value)

    def test_p_value_bounds(self):
        rng = np.random.default_rng(1)
        fit = ols_fit(rng.normal(size=30), rng.normal(size=30))
        assert 0.0 <= fit.p_value <= 1.0
        assert 0.0 <= fit.r_squared <= 1.0


class TestLogit:
    def test_recovers_known_coefficients(self):
        design, outcomes = simulate_logit([-1.0, 2.0], 5000, seed=0)
        fit = logit_fit(design, outcomes)
        assert fit.converged
        assert abs(fit.coefficients[0] - (-1.0)) < 0.15
        assert abs(fit.coefficients[1] - 2.0) < 0.15

    def test_gradient_vanishes_at_optimum(self):
        design, outcomes = simulate_logit([-1.0, 2.0], 5000, seed=0)
        fit = logit_fit(design, outcomes)
        X = np.column_stack([np.ones(len(outcomes)), design])
        mu = 1.0 / (1.0 + np.exp(-(X @ fit.coefficients)))
        grad = X.T @ (outcomes - mu)
        assert np.max(np.abs(grad)) < 1e-6

    def test_log_likelihood_non_decreasing(self):
        design, outcomes = simulate_logit([0.5, -1.5, 0.8], 2000, seed=3)
        fit = logit_fit(design, outcomes)
        trace = fit.ll_trace
        assert all(b >= a - 1e-9 for a, b in zip(trace, trace[1:]))

    def test_degenerate_outcomes_flagged(self):
        design = np.random.default_rng(2).normal(size=(200, 1))
        fit = logit_fit(design, np.ones(200))
        assert not fit.converged
        assert "diverging" in fit.diagnostic
        assert abs(fit.coefficients[1]) < 1.0  # slope stays near zero

    def test_complete_separation_flagged(self):
        x = np.linspace(-2, 2, 200)
        y = (x > 0).astype(float)
        fit = logit_fit(x[:, None], y)
        assert not fit.converged and fit.diagnostic

    def test_input_validation(self):
        with pytest.raises(ValueError, match="binary"):
            logit_fit(np.zeros((3, 1)), np.array([0.0, 0.5, 1.0]))
        with pytest.raises(ValueError, match="rows"):
            logit_fit(np.zeros((3, 1)), np.zeros(4))


class TestWald:
    def test_single_coefficient_equals_z_squared(self):
        design, outcomes = simulate_logit([0.3, 1.0, -0.5], 2000, seed=4)
        fit = logit_fit(design, outcomes)
        for idx in range(len(fit.coefficients)):
            chi2, df, _p = wald_categorical(fit, [idx])
            assert df == 1
            assert chi2 == pytest.approx(fit.z_stats[idx] ** 2, rel=1e-9)

    def test_null_effect_calibration(self):
        rejections = 0
        for s in range(100):
            rng = np.random.default_rng([1, s])
            group = rng.integers(0, 2, 2000).astype(float)
            x1 = rng.normal(size=2000)
            eta = 0.3 + 0.8 * x1
            y = (rng.random(2000) < 1.0 / (1.0 + np.exp(-eta))).astype(float)
            fit = logit_fit(np.column_stack([x1, group]), y)
            if wald_categorical(fit, [2])[2] < 0.05:
                rejections += 1
        assert rejections <= 10

    def test_huge_effect_detected(self):
        rng = np.random.default_rng(2)
        group = rng.integers(0, 2, 2000).astype(float)
        y = (rng.random(2000) < 1.0 / (1.0 + np.exp(-2.0 * group))).astype(float)
        fit = logit_fit(group[:, None], y)
        assert wald_categorical(fit, [1])[2] < 0.001

    def test_index_validation(self):
        design, outcomes = simulate_logit([0.0, 1.0], 500, seed=5)
        fit = logit_fit(design, outcomes)
        with pytest.raises(ValueError):
            wald_categorical(fit, [])
        with pytest.raises(ValueError):
            wald_categorical(fit, [7])


class TestBootstrap:
    def test_constant_values(self):
        lo, hi = bootstrap_ci(np.full(20, 0.4))
        assert lo == pytest.approx(0.4) and hi == pytest.approx(0.4)

    def test_seed_determinism(self):
        vals = np.random.default_rng(0).random(100)
        assert bootstrap_ci(vals, seed=7) == bootstrap_ci(vals, seed=7)

    def test_coverage(self):
        covered = 0
        for s in range(100):
            vals = (np.random.default_rng([3, s]).random(500) < 0.7).astype(float)
            lo, hi = bootstrap_ci(vals, seed=s)
            if lo <= 0.7 <= hi:
                covered += 1
        assert covered >= 90

    def test_validation(self):
        with pytest.raises(ValueError):
            bootstrap_ci(np.array([1.0]))
        with pytest.raises(ValueError, match="statistic"):
            bootstrap_ci(np.arange(5.0), statistic="median")


class TestAccuracySummary:
    def test_all_correct(self):
        df = pd.DataFrame({"correct": [1, 1, 1], "cond": ["a", "a", "a"]})
        out = accuracy_summary(df, ["cond"])
        assert len(out) == 1 and out.loc[0, "accuracy"] == 1.0

    def test_two_groups(self):
        df = pd.DataFrame(
            {"correct": [1, 1, 1, 0, 1, 0, 0, 0], "cond": list("aaaabbbb")}
        )
        out = accuracy_summary(df, ["cond"]).set_index("cond")
        assert out.loc["a", "accuracy"] == 0.75
        assert out.loc["b", "accuracy"] == 0.25
        assert out.loc["a", "n"] == 4

    def test_row_count_matches_distinct_tuples(self):
        rng = np.random.default_rng(0)
        df = pd.DataFrame(
            {
                "correct": rng.integers(0, 2, 60),
                "a": rng.integers(0, 3, 60),
                "b": rng.integers(0, 2, 60),
            }
        )
        out = accuracy_summary(df, ["a", "b"])
        assert len(out) == len(df.groupby(["a", "b"]))
        assert ((out["ci_lo"] <= out["accuracy"]) & (out["accuracy"] <= out["ci_hi"])).all()

    def test_unknown_column(self):
        df = pd.DataFrame({"correct": [1, 0]})
        with pytest.raises(ValueError, match="unknown column"):
            accuracy_summary(df, ["nope"])

    def test_requires_correct_column(self):
        with pytest.raises(ValueError, match="'correct'"):
            accuracy_summary(pd.DataFrame({"x": [1]}), [])
