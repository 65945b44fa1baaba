import json

import numpy as np
import pytest
from scipy import stats as sps

from entrochart import (
    BaseFunctionKind,
    ChartDims,
    TimeSeries,
    UnreachableTargetError,
    approx_entropy,
    aspect_sweep,
    calibrate_params,
    generate_diff_pair,
    generate_glance_sweep,
    generate_lineup_set,
    generate_shape_trials,
    pae,
    run_experiment1,
    smooth_to_pae,
)
from entrochart.studio import SCHEMA_VERSION, _centered_moving_average

from conftest import make_noisy_chart


def write_twice_identical(build, tmp_path):
    """Build and write a stimulus set twice; every emitted byte must match."""
    dirs = []
    for name in ("a", "b"):
        out = tmp_path / name
        build().write(out)
        dirs.append(out)
    files_a = sorted(p.relative_to(dirs[0]) for p in dirs[0].rglob("*") if p.is_file())
    files_b = sorted(p.relative_to(dirs[1]) for p in dirs[1].rglob("*") if p.is_file())
    assert files_a == files_b and files_a
    for rel in files_a:
        assert (dirs[0] / rel).read_bytes() == (dirs[1] / rel).read_bytes()


@pytest.fixture(scope="module")
def report():
    return run_experiment1(seed=0)


@pytest.fixture(scope="module")
def lineup():
    return generate_lineup_set(BaseFunctionKind.LINEAR, seed=2)


@pytest.fixture(scope="module")
def noisy_series():
    ps = make_noisy_chart(1, steps=40, seed=11)
    return TimeSeries(np.arange(300.0), ps.ys)


class TestExperiment1:
    def test_four_strong_fits(self, report):
        assert len(report.fits) == 4
        for fit in report.fits.values():
            assert fit.r_squared >= 0.8
            assert fit.slope > 0 and fit.p_value < 0.001

    def test_zero_level_equals_clean_chart(self, report):
        from entrochart import generate_base

        for kind, pairs in report.samples.items():
            clean = pae(generate_base(kind, report.dims.width), report.dims, report.params).value
            zero_vals = {v for level, v in pairs if level == 0}
            assert zero_vals == {clean}

    def test_level_means_monotone(self, report):
        for pairs in report.samples.values():
            levels = sorted({lv for lv, _ in pairs})
            means = [np.mean([v for lv, v in pairs if lv == level]) for level in levels]
            assert sps.spearmanr(levels, means).statistic > 0.95

    def test_replicate_stability(self, report):
        doubled = run_experiment1(replicates=10, seed=0)
        for kind in report.fits:
            assert abs(report.fits[kind].r_squared - doubled.fits[kind].r_squared) < 0.05

    def test_validation(self):
        with pytest.raises(ValueError, match="levels"):
            run_experiment1(levels=(0, 1, 2, 3))
        with pytest.raises(ValueError, match="replicates"):
            run_experiment1(replicates=2)


class TestCalibration:
    def test_single_cell_grid(self):
        res = calibrate_params(m_grid=(2,), r_grid=(20.0,), replicates=1)
        assert len(res.cells) == 1
        assert res.rank_of(2, 20.0) == 1
        assert not res.cells[0].excluded

    def test_row_count_bounded(self):
        res = calibrate_params(m_grid=(1, 2), r_grid=(10.0, 20.0), replicates=1)
        assert len(res.cells) == 4

    def test_unknown_cell(self):
        res = calibrate_params(m_grid=(2,), r_grid=(20.0,), replicates=1)
        with pytest.raises(KeyError):
            res.rank_of(9, 9.0)

    def test_empty_grid_rejected(self):
        with pytest.raises(ValueError):
            calibrate_params(m_grid=())


class TestLineup:
    def test_one_chart_per_level(self, lineup):
        trial = lineup.trials[0]
        assert len(trial.images) == 8
        assert sorted(trial.order) == sorted(trial.images)

    def test_answer_keys_point_at_extremes(self, lineup):
        trial = lineup.trials[0]
        achieved = trial.conditions["achieved_pae"]
        assert trial.answer_key["least_complex"] == min(achieved, key=achieved.get)
        assert trial.answer_key["most_complex"] == max(achieved, key=achieved.get)

    def test_achieved_matches_recomputed_entropy(self, lineup):
        trial = lineup.trials[0]
        for role, entry in trial.images.items():
            base = entry["svg"].removesuffix(".svg")
            ps = lineup.pixel_series[base]
            recomputed = approx_entropy(ps.ys).value
            assert recomputed == pytest.approx(trial.conditions["achieved_pae"][role])
            assert abs(recomputed - trial.conditions["target_pae"][role]) <= 0.015

    def test_byte_identical_regeneration(self, tmp_path):
        write_twice_identical(
            lambda: generate_lineup_set(BaseFunctionKind.COSINE, pae_levels=(0.2, 0.4), seed=3),
            tmp_path,
        )

    def test_real_series_window_search(self):
        # Splice together noisy pixel rows of increasing entropy so sliding
        # windows can land near each requested level.
        parts = [make_noisy_chart(0, steps=s, seed=5).ys for s in (5, 25, 60, 160)]
        ys = np.concatenate(parts)
        real = TimeSeries(np.arange(len(ys), dtype=float), ys)
        levels = (0.1, 0.3, 0.5)
        stim = generate_lineup_set(real, pae_levels=levels, seed=0)
        achieved = stim.trials[0].conditions["achieved_pae"]
        targets = stim.trials[0].conditions["target_pae"]
        assert len(achieved) == len(levels)
        for role in achieved:
            assert abs(achieved[role] - targets[role]) <= 0.03

    def test_real_series_without_matching_window(self, linear_series):
        big = TimeSeries(np.arange(600.0), np.concatenate([linear_series.ys] * 2))
        with pytest.raises(UnreachableTargetError, match="0.8"):
            generate_lineup_set(big, pae_levels=(0.8,), seed=0)


class TestDiffPair:
    def test_positive_delta_alternative_recomputes(self):
        stim = generate_diff_pair(BaseFunctionKind.LINEAR, 0.09, 0.06, seed=4)
        cond = stim.trials[0].conditions
        assert 0.135 <= cond["achieved_alternative_pae"] <= 0.165
        assert abs(cond["achieved_initial_pae"] - 0.09) <= 0.03

    def test_negative_delta_orders_pair(self):
        stim = generate_diff_pair(BaseFunctionKind.COSINE, 0.3, -0.1, seed=4)
        cond = stim.trials[0].conditions
        assert cond["achieved_alternative_pae"] < cond["achieved_initial_pae"]

    def test_zero_delta_rejected(self):
        with pytest.raises(ValueError, match="delta"):
            generate_diff_pair(BaseFunctionKind.LINEAR, 0.1, 0.0)

    def test_trial_layout(self):
        stim = generate_diff_pair(BaseFunctionKind.LINEAR, 0.09, 0.06, seed=1)
        trial = stim.trials[0]
        assert trial.order == ["initial", "mask", "optA", "optB"]
        assert trial.answer_key in ("optA", "optB")
        answer_base = trial.images[trial.answer_key]["pgm"].removesuffix(".pgm")
        initial_base = trial.images["initial"]["pgm"].removesuffix(".pgm")
        assert np.array_equal(
            stim.pixel_series[answer_base].ys, stim.pixel_series[initial_base].ys
        )

    def test_byte_identical_regeneration(self, tmp_path):
        write_twice_identical(
            lambda: generate_diff_pair(BaseFunctionKind.LINEAR, 0.09, 0.06, seed=7),
            tmp_path,
        )


class TestShapeTrials:
    def test_small_grid_counts_and_keys(self):
        stim = generate_shape_trials(
            shapes=(BaseFunctionKind.PEAK, BaseFunctionKind.TROUGH),
            pae_levels=(0.2, 0.4),
            per_cell=2,
            seed=0,
        )
        assert len(stim.trials) == 8
        shapes = [t.answer_key for t in stim.trials]
        assert shapes.count("peak") == shapes.count("trough") == 4
        for t in stim.trials:
            assert t.conditions["glance_ms"] == 500
            assert abs(t.conditions["achieved_pae"] - t.conditions["target_pae"]) <= 0.015

    def test_rejects_non_shape_base(self):
        with pytest.raises(ValueError, match="silhouette"):
            generate_shape_trials(shapes=(BaseFunctionKind.COSINE,))

    def test_presentation_order_permutes_trials(self):
        stim = generate_shape_trials(
            shapes=(BaseFunctionKind.PEAK,), pae_levels=(0.2,), per_cell=3, seed=1
        )
        assert sorted(stim.presentation_order) == sorted(t.trial_id for t in stim.trials)


class TestGlanceSweep:
    def test_small_sweep_layout(self):
        stim = generate_glance_sweep(
            glance_ms_list=(50, 2000),
            initial_paes=(0.045,),
            deltas=(0.06,),
            seed=0,
        )
        assert len(stim.trials) == 4  # 1 level x 1 delta x 2 signs x 2 times
        for t in stim.trials:
            assert t.conditions["pause_ms"] == 0
            assert t.conditions["level"] == 0.045
            sign = t.conditions["sign"]
            lo = min(t.conditions["achieved_initial_pae"], t.conditions["achieved_alternative_pae"])
            hi = max(t.conditions["achieved_initial_pae"], t.conditions["achieved_alternative_pae"])
            if sign > 0:
                assert t.conditions["achieved_initial_pae"] == lo
            else:
                assert t.conditions["achieved_initial_pae"] == hi
            assert hi > lo

    def test_byte_identical_regeneration(self, tmp_path):
        write_twice_identical(
            lambda: generate_glance_sweep(
                glance_ms_list=(50,), initial_paes=(0.09,), deltas=(0.06,), seed=2
            ),
            tmp_path,
        )


class TestManifest:
    def test_write_layout_and_schema(self, tmp_path):
        stim = generate_diff_pair(BaseFunctionKind.LINEAR, 0.09, 0.06, seed=1)
        out = stim.write(tmp_path / "set")
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["schema_version"] == SCHEMA_VERSION
        assert manifest["experiment"] == "FindDifference"
        assert manifest["master_seed"] == 1
        for trial in manifest["trials"]:
            for entry in trial["images"].values():
                for path in entry.values():
                    assert (out / path).is_file()


class TestSmooth:
    def test_target_already_met_is_identity(self, linear_series):
        result = smooth_to_pae(linear_series, target=0.5)
        assert result.reached and result.window == 1
        assert np.array_equal(result.series.ys, linear_series.ys)

    def test_iid_noise_smoothed_to_target(self):
        ys = np.random.default_rng(2).uniform(0, 1, 300)
        result = smooth_to_pae(TimeSeries(np.arange(300.0), ys), target=0.2)
        assert result.reached and result.window > 1
        assert result.achieved_pae <= 0.2

    def test_best_effort_flag(self):
        ys = np.random.default_rng(3).uniform(0, 1, 300)
        result = smooth_to_pae(TimeSeries(np.arange(300.0), ys), target=0.0001, max_window=5)
        assert not result.reached
        assert result.achieved_pae > 0.0001

    def test_window_growth_mostly_reduces_entropy(self):
        # Rasterization re-normalizes the y range, so smoothing is not
        # strictly monotone; it must still reduce entropy at most steps.
        ok = total = 0
        for i in range(10):
            ps = make_noisy_chart(i, steps=60, seed=9)
            ts = TimeSeries(np.arange(300.0), ps.ys)
            prev = None
            for window in range(3, 52, 2):
                sm = TimeSeries(ts.xs, _centered_moving_average(ts.ys, window))
                value = pae(sm).value
                if prev is not None:
                    total += 1
                    if value <= prev + 1e-9:
                        ok += 1
                prev = value
            assert prev < pae(ts).value  # net effect is always a reduction
        assert ok / total >= 0.7

    def test_validation(self, linear_series):
        with pytest.raises(ValueError, match="max_window"):
            smooth_to_pae(linear_series, max_window=1)


class TestAspect:
    def test_wider_is_calmer(self, noisy_series):
        rows = aspect_sweep(
            noisy_series, (ChartDims(150, 200), ChartDims(300, 200), ChartDims(600, 200))
        )
        assert [d.width for d, _ in rows] == [600, 300, 150]
        vals = [v for _, v in rows]
        assert vals == sorted(vals)

    def test_taller_is_busier(self, noisy_series):
        rows = aspect_sweep(
            noisy_series, (ChartDims(300, 100), ChartDims(300, 200), ChartDims(300, 400))
        )
        assert [d.height for d, _ in rows] == [100, 200, 400]

    def test_single_dims(self, noisy_series):
        rows = aspect_sweep(noisy_series, (ChartDims(300, 200),))
        assert len(rows) == 1

    def test_empty_rejected(self, noisy_series):
        with pytest.raises(ValueError):
            aspect_sweep(noisy_series, ())
