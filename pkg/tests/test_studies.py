"""Study runners at reduced scale: fits, checks, reports, determinism."""

import json

import numpy as np
import pytest

from mflangevin.grids import TimeGrid
from mflangevin.langevin import TrainerConfig
from mflangevin.models import (gaussian_prior, make_builtin_model,
                               make_linear_drift_model, make_zero_cost_model)
from mflangevin.studies import (StudySetup, fit_loglog, fit_rate,
                                histogram_tv, run_chaos_study,
                                run_contraction_study, run_euler_study,
                                run_generalization_study, run_gibbs_check)


def small_setup(model=None, sigma=1.0, kappa=2.0, gamma=0.01, n_iters=80,
                horizon=0.25, n_steps=4, n_particles=16, n_samples=4,
                target="scaled", seed=21):
    model = model or make_builtin_model("one_layer_residual", d=1,
                                        p_hidden=1, dim_data=1)
    grid = TimeGrid(horizon, n_steps)
    cfg = TrainerConfig(sigma=sigma, prior=gaussian_prior(kappa, model.dim_param),
                        gamma=gamma, n_iters=n_iters, seed=seed,
                        record_every=0)
    return StudySetup(model=model, grid=grid, trainer=cfg,
                      n_particles=n_particles, n_samples=n_samples,
                      dataset_kind="regression", dataset_target=target,
                      dataset_seed=33, init_seed=9)


class TestFitHelpers:
    def test_loglog_recovers_power_law(self):
        x = np.array([1.0, 2.0, 4.0, 8.0])
        slope, se = fit_loglog(x, 3.0 * x ** 1.7)
        assert slope == pytest.approx(1.7, abs=1e-12)
        assert se == pytest.approx(0.0, abs=1e-10)

    def test_rate_fit_recovers_exponential(self):
        s = np.linspace(0, 2, 50)
        slope, _ = fit_rate(s, np.log(5.0 * np.exp(-3.2 * s)))
        assert slope == pytest.approx(-3.2, abs=1e-10)

    def test_histogram_tv_matched_density_small(self):
        rng_vals = np.random.default_rng(0).normal(size=20000)
        tv = histogram_tv(rng_vals, lambda a: -0.5 * a ** 2)
        assert tv < 0.03

    def test_histogram_tv_mismatched_density_large(self):
        rng_vals = np.random.default_rng(0).normal(size=20000)
        tv = histogram_tv(rng_vals, lambda a: -0.5 * (a - 3.0) ** 2)
        assert tv > 0.5


class TestChaosStudy:
    def test_small_grid_slope_in_window(self):
        setup = small_setup(sigma=1.4, kappa=0.5, target="tanh_shift",
                            n_iters=100)
        report = run_chaos_study(setup, [8, 16, 32], [8, 32],
                                 n_ref=256, n1_ref=256, n_reps=3,
                                 snapshot_every=5, slope_bounds=(0.5, 1.5))
        assert report.fits[0].passed
        assert len(report.series["points"]["mse"]) == 6

    def test_degenerate_self_comparison_is_zero(self):
        setup = small_setup(n_iters=30)
        report = run_chaos_study(setup, [32], [16], n_ref=32, n1_ref=16,
                                 n_reps=1, snapshot_every=5,
                                 slope_bounds=(-10, 10))
        assert report.series["points"]["mse"][0] == 0.0

    def test_doubling_particles_roughly_halves_mse(self):
        # With plentiful data the particle term dominates and the ratio
        # between consecutive sizes approaches one half.  The collective
        # fluctuation concentrates slowly, hence the heavy rep averaging.
        setup = small_setup(sigma=1.4, kappa=0.5, target="tanh_shift",
                            n_iters=100)
        report = run_chaos_study(setup, [16, 32], [128], n_ref=512,
                                 n1_ref=128, n_reps=16, snapshot_every=2,
                                 tail_fraction=0.5, slope_bounds=(-10, 10))
        mse = report.series["points"]["mse"]
        ratio = mse[1] / mse[0]
        assert 0.35 <= ratio <= 0.7

    def test_surrogate_must_dominate(self):
        setup = small_setup()
        with pytest.raises(ValueError):
            run_chaos_study(setup, [64], [8], n_ref=32, n1_ref=64)


class TestEulerStudy:
    def test_strong_rate_slope(self):
        setup = small_setup(sigma=1.0, kappa=2.0, n_particles=16,
                            n_samples=4)
        report = run_euler_study(setup, [4e-3, 2e-3, 1e-3], s_final=0.2)
        assert report.fits[0].slope == pytest.approx(2.0, abs=0.4)

    def test_deterministic_runs_show_squared_reduction(self):
        # sigma = 0: halving the step cuts the squared deviation by about
        # four.
        setup = small_setup(sigma=0.0, kappa=2.0)
        report = run_euler_study(setup, [4e-3, 2e-3], s_final=0.2)
        mse = report.series["points"]["mse"]
        assert mse[1] / mse[0] == pytest.approx(0.25, abs=0.12)

    def test_incompatible_schedule_rejected(self):
        setup = small_setup()
        with pytest.raises(ValueError):
            run_euler_study(setup, [3e-3, 1e-3], s_final=0.2)
        with pytest.raises(ValueError):
            run_euler_study(setup, [4e-3], s_final=0.2)


class TestContractionStudy:
    def test_rates_negative_and_near_prediction(self):
        setup = small_setup(model=make_linear_drift_model(1), sigma=2.0,
                            kappa=4.0, gamma=5e-3, n_iters=120, horizon=0.5,
                            n_particles=16)
        report = run_contraction_study(setup, n_pairs=4)
        assert report.passed
        assert all(r > 0 for r in report.series["rates"]["fitted_rate"])

    def test_identical_init_pair_gives_flat_zero(self):
        setup = small_setup(model=make_linear_drift_model(1), sigma=1.0,
                            kappa=2.0, n_iters=20)
        pairs = [(("constant", 0.5), ("constant", 0.5))]
        report = run_contraction_study(setup, pairs)
        assert np.all(np.asarray(report.series["distance_pair0"]["distance"])
                      == 0.0)


class TestGibbsCheck:
    def test_drift_free_cloud_matches_prior(self):
        setup = small_setup(model=make_zero_cost_model(1), sigma=1.4142,
                            kappa=1.0, gamma=0.05, n_iters=240, horizon=0.5,
                            n_particles=1024, n_samples=1)
        report = run_gibbs_check(setup, tv_threshold=0.08)
        assert report.checks[0].passed

    def test_quadratic_toy_matches_gibbs_density(self):
        setup = small_setup(model=make_linear_drift_model(1), sigma=1.5,
                            kappa=2.0, gamma=0.02, n_iters=300, horizon=0.5,
                            n_particles=1024, n_samples=4)
        report = run_gibbs_check(setup, tv_threshold=0.1)
        assert report.checks[0].passed

    def test_sigma_sweep_monotone_towards_prior(self):
        setup = small_setup(model=make_linear_drift_model(1), sigma=1.0,
                            kappa=2.0, gamma=0.02, n_iters=200, horizon=0.5,
                            n_particles=512, n_samples=4)
        report = run_gibbs_check(setup, tv_threshold=0.15,
                                 sigma_sweep=(1.0, 2.0, 4.0))
        sweep = report.series["sigma_sweep"]["max_tv_vs_prior"]
        assert sweep[0] > sweep[1] > sweep[2]

    def test_multidimensional_parameters_rejected(self):
        setup = small_setup(model=make_builtin_model("one_layer_residual",
                                                     d=1, p_hidden=1,
                                                     dim_data=1))
        with pytest.raises(ValueError):
            run_gibbs_check(setup)


class TestGeneralizationStudy:
    def test_gap_scaling_smoke(self):
        # Reduced-scale smoke check: the gap grows with 1/N1 at a positive
        # rate.  The tight slope window is enforced at full scale by the
        # acceptance suite.
        setup = small_setup(sigma=1.4, kappa=1.0, gamma=1e-2, n_iters=600,
                            n_particles=128, target="scaled", seed=5)
        report = run_generalization_study(setup, [8, 32], holdout_n=1024,
                                          n_seeds=3, ref_particles=256,
                                          ref_samples=256,
                                          slope_bounds=(0.0, 2.2))
        assert report.fits[0].passed
        gaps = report.series["points"]["mean_sq_gap"]
        assert gaps[0] > gaps[1]

    def test_training_on_holdout_leaves_optimisation_error_only(self):
        # Degenerate: the study's statistical term vanishes when the
        # training set is the holdout itself, leaving a much smaller gap.
        setup = small_setup(sigma=1.4, kappa=1.0, gamma=5e-3, n_iters=400,
                            n_particles=128, target="scaled", seed=5)
        big = run_generalization_study(setup, [128], holdout_n=128,
                                       n_seeds=1, ref_particles=256,
                                       ref_samples=256,
                                       slope_bounds=(-10, 10))
        small = run_generalization_study(setup, [8], holdout_n=512,
                                         n_seeds=2, ref_particles=256,
                                         ref_samples=256,
                                         slope_bounds=(-10, 10))
        assert big.series["points"]["mean_sq_gap"][0] \
            < small.series["points"]["mean_sq_gap"][0]

    def test_holdout_must_dominate(self):
        setup = small_setup()
        with pytest.raises(ValueError):
            run_generalization_study(setup, [64], holdout_n=32)


class TestReports:
    def test_report_files_and_rerun_identity(self, tmp_path):
        setup = small_setup(model=make_linear_drift_model(1), sigma=2.0,
                            kappa=4.0, gamma=5e-3, n_iters=60, horizon=0.5)
        out1 = tmp_path / "a"
        out2 = tmp_path / "b"
        rep1 = run_contraction_study(setup, n_pairs=3, threads=1)
        rep2 = run_contraction_study(setup, n_pairs=3, threads=3)
        rep1.write(out1)
        rep2.write(out2)
        for name in ("contraction_rates.csv", "contraction_distance_pair0.csv"):
            assert (out1 / name).read_bytes() == (out2 / name).read_bytes()
        summary = json.loads((out1 / "contraction_summary.json").read_text())
        assert summary["kind"] == "contraction"
        assert all("passed" in c for c in summary["checks"])

    def test_pass_fail_lines_cite_thresholds(self):
        setup = small_setup(model=make_linear_drift_model(1), sigma=2.0,
                            kappa=4.0, gamma=5e-3, n_iters=40, horizon=0.5)
        report = run_contraction_study(setup, n_pairs=2)
        lines = report.summary_lines()
        assert any("threshold" in line for line in lines)
        assert all(line.startswith(("[PASS]", "[FAIL]")) for line in lines)
