"""Covariance models, trial runner, oracle, KS metric, verification battery."""

from __future__ import annotations

import math

import numpy as np
import pytest
import scipy.stats

from spectral_pivot import (
    CauchyMixture,
    CovarianceModel,
    SymOperator,
    Thresholds,
    TrialConfig,
    build_covariance,
    hs_norm,
    ks_distance,
    op_norm,
    oracle_bias,
    run_trials,
    sample_gaussian,
    spectral_sqrt,
    verify,
)

SMALL_MODEL = CovarianceModel(kind="spiked", dim=3, spikes=(1.0,), sigma2=1.0)


def small_config(**overrides):
    base = dict(model=SMALL_MODEL, n=100, trials=50, master_seed=77, oracle_reps=300)
    base.update(overrides)
    return TrialConfig(**base)


class TestCovarianceModel:
    def test_rejects_bad_kind(self):
        with pytest.raises(ValueError, match="kind"):
            CovarianceModel(kind="mystery", dim=3)

    def test_rejects_increasing_spikes(self):
        with pytest.raises(ValueError, match="decreasing"):
            CovarianceModel(kind="spiked", dim=4, spikes=(1.0, 2.0))

    def test_rejects_bad_ratio(self):
        with pytest.raises(ValueError, match="ratio"):
            CovarianceModel(kind="geometric", dim=4, ratio=1.5)

    def test_rejects_wrong_explicit_length(self):
        with pytest.raises(ValueError, match="dim"):
            CovarianceModel(kind="explicit", dim=3, eigenvalues=(2.0, 1.0))

    def test_rejects_zero_spectrum(self):
        with pytest.raises(ValueError, match="zero"):
            CovarianceModel(kind="explicit", dim=2, eigenvalues=(0.0, 0.0))


class TestBuildCovariance:
    def test_spiked_spectrum(self):
        sigma, spec = build_covariance(SMALL_MODEL)
        np.testing.assert_allclose(sigma.mat, np.diag([2.0, 1.0, 1.0]))
        assert [(de.value, de.multiplicity) for de in spec.distinct] == [
            (2.0, 1),
            (1.0, 2),
        ]
        spec.validate_numeric()

    def test_geometric_spectrum(self):
        sigma, spec = build_covariance(
            CovarianceModel(kind="geometric", dim=3, top=1.0, ratio=0.5)
        )
        np.testing.assert_allclose(sigma.mat, np.diag([1.0, 0.5, 0.25]))
        assert len(spec.distinct) == 3

    def test_explicit_with_kernel(self):
        sigma, spec = build_covariance(
            CovarianceModel(kind="explicit", dim=3, eigenvalues=(2.0, 1.0, 0.0))
        )
        np.testing.assert_allclose(sigma.mat, np.diag([2.0, 1.0, 0.0]))
        assert spec.zero_is_eigenvalue
        assert spec.gaps == (1.0, 1.0)

    def test_rotation_preserves_spectrum(self):
        model = CovarianceModel(kind="spiked", dim=6, spikes=(2.0,), rotate=True)
        sigma, spec = build_covariance(model, rotation_rng=np.random.default_rng(5))
        assert not np.allclose(sigma.mat, np.diag(np.diag(sigma.mat)))
        np.testing.assert_allclose(
            np.sort(np.linalg.eigvalsh(sigma.mat)),
            np.sort(model.spectrum()),
            atol=1e-12,
        )
        spec.validate_numeric()

    def test_target_out_of_range(self):
        with pytest.raises(ValueError, match="target_index"):
            build_covariance(
                CovarianceModel(kind="spiked", dim=3, spikes=(1.0,), target_index=5)
            )

    def test_spectral_sqrt_squares_back(self):
        sigma, spec = build_covariance(
            CovarianceModel(kind="geometric", dim=5, top=2.0, ratio=0.6, rotate=True),
            rotation_rng=np.random.default_rng(8),
        )
        root = spectral_sqrt(spec)
        assert op_norm(SymOperator.from_product(root.mat @ root.mat) - sigma) <= 1e-12


class TestSampleGaussian:
    def test_deterministic_for_seed(self):
        _, spec = build_covariance(SMALL_MODEL)
        root = spectral_sqrt(spec)
        a = sample_gaussian(root, 16, np.random.default_rng(3))
        b = sample_gaussian(root, 16, np.random.default_rng(3))
        np.testing.assert_array_equal(a, b)

    def test_zero_root_gives_zero_block(self):
        block = sample_gaussian(SymOperator.zero(4), 10, np.random.default_rng(1))
        assert np.all(block == 0.0)

    def test_law_of_large_numbers(self):
        vals = np.arange(5.0, 0.0, -1.0)
        _, spec = build_covariance(
            CovarianceModel(kind="explicit", dim=5, eigenvalues=tuple(vals))
        )
        root = spectral_sqrt(spec)
        x = sample_gaussian(root, 100_000, np.random.default_rng(42))
        emp = x.T @ x / x.shape[0]
        assert hs_norm(SymOperator.from_product(emp) - SymOperator.diag(vals)) <= 0.1


class TestOracleBias:
    def test_always_nonpositive(self):
        est = oracle_bias(small_config(oracle_reps=100))
        assert est.value <= 0.0
        assert est.se > 0.0
        assert est.reps == 100

    def test_consistency_at_large_n(self):
        # with n = 1e6 in dimension 2 the bias is O(1e-6): statistically
        # indistinguishable from zero-from-below at this replication level
        cfg = TrialConfig(
            model=CovarianceModel(kind="spiked", dim=2, spikes=(1.0,)),
            n=1_000_000,
            trials=1,
            master_seed=5,
            oracle_reps=50,
        )
        est = oracle_bias(cfg)
        assert -1e-5 <= est.value <= 0.0

    def test_reproducibility_across_seeds(self):
        cfg_a = TrialConfig(
            model=CovarianceModel(kind="spiked", dim=2, spikes=(1.0,)),
            n=50,
            trials=1,
            master_seed=11,
            oracle_reps=4000,
        )
        cfg_b = TrialConfig(
            model=cfg_a.model, n=50, trials=1, master_seed=12, oracle_reps=4000
        )
        a = oracle_bias(cfg_a)
        b = oracle_bias(cfg_b)
        assert a.value < 0.0 and b.value < 0.0
        assert abs(a.value - b.value) <= 3.0 * math.hypot(a.se, b.se)

    def test_multiplicity_target_rejected(self):
        cfg = TrialConfig(
            model=CovarianceModel(
                kind="explicit", dim=3, eigenvalues=(2.0, 2.0, 1.0)
            ),
            n=50,
            trials=1,
            master_seed=1,
            oracle_reps=10,
        )
        with pytest.raises(ValueError, match="multiplicity"):
            oracle_bias(cfg)


class TestRunTrials:
    def test_single_trial_reproducible(self):
        cfg = small_config(trials=1)
        a = run_trials(cfg)[0]
        b = run_trials(cfg)[0]
        assert a == b

    def test_bias_concentrates(self):
        cfg = small_config(n=500, trials=100)
        outcomes = run_trials(cfg)
        assert all(abs(o.b_hat) < 0.2 for o in outcomes)
        assert all(not o.degenerate for o in outcomes)

    def test_outcome_identity_against_projectors(self):
        cfg = small_config(trials=25)
        outcomes, theta_hats, theta = run_trials(cfg, keep_vectors=True)
        for o, th in zip(outcomes, theta_hats):
            direct = hs_norm(
                SymOperator.from_product(np.outer(th, th) - np.outer(theta, theta))
            )
            assert o.proj_error_sq == pytest.approx(direct**2, abs=1e-12)

    def test_parallel_matches_serial(self):
        cfg = small_config(trials=140)
        serial = run_trials(cfg, oracle_b=-0.02)
        parallel = run_trials(cfg, oracle_b=-0.02, workers=2)
        assert serial == parallel

    def test_oracle_fields_absent_without_oracle(self):
        outcome = run_trials(small_config(trials=1))[0]
        assert outcome.pivot_bias is None
        assert outcome.normalized_proj_stat is None
        assert outcome.pivot_proj is not None  # true vector is always known


class TestTrialConfig:
    def test_rejects_zero_trials(self):
        with pytest.raises(ValueError, match="trials"):
            small_config(trials=0)

    def test_rejects_tiny_n(self):
        with pytest.raises(ValueError, match="n must"):
            small_config(n=1)

    def test_rejects_bad_seed(self):
        with pytest.raises(ValueError, match="master_seed"):
            small_config(master_seed=-1)


class TestKsDistance:
    def test_hand_enumeration_against_standard_cauchy(self):
        sample = np.array([-1.0, 0.0, 1.0])
        assert ks_distance(sample, CauchyMixture(0.0, 1.0).cdf) == pytest.approx(0.25)

    def test_exact_quantile_spacing(self):
        dist = CauchyMixture(0.0, 1.0)
        n = 40
        sample = np.array([dist.quantile((i - 0.5) / n) for i in range(1, n + 1)])
        assert ks_distance(np.sort(sample), dist.cdf) == pytest.approx(1.0 / (2 * n))

    def test_single_point_against_median(self):
        assert ks_distance(np.array([0.0]), CauchyMixture(0.0, 1.0).cdf) == pytest.approx(0.5)

    def test_empty_rejected(self):
        with pytest.raises(ValueError, match="nonempty"):
            ks_distance(np.array([]), CauchyMixture(0.0, 1.0).cdf)

    def test_unsorted_rejected(self):
        with pytest.raises(ValueError, match="sorted"):
            ks_distance(np.array([1.0, 0.0]), CauchyMixture(0.0, 1.0).cdf)

    def test_agrees_with_scipy(self):
        rng = np.random.default_rng(19)
        sample = np.sort(rng.standard_normal(500))
        ours = ks_distance(sample, scipy.stats.norm.cdf)
        reference = scipy.stats.kstest(sample, "norm").statistic
        assert ours == pytest.approx(reference, rel=1e-12)


@pytest.fixture(scope="module")
def small_report():
    return verify(small_config(), workers=1)


class TestVerify:
    def test_check_names(self, small_report):
        names = [c.name for c in small_report.checks]
        assert names == [
            "proj_stat_normal",
            "bias_stat_normal",
            "bias_pivot_cauchy",
            "proj_pivot_cauchy",
            "proj_var_ratio",
            "denom_stat_var",
            "mean_abs_denom",
            "ci_coverage_bias",
            "risk_bias_identity",
        ]
        for check in small_report.checks:
            assert math.isfinite(check.value)
            assert check.passed == (check.lo <= check.value <= check.hi)

    def test_diagnostics_hand_values(self, small_report):
        diag = small_report.diagnostics
        assert diag["effective_rank"] == pytest.approx(2.0)
        assert diag["B"] == pytest.approx(8.0)
        assert diag["rank_over_B_sqrt_n"] == pytest.approx(0.025)
        assert diag["target_multiplicity"] == 1
        assert diag["weyl_cluster_violations"] == 0

    def test_report_is_deterministic(self, small_report):
        again = verify(small_config(), workers=1)
        assert again.to_dict() == small_report.to_dict()

    def test_parallel_report_identical(self, small_report):
        parallel = verify(small_config(), workers=2)
        assert parallel.to_dict() == small_report.to_dict()

    def test_report_serializes(self, small_report):
        import json

        blob = json.dumps(small_report.to_dict(), allow_nan=False)
        assert "all_pass" in blob

    def test_thresholds_validation(self):
        with pytest.raises(ValueError):
            Thresholds(ks_normal=0.0)

    def test_degenerate_normalizer_rejected(self):
        cfg = TrialConfig(
            model=CovarianceModel(kind="explicit", dim=2, eigenvalues=(1.0, 0.0)),
            n=10,
            trials=2,
            master_seed=0,
            oracle_reps=4,
        )
        with pytest.raises(ValueError, match="complementary"):
            verify(cfg)
